//! Gaussian integer arithmetic and residues modulo a network generator.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice point `re + im·i` of ℤ[i].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct GaussianInt {
    pub re: i64,
    pub im: i64,
}

impl GaussianInt {
    pub const ZERO: Self = Self::new(0, 0);
    pub const ONE: Self = Self::new(1, 0);
    pub const I: Self = Self::new(0, 1);

    pub const fn new(re: i64, im: i64) -> Self {
        Self { re, im }
    }

    pub const fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    /// Squared modulus `re² + im²`.
    pub const fn norm(self) -> i64 {
        self.re * self.re + self.im * self.im
    }

    pub const fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }
}

impl Add for GaussianInt {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for GaussianInt {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for GaussianInt {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Neg for GaussianInt {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl From<i64> for GaussianInt {
    fn from(re: i64) -> Self {
        Self::new(re, 0)
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re, self.im) {
            (re, 0) => write!(f, "{re}"),
            (0, 1) => write!(f, "i"),
            (0, -1) => write!(f, "-i"),
            (0, im) => write!(f, "{im}i"),
            (re, 1) => write!(f, "{re}+i"),
            (re, -1) => write!(f, "{re}-i"),
            (re, im) if im > 0 => write!(f, "{re}+{im}i"),
            (re, im) => write!(f, "{re}{im}i"),
        }
    }
}

impl FromStr for GaussianInt {
    type Err = Error;

    /// Accepts `a`, `bi`, `a+bi`, `a-bi`, with `i` alone meaning one.
    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::ParseGaussian(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(err());
        }
        let Some(body) = t.strip_suffix('i') else {
            return t.parse::<i64>().map(Self::from).map_err(|_| err());
        };
        // split at the last sign that is not the leading one
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(k, _)| k)
            .last();
        let (re_part, im_part) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let re = re_part.parse::<i64>().map_err(|_| err())?;
        let im = match im_part {
            "" | "+" => 1,
            "-" => -1,
            other => other.parse::<i64>().map_err(|_| err())?,
        };
        Ok(Self::new(re, im))
    }
}

/// Round `num / den` (den > 0) to the nearest integer, ties toward −∞.
fn round_half_down(num: i128, den: i128) -> i128 {
    // ceil((2·num − den) / (2·den))
    let n = 2 * num - den;
    let d = 2 * den;
    -(-n).div_euclid(d)
}

fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = extended_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    extended_gcd(a.abs(), b.abs()).0
}

/// A validated network generator `α = a + bi` with `a, b ≥ 1`, `gcd(a, b) = 1`
/// and `N = a² + b² ≥ 5`.
///
/// Because `gcd(a, b) = 1`, ℤ[i]/(α) is cyclic of order `N`; `iso_root` is the
/// residue `s` with `a + b·s ≡ 0 (mod N)` (hence `s² ≡ −1`), and
/// `x + y·i ↦ (x + y·s) mod N` is the ring isomorphism used for node indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GaussianInt", into = "GaussianInt")]
pub struct NetworkModulus {
    alpha: GaussianInt,
    n_nodes: u64,
    iso_root: u64,
}

impl NetworkModulus {
    pub fn new(alpha: GaussianInt) -> Result<Self> {
        let GaussianInt { re: a, im: b } = alpha;
        let bad = |why| Err(Error::InvalidModulus(alpha.to_string(), why));
        if a < 1 || b < 1 {
            return bad("both components must be positive");
        }
        if a > 1 << 20 || b > 1 << 20 {
            return bad("components too large");
        }
        if gcd(a, b) != 1 {
            return bad("components must be coprime");
        }
        let n = alpha.norm();
        if n < 5 {
            return bad("norm must be at least 5");
        }
        let (_, b_inv, _) = extended_gcd(b.rem_euclid(n), n);
        let iso_root = (-(a as i128) * b_inv as i128).rem_euclid(n as i128) as u64;
        Ok(Self {
            alpha,
            n_nodes: n as u64,
            iso_root,
        })
    }

    /// The `α = k + (k+1)i` family (`k = 3` gives `3 + 4i`, 25 nodes).
    pub fn from_k(k: i64) -> Result<Self> {
        Self::new(GaussianInt::new(k, k + 1))
    }

    pub fn alpha(&self) -> GaussianInt {
        self.alpha
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes as usize
    }

    pub fn iso_root(&self) -> u64 {
        self.iso_root
    }

    /// Centered representative of `z` modulo α.
    ///
    /// Computes `q = z·conj(α)/N` exactly, rounds each component to the nearest
    /// integer (ties toward −∞) and returns `z − q·α`.
    pub fn canonical_residue(&self, z: GaussianInt) -> GaussianInt {
        let n = self.n_nodes as i128;
        let (a, b) = (self.alpha.re as i128, self.alpha.im as i128);
        let (x, y) = (z.re as i128, z.im as i128);
        // z·conj(α) = (x·a + y·b) + (y·a − x·b)i
        let qr = round_half_down(x * a + y * b, n);
        let qi = round_half_down(y * a - x * b, n);
        let re = x - (qr * a - qi * b);
        let im = y - (qr * b + qi * a);
        GaussianInt::new(re as i64, im as i64)
    }

    /// Dense index in `[0, N)` of the residue class of `z`.
    pub fn node_index(&self, z: GaussianInt) -> usize {
        let n = self.n_nodes as i128;
        (z.re as i128 + z.im as i128 * self.iso_root as i128).rem_euclid(n) as usize
    }

    /// Whether `z` is divisible by α in ℤ[i].
    pub fn divides(&self, z: GaussianInt) -> bool {
        self.canonical_residue(z).is_zero()
    }
}

impl TryFrom<GaussianInt> for NetworkModulus {
    type Error = Error;
    fn try_from(alpha: GaussianInt) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<NetworkModulus> for GaussianInt {
    fn from(m: NetworkModulus) -> Self {
        m.alpha
    }
}

impl fmt::Display for NetworkModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.alpha.fmt(f)
    }
}
