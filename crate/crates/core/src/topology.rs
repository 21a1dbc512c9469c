//! Degree-four Gaussian network graphs.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::gaussian::{GaussianInt, NetworkModulus};

/// Unit steps, in adjacency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `+i`
    Up,
    /// `−i`
    Down,
    /// `+1`
    Right,
    /// `−1`
    Left,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Right,
        Direction::Left,
    ];

    pub const fn vector(self) -> GaussianInt {
        match self {
            Direction::Up => GaussianInt::new(0, 1),
            Direction::Down => GaussianInt::new(0, -1),
            Direction::Right => GaussianInt::new(1, 0),
            Direction::Left => GaussianInt::new(-1, 0),
        }
    }

    pub const fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    Q1,
    Q2,
    Q3,
    Q4,
    Origin,
}

impl Quadrant {
    /// Sign-based classification of a centered coordinate.
    pub fn classify(z: GaussianInt) -> Quadrant {
        let (x, y) = (z.re, z.im);
        if z.is_zero() {
            Quadrant::Origin
        } else if x >= 0 && y > 0 {
            Quadrant::Q1
        } else if x < 0 && y >= 0 {
            Quadrant::Q2
        } else if x <= 0 && y < 0 {
            Quadrant::Q3
        } else {
            Quadrant::Q4
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrant::Q1 => "Q1",
            Quadrant::Q2 => "Q2",
            Quadrant::Q3 => "Q3",
            Quadrant::Q4 => "Q4",
            Quadrant::Origin => "O",
        }
    }
}

/// How the greedy router measures squared distance to the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Difference of centered coordinates, blind to wrap-around.
    #[default]
    Plain,
    /// Norm of the centered residue of the difference.
    Modular,
}

impl std::str::FromStr for DistanceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(DistanceMode::Plain),
            "modular" => Ok(DistanceMode::Modular),
            other => Err(Error::InvalidConfig(format!(
                "unknown distance mode {other:?}"
            ))),
        }
    }
}

/// Immutable network graph. Node `k` is the residue class with index `k`
/// under [`NetworkModulus::node_index`]; node 0 is the origin.
#[derive(Debug, Clone)]
pub struct Topology {
    modulus: NetworkModulus,
    adjacency: Vec<[usize; 4]>,
    coords: Vec<GaussianInt>,
    coord_scale: f64,
}

impl Topology {
    pub fn new(modulus: NetworkModulus) -> Self {
        let n = modulus.n_nodes();
        // node_index(k + 0i) = k, so the integer k is a representative of node k
        let coords: Vec<GaussianInt> = (0..n)
            .map(|k| modulus.canonical_residue(GaussianInt::new(k as i64, 0)))
            .collect();
        let adjacency = coords
            .iter()
            .map(|&c| Direction::ALL.map(|d| modulus.node_index(c + d.vector())))
            .collect();
        let coord_scale = coords
            .iter()
            .map(|c| c.re.abs().max(c.im.abs()))
            .max()
            .unwrap_or(1)
            .max(1) as f64;
        Self {
            modulus,
            adjacency,
            coords,
            coord_scale,
        }
    }

    pub fn from_alpha(alpha: GaussianInt) -> Result<Self> {
        Ok(Self::new(NetworkModulus::new(alpha)?))
    }

    pub fn modulus(&self) -> &NetworkModulus {
        &self.modulus
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[usize; 4] {
        &self.adjacency[node]
    }

    pub fn neighbor(&self, node: usize, dir: Direction) -> usize {
        self.adjacency[node][dir.slot()]
    }

    /// Centered canonical representative of a node.
    pub fn coord(&self, node: usize) -> GaussianInt {
        self.coords[node]
    }

    pub fn coords(&self) -> &[GaussianInt] {
        &self.coords
    }

    /// Index of the node holding `z`'s residue class.
    pub fn index_of(&self, z: GaussianInt) -> usize {
        self.modulus.node_index(z)
    }

    /// Largest `max(|re|, |im|)` over all centered coordinates.
    pub fn coord_scale(&self) -> f64 {
        self.coord_scale
    }

    pub fn max_hops(&self) -> usize {
        2 * self.len()
    }

    pub fn check_node(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index,
                n_nodes: self.len(),
            })
        }
    }

    pub fn quadrant_of(&self, node: usize) -> Quadrant {
        Quadrant::classify(self.coords[node])
    }

    pub fn quadrant_nodes(&self, q: Quadrant) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.quadrant_of(k) == q)
            .collect()
    }

    /// Squared Euclidean distance between two nodes.
    pub fn euclid_dist2(&self, a: usize, b: usize, mode: DistanceMode) -> i64 {
        let diff = self.coords[a] - self.coords[b];
        match mode {
            DistanceMode::Plain => diff.norm(),
            DistanceMode::Modular => self.modulus.canonical_residue(diff).norm(),
        }
    }

    /// Hop distances from `src` to every node over fault-free paths.
    ///
    /// Faulty nodes are never entered; `src` itself is always distance 0.
    pub fn bfs_from(&self, src: usize, faults: &FaultSet) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::with_capacity(self.len());
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or_default();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() && !faults.contains(v) {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest fault-avoiding hop count, or `None` when unreachable.
    pub fn bfs_distance(&self, src: usize, dst: usize, faults: &FaultSet) -> Result<Option<usize>> {
        self.check_node(src)?;
        self.check_node(dst)?;
        for end in [src, dst] {
            if faults.contains(end) {
                return Err(Error::FaultyEndpoint(end));
            }
        }
        Ok(self.bfs_from(src, faults)[dst])
    }

    /// CSV dump: `node_index,re,im,n_up,n_down,n_right,n_left,quadrant`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_index,re,im,n_up,n_down,n_right,n_left,quadrant\n");
        for (k, (c, nb)) in self.coords.iter().zip(&self.adjacency).enumerate() {
            let _ = writeln!(
                out,
                "{k},{},{},{},{},{},{},{}",
                c.re,
                c.im,
                nb[0],
                nb[1],
                nb[2],
                nb[3],
                self.quadrant_of(k).label()
            );
        }
        out
    }
}
