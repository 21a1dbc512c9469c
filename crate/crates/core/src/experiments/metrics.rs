//! Delivery, adaptivity and throughput metrics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Router;
use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::topology::Topology;

/// Load at which the throughput anchors are taken.
pub const BETA_ANCHOR_LOAD: f64 = 0.1;
pub const GREEDY_ANCHOR: f64 = 0.64;
pub const RL_ANCHOR: f64 = 0.72;

/// Outcome of routing one packet list with one router.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Evaluation {
    pub n_packets: usize,
    /// Hop counts of delivered packets, in packet order.
    pub hops: Vec<usize>,
}

impl Evaluation {
    pub fn n_delivered(&self) -> usize {
        self.hops.len()
    }

    pub fn pdr(&self) -> f64 {
        if self.n_packets == 0 {
            0.0
        } else {
            self.hops.len() as f64 / self.n_packets as f64
        }
    }

    pub fn mean_hops(&self) -> Option<f64> {
        (!self.hops.is_empty())
            .then(|| self.hops.iter().sum::<usize>() as f64 / self.hops.len() as f64)
    }

    pub fn throughput(&self, load: f64, beta: f64) -> f64 {
        normalized_throughput(&self.hops, self.n_packets, load, beta)
    }
}

/// Route every pair; unreachable pairs simply fail.
pub fn evaluate_policy(
    t: &Topology,
    router: Router<'_>,
    faults: &FaultSet,
    pairs: &[(usize, usize)],
) -> Result<Evaluation> {
    let mut hops = Vec::with_capacity(pairs.len());
    for &(src, dst) in pairs {
        if let Some(h) = router.route(t, src, dst, faults)?.delivered_hops() {
            hops.push(h);
        }
    }
    Ok(Evaluation {
        n_packets: pairs.len(),
        hops,
    })
}

/// `n` ordered pairs of distinct healthy nodes, each drawn uniformly and
/// independently.
pub fn sample_pairs<R: Rng + ?Sized>(
    faults: &FaultSet,
    n: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let healthy = faults.healthy();
    let h = healthy.len();
    if h < 2 {
        return Err(Error::InvalidConfig(format!(
            "{h} healthy nodes, need at least 2 to route"
        )));
    }
    Ok((0..n)
        .map(|_| {
            let a = rng.random_range(0..h);
            let mut b = rng.random_range(0..h - 1);
            if b >= a {
                b += 1;
            }
            (healthy[a], healthy[b])
        })
        .collect())
}

/// Fraction of pairs with a fault-free path.
pub fn reachable_fraction(
    t: &Topology,
    faults: &FaultSet,
    pairs: &[(usize, usize)],
) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut reachable = 0;
    for &(s, d) in pairs {
        if t.bfs_distance(s, d, faults)?.is_some() {
            reachable += 1;
        }
    }
    Ok(reachable as f64 / pairs.len() as f64)
}

/// `pdr(d) / pdr(0)` clamped to `[0, 1.05]`; `None` when `pdr(0)` is zero.
pub fn adaptive_score(pdr_at_density: f64, pdr_at_zero: f64) -> Option<f64> {
    (pdr_at_zero > 0.0).then(|| (pdr_at_density / pdr_at_zero).clamp(0.0, 1.05))
}

/// `(1/total) · Σ_delivered exp(−β · load · hops)`.
pub fn normalized_throughput(
    delivered_hops: &[usize],
    total_packets: usize,
    load: f64,
    beta: f64,
) -> f64 {
    if total_packets == 0 {
        return 0.0;
    }
    let sum: f64 = delivered_hops
        .iter()
        .map(|&h| (-beta * load * h as f64).exp())
        .sum();
    sum / total_packets as f64
}

/// Least-squares β against the load-0.1 anchors (greedy 0.64, RL 0.72),
/// using the trial-averaged throughput of each policy's evaluations. A
/// policy with no evaluations contributes no anchor.
pub fn calibrate_beta(greedy: &[Evaluation], rl: &[Evaluation]) -> Result<f64> {
    if greedy.is_empty() && rl.is_empty() {
        return Err(Error::InvalidConfig(
            "β calibration needs at least one evaluated policy".into(),
        ));
    }
    let mean_t = |evals: &[Evaluation], beta: f64| {
        evals
            .iter()
            .map(|e| e.throughput(BETA_ANCHOR_LOAD, beta))
            .sum::<f64>()
            / evals.len() as f64
    };
    let loss = |log_beta: f64| {
        let beta = log_beta.exp();
        let mut l = 0.0;
        if !greedy.is_empty() {
            l += (mean_t(greedy, beta) - GREEDY_ANCHOR).powi(2);
        }
        if !rl.is_empty() {
            l += (mean_t(rl, beta) - RL_ANCHOR).powi(2);
        }
        l
    };
    // coarse grid over β ∈ [1e-3, 1e2], then golden section around the best cell
    let (lo, hi) = (1e-3f64.ln(), 1e2f64.ln());
    let cells = 400;
    let step = (hi - lo) / cells as f64;
    let best = (0..=cells)
        .map(|k| lo + k as f64 * step)
        .min_by(|a, b| loss(*a).total_cmp(&loss(*b)))
        .unwrap_or(lo);
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if loss(c) <= loss(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(((a + b) / 2.0).exp())
}
