//! Average route length from the origin into the first quadrant with a few
//! faults placed inside that quadrant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::training::{pair_training_defaults, train_pair_policy};
use super::{fmt6, PolicyKind, Router};
use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::gaussian::GaussianInt;
use crate::ppo::{PolicyParams, PpoConfig};
use crate::seed::{derive_seed, rng_for};
use crate::topology::{DistanceMode, Quadrant, Topology};

/// Label of the shortest-path reference rows.
pub const ORACLE_LABEL: &str = "bfs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadrantConfig {
    pub alpha: GaussianInt,
    pub fault_counts: Vec<usize>,
    pub trials: usize,
    pub distance_mode: DistanceMode,
    pub policies: Vec<PolicyKind>,
    /// Settings for the per-layout RL policies.
    pub training: PpoConfig,
    /// Independent trainings per layout; the best argmax rollout is kept.
    pub restarts: usize,
    pub master_seed: u64,
}

impl Default for QuadrantConfig {
    fn default() -> Self {
        Self {
            alpha: GaussianInt::new(3, 4),
            fault_counts: vec![1, 2, 3],
            trials: 200,
            distance_mode: DistanceMode::Plain,
            policies: PolicyKind::BOTH.to_vec(),
            training: pair_training_defaults(),
            restarts: 2,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantRecord {
    pub fault_count: usize,
    /// `greedy`, `rl` or `bfs`.
    pub policy: String,
    /// Mean hops over delivered packets.
    pub avg_hops: Option<f64>,
    pub delivery_rate: f64,
    pub trials: usize,
    pub delivered: usize,
    pub attempted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantStudy {
    pub src: usize,
    pub destinations: Vec<usize>,
    pub records: Vec<QuadrantRecord>,
    /// Distinct `(dst, faults)` layouts an RL policy was trained for.
    pub trained_layouts: usize,
}

impl QuadrantStudy {
    pub fn record(&self, fault_count: usize, policy: &str) -> Option<&QuadrantRecord> {
        self.records
            .iter()
            .find(|r| r.fault_count == fault_count && r.policy == policy)
    }

    /// `fault_count,policy,avg_hops,delivery_rate,trials`
    pub fn csv(&self) -> String {
        let mut out = String::from("fault_count,policy,avg_hops,delivery_rate,trials\n");
        for r in &self.records {
            let hops = r.avg_hops.map(fmt6).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.fault_count,
                r.policy,
                hops,
                fmt6(r.delivery_rate),
                r.trials
            );
        }
        out
    }
}

type Layout = (usize, Vec<usize>);

#[derive(Default)]
struct Tally {
    hops: usize,
    delivered: usize,
    attempted: usize,
}

impl Tally {
    fn add(&mut self, hops: Option<usize>) {
        self.attempted += 1;
        if let Some(h) = hops {
            self.hops += h;
            self.delivered += 1;
        }
    }

    fn record(&self, fault_count: usize, policy: &str, trials: usize) -> QuadrantRecord {
        QuadrantRecord {
            fault_count,
            policy: policy.into(),
            avg_hops: (self.delivered > 0).then(|| self.hops as f64 / self.delivered as f64),
            delivery_rate: if self.attempted == 0 {
                0.0
            } else {
                self.delivered as f64 / self.attempted as f64
            },
            trials,
            delivered: self.delivered,
            attempted: self.attempted,
        }
    }
}

/// Source node 0, every first-quadrant node as destination. In each trial
/// and for each destination, `f` faults are placed uniformly among the other
/// first-quadrant nodes. RL policies are trained once per distinct
/// `(dst, faults)` layout on that single episode.
pub fn quadrant_study(cfg: &QuadrantConfig) -> Result<QuadrantStudy> {
    let t = Topology::from_alpha(cfg.alpha)?;
    let src = 0;
    let q1 = t.quadrant_nodes(Quadrant::Q1);
    for &f in &cfg.fault_counts {
        if f + 1 > q1.len() {
            return Err(Error::InfeasibleFaultCount {
                requested: f,
                available: q1.len().saturating_sub(1),
            });
        }
    }
    if cfg.policies.contains(&PolicyKind::Rl) {
        cfg.training.validate()?;
    }

    // layouts[f_idx][trial][dst_idx]
    let layouts: Vec<Vec<Vec<Layout>>> = cfg
        .fault_counts
        .iter()
        .map(|&f| {
            (0..cfg.trials)
                .map(|trial| {
                    let mut rng = rng_for(
                        cfg.master_seed,
                        &format!("quadrant/faults/{f}"),
                        trial as u64,
                    );
                    q1.iter()
                        .map(|&dst| {
                            let others: Vec<usize> =
                                q1.iter().copied().filter(|&n| n != dst).collect();
                            let mut faults: Vec<usize> = index::sample(&mut rng, others.len(), f)
                                .iter()
                                .map(|i| others[i])
                                .collect();
                            faults.sort_unstable();
                            (dst, faults)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut policies: BTreeMap<Layout, PolicyParams> = BTreeMap::new();
    if cfg.policies.contains(&PolicyKind::Rl) {
        let mut distinct: Vec<Layout> = layouts.iter().flatten().flatten().cloned().collect();
        distinct.sort();
        distinct.dedup();
        let trained: Vec<PolicyParams> = distinct
            .par_iter()
            .map(|(dst, nodes)| {
                let faults = FaultSet::from_nodes(t.len(), nodes.iter().copied())?;
                let seed = derive_seed(
                    cfg.master_seed,
                    &format!("quadrant/train/{dst}/{nodes:?}"),
                    0,
                );
                let config = PpoConfig {
                    seed,
                    ..cfg.training.clone()
                };
                Ok(train_pair_policy(&t, src, *dst, &faults, &config, cfg.restarts)?.params)
            })
            .collect::<Result<_>>()?;
        policies = distinct.into_iter().zip(trained).collect();
    }

    let mut records = Vec::new();
    for (&f, per_trial) in cfg.fault_counts.iter().zip(&layouts) {
        let mut tallies: Vec<(String, Tally)> = cfg
            .policies
            .iter()
            .map(|p| (p.label().to_string(), Tally::default()))
            .collect();
        let mut oracle = Tally::default();
        for layout in per_trial.iter().flatten() {
            let (dst, nodes) = layout;
            let faults = FaultSet::from_nodes(t.len(), nodes.iter().copied())?;
            oracle.add(t.bfs_distance(src, *dst, &faults)?);
            for (&policy, (_, tally)) in cfg.policies.iter().zip(tallies.iter_mut()) {
                let router = match policy {
                    PolicyKind::Greedy => Router::Greedy(cfg.distance_mode),
                    PolicyKind::Rl => Router::Rl(&policies[layout]),
                };
                tally.add(router.route(&t, src, *dst, &faults)?.delivered_hops());
            }
        }
        for (label, tally) in &tallies {
            records.push(tally.record(f, label, cfg.trials));
        }
        records.push(oracle.record(f, ORACLE_LABEL, cfg.trials));
    }
    Ok(QuadrantStudy {
        src,
        destinations: q1,
        records,
        trained_layouts: policies.len(),
    })
}
