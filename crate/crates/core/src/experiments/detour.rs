//! Exhaustive single-fault scan between two fixed nodes.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::training::{pair_training_defaults, train_pair_policy};
use super::Router;
use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::gaussian::GaussianInt;
use crate::greedy::RouteResult;
use crate::ppo::PpoConfig;
use crate::seed::derive_seed;
use crate::topology::{DistanceMode, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetourConfig {
    pub alpha: GaussianInt,
    pub src: usize,
    /// Destination as a Gaussian integer, reduced into the network.
    pub dst: GaussianInt,
    pub distance_mode: DistanceMode,
    /// Settings for the per-placement RL policies.
    pub training: PpoConfig,
    /// Independent trainings per layout; the best argmax rollout is kept.
    pub restarts: usize,
    pub master_seed: u64,
}

impl Default for DetourConfig {
    fn default() -> Self {
        Self {
            alpha: GaussianInt::new(3, 4),
            src: 0,
            dst: GaussianInt::new(3, 0),
            distance_mode: DistanceMode::Plain,
            training: pair_training_defaults(),
            restarts: 2,
            master_seed: 0,
        }
    }
}

/// One fault placement (`fault_node = None` for the fault-free baseline).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetourRow {
    pub fault_node: Option<usize>,
    pub bfs_hops: Option<usize>,
    pub greedy: RouteResult,
    pub rl: RouteResult,
}

impl DetourRow {
    /// Greedy delivered, and strictly longer than RL (or RL delivered where greedy failed).
    pub fn rl_wins(&self) -> bool {
        match (self.greedy.delivered_hops(), self.rl.delivered_hops()) {
            (Some(g), Some(r)) => r < g,
            (None, Some(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetourReport {
    pub src: usize,
    pub dst: usize,
    pub baseline: DetourRow,
    pub rows: Vec<DetourRow>,
}

impl DetourReport {
    pub fn rl_wins(&self) -> impl Iterator<Item = &DetourRow> {
        self.rows.iter().filter(|r| r.rl_wins())
    }

    /// Placements where greedy needs `greedy` hops and RL `rl` hops.
    pub fn with_hops(&self, greedy: i64, rl: i64) -> impl Iterator<Item = &DetourRow> {
        self.rows
            .iter()
            .filter(move |r| r.greedy.hops == greedy && r.rl.hops == rl)
    }

    /// `fault_node,re,im,bfs_hops,greedy_hops,rl_hops`, baseline row first
    /// with empty fault fields. Failed routes show −1 hops.
    pub fn csv(&self, t: &Topology) -> String {
        let mut out = String::from("fault_node,re,im,bfs_hops,greedy_hops,rl_hops\n");
        for r in std::iter::once(&self.baseline).chain(&self.rows) {
            let (node, re, im) = match r.fault_node {
                Some(f) => {
                    let c = t.coord(f);
                    (f.to_string(), c.re.to_string(), c.im.to_string())
                }
                None => Default::default(),
            };
            let bfs = r.bfs_hops.map(|h| h.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{node},{re},{im},{bfs},{},{}",
                r.greedy.hops, r.rl.hops
            );
        }
        out
    }

    /// `fault_node,policy,step,node_index,re,im` for the baseline and every
    /// placement where RL beats greedy.
    pub fn traces_csv(&self, t: &Topology) -> String {
        let mut out = String::from("fault_node,policy,step,node_index,re,im\n");
        for r in std::iter::once(&self.baseline).chain(self.rl_wins()) {
            let node = r.fault_node.map(|f| f.to_string()).unwrap_or_default();
            for (label, route) in [("greedy", &r.greedy), ("rl", &r.rl)] {
                for (step, &k) in route.path.iter().enumerate() {
                    let c = t.coord(k);
                    let _ = writeln!(out, "{node},{label},{step},{k},{},{}", c.re, c.im);
                }
            }
        }
        out
    }
}

/// Route `src → dst` with no faults and then with each single fault outside
/// the endpoints. Each placement gets its own RL policy trained on that one
/// episode.
pub fn detour_demo(cfg: &DetourConfig) -> Result<DetourReport> {
    let t = Topology::from_alpha(cfg.alpha)?;
    t.check_node(cfg.src)?;
    let (src, dst) = (cfg.src, t.index_of(cfg.dst));
    if src == dst {
        return Err(Error::SameEndpoints(src));
    }
    cfg.training.validate()?;
    let placements: Vec<Option<usize>> = std::iter::once(None)
        .chain((0..t.len()).filter(|&k| k != src && k != dst).map(Some))
        .collect();
    let mut rows: Vec<DetourRow> = placements
        .par_iter()
        .map(|&fault| {
            let faults = FaultSet::from_nodes(t.len(), fault)?;
            let label = fault.map(|f| f + 1).unwrap_or(0) as u64;
            let config = PpoConfig {
                seed: derive_seed(cfg.master_seed, "detour/train", label),
                ..cfg.training.clone()
            };
            let params = train_pair_policy(&t, src, dst, &faults, &config, cfg.restarts)?.params;
            Ok(DetourRow {
                fault_node: fault,
                bfs_hops: t.bfs_distance(src, dst, &faults)?,
                greedy: Router::Greedy(cfg.distance_mode).route(&t, src, dst, &faults)?,
                rl: Router::Rl(&params).route(&t, src, dst, &faults)?,
            })
        })
        .collect::<Result<_>>()?;
    let baseline = rows.remove(0);
    Ok(DetourReport {
        src,
        dst,
        baseline,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = Topology::from_alpha(GaussianInt::new(3, 4)).unwrap();
        let path = |p: Vec<usize>| RouteResult {
            hops: p.len() as i64 - 1,
            path: p,
            status: crate::greedy::RouteStatus::Success,
        };
        let row = |f: Option<usize>, g: Vec<usize>, r: Vec<usize>| DetourRow {
            fault_node: f,
            bfs_hops: Some(r.len() - 1),
            greedy: path(g),
            rl: path(r),
        };
        let report = DetourReport {
            src: 0,
            dst: 3,
            baseline: row(None, vec![0, 1, 2, 3], vec![0, 1, 2, 3]),
            rows: vec![row(
                Some(1),
                vec![0, 18, 19, 20, 2, 3],
                vec![0, 24, 10, 4, 3],
            )],
        };
        assert_eq!(report.rl_wins().count(), 1);
        assert_eq!(report.with_hops(5, 4).count(), 1);
        let csv = report.csv(&t);
        assert_eq!(csv.lines().nth(1), Some(",,,3,3,3"));
        assert!(csv.lines().nth(2).unwrap().starts_with("1,1,0,4,5,4"));
        assert_eq!(report.traces_csv(&t).lines().count(), 1 + 8 + 11);
    }
}
