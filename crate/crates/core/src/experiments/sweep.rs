//! Fault-density and load sweeps.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    adaptive_score, calibrate_beta, evaluate_policy, reachable_fraction, sample_pairs, Evaluation,
};
use super::training::{sweep_training_defaults, train_trial_policy, RlTraining};
use super::{fmt6, fmt6_opt, MeanStderr, PolicyKind, Router};
use crate::error::{Error, Result};
use crate::faults::{FaultMode, FaultSet, FaultSpec, MAX_DENSITY};
use crate::gaussian::GaussianInt;
use crate::ppo::PpoConfig;
use crate::seed::{derive_seed, rng_for};
use crate::topology::{DistanceMode, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub alpha: GaussianInt,
    pub densities: Vec<f64>,
    pub trials_per_density: usize,
    pub packets_per_trial: usize,
    pub loads: Vec<f64>,
    /// Throughput decay coefficient; calibrated from the run when absent.
    pub beta: Option<f64>,
    pub throughput_density: f64,
    pub fault_mode: FaultMode,
    pub distance_mode: DistanceMode,
    pub policies: Vec<PolicyKind>,
    pub rl_training: RlTraining,
    pub training: PpoConfig,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alpha: GaussianInt::new(3, 4),
            densities: (0..=8)
                .map(|k| k as f64 * 0.05)
                .map(|d| (d * 1e9).round() / 1e9)
                .collect(),
            trials_per_density: 20,
            packets_per_trial: 200,
            loads: (1..=9).map(|k| k as f64 / 10.0).collect(),
            beta: None,
            throughput_density: 0.2,
            fault_mode: FaultMode::Uniform,
            distance_mode: DistanceMode::Plain,
            policies: PolicyKind::BOTH.to_vec(),
            rl_training: RlTraining::default(),
            training: sweep_training_defaults(),
            master_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for &d in self.densities.iter().chain([&self.throughput_density]) {
            if !(0.0..=MAX_DENSITY).contains(&d) {
                return Err(Error::InvalidDensity(d));
            }
        }
        if let Some(&l) = self.loads.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
            return bad(format!("load {l} outside (0, 1]"));
        }
        if let Some(b) = self.beta {
            if !(b.is_finite() && b > 0.0) {
                return bad(format!("beta {b} must be positive"));
            }
        }
        if self.trials_per_density == 0 || self.packets_per_trial == 0 {
            return bad("trials_per_density and packets_per_trial must be positive".into());
        }
        if self.policies.is_empty() {
            return bad("no policies selected".into());
        }
        if let RlTraining::Resampled { every: 0 } = self.rl_training {
            return bad("fault resample interval must be positive".into());
        }
        if self.policies.contains(&PolicyKind::Rl) {
            self.training.validate()?;
        }
        FaultSpec {
            mode: self.fault_mode,
            density: 0.0,
            seed: 0,
        }
        .validate()
    }

    fn fault_spec(&self, density: f64, trial: usize) -> FaultSpec {
        let seed = derive_seed(
            self.master_seed,
            &format!("sweep/faults/{}", density_key(density)),
            trial as u64,
        );
        FaultSpec {
            mode: self.fault_mode,
            density,
            seed,
        }
    }
}

/// Seed label component for a density, stable under float noise.
fn density_key(density: f64) -> String {
    format!("{density:.6}")
}

/// Everything produced by one `(density, trial)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub density: f64,
    pub trial: usize,
    pub faults: FaultSet,
    pub pairs: Vec<(usize, usize)>,
    pub reachable: f64,
    pub evaluations: Vec<(PolicyKind, Evaluation)>,
}

impl TrialOutcome {
    pub fn evaluation(&self, policy: PolicyKind) -> Option<&Evaluation> {
        self.evaluations
            .iter()
            .find(|(p, _)| *p == policy)
            .map(|(_, e)| e)
    }
}

fn run_trial(cfg: &SweepConfig, t: &Topology, density: f64, trial: usize) -> Result<TrialOutcome> {
    let spec = cfg.fault_spec(density, trial);
    let faults = spec.generate(t, &[])?;
    let key = density_key(density);
    let mut rng = rng_for(cfg.master_seed, &format!("sweep/pairs/{key}"), trial as u64);
    let pairs = sample_pairs(&faults, cfg.packets_per_trial, &mut rng)?;
    let reachable = reachable_fraction(t, &faults, &pairs)?;
    let mut evaluations = Vec::with_capacity(cfg.policies.len());
    for &policy in &cfg.policies {
        let eval = match policy {
            PolicyKind::Greedy => {
                evaluate_policy(t, Router::Greedy(cfg.distance_mode), &faults, &pairs)?
            }
            PolicyKind::Rl => {
                let seed =
                    derive_seed(cfg.master_seed, &format!("sweep/train/{key}"), trial as u64);
                let config = PpoConfig {
                    seed,
                    ..cfg.training.clone()
                };
                let report = train_trial_policy(t, &faults, &spec, cfg.rl_training, &config)?;
                evaluate_policy(t, Router::Rl(&report.params), &faults, &pairs)?
            }
        };
        evaluations.push((policy, eval));
    }
    Ok(TrialOutcome {
        density,
        trial,
        faults,
        pairs,
        reachable,
        evaluations,
    })
}

/// Every `(density, trial)` run, in density-then-trial order. Trials run on
/// the current rayon pool.
pub fn run_trials(cfg: &SweepConfig, densities: &[f64]) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    let t = Topology::from_alpha(cfg.alpha)?;
    let jobs: Vec<(f64, usize)> = densities
        .iter()
        .flat_map(|&d| (0..cfg.trials_per_density).map(move |k| (d, k)))
        .collect();
    jobs.par_iter()
        .map(|&(d, k)| {
            run_trial(cfg, &t, d, k).map_err(|e| Error::Trial {
                trial: k,
                context: format!("density {}", fmt6(d)),
                source: Box::new(e),
            })
        })
        .collect()
}

/// One raw per-trial row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub density: f64,
    pub policy: PolicyKind,
    pub trial: usize,
    pub pdr: f64,
    pub mean_hops: Option<f64>,
    pub n_delivered: usize,
    pub n_packets: usize,
}

/// Per-density, per-policy aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub density: f64,
    pub policy: PolicyKind,
    pub pdr_mean: f64,
    pub pdr_stderr: f64,
    /// Relative to the same policy's density-0 mean; absent when the sweep
    /// has no density 0.
    pub adaptive_score: Option<f64>,
    /// Mean over trials of the per-trial mean delivered hops.
    pub mean_hops: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdrSweep {
    pub outcomes: Vec<TrialOutcome>,
    pub raw: Vec<TrialRecord>,
    pub aggregate: Vec<MetricsRecord>,
}

impl PdrSweep {
    pub fn from_outcomes(outcomes: Vec<TrialOutcome>) -> Self {
        let mut raw = Vec::new();
        for o in &outcomes {
            for (policy, e) in &o.evaluations {
                raw.push(TrialRecord {
                    density: o.density,
                    policy: *policy,
                    trial: o.trial,
                    pdr: e.pdr(),
                    mean_hops: e.mean_hops(),
                    n_delivered: e.n_delivered(),
                    n_packets: e.n_packets,
                });
            }
        }
        let mut densities: Vec<f64> = outcomes.iter().map(|o| o.density).collect();
        densities.dedup();
        let mut policies: Vec<PolicyKind> = raw.iter().map(|r| r.policy).collect();
        policies.sort();
        policies.dedup();
        let mut aggregate = Vec::new();
        for &policy in &policies {
            let rows = |d: f64| {
                raw.iter()
                    .filter(move |r| r.policy == policy && r.density == d)
            };
            let pdr_at = |d: f64| MeanStderr::of(&rows(d).map(|r| r.pdr).collect::<Vec<_>>());
            let zero = densities.contains(&0.0).then(|| pdr_at(0.0).mean);
            for &d in &densities {
                let pdr = pdr_at(d);
                let hops: Vec<f64> = rows(d).filter_map(|r| r.mean_hops).collect();
                aggregate.push(MetricsRecord {
                    density: d,
                    policy,
                    pdr_mean: pdr.mean,
                    pdr_stderr: pdr.stderr,
                    adaptive_score: zero.and_then(|z| adaptive_score(pdr.mean, z)),
                    mean_hops: (!hops.is_empty()).then(|| MeanStderr::of(&hops).mean),
                    trials: pdr.n,
                });
            }
        }
        Self {
            outcomes,
            raw,
            aggregate,
        }
    }

    pub fn record(&self, density: f64, policy: PolicyKind) -> Option<&MetricsRecord> {
        self.aggregate
            .iter()
            .find(|r| r.policy == policy && (r.density - density).abs() < 1e-9)
    }

    /// `density,policy,trial,pdr,mean_hops,n_delivered,n_packets`
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("density,policy,trial,pdr,mean_hops,n_delivered,n_packets\n");
        for r in &self.raw {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt6(r.density),
                r.policy,
                r.trial,
                fmt6(r.pdr),
                fmt6_opt(r.mean_hops),
                r.n_delivered,
                r.n_packets
            );
        }
        out
    }

    /// `density,policy,pdr_mean,pdr_stderr,adaptive_score`
    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from("density,policy,pdr_mean,pdr_stderr,adaptive_score\n");
        for r in &self.aggregate {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt6(r.density),
                r.policy,
                fmt6(r.pdr_mean),
                fmt6(r.pdr_stderr),
                fmt6_opt(r.adaptive_score)
            );
        }
        out
    }

    /// `density,trial,reachable_fraction,n_faults`
    pub fn reachability_csv(&self) -> String {
        let mut out = String::from("density,trial,reachable_fraction,n_faults\n");
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt6(o.density),
                o.trial,
                fmt6(o.reachable),
                o.faults.len()
            );
        }
        out
    }
}

/// Run every configured density for every configured policy.
pub fn run_pdr_sweep(cfg: &SweepConfig) -> Result<PdrSweep> {
    Ok(PdrSweep::from_outcomes(run_trials(cfg, &cfg.densities)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRecord {
    pub load: f64,
    pub policy: PolicyKind,
    pub throughput_mean: f64,
    pub throughput_stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSweep {
    pub density: f64,
    pub beta: f64,
    pub beta_calibrated: bool,
    pub records: Vec<ThroughputRecord>,
}

impl ThroughputSweep {
    /// Throughput of already-evaluated trials at every load. With
    /// `beta = None` β is calibrated on these same trials.
    pub fn from_outcomes(
        outcomes: &[TrialOutcome],
        loads: &[f64],
        beta: Option<f64>,
    ) -> Result<Self> {
        let density = outcomes.first().map(|o| o.density).unwrap_or(0.0);
        let evals = |p: PolicyKind| {
            outcomes
                .iter()
                .filter_map(|o| o.evaluation(p).cloned())
                .collect::<Vec<_>>()
        };
        let greedy = evals(PolicyKind::Greedy);
        let rl = evals(PolicyKind::Rl);
        let (beta, beta_calibrated) = match beta {
            Some(b) => (b, false),
            None => (calibrate_beta(&greedy, &rl)?, true),
        };
        let mut records = Vec::new();
        for (policy, list) in [(PolicyKind::Greedy, &greedy), (PolicyKind::Rl, &rl)] {
            if list.is_empty() {
                continue;
            }
            for &load in loads {
                let values: Vec<f64> = list.iter().map(|e| e.throughput(load, beta)).collect();
                let m = MeanStderr::of(&values);
                records.push(ThroughputRecord {
                    load,
                    policy,
                    throughput_mean: m.mean,
                    throughput_stderr: m.stderr,
                    trials: m.n,
                });
            }
        }
        Ok(Self {
            density,
            beta,
            beta_calibrated,
            records,
        })
    }

    pub fn record(&self, load: f64, policy: PolicyKind) -> Option<&ThroughputRecord> {
        self.records
            .iter()
            .find(|r| r.policy == policy && (r.load - load).abs() < 1e-9)
    }

    pub fn curve(&self, policy: PolicyKind) -> Vec<&ThroughputRecord> {
        self.records.iter().filter(|r| r.policy == policy).collect()
    }

    /// `load,policy,throughput_mean,throughput_stderr`
    pub fn csv(&self) -> String {
        let mut out = String::from("load,policy,throughput_mean,throughput_stderr\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt6(r.load),
                r.policy,
                fmt6(r.throughput_mean),
                fmt6(r.throughput_stderr)
            );
        }
        out
    }
}

/// Evaluate both policies at `cfg.throughput_density` and sweep the loads.
pub fn run_throughput_sweep(cfg: &SweepConfig) -> Result<(ThroughputSweep, Vec<TrialOutcome>)> {
    let outcomes = run_trials(cfg, &[cfg.throughput_density])?;
    let sweep = ThroughputSweep::from_outcomes(&outcomes, &cfg.loads, cfg.beta)?;
    Ok((sweep, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn greedy_only() -> SweepConfig {
        SweepConfig {
            policies: vec![PolicyKind::Greedy],
            densities: vec![0.0, 0.2, 0.4],
            trials_per_density: 4,
            packets_per_trial: 50,
            ..Default::default()
        }
    }

    #[test]
    fn default_grid() {
        let c = SweepConfig::default();
        assert_eq!(c.densities.len(), 9);
        assert_eq!(c.densities[8], 0.4);
        assert_eq!(c.loads.len(), 9);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            SweepConfig {
                densities: vec![0.6],
                ..greedy_only()
            },
            SweepConfig {
                loads: vec![0.0],
                ..greedy_only()
            },
            SweepConfig {
                beta: Some(-1.0),
                ..greedy_only()
            },
            SweepConfig {
                policies: vec![],
                ..greedy_only()
            },
            SweepConfig {
                trials_per_density: 0,
                ..greedy_only()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn greedy_sweep_shape_and_csv() {
        let s = run_pdr_sweep(&greedy_only()).unwrap();
        assert_eq!(s.raw.len(), 12);
        assert_eq!(s.aggregate.len(), 3);
        let zero = s.record(0.0, PolicyKind::Greedy).unwrap();
        assert_eq!(zero.pdr_mean, 1.0);
        assert_eq!(zero.adaptive_score, Some(1.0));
        assert_eq!(s.aggregate_csv().lines().count(), 4);
        assert!(s.raw_csv().starts_with(
            "density,policy,trial,pdr,mean_hops,n_delivered,n_packets\n0,greedy,0,1,"
        ));
        for o in &s.outcomes {
            assert_eq!(o.faults.len(), (o.density * 25.0 + 1e-9) as usize);
        }
    }

    #[test]
    fn adding_trials_keeps_earlier_ones() {
        let a = run_pdr_sweep(&greedy_only()).unwrap();
        let b = run_pdr_sweep(&SweepConfig {
            trials_per_density: 6,
            ..greedy_only()
        })
        .unwrap();
        for o in &a.outcomes {
            let same = b
                .outcomes
                .iter()
                .find(|p| p.density == o.density && p.trial == o.trial)
                .unwrap();
            assert_eq!(same, o);
        }
    }

    #[test]
    fn throughput_never_exceeds_pdr() {
        let cfg = SweepConfig {
            loads: vec![0.1, 0.5, 0.9],
            ..greedy_only()
        };
        let outcomes = run_trials(&cfg, &[0.2]).unwrap();
        let t = ThroughputSweep::from_outcomes(&outcomes, &cfg.loads, Some(1.8)).unwrap();
        let pdr = PdrSweep::from_outcomes(outcomes)
            .record(0.2, PolicyKind::Greedy)
            .unwrap()
            .pdr_mean;
        let curve = t.curve(PolicyKind::Greedy);
        assert_eq!(curve.len(), 3);
        assert!(curve[0].throughput_mean <= pdr);
        assert!(curve
            .windows(2)
            .all(|w| w[1].throughput_mean <= w[0].throughput_mean));
        assert!(!t.beta_calibrated);
    }
}
