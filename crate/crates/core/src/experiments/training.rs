//! How the experiment drivers train their RL routers.

use serde::{Deserialize, Serialize};

use crate::env::{Action, RoutingEnv};
use crate::error::{Error, Result};
use crate::faults::{FaultSet, FaultSpec};
use crate::gaussian::GaussianInt;
use crate::ppo::train::SMOOTHING_WINDOW;
use crate::ppo::{
    train, FaultRegime, FixedEpisode, PolicyParams, PpoConfig, RandomPairs, TrainingReport,
};
use crate::seed::derive_seed;
use crate::topology::Topology;

/// Fault layouts seen while training a sweep trial's policy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum RlTraining {
    /// The trial's own fault set, with fresh `(src, dst)` pairs each episode.
    #[default]
    TrialFaults,
    /// Regenerate faults from the trial's spec every `every` episodes.
    Resampled { every: usize },
}

impl RlTraining {
    pub fn regime(&self, faults: &FaultSet, spec: &FaultSpec) -> FaultRegime {
        match *self {
            RlTraining::TrialFaults => FaultRegime::Fixed(vec![faults.clone()]),
            RlTraining::Resampled { every } => FaultRegime::Resample { spec: *spec, every },
        }
    }
}

/// Training settings for sweep trials: a larger episode budget, step size
/// and rollout than the defaults. Step size and entropy bonus both decay to
/// zero so the final policy is not a snapshot taken mid-oscillation.
pub fn sweep_training_defaults() -> PpoConfig {
    PpoConfig {
        episodes: 8000,
        episodes_per_update: 40,
        learning_rate: 2e-3,
        entropy_coef: 0.2,
        anneal_lr: true,
        anneal_entropy: true,
        ..PpoConfig::default()
    }
}

/// Train one policy for a sweep trial over random `(src, dst)` pairs.
pub fn train_trial_policy(
    t: &Topology,
    faults: &FaultSet,
    spec: &FaultSpec,
    regime: RlTraining,
    config: &PpoConfig,
) -> Result<TrainingReport> {
    let topologies = std::slice::from_ref(t);
    let mut sampler = RandomPairs::new(topologies, regime.regime(faults, spec))?;
    train(&mut sampler, config)
}

/// Training settings for single-episode policies. A large entropy bonus
/// decayed to zero keeps early rollouts spread over the alternatives, so the
/// policy does not lock onto the first detour that reaches the destination.
pub fn pair_training_defaults() -> PpoConfig {
    PpoConfig {
        episodes: 1500,
        episodes_per_update: 20,
        learning_rate: 3e-3,
        entropy_coef: 0.5,
        anneal_entropy: true,
        ..PpoConfig::default()
    }
}

/// Train on one fixed `(src, dst, faults)` episode, `restarts` times with
/// seeds derived from `config.seed`, keeping the run whose argmax rollout
/// earns the highest return (earliest run on ties).
pub fn train_pair_policy(
    t: &Topology,
    src: usize,
    dst: usize,
    faults: &FaultSet,
    config: &PpoConfig,
    restarts: usize,
) -> Result<TrainingReport> {
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be positive".into()));
    }
    let mut best: Option<(f64, TrainingReport)> = None;
    for k in 0..restarts {
        let cfg = PpoConfig {
            seed: derive_seed(config.seed, "restart", k as u64),
            ..config.clone()
        };
        let mut sampler = FixedEpisode {
            topology: t,
            faults,
            src,
            dst,
        };
        let report = train(&mut sampler, &cfg)?;
        let score = rollout_return(t, &report.params, src, dst, faults)?;
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, report));
        }
    }
    Ok(best.map(|(_, r)| r).expect("restarts > 0"))
}

/// Undiscounted return of the argmax policy on one episode.
fn rollout_return(
    t: &Topology,
    params: &PolicyParams,
    src: usize,
    dst: usize,
    faults: &FaultSet,
) -> Result<f64> {
    let (mut env, mut obs) = RoutingEnv::reset(t, src, dst, faults)?;
    let mut total = 0.0;
    loop {
        let out = env.step(Action::ALL[params.greedy_action(&obs)?])?;
        total += out.reward;
        if out.done() {
            return Ok(total);
        }
        obs = out.observation;
    }
}

/// Repeated training runs for reward-curve studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceConfig {
    pub alpha: GaussianInt,
    /// Fault density of the training layouts, regenerated every
    /// `resample_every` episodes.
    pub density: f64,
    pub resample_every: usize,
    pub runs: usize,
    pub training: PpoConfig,
    pub master_seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            alpha: GaussianInt::new(3, 4),
            density: 0.1,
            resample_every: 50,
            runs: 5,
            training: PpoConfig::default(),
            master_seed: 0,
        }
    }
}

/// Start, end and rise time of one smoothed return curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    /// Mean smoothed return over the first `window` episodes.
    pub first: f64,
    /// Mean smoothed return over the last `window` episodes.
    pub last: f64,
    /// First episode (1-based) whose smoothed return has covered 90% of the
    /// climb from `first` to `last`. Episodes before the moving average has a
    /// full window are not considered.
    pub rise_episode: Option<usize>,
}

impl CurveSummary {
    pub fn of(smoothed: &[f64], window: usize) -> Option<Self> {
        let n = smoothed.len();
        if window == 0 || n < window {
            return None;
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let first = mean(&smoothed[..window]);
        let last = mean(&smoothed[n - window..]);
        let target = first + 0.9 * (last - first);
        let rise_episode = if last > first {
            let skip = SMOOTHING_WINDOW - 1;
            smoothed
                .iter()
                .skip(skip)
                .position(|&v| v >= target)
                .map(|k| k + skip + 1)
        } else {
            None
        };
        Some(Self {
            first,
            last,
            rise_episode,
        })
    }
}

/// `runs` independent trainings over random pairs, each with a derived seed.
pub fn convergence_runs(cfg: &ConvergenceConfig) -> Result<Vec<TrainingReport>> {
    let t = Topology::from_alpha(cfg.alpha)?;
    if cfg.resample_every == 0 {
        return Err(Error::InvalidConfig(
            "resample_every must be positive".into(),
        ));
    }
    (0..cfg.runs)
        .map(|run| {
            let config = PpoConfig {
                seed: derive_seed(cfg.master_seed, "convergence/train", run as u64),
                ..cfg.training.clone()
            };
            let spec = FaultSpec::uniform(cfg.density, 0);
            let regime = FaultRegime::Resample {
                spec,
                every: cfg.resample_every,
            };
            let topologies = std::slice::from_ref(&t);
            let mut sampler = RandomPairs::new(topologies, regime)?;
            train(&mut sampler, &config).map_err(|e| Error::Trial {
                trial: run,
                context: "convergence".into(),
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_summary() {
        let rising: Vec<f64> = (0..100).map(|k| (k as f64).min(50.0)).collect();
        let s = CurveSummary::of(&rising, 10).unwrap();
        assert_eq!(s.first, 4.5);
        assert_eq!(s.last, 50.0);
        // 4.5 + 0.9 · 45.5 = 45.45 → first value ≥ that is 46 at episode 47
        assert_eq!(s.rise_episode, Some(47));
        // a lucky first episode does not count as having risen
        let mut early = vec![50.0];
        early.extend((1..100).map(|k| (k as f64).min(50.0)));
        assert_eq!(CurveSummary::of(&early, 10).unwrap().rise_episode, Some(47));
        let flat = vec![3.0; 40];
        assert_eq!(CurveSummary::of(&flat, 10).unwrap().rise_episode, None);
        assert!(CurveSummary::of(&flat, 50).is_none());
    }
}
