//! From-scratch actor-critic PPO for the routing environment.

pub mod adam;
pub mod gae;
pub mod loss;
pub mod net;
pub mod policy;
pub mod sampler;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::error::{Error, Result};

pub use gae::{compute_gae, normalize_advantages};
pub use loss::{clipped_objective, loss_and_grad, Grads, LossCoefs, LossStats, Sample};
pub use policy::{PolicyFile, PolicyParams};
pub use sampler::{EpisodeSampler, EpisodeSetup, FaultRegime, FixedEpisode, RandomPairs};
pub use train::{ppo_update, route_rl, train, train_from, Trainer, TrainingReport, UpdateStats};

/// Random-action overlay applied during rollouts, decayed once per episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGreedy {
    pub enabled: bool,
    pub start: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsilonGreedy {
    fn default() -> Self {
        Self {
            enabled: false,
            start: 1.0,
            decay: 0.995,
            floor: 0.05,
        }
    }
}

impl EpsilonGreedy {
    pub fn at_episode(&self, episode: usize) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        (self.start * self.decay.powi(episode as i32)).max(self.floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub episodes: usize,
    pub episodes_per_update: usize,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    /// Decay the learning rate linearly to zero over the run.
    pub anneal_lr: bool,
    pub entropy_coef: f64,
    /// Decay the entropy bonus linearly to zero over the run.
    pub anneal_entropy: bool,
    pub value_coef: f64,
    pub value_scale: f64,
    pub epsilon_greedy: EpsilonGreedy,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            gae_lambda: 0.92,
            clip_epsilon: 0.2,
            episodes: 500,
            episodes_per_update: 10,
            update_epochs: 4,
            minibatch_size: 64,
            learning_rate: 3e-4,
            anneal_lr: false,
            entropy_coef: 0.01,
            anneal_entropy: false,
            value_coef: 0.5,
            value_scale: 100.0,
            epsilon_greedy: EpsilonGreedy::default(),
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return bad(format!("gae_lambda {} outside (0, 1]", self.gae_lambda));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad(format!("clip_epsilon {} outside (0, 1)", self.clip_epsilon));
        }
        if self.episodes_per_update == 0 || self.update_epochs == 0 || self.minibatch_size == 0 {
            return bad(
                "episodes_per_update, update_epochs and minibatch_size must be positive".into(),
            );
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if !(self.value_scale.is_finite() && self.value_scale > 0.0) {
            return bad(format!("value_scale {} must be positive", self.value_scale));
        }
        Ok(())
    }

    pub fn loss_coefs(&self) -> LossCoefs {
        LossCoefs {
            clip_epsilon: self.clip_epsilon,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
        }
    }
}

/// One environment step as recorded during a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value_estimate: f64,
    /// The episode ended on this step by reaching the destination or a fault.
    pub terminal: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table() {
        let c = PpoConfig::default();
        assert_eq!(
            (c.gamma, c.gae_lambda, c.clip_epsilon, c.episodes),
            (0.95, 0.92, 0.2, 500)
        );
        assert_eq!(c.epsilon_greedy.decay, 0.995);
        c.validate().unwrap();
    }

    #[test]
    fn epsilon_schedule() {
        let mut e = EpsilonGreedy::default();
        assert_eq!(e.at_episode(0), 0.0);
        e.enabled = true;
        assert_eq!(e.at_episode(0), 1.0);
        assert!((e.at_episode(100) - 0.995f64.powi(100)).abs() < 1e-12);
        assert_eq!(e.at_episode(5000), 0.05);
    }

    #[test]
    fn validation() {
        for bad in [
            PpoConfig {
                gamma: 0.0,
                ..Default::default()
            },
            PpoConfig {
                gae_lambda: 1.5,
                ..Default::default()
            },
            PpoConfig {
                clip_epsilon: 1.0,
                ..Default::default()
            },
            PpoConfig {
                minibatch_size: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn config_json_defaults_missing_fields() {
        let c: PpoConfig = serde_json::from_str(r#"{"episodes": 20, "seed": 4}"#).unwrap();
        assert_eq!(c.episodes, 20);
        assert_eq!(c.gamma, 0.95);
    }
}
