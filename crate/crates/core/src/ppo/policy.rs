//! Actor-critic parameters, inference and the on-disk parameter format.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::Mlp;
use super::PpoConfig;
use crate::env::{Observation, OBS_DIM};
use crate::error::{Error, Result};
use crate::gaussian::NetworkModulus;

pub const N_ACTIONS: usize = 4;
pub const HIDDEN: usize = 64;

/// Actor `8 → 64 → 64 → 4` (logits) and critic `8 → 64 → 64 → 1`.
///
/// The critic's raw output is multiplied by `value_scale` so that value
/// targets on the ±100 reward scale are reachable with unit-scale weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub critic: Mlp,
    pub value_scale: f64,
}

impl PolicyParams {
    pub fn init<R: Rng + ?Sized>(rng: &mut R, value_scale: f64) -> Self {
        let actor = Mlp::init(&[OBS_DIM, HIDDEN, HIDDEN, N_ACTIONS], 0.01, rng);
        let critic = Mlp::init(&[OBS_DIM, HIDDEN, HIDDEN, 1], 1.0, rng);
        Self {
            actor,
            critic,
            value_scale,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.actor.all_finite() && self.critic.all_finite() && self.value_scale.is_finite()
    }

    pub fn logits(&self, obs: &Observation) -> Vec<f64> {
        self.actor.forward(obs)
    }

    /// Action probabilities, strictly positive and summing to one.
    pub fn policy_forward(&self, obs: &Observation) -> Result<[f64; N_ACTIONS]> {
        let logits = self.actor.forward(obs);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy logits"));
        }
        let mut probs = [0.0; N_ACTIONS];
        softmax_into(&logits, &mut probs);
        Ok(probs)
    }

    pub fn value(&self, obs: &Observation) -> Result<f64> {
        let v = self.value_scale * self.critic.forward(obs)[0];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("value estimate"))
        }
    }

    /// Highest-probability action, ties to the lowest index.
    pub fn greedy_action(&self, obs: &Observation) -> Result<usize> {
        let logits = self.actor.forward(obs);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy logits"));
        }
        Ok(argmax(&logits))
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = k;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

/// Log-probabilities via log-sum-exp.
pub fn log_softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    for (o, l) in out.iter_mut().zip(logits) {
        *o = l - lse;
    }
}

pub const PARAM_FORMAT: &str = "gaussnet-policy";
pub const PARAM_VERSION: u32 = 1;

/// Serialized parameter file: layer shapes and row-major `f64` weights plus
/// the training configuration, network modulus and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub format: String,
    pub version: u32,
    pub modulus: NetworkModulus,
    pub master_seed: u64,
    pub config: PpoConfig,
    pub params: PolicyParams,
}

impl PolicyFile {
    pub fn new(
        params: PolicyParams,
        config: PpoConfig,
        modulus: NetworkModulus,
        master_seed: u64,
    ) -> Self {
        Self {
            format: PARAM_FORMAT.into(),
            version: PARAM_VERSION,
            modulus,
            master_seed,
            config,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PolicyFile = serde_json::from_str(text)?;
        if file.format != PARAM_FORMAT {
            return Err(Error::ParamFormat(format!(
                "unexpected format tag {:?}",
                file.format
            )));
        }
        if file.version != PARAM_VERSION {
            return Err(Error::ParamFormat(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let p = &file.params;
        let shapes_ok = p.actor.is_well_formed()
            && p.critic.is_well_formed()
            && p.actor.input_dim() == OBS_DIM
            && p.critic.input_dim() == OBS_DIM
            && p.actor.output_dim() == N_ACTIONS
            && p.critic.output_dim() == 1;
        if !shapes_ok {
            return Err(Error::ParamFormat(
                "layer shapes do not match the 8-feature, 4-action policy".into(),
            ));
        }
        if !p.all_finite() {
            return Err(Error::ParamFormat("non-finite weights".into()));
        }
        Ok(file)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
