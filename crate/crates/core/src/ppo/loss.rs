//! Clipped-surrogate PPO loss with analytic gradients.

use super::net::{ForwardCache, Mlp};
use super::policy::{log_softmax_into, PolicyParams, N_ACTIONS};
use crate::env::Observation;

/// One training sample after advantage estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub observation: Observation,
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefs {
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Minibatch means.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub total: f64,
    /// `−L^CLIP`
    pub policy_loss: f64,
    /// `(R − V)²`
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Grads {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl Grads {
    pub fn zeros_like(p: &PolicyParams) -> Self {
        Self {
            actor: p.actor.zeros_like(),
            critic: p.critic.zeros_like(),
        }
    }

    pub fn clear(&mut self) {
        self.actor.fill(0.0);
        self.critic.fill(0.0);
    }

    pub fn all_finite(&self) -> bool {
        self.actor.all_finite() && self.critic.all_finite()
    }
}

/// `min(r·Â, clip(r, 1−ε, 1+ε)·Â)`.
pub fn clipped_objective(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

/// `∂/∂log π` of [`clipped_objective`]: zero where the clipped branch is the
/// active minimum and flat, `r·Â` otherwise.
fn clipped_objective_dlogp(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = (advantage > 0.0 && ratio > 1.0 + eps) || (advantage < 0.0 && ratio < 1.0 - eps);
    if clipped {
        0.0
    } else {
        ratio * advantage
    }
}

/// Loss `−mean(L^CLIP) + c_v·mean((R − V)²) − c_H·mean(H)` over
/// `batch[idx]`, accumulating its gradient into `grads` when given.
pub fn loss_and_grad(
    params: &PolicyParams,
    batch: &[Sample],
    idx: &[usize],
    coefs: &LossCoefs,
    mut grads: Option<&mut Grads>,
) -> LossStats {
    let mut stats = LossStats::default();
    if idx.is_empty() {
        return stats;
    }
    let inv_n = 1.0 / idx.len() as f64;
    let eps = coefs.clip_epsilon;
    let mut actor_cache = ForwardCache::default();
    let mut critic_cache = ForwardCache::default();
    let mut logp = [0.0; N_ACTIONS];
    for &k in idx {
        let s = &batch[k];

        params
            .actor
            .forward_cached(&s.observation, &mut actor_cache);
        log_softmax_into(actor_cache.output(), &mut logp);
        let probs = logp.map(f64::exp);
        let entropy = -probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
        let log_ratio = logp[s.action] - s.old_log_prob;
        let ratio = log_ratio.exp();
        let surrogate = clipped_objective(ratio, s.advantage, eps);

        params
            .critic
            .forward_cached(&s.observation, &mut critic_cache);
        let value = params.value_scale * critic_cache.output()[0];
        let err = value - s.ret;

        stats.policy_loss -= surrogate * inv_n;
        stats.value_loss += err * err * inv_n;
        stats.entropy += entropy * inv_n;
        stats.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
        if (ratio - 1.0).abs() > eps {
            stats.clip_fraction += inv_n;
        }

        if let Some(g) = grads.as_deref_mut() {
            // ∂(−surrogate)/∂z_j = −g·(1[j=a] − p_j)
            // ∂(−c_H·H)/∂z_j   = c_H·p_j·(log p_j + H)
            let g_logp = clipped_objective_dlogp(ratio, s.advantage, eps);
            let mut d_logits = [0.0; N_ACTIONS];
            for j in 0..N_ACTIONS {
                let onehot = if j == s.action { 1.0 } else { 0.0 };
                d_logits[j] = inv_n
                    * (-g_logp * (onehot - probs[j])
                        + coefs.entropy_coef * probs[j] * (logp[j] + entropy));
            }
            params
                .actor
                .backward_into(&actor_cache, &d_logits, &mut g.actor);
            let d_value = inv_n * coefs.value_coef * 2.0 * err * params.value_scale;
            params
                .critic
                .backward_into(&critic_cache, &[d_value], &mut g.critic);
        }
    }
    stats.total = stats.policy_loss + coefs.value_coef * stats.value_loss
        - coefs.entropy_coef * stats.entropy;
    stats
}
