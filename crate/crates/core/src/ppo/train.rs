//! Rollouts, PPO updates and inference-time routing.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::{compute_gae, normalize_advantages};
use super::loss::{loss_and_grad, Grads, LossStats, Sample};
use super::policy::{PolicyParams, N_ACTIONS};
use super::sampler::EpisodeSampler;
use super::{PpoConfig, Transition};
use crate::env::{Action, RoutingEnv};
use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::greedy::{check_endpoints, RouteResult, RouteStatus};
use crate::topology::Topology;

pub const SMOOTHING_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub samples: usize,
    pub minibatches: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingReport {
    /// Undiscounted return of every episode.
    pub returns: Vec<f64>,
    /// Trailing mean of `returns` over up to [`SMOOTHING_WINDOW`] episodes.
    pub smoothed: Vec<f64>,
    pub updates: Vec<UpdateStats>,
    pub params: PolicyParams,
    pub wall_seconds: f64,
}

impl TrainingReport {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &TrainingReport) -> bool {
        self.returns == other.returns
            && self.smoothed == other.smoothed
            && self.updates == other.updates
            && self.params == other.params
    }
}

pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (k, x) in xs.iter().enumerate() {
        sum += x;
        if k >= window {
            sum -= xs[k - window];
        }
        out.push(sum / (k + 1).min(window) as f64);
    }
    out
}

/// Parameters plus optimizer state; one per agent.
pub struct Trainer {
    pub params: PolicyParams,
    pub config: PpoConfig,
    actor_opt: Adam,
    critic_opt: Adam,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(config: PpoConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = PolicyParams::init(&mut rng, config.value_scale);
        Ok(Self::with_params(params, config, rng))
    }

    pub fn from_params(params: PolicyParams, config: PpoConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self::with_params(params, config, rng))
    }

    fn with_params(params: PolicyParams, config: PpoConfig, rng: ChaCha8Rng) -> Self {
        let actor_opt = Adam::for_mlp(&params.actor, config.learning_rate);
        let critic_opt = Adam::for_mlp(&params.critic, config.learning_rate);
        Self {
            params,
            config,
            actor_opt,
            critic_opt,
            rng,
        }
    }

    /// Roll out one episode with the current stochastic policy.
    fn rollout(
        &mut self,
        sampler: &mut dyn EpisodeSampler,
        episode: usize,
    ) -> Result<(Vec<Transition>, f64)> {
        let setup = sampler.sample(episode, &mut self.rng)?;
        let (mut env, mut obs) =
            RoutingEnv::reset(setup.topology, setup.src, setup.dst, setup.faults)?;
        let explore = self.config.epsilon_greedy.at_episode(episode);
        let mut traj = Vec::new();
        loop {
            let probs = self.params.policy_forward(&obs)?;
            let value = self.params.value(&obs)?;
            let action = if explore > 0.0 && self.rng.random::<f64>() < explore {
                self.rng.random_range(0..N_ACTIONS)
            } else {
                sample_categorical(&probs, self.rng.random::<f64>())
            };
            let out = env.step(Action::ALL[action])?;
            traj.push(Transition {
                observation: obs,
                action,
                log_prob: probs[action].ln(),
                reward: out.reward,
                value_estimate: value,
                terminal: out.terminated,
            });
            if out.terminated {
                return Ok((traj, 0.0));
            }
            if out.truncated {
                let boot = self.params.value(&out.observation)?;
                return Ok((traj, boot));
            }
            obs = out.observation;
        }
    }

    /// Run `config.episodes` episodes, updating every `episodes_per_update`.
    pub fn run(&mut self, sampler: &mut dyn EpisodeSampler) -> Result<TrainingReport> {
        let start = Instant::now();
        let cfg = self.config.clone();
        let mut returns = Vec::with_capacity(cfg.episodes);
        let mut updates = Vec::new();
        let mut batch: Vec<Sample> = Vec::new();
        for episode in 0..cfg.episodes {
            let wrap = |e: Error| Error::Training {
                episode,
                source: Box::new(e),
            };
            let (traj, boot) = self.rollout(sampler, episode).map_err(wrap)?;
            returns.push(traj.iter().map(|t| t.reward).sum::<f64>());
            let (adv, rets) = compute_gae(&traj, cfg.gamma, cfg.gae_lambda, boot);
            batch.extend(
                traj.into_iter()
                    .zip(adv)
                    .zip(rets)
                    .map(|((t, a), r)| Sample {
                        observation: t.observation,
                        action: t.action,
                        old_log_prob: t.log_prob,
                        advantage: a,
                        ret: r,
                    }),
            );
            if (episode + 1) % cfg.episodes_per_update == 0 || episode + 1 == cfg.episodes {
                let remaining = 1.0 - episode as f64 / cfg.episodes as f64;
                if cfg.anneal_lr {
                    self.actor_opt.lr = cfg.learning_rate * remaining;
                    self.critic_opt.lr = cfg.learning_rate * remaining;
                }
                if cfg.anneal_entropy {
                    self.config.entropy_coef = cfg.entropy_coef * remaining;
                }
                let stats = self.update(&mut batch).map_err(wrap)?;
                updates.push(stats);
                batch.clear();
            }
        }
        Ok(TrainingReport {
            smoothed: moving_average(&returns, SMOOTHING_WINDOW),
            returns,
            updates,
            params: self.params.clone(),
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn update(&mut self, batch: &mut [Sample]) -> Result<UpdateStats> {
        ppo_update(
            &mut self.params,
            &mut self.actor_opt,
            &mut self.critic_opt,
            batch,
            &self.config,
            &mut self.rng,
        )
    }
}

/// Inverse-CDF draw with `u ∈ [0, 1)`.
fn sample_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Several epochs of minibatch Adam steps on the clipped PPO loss.
///
/// Advantages are normalized in place first. If any loss or gradient turns
/// non-finite the parameters and optimizer state are restored and an error
/// is returned.
pub fn ppo_update(
    params: &mut PolicyParams,
    actor_opt: &mut Adam,
    critic_opt: &mut Adam,
    batch: &mut [Sample],
    config: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    if batch.is_empty() {
        return Ok(UpdateStats::default());
    }
    let mut adv: Vec<f64> = batch.iter().map(|s| s.advantage).collect();
    normalize_advantages(&mut adv);
    batch.iter_mut().zip(adv).for_each(|(s, a)| s.advantage = a);

    let backup = (params.clone(), actor_opt.clone(), critic_opt.clone());
    let coefs = config.loss_coefs();
    let mut grads = Grads::zeros_like(params);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut acc = LossStats::default();
    let mut minibatches = 0;
    for _ in 0..config.update_epochs {
        order.shuffle(rng);
        for idx in order.chunks(config.minibatch_size) {
            grads.clear();
            let stats = loss_and_grad(params, batch, idx, &coefs, Some(&mut grads));
            if !stats.total.is_finite() || !grads.all_finite() {
                (*params, *actor_opt, *critic_opt) = backup;
                return Err(Error::NonFinite("ppo loss"));
            }
            actor_opt.step(&mut params.actor, &grads.actor);
            critic_opt.step(&mut params.critic, &grads.critic);
            acc.policy_loss += stats.policy_loss;
            acc.value_loss += stats.value_loss;
            acc.entropy += stats.entropy;
            acc.approx_kl += stats.approx_kl;
            acc.clip_fraction += stats.clip_fraction;
            minibatches += 1;
        }
    }
    if !params.all_finite() {
        (*params, *actor_opt, *critic_opt) = backup;
        return Err(Error::NonFinite("updated parameters"));
    }
    let m = minibatches.max(1) as f64;
    Ok(UpdateStats {
        samples: batch.len(),
        minibatches,
        policy_loss: acc.policy_loss / m,
        value_loss: acc.value_loss / m,
        entropy: acc.entropy / m,
        approx_kl: acc.approx_kl / m,
        clip_fraction: acc.clip_fraction / m,
    })
}

/// Train a fresh agent seeded from `config.seed`.
pub fn train(sampler: &mut dyn EpisodeSampler, config: &PpoConfig) -> Result<TrainingReport> {
    Trainer::new(config.clone())?.run(sampler)
}

/// Continue training from existing parameters.
pub fn train_from(
    params: PolicyParams,
    sampler: &mut dyn EpisodeSampler,
    config: &PpoConfig,
) -> Result<TrainingReport> {
    Trainer::from_params(params, config.clone())?.run(sampler)
}

/// Route one packet by following the policy's most probable action.
///
/// Entering a faulty node is reported as [`RouteStatus::Stuck`]; cycling
/// until `2N` steps as [`RouteStatus::MaxHopsExceeded`].
pub fn route_rl(
    t: &Topology,
    params: &PolicyParams,
    src: usize,
    dst: usize,
    faults: &FaultSet,
) -> Result<RouteResult> {
    check_endpoints(t, src, dst, faults)?;
    if src == dst {
        return Ok(RouteResult::success(vec![src]));
    }
    let (mut env, mut obs) = RoutingEnv::reset(t, src, dst, faults)?;
    let mut path = vec![src];
    loop {
        let action = params.greedy_action(&obs)?;
        let out = env.step(Action::ALL[action])?;
        if out.hit_fault {
            return Ok(RouteResult::failure(path, RouteStatus::Stuck));
        }
        path.push(out.next_node);
        if out.reached_dst {
            return Ok(RouteResult::success(path));
        }
        if out.truncated {
            return Ok(RouteResult::failure(path, RouteStatus::MaxHopsExceeded));
        }
        obs = out.observation;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::NetworkModulus;
    use crate::ppo::sampler::FixedEpisode;

    #[test]
    fn moving_average_window() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(moving_average(&xs, 2), vec![1.0, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn categorical_sampling_edges() {
        assert_eq!(sample_categorical(&[0.25; 4], 0.0), 0);
        assert_eq!(sample_categorical(&[0.25; 4], 0.6), 2);
        assert_eq!(sample_categorical(&[0.25; 4], 0.999_999_999), 3);
    }

    #[test]
    fn zero_episodes_leaves_params() {
        let t = Topology::new(NetworkModulus::from_k(3).unwrap());
        let f = FaultSet::empty(25);
        let cfg = PpoConfig {
            episodes: 0,
            seed: 11,
            ..Default::default()
        };
        let initial = Trainer::new(cfg.clone()).unwrap().params;
        let report = train(
            &mut FixedEpisode {
                topology: &t,
                faults: &f,
                src: 0,
                dst: 3,
            },
            &cfg,
        )
        .unwrap();
        assert!(report.returns.is_empty() && report.smoothed.is_empty());
        assert_eq!(report.params, initial);
    }

    #[test]
    fn rl_route_of_untrained_policy_respects_invariants() {
        let t = Topology::new(NetworkModulus::from_k(3).unwrap());
        let f = FaultSet::from_nodes(25, [1, 7]).unwrap();
        let params = Trainer::new(PpoConfig::default()).unwrap().params;
        for dst in [3, 4, 20] {
            let r = route_rl(&t, &params, 0, dst, &f).unwrap();
            assert_eq!(r.path[0], 0);
            for w in r.path.windows(2) {
                assert!(t.neighbors(w[0]).contains(&w[1]));
            }
            assert!(r.path.iter().all(|&p| !f.contains(p)));
            match r.status {
                RouteStatus::Success => assert_eq!(r.hops as usize, r.path.len() - 1),
                RouteStatus::MaxHopsExceeded => assert_eq!(r.path.len() - 1, 50),
                RouteStatus::Stuck => assert_eq!(r.hops, -1),
            }
        }
        assert_eq!(route_rl(&t, &params, 5, 5, &f).unwrap().hops, 0);
    }
}
