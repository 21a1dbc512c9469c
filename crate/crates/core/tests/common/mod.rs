//! Deterministic structural and numerical checks shared by the property
//! tests and the acceptance gate. Each returns a description of the first
//! violation found.

#![allow(dead_code)]

use std::collections::HashSet;

use gaussnet_core::ppo::policy::{softmax_into, N_ACTIONS};
use gaussnet_core::ppo::{
    clipped_objective, compute_gae, loss_and_grad, train, FixedEpisode, Grads, LossCoefs,
    PolicyFile, Sample, Transition,
};
use gaussnet_core::{
    FaultSet, GaussianInt, NetworkModulus, PolicyParams, PpoConfig, Quadrant, Topology, OBS_DIM,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub const KS: std::ops::RangeInclusive<i64> = 2..=9;

pub fn topology(k: i64) -> Topology {
    Topology::new(NetworkModulus::from_k(k).unwrap())
}

/// Every lattice point in a box around the residues reduces to one of
/// exactly `N` distinct values, each congruent to the point.
pub fn residue_completeness(k: i64) -> Check {
    let m = NetworkModulus::from_k(k).unwrap();
    let n = m.n_nodes();
    let r = 2 * k + 4;
    let mut seen = HashSet::new();
    for re in -r..=r {
        for im in -r..=r {
            let z = GaussianInt::new(re, im);
            let c = m.canonical_residue(z);
            ensure(m.divides(z - c), || {
                format!("k={k}: {z} - {c} not divisible by {}", m.alpha())
            })?;
            ensure(m.canonical_residue(c) == c, || {
                format!("k={k}: reduction of {c} not idempotent")
            })?;
            seen.insert(c);
        }
    }
    ensure(seen.len() == n, || {
        format!("k={k}: {} distinct residues, expected {n}", seen.len())
    })
}

pub fn index_bijection(k: i64) -> Check {
    let t = topology(k);
    let m = t.modulus();
    for i in 0..t.len() {
        let c = t.coord(i);
        ensure(m.node_index(c) == i, || {
            format!("k={k}: node_index(coord({i})) = {}", m.node_index(c))
        })?;
    }
    for re in -20..=20 {
        for im in -20..=20 {
            let z = GaussianInt::new(re, im);
            ensure(t.coord(m.node_index(z)) == m.canonical_residue(z), || {
                format!("k={k}: coord(node_index({z}))")
            })?;
        }
    }
    Ok(())
}

pub fn degree_and_connectivity(k: i64) -> Check {
    let t = topology(k);
    for u in 0..t.len() {
        let nb = t.neighbors(u);
        let distinct: HashSet<_> = nb.iter().collect();
        ensure(distinct.len() == 4 && !nb.contains(&u), || {
            format!("k={k}: node {u} neighbors {nb:?}")
        })?;
        for &v in nb {
            ensure(t.neighbors(v).contains(&u), || {
                format!("k={k}: edge {u}-{v} not symmetric")
            })?;
        }
    }
    let reach = t.bfs_from(0, &FaultSet::empty(t.len()));
    ensure(reach.iter().all(Option::is_some), || {
        format!("k={k}: not connected")
    })
}

fn rotate(t: &Topology, u: usize) -> usize {
    t.index_of(t.coord(u) * GaussianInt::I)
}

pub fn quadrants_and_rotation(k: i64) -> Check {
    let t = topology(k);
    let n = t.len();
    let qs = [Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4];
    let sizes: Vec<usize> = qs.iter().map(|&q| t.quadrant_nodes(q).len()).collect();
    ensure(sizes.iter().sum::<usize>() + 1 == n, || {
        format!("k={k}: quadrant sizes {sizes:?} for {n} nodes")
    })?;
    ensure(t.quadrant_nodes(Quadrant::Origin) == vec![0], || {
        format!("k={k}: origin set")
    })?;

    let image: HashSet<usize> = (0..n).map(|u| rotate(&t, u)).collect();
    ensure(image.len() == n, || {
        format!("k={k}: rotation is not a bijection")
    })?;
    for u in 0..n {
        for &v in t.neighbors(u) {
            let (ru, rv) = (rotate(&t, u), rotate(&t, v));
            ensure(t.neighbors(ru).contains(&rv), || {
                format!("k={k}: edge {u}-{v} not preserved")
            })?;
        }
    }
    for (j, &q) in qs.iter().enumerate() {
        let next = qs[(j + 1) % 4];
        let mut mapped: Vec<usize> = t.quadrant_nodes(q).iter().map(|&u| rotate(&t, u)).collect();
        mapped.sort_unstable();
        ensure(mapped == t.quadrant_nodes(next), || {
            format!("k={k}: i·{q:?} is not {next:?}")
        })?;
    }
    Ok(())
}

fn tr(reward: f64, value: f64, terminal: bool) -> Transition {
    Transition {
        observation: [0.0; OBS_DIM],
        action: 0,
        log_prob: 0.0,
        reward,
        value_estimate: value,
        terminal,
    }
}

/// Hand-computed GAE fixtures.
pub fn gae_fixtures() -> Check {
    // a hop then delivery with zero values: δ0 = −1, δ1 = 100, A0 = −1 + 0.95·0.92·100
    let (adv, ret) = compute_gae(
        &[tr(-1.0, 0.0, false), tr(100.0, 0.0, true)],
        0.95,
        0.92,
        0.0,
    );
    ensure((adv[0] - 86.4).abs() < 1e-12 && adv[1] == 100.0, || {
        format!("advantages {adv:?}")
    })?;
    ensure(ret == adv, || format!("returns {ret:?}"))?;
    // nonzero values: δ1 = −50 − 3 = −53, δ0 = −1 + 0.95·3 − 2 = −0.15, A0 = −0.15 + 0.874·(−53)
    let (adv, ret) = compute_gae(
        &[tr(-1.0, 2.0, false), tr(-50.0, 3.0, true)],
        0.95,
        0.92,
        0.0,
    );
    ensure((adv[1] + 53.0).abs() < 1e-12, || format!("A1 = {}", adv[1]))?;
    ensure((adv[0] - (-0.15 - 0.874 * 53.0)).abs() < 1e-12, || {
        format!("A0 = {}", adv[0])
    })?;
    ensure((ret[0] - (adv[0] + 2.0)).abs() < 1e-12, || {
        format!("R0 = {}", ret[0])
    })
}

pub fn random_params(seed: u64) -> PolicyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = PolicyParams::init(&mut rng, 100.0);
    // larger actor outputs than the near-uniform initialization
    for w in p.actor.params_mut() {
        *w *= 1.0 + rng.random::<f64>();
    }
    p
}

fn random_batch(params: &PolicyParams, n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut observation = [0.0; OBS_DIM];
            for x in observation.iter_mut().take(4) {
                *x = rng.random_range(-1.0..1.0);
            }
            for x in observation.iter_mut().skip(4) {
                *x = f64::from(rng.random_bool(0.3) as u8);
            }
            let action = rng.random_range(0..N_ACTIONS);
            let probs = params.policy_forward(&observation).unwrap();
            // ratio in [0.9, 1.1], clear of the clip boundaries
            let old_log_prob = probs[action].ln() - rng.random_range(-0.1..0.1);
            Sample {
                observation,
                action,
                old_log_prob,
                advantage: rng.random_range(-2.0..2.0),
                ret: rng.random_range(-60.0..100.0),
            }
        })
        .collect()
}

/// Worst relative error between the analytic loss gradient and central
/// differences over a spread of actor and critic weights. The actor is
/// checked with the value term switched off: it does not depend on actor
/// weights, and its magnitude would swamp the actor's share of the
/// differences in rounding error.
pub fn gradient_check(seed: u64) -> Result<f64, String> {
    let params = random_params(seed);
    let batch = random_batch(&params, 24, seed ^ 0x5eed);
    let idx: Vec<usize> = (0..batch.len()).collect();
    let full = LossCoefs {
        clip_epsilon: 0.2,
        value_coef: 0.5,
        entropy_coef: 0.01,
    };
    let actor_only = LossCoefs {
        value_coef: 0.0,
        ..full
    };

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (critic, coefs) in [(false, actor_only), (true, full)] {
        let mut grads = Grads::zeros_like(&params);
        loss_and_grad(&params, &batch, &idx, &coefs, Some(&mut grads));
        let net = if critic { &grads.critic } else { &grads.actor };
        let analytic: Vec<f64> = net.params().copied().collect();
        for j in (0..analytic.len()).step_by(41) {
            let bump = |delta: f64| {
                let mut p = params.clone();
                let net = if critic { &mut p.critic } else { &mut p.actor };
                *net.params_mut().nth(j).unwrap() += delta;
                loss_and_grad(&p, &batch, &idx, &coefs, None).total
            };
            let numeric = (bump(h) - bump(-h)) / (2.0 * h);
            let a = analytic[j];
            let scale = a.abs().max(numeric.abs());
            if scale < 1e-7 {
                continue;
            }
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    Ok(worst)
}

pub fn softmax_normalization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let logits: Vec<f64> = (0..N_ACTIONS)
            .map(|_| rng.random_range(-1.0..1.0) * scale)
            .collect();
        let mut p = [0.0; N_ACTIONS];
        softmax_into(&logits, &mut p);
        let sum: f64 = p.iter().sum();
        ensure(
            (sum - 1.0).abs() < 1e-9 && p.iter().all(|&x| x >= 0.0),
            || format!("softmax {logits:?} -> {p:?}"),
        )?;
    }
    Ok(())
}

/// The clipped objective equals `r·Â` inside the band and never exceeds the
/// unclipped term.
pub fn clip_identity() -> Check {
    let eps = 0.2;
    for i in 0..=200 {
        let r = 0.5 + i as f64 * 0.005;
        for a in [-3.0, -0.5, 0.0, 0.7, 2.0] {
            let obj = clipped_objective(r, a, eps);
            ensure(obj <= r * a + 1e-15, || {
                format!("r={r} A={a}: {obj} exceeds r·A")
            })?;
            if (1.0 - eps..=1.0 + eps).contains(&r) {
                ensure(obj == r * a, || {
                    format!("r={r} A={a}: {obj} != r·A inside the band")
                })?;
            }
        }
    }
    ensure(
        (clipped_objective(1.5, 1.0, eps) - 1.2).abs() < 1e-15,
        || "ratio 1.5 does not clip to 1.2".into(),
    )
}

fn short_training(seed: u64) -> gaussnet_core::TrainingReport {
    let t = topology(3);
    let faults = FaultSet::from_nodes(t.len(), [1]).unwrap();
    let mut sampler = FixedEpisode {
        topology: &t,
        faults: &faults,
        src: 0,
        dst: 3,
    };
    let cfg = PpoConfig {
        episodes: 60,
        seed,
        ..Default::default()
    };
    train(&mut sampler, &cfg).unwrap()
}

pub fn seed_determinism() -> Check {
    let (a, b) = (short_training(9), short_training(9));
    ensure(a.returns == b.returns, || {
        "returns differ between reruns".into()
    })?;
    let same_bits = a
        .params
        .actor
        .params()
        .zip(b.params.actor.params())
        .all(|(x, y)| x.to_bits() == y.to_bits())
        && a.params
            .critic
            .params()
            .zip(b.params.critic.params())
            .all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(same_bits, || "parameters differ between reruns".into())?;
    let c = short_training(10);
    ensure(c.params != a.params, || {
        "different seeds gave identical parameters".into()
    })
}

pub fn param_round_trip() -> Check {
    let params = random_params(21);
    let file = PolicyFile::new(
        params,
        PpoConfig::default(),
        NetworkModulus::from_k(3).unwrap(),
        42,
    );
    let text = file.to_json().map_err(|e| e.to_string())?;
    let back = PolicyFile::from_json(&text).map_err(|e| e.to_string())?;
    ensure(back == file, || "round trip changed the file".into())?;
    let bits = |p: &PolicyParams| {
        p.actor
            .params()
            .chain(p.critic.params())
            .map(|x| x.to_bits())
            .collect::<Vec<_>>()
    };
    ensure(bits(&back.params) == bits(&file.params), || {
        "weights not bit-identical".into()
    })
}
