//! Generalized advantage estimation.

use super::Transition;

/// Advantages and value targets for one trajectory.
///
/// `δ_t = R_t + γ·V(s_{t+1}) − V(s_t)` and `Â_t = Σ_l (γλ)^l δ_{t+l}`, with
/// `V(s_T) = bootstrap_value`. A transition flagged terminal cuts both the
/// value and the advantage recursion. Returns are `Â_t + V(s_t)`.
pub fn compute_gae(
    trajectory: &[Transition],
    gamma: f64,
    lambda: f64,
    bootstrap_value: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = trajectory.len();
    let mut advantages = vec![0.0; n];
    let mut next_value = bootstrap_value;
    let mut next_adv = 0.0;
    for (t, tr) in trajectory.iter().enumerate().rev() {
        let cont = if tr.terminal { 0.0 } else { 1.0 };
        let delta = tr.reward + gamma * next_value * cont - tr.value_estimate;
        next_adv = delta + gamma * lambda * cont * next_adv;
        advantages[t] = next_adv;
        next_value = tr.value_estimate;
    }
    let returns = advantages
        .iter()
        .zip(trajectory)
        .map(|(a, tr)| a + tr.value_estimate)
        .collect();
    (advantages, returns)
}

/// Shift to zero mean and scale to unit (population) variance. Batches of
/// fewer than two samples are left alone; a constant batch is only centered.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = if std > 1e-12 { 1.0 / std } else { 1.0 };
    adv.iter_mut().for_each(|a| *a = (*a - mean) * scale);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::OBS_DIM;
    use proptest::prelude::*;

    fn tr(reward: f64, value: f64, terminal: bool) -> Transition {
        Transition {
            observation: [0.0; OBS_DIM],
            action: 0,
            log_prob: -1.0,
            reward,
            value_estimate: value,
            terminal,
        }
    }

    #[test]
    fn one_step_terminal() {
        let (a, r) = compute_gae(&[tr(100.0, 0.0, true)], 0.95, 0.92, 0.0);
        assert_eq!(a, vec![100.0]);
        assert_eq!(r, vec![100.0]);
    }

    #[test]
    fn two_step_hand_value() {
        let (a, r) = compute_gae(
            &[tr(-1.0, 0.0, false), tr(100.0, 0.0, true)],
            0.95,
            0.92,
            0.0,
        );
        assert!((a[0] - 86.4).abs() < 1e-12, "{}", a[0]);
        assert_eq!(a[1], 100.0);
        assert_eq!(r, a);
    }

    #[test]
    fn bootstrap_used_when_truncated() {
        let (a, _) = compute_gae(&[tr(-1.0, 2.0, false)], 0.5, 0.9, 10.0);
        assert_eq!(a, vec![-1.0 + 5.0 - 2.0]);
    }

    proptest! {
        #[test]
        fn lambda_zero_gives_td_errors(rs in proptest::collection::vec((-50.0f64..100.0, -100.0f64..100.0), 1..20), boot in -50.0f64..50.0, gamma in 0.01f64..=1.0) {
            let traj: Vec<Transition> = rs.iter().map(|&(r, v)| tr(r, v, false)).collect();
            let (a, _) = compute_gae(&traj, gamma, 0.0, boot);
            for t in 0..traj.len() {
                let next = if t + 1 < traj.len() { traj[t + 1].value_estimate } else { boot };
                let delta = traj[t].reward + gamma * next - traj[t].value_estimate;
                prop_assert!((a[t] - delta).abs() < 1e-9);
            }
        }

        #[test]
        fn matches_explicit_sum(rs in proptest::collection::vec((-50.0f64..100.0, -100.0f64..100.0), 1..15), gamma in 0.1f64..=1.0, lambda in 0.0f64..=1.0) {
            let mut traj: Vec<Transition> = rs.iter().map(|&(r, v)| tr(r, v, false)).collect();
            traj.last_mut().unwrap().terminal = true;
            let (a, _) = compute_gae(&traj, gamma, lambda, 0.0);
            let n = traj.len();
            let delta: Vec<f64> = (0..n).map(|t| {
                let next = if t + 1 < n { traj[t + 1].value_estimate } else { 0.0 };
                traj[t].reward + gamma * next - traj[t].value_estimate
            }).collect();
            for (t, &at) in a.iter().enumerate() {
                let explicit: f64 = (t..n).map(|k| (gamma * lambda).powi((k - t) as i32) * delta[k]).sum();
                prop_assert!((at - explicit).abs() < 1e-8 * (1.0 + explicit.abs()));
            }
        }

        #[test]
        fn normalized_moments(xs in proptest::collection::vec(-1000.0f64..1000.0, 2..200)) {
            let mut v = xs.clone();
            normalize_advantages(&mut v);
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            if spread > 1e-6 {
                prop_assert!((var - 1.0).abs() < 1e-6);
            }
        }
    }
}
