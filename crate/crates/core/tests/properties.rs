mod common;

use common::*;
use gaussnet_core::experiments::{adaptive_score, normalized_throughput};
use gaussnet_core::ppo::clipped_objective;
use gaussnet_core::{route_greedy, DistanceMode, FaultSpec, RouteStatus};
use proptest::prelude::*;

#[test]
fn residues_complete_for_all_small_k() {
    for k in KS {
        residue_completeness(k).unwrap();
        index_bijection(k).unwrap();
    }
}

#[test]
fn regular_and_connected() {
    for k in KS {
        degree_and_connectivity(k).unwrap();
    }
}

#[test]
fn quadrants_rotate_into_each_other() {
    for k in KS {
        quadrants_and_rotation(k).unwrap();
    }
}

#[test]
fn gae_hand_values() {
    gae_fixtures().unwrap();
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..3 {
        let worst = gradient_check(seed).unwrap();
        assert!(worst < 1e-4, "seed {seed}: relative error {worst:e}");
    }
}

#[test]
fn softmax_sums_to_one() {
    softmax_normalization().unwrap();
}

#[test]
fn clip_bound() {
    clip_identity().unwrap();
}

#[test]
fn training_is_reproducible() {
    seed_determinism().unwrap();
}

#[test]
fn parameter_file_round_trip() {
    param_round_trip().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_routes_are_valid(k in 2i64..=6, density in 0.0f64..0.4, seed in any::<u64>(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let t = topology(k);
        let n = t.len();
        let (src, dst) = (a.index(n), b.index(n));
        let faults = FaultSpec::uniform(density, seed).generate(&t, &[src, dst]).unwrap();
        for mode in [DistanceMode::Plain, DistanceMode::Modular] {
            let r = route_greedy(&t, src, dst, &faults, mode).unwrap();
            prop_assert_eq!(r.path[0], src);
            prop_assert!(r.path.windows(2).all(|w| t.neighbors(w[0]).contains(&w[1])));
            prop_assert!(r.path.iter().all(|&k| !faults.contains(k)));
            let distinct: std::collections::HashSet<_> = r.path.iter().collect();
            prop_assert_eq!(distinct.len(), r.path.len());
            let bfs = t.bfs_distance(src, dst, &faults).unwrap();
            match r.status {
                RouteStatus::Success => {
                    prop_assert_eq!(*r.path.last().unwrap(), dst);
                    prop_assert_eq!(r.hops as usize, r.path.len() - 1);
                    prop_assert!(r.hops as usize >= bfs.unwrap());
                }
                RouteStatus::Stuck => {
                    prop_assert_eq!(r.hops, -1);
                    let head = *r.path.last().unwrap();
                    prop_assert!(t.neighbors(head).iter().all(|&v| faults.contains(v) || r.path.contains(&v)));
                }
                RouteStatus::MaxHopsExceeded => prop_assert_eq!(r.hops, -1),
            }
            prop_assert_eq!(route_greedy(&t, src, dst, &faults, mode).unwrap(), r);
        }
    }

    #[test]
    fn clipped_objective_never_exceeds_unclipped(r in 0.0f64..3.0, adv in -10.0f64..10.0, eps in 0.01f64..0.5) {
        let obj = clipped_objective(r, adv, eps);
        prop_assert!(obj <= r * adv + 1e-12);
        if (1.0 - eps..=1.0 + eps).contains(&r) {
            prop_assert_eq!(obj, r * adv);
        }
    }

    #[test]
    fn adaptive_score_is_scale_free(d in 0.01f64..1.0, z in 0.01f64..1.0, s in 0.1f64..10.0) {
        let a = adaptive_score(d, z).unwrap();
        let b = adaptive_score(d * s, z * s).unwrap();
        prop_assert!((a - b).abs() < 1e-12 || (a >= 1.05 && b >= 1.05));
        prop_assert!((0.0..=1.05).contains(&a));
    }

    #[test]
    fn throughput_bounded_by_pdr(hops in proptest::collection::vec(0usize..30, 0..50), lost in 0usize..50, load in 0.01f64..=1.0, beta in 0.01f64..5.0) {
        let total = hops.len() + lost;
        prop_assume!(total > 0);
        let tp = normalized_throughput(&hops, total, load, beta);
        let pdr = hops.len() as f64 / total as f64;
        prop_assert!((0.0..=pdr + 1e-12).contains(&tp));
        let lighter = normalized_throughput(&hops, total, load / 2.0, beta);
        prop_assert!(lighter >= tp - 1e-12);
    }
}
