use proptest::prelude::*;

use structbandit::gaps::{optimal_arm_set, RewardKind, Structure};
use structbandit::theory::{deterministic_sequences, k_beta, omega, phase_cap};

fn structures() -> impl Strategy<Value = Structure> {
    (2usize..6, 1usize..12)
        .prop_flat_map(|(arms, models)| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, arms), models),
                0..models,
            )
        })
        .prop_filter_map("tied optimum", |(means, truth)| {
            Structure::from_means(means, truth, RewardKind::Bernoulli).ok()
        })
}

proptest! {
    #[test]
    fn sequences_are_consistent(s in structures(), beta in 1.1f64..4.0, n in 64u64..1_000_000) {
        let seq = deterministic_sequences(&s, beta * beta, beta, n).unwrap();
        let best = s.true_model().optimal_arm();
        prop_assert_eq!(&seq.active[0], &optimal_arm_set(&s, &s.all_models()).unwrap());
        prop_assert!(seq.phases() <= phase_cap(n) + 1);
        prop_assert_eq!(seq.active.len(), seq.phases() + 1);
        for h in 0..seq.phases() {
            prop_assert!(seq.eliminated[h].is_subset(&seq.active[h]));
            prop_assert!(seq.guaranteed[h].is_subset(&seq.active[h]));
            prop_assert!(!seq.eliminated[h].contains(best));
            prop_assert_eq!(&seq.active[h + 1], &seq.active[h].difference(&seq.eliminated[h]));
        }
        for arm in 0..s.arm_count() {
            let gone = (0..seq.phases()).find(|&h| seq.eliminated[h].contains(arm));
            let expected = gone.or_else(|| seq.unresolved.contains(arm).then(|| phase_cap(n)));
            prop_assert_eq!(seq.last_active[arm], expected);
            match (seq.last_active[arm], seq.a_star_for(arm)) {
                (Some(h), Some(a)) => {
                    let mut want = seq.guaranteed[h].clone();
                    want.insert(arm);
                    prop_assert_eq!(a, &want);
                }
                (None, None) => {}
                other => prop_assert!(false, "mismatched entries {:?}", other),
            }
        }
        // Every optimal-somewhere arm other than the best is eventually gone
        // or flagged as unresolved.
        for arm in seq.active[0].iter().filter(|&a| a != best) {
            prop_assert!(seq.last_active[arm].is_some());
        }
    }

    #[test]
    fn omega_is_the_smallest_threshold(x in 0.1f64..5000.0) {
        let y = omega(x);
        let holds = |z: f64| z >= x * z.ln();
        let y = y as f64;
        for z in [y, y + 0.5, y + 1.0, 2.0 * y, 100.0 * y] {
            prop_assert!(holds(z), "x = {x}, z = {z}");
        }
        if y > 1.0 {
            prop_assert!(!holds(y - 1.0));
        }
    }

    #[test]
    fn k_beta_decreases_in_beta(b in 1.01f64..10.0, db in 0.01f64..5.0, n in 3u64..u64::MAX) {
        prop_assert!(k_beta(b + db, n).unwrap() < k_beta(b, n).unwrap());
        prop_assert!(k_beta(b, n).unwrap() > (b + 1.0) / (b - 1.0));
    }
}
