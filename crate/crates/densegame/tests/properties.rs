//! Randomized property checks of the core payoff and mapping invariants.

use densegame::game::{
    build_h_from_g, mixed_to_density, payoff_classical, payoff_trace, ClassicalGame, MixedProfile,
};
use densegame::linalg::{kron, trace, C64, CMatrix, NumericPolicy, SpaceShape};
use densegame::nash::nash_map;
use proptest::prelude::*;

fn policy() -> NumericPolicy {
    NumericPolicy::default()
}

fn normalize(raw: &[f64]) -> Vec<f64> {
    let shifted: Vec<f64> = raw.iter().map(|&x| x + 1e-3).collect();
    let sum: f64 = shifted.iter().sum();
    shifted.iter().map(|&x| x / sum).collect()
}

prop_compose! {
    fn arb_2x2_game()(t1 in prop::collection::vec(-5.0f64..5.0, 4),
                      t2 in prop::collection::vec(-5.0f64..5.0, 4))
                     -> ClassicalGame {
        let shape = SpaceShape::new(vec![2, 2]).unwrap();
        ClassicalGame::new(shape, vec![t1, t2]).unwrap()
    }
}

prop_compose! {
    fn arb_profile_2x2()(a in prop::collection::vec(0.0f64..1.0, 2),
                         b in prop::collection::vec(0.0f64..1.0, 2))
                        -> MixedProfile {
        MixedProfile::new(vec![normalize(&a), normalize(&b)], &policy()).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_and_trace_payoffs_agree(g in arb_2x2_game(), p in arb_profile_2x2()) {
        let h = build_h_from_g(&g);
        let rho = mixed_to_density(&p, &policy()).unwrap();
        for i in 0..2 {
            let a = payoff_classical(&g, &p, i).unwrap();
            let b = payoff_trace(&h, &rho, i).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn payoff_is_linear_in_each_player(
        g in arb_2x2_game(),
        p in arb_profile_2x2(),
        q in arb_profile_2x2(),
        alpha in 0.0f64..1.0,
    ) {
        // mix player 0's strategy, hold player 1 fixed
        let mixed: Vec<f64> = p.player(0)
            .iter()
            .zip(q.player(0))
            .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        let pol = policy();
        let pm = MixedProfile::new(vec![mixed, p.player(1).to_vec()], &pol).unwrap();
        let pa = MixedProfile::new(vec![p.player(0).to_vec(), p.player(1).to_vec()], &pol).unwrap();
        let pb = MixedProfile::new(vec![q.player(0).to_vec(), p.player(1).to_vec()], &pol).unwrap();
        for i in 0..2 {
            let lhs = payoff_classical(&g, &pm, i).unwrap();
            let rhs = alpha * payoff_classical(&g, &pa, i).unwrap()
                + (1.0 - alpha) * payoff_classical(&g, &pb, i).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }
    }

    #[test]
    fn nash_map_preserves_validity(g in arb_2x2_game(), p in arb_profile_2x2()) {
        let pol = policy();
        let game = build_h_from_g(&g);
        let rho = mixed_to_density(&p, &pol).unwrap();
        let next = nash_map(&game, &rho, &pol).unwrap();
        for probs in next.diagonal_probs() {
            let sum: f64 = probs.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(probs.iter().all(|&x| x >= -1e-14));
        }
    }

    #[test]
    fn kron_trace_is_multiplicative(
        a in prop::collection::vec(-3.0f64..3.0, 8),
        b in prop::collection::vec(-3.0f64..3.0, 8),
    ) {
        let ma = CMatrix::from_fn(2, 2, |r, c| C64::new(a[2 * r + c], a[4 + 2 * r + c]));
        let mb = CMatrix::from_fn(2, 2, |r, c| C64::new(b[2 * r + c], b[4 + 2 * r + c]));
        let lhs = trace(&kron(&ma, &mb));
        let rhs = trace(&ma) * trace(&mb);
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }
}
