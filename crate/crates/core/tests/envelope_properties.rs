mod common;

use common::suites::{self, envelope, random_face_point, supergradients, SUITE_CASES};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(common::config(SUITE_CASES, 21))]

    #[test]
    fn envelope_invariants_1d((f, p, seed) in suites::envelope_case()) {
        suites::envelope_invariants(&f, &p, seed)?;
    }

    #[test]
    fn splits_are_bayes_consistent((f, p) in suites::splitting_case()) {
        suites::splitting_bayes(&f, &p)?;
    }

    #[test]
    fn product_prior_degenerates((a, b, pa, pb) in suites::product_case()) {
        suites::product_degeneracy(&a, &b, &pa, &pb)?;
    }
}

proptest! {
    #![proptest_config(common::config(10, 22))]

    #[test]
    fn three_state_envelope_properties(f in common::family(3, 2, 2, 2.0), p in common::interior_belief(3), seed in 0u64..1000) {
        let env = envelope(&f, 0.05);
        let grid = env.grid();
        for (q, v) in grid.points().iter().zip(grid.values()).step_by(7) {
            prop_assert!(env.eval_face(q).unwrap() - v >= -1e-9);
        }
        let split = env.optimal_split(&p).unwrap();
        let value: f64 = split.atoms().iter().map(|a| a.weight * f.value_at_weights(a.belief.weights()).unwrap()).sum();
        prop_assert!((value - env.eval_cav(&p).unwrap()).abs() <= 1e-6);
        let cav_p = env.eval_cav(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in supergradients(&env, &p) {
            for _ in 0..100 {
                let q = random_face_point(&mut rng, 3);
                let lhs = cav_p + g[0] * (q[0] - p.weights()[0]) + g[1] * (q[1] - p.weights()[1]);
                prop_assert!(lhs >= env.eval_face(&q).unwrap() - 1e-6);
            }
        }
    }
}
