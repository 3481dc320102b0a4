//! Seeded property suites shared by the property test files and the acceptance run.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spillover::envelope::{
    concavify, restricted_superdifferential, sample_value, ConcaveEnvelope, Superdifferential, LINE_RESOLUTION,
};
use spillover::game_core::{
    solve_matrix_game, AffinePoint, Belief, GameError, JointBelief, Matrix, SimplexChart, StageGameFamily,
};
use spillover::nr_analysis::{compute_interval, JointScenario};
use spillover::strategy_synthesis::{splitting_signal, FrequencyPath};

use super::{family, interior_belief};

pub const SUITE_CASES: u32 = 200;

type Outcome = Result<(), TestCaseError>;

pub fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-5.0..5.0f64, rows * cols)
        .prop_map(move |e| Matrix::from_rows(&e.chunks(cols).map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
}

pub fn any_matrix() -> impl Strategy<Value = Matrix> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| matrix(r, c))
}

/// Maximin of the optimal row equals minimax of the optimal column.
pub fn lp_duality(m: &Matrix) -> Outcome {
    let s = solve_matrix_game(m).unwrap();
    let (maximin, minimax) = (s.row_guarantee(m), s.col_guarantee(m));
    prop_assert!((minimax - maximin).abs() <= 1e-9, "{minimax} vs {maximin}");
    prop_assert!(maximin <= s.value + 1e-9 && s.value <= minimax + 1e-9);
    Ok(())
}

pub fn envelope(f: &StageGameFamily, res: f64) -> ConcaveEnvelope {
    let face: Vec<usize> = (0..f.n_states()).collect();
    concavify(sample_value(f, &face, res).unwrap())
}

pub fn random_face_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Chart slopes offered as supergradients at `p`: interval endpoints (finite ones)
/// in 1-D, the supporting facet normals otherwise.
pub fn supergradients(env: &ConcaveEnvelope, p: &Belief) -> Vec<Vec<f64>> {
    match restricted_superdifferential(env, p).unwrap() {
        Superdifferential::Interval { lower, upper } => {
            [lower, upper].into_iter().filter(|v| v.is_finite()).map(|v| vec![v]).collect()
        }
        Superdifferential::Polyhedron { .. } => env
            .supporting_facets(p.weights())
            .unwrap()
            .into_iter()
            .map(|f| {
                let last = f.normal[f.normal.len() - 1];
                f.normal[..f.normal.len() - 1].iter().map(|v| v - last).collect()
            })
            .collect(),
    }
}

pub fn envelope_case() -> impl Strategy<Value = (StageGameFamily, Belief, u64)> {
    (family(2, 2, 3, 2.0), interior_belief(2), 0u64..1000)
}

/// Dominance, idempotence, concavity and supporting supergradients of a 1-D envelope.
pub fn envelope_invariants(f: &StageGameFamily, p: &Belief, seed: u64) -> Outcome {
    let env = envelope(f, LINE_RESOLUTION);
    let grid = env.grid();
    let cav: Vec<f64> = grid.points().iter().map(|q| env.eval_face(q).unwrap()).collect();
    for (c, v) in cav.iter().zip(grid.values()) {
        prop_assert!(c - v >= -1e-9);
    }
    let again = concavify(grid.with_values(cav.clone()).unwrap());
    for (q, c) in grid.points().iter().zip(&cav) {
        prop_assert!((again.eval_face(q).unwrap() - c).abs() <= 1e-9);
    }
    for v in env.vertices().unwrap() {
        prop_assert!((env.eval_face(&v.point).unwrap() - v.value).abs() <= 1e-9);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ev = |x: f64| env.eval_face(&[x, 1.0 - x]).unwrap();
    for _ in 0..20 {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        prop_assert!(ev(0.5 * (a + b)) >= 0.5 * (ev(a) + ev(b)) - 1e-9);
    }
    let cav_p = env.eval_cav(p).unwrap();
    for g in supergradients(&env, p) {
        for _ in 0..100 {
            let q = random_face_point(&mut rng, 2);
            prop_assert!(cav_p + g[0] * (q[0] - p.weights()[0]) >= env.eval_face(&q).unwrap() - 1e-6);
        }
    }
    Ok(())
}

pub fn splitting_case() -> impl Strategy<Value = (StageGameFamily, Belief)> {
    (family(2, 2, 2, 2.0), interior_belief(2))
}

/// The optimal split is a lottery over rows whose Bayes posteriors are the atoms
/// and whose row probabilities are the atom weights.
pub fn splitting_bayes(f: &StageGameFamily, p: &Belief) -> Outcome {
    let env = envelope(f, LINE_RESOLUTION);
    let split = env.optimal_split(p).unwrap();
    let atoms = split.atoms();
    let value: f64 = atoms.iter().map(|a| a.weight * f.value_at_weights(a.belief.weights()).unwrap()).sum();
    prop_assert!((value - env.eval_cav(p).unwrap()).abs() <= 1e-6);
    let actions: Vec<usize> = (0..atoms.len()).collect();
    let signal = splitting_signal(p, &split, &actions, f.n_rows()).unwrap();
    for k in 0..2 {
        prop_assert!((signal.probs[k].iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }
    for (i, atom) in atoms.iter().enumerate() {
        let a = signal.signal_actions[i];
        let pr: f64 = (0..2).map(|k| p.weights()[k] * signal.probs[k][a]).sum();
        prop_assert!((pr - atom.weight).abs() <= 1e-10);
        for k in 0..2 {
            let post = p.weights()[k] * signal.probs[k][a] / pr;
            prop_assert!((post - atom.belief.weights()[k]).abs() <= 1e-10, "{post} vs {:?}", atom.belief);
        }
    }
    Ok(())
}

pub fn frequency_case() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, 1..=6)
}

pub const FREQUENCY_HORIZON: usize = 10_000;

/// `|count_c(t)/t − λ_c| <= #cells/t` for every `t <= 10⁴`.
pub fn frequency_bound(raw: &[f64]) -> Outcome {
    let total: f64 = raw.iter().sum();
    let lambda: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let cells = (0..lambda.len()).map(|i| (0, i)).collect();
    let path = FrequencyPath::new(cells, lambda.clone()).unwrap();
    let mut s = path.scheduler();
    let n = lambda.len() as f64;
    for t in 1..=FREQUENCY_HORIZON {
        s.advance();
        for (c, l) in s.counts().iter().zip(&lambda) {
            let err = (*c as f64 / t as f64 - l).abs();
            prop_assert!(err <= n / t as f64, "t={t} err={err} lambda={lambda:?}");
        }
    }
    Ok(())
}

pub fn gradient_case() -> impl Strategy<Value = (StageGameFamily, Belief)> {
    (family(3, 2, 3, 2.0), interior_belief(3))
}

/// Central difference of `v ∘ T` at step 1e-6, independent of the library's own check.
fn finite_difference(f: &StageGameFamily, chart: &SimplexChart, x: &[f64], i: usize) -> f64 {
    let h = 1e-6;
    let mut plus = x.to_vec();
    plus[i] += h;
    let mut minus = x.to_vec();
    minus[i] -= h;
    (f.nr_value(&chart.to_point(&plus).unwrap()).unwrap() - f.nr_value(&chart.to_point(&minus).unwrap()).unwrap())
        / (2.0 * h)
}

/// Action gradients agree with finite differences away from kinks.
pub fn gradient_fd(f: &StageGameFamily, p: &Belief) -> Outcome {
    let chart = SimplexChart::new(3).unwrap();
    let point = AffinePoint::new(p.weights().to_vec()).unwrap();
    match f.gradient_from_actions(&point, &chart) {
        Ok(g) => {
            let x = chart.coordinates(p.weights());
            for i in 0..2 {
                let fd = finite_difference(f, &chart, &x, i);
                prop_assert!((fd - g.gradient[i]).abs() <= 1e-3, "coordinate {i}: {fd} vs {:?}", g.gradient);
            }
            let payoff = f.payoff_vector(&g.row, &g.col).unwrap();
            prop_assert_eq!(chart.slope(&payoff), g.gradient);
        }
        Err(GameError::KinkDetected { .. }) => {}
        Err(e) => prop_assert!(false, "{e}"),
    }
    Ok(())
}

pub fn product_case() -> impl Strategy<Value = (StageGameFamily, StageGameFamily, Belief, Belief)> {
    (family(2, 2, 2, 2.0), family(2, 2, 2, 2.0), interior_belief(2), interior_belief(2))
}

/// A product prior leaves no room for spillover: the interval is a point.
pub fn product_degeneracy(a: &StageGameFamily, b: &StageGameFamily, pa: &Belief, pb: &Belief) -> Outcome {
    let prior = JointBelief::product(pa, pb);
    let s = JointScenario::new("product", a.clone(), b.clone(), prior).unwrap();
    let i = compute_interval(&s).unwrap();
    prop_assert!((i.lower - i.upper).abs() <= 1e-4, "{i:?}");
    Ok(())
}
