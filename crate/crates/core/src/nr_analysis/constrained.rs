use num::{BigRational, Signed, Zero};
use serde::Serialize;

use super::{JointScenario, NrError};
use crate::envelope::lattice;
use crate::game_core::{Belief, Matrix, StageGameFamily};

/// Upper bound on the number of row mixtures in the coarse search.
const COARSE_BUDGET: usize = 200_000;
/// Step at which the local refinement stops.
const REFINE_STEP: f64 = 1e-5;

/// `V(p) = max { σ Ā(p) τ : σ Ā(p) τ <= cav_bound }`, or `-∞` when no action
/// pair meets the bound.
///
/// For a fixed `σ` the attainable payoffs form the interval `[min σĀ, max σĀ]`,
/// so the inner maximum over `τ` is exact and only `σ` is searched: a lattice
/// of step 1e-3 (coarser when there are many rows), then pairwise mass
/// transfers between rows with a halving step down to 1e-5.
pub fn constrained_nr_value(family: &StageGameFamily, belief: &Belief, cav_bound: f64) -> Result<f64, NrError> {
    let m = family.average_matrix(&belief.to_affine())?;
    let rows = m.rows();
    let mut n = 1000usize;
    while n > 1 && lattice_len(rows, n) > COARSE_BUDGET {
        n /= 2;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for sigma in lattice(rows, n) {
        let v = inner_value(&m, &sigma, cav_bound);
        if v > best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0) {
            best = Some((v, sigma));
        }
    }
    let Some((mut value, mut sigma)) = best else {
        return Ok(f64::NEG_INFINITY);
    };
    let mut step = 1.0 / n as f64;
    while step >= REFINE_STEP {
        let mut improved = false;
        for from in 0..rows {
            for to in 0..rows {
                if from == to {
                    continue;
                }
                let moved = step.min(sigma[from]);
                if moved <= 0.0 {
                    continue;
                }
                let mut trial = sigma.clone();
                trial[from] -= moved;
                trial[to] += moved;
                let v = inner_value(&m, &trial, cav_bound);
                if v > value {
                    value = v;
                    sigma = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(value)
}

fn inner_value(m: &Matrix, sigma: &[f64], bound: f64) -> f64 {
    let payoffs: Vec<f64> = (0..m.cols()).map(|j| (0..m.rows()).map(|i| sigma[i] * m.get(i, j)).sum()).collect();
    let lo = payoffs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo <= bound {
        hi.min(bound)
    } else {
        f64::NEG_INFINITY
    }
}

fn lattice_len(m: usize, n: usize) -> usize {
    let mut acc: usize = 1;
    for i in 1..m {
        acc = acc.saturating_mul(n + i) / i;
    }
    acc
}

/// `target = λ·m1 + (1−λ)·m2` solved in exact rational arithmetic. Entries are
/// the exact binary expansions of the `f64` inputs, printed as `p/q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEquation {
    pub target: Vec<Vec<String>>,
    pub m1: Vec<Vec<String>>,
    pub m2: Vec<Vec<String>>,
    /// A solution in `[0, 1]`, if one exists.
    pub solution: Option<String>,
    /// Why there is no solution; empty when there is one.
    pub reason: String,
}

impl LambdaEquation {
    pub fn is_feasible(&self) -> bool {
        self.solution.is_some()
    }
}

fn to_rational(x: f64) -> Result<BigRational, NrError> {
    BigRational::from_float(x).ok_or_else(|| NrError::Scenario(format!("{x} is not a finite number")))
}

fn render(m: &[Vec<BigRational>]) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect()
}

pub fn solve_lambda_equation(target: &Matrix, m1: &Matrix, m2: &Matrix) -> Result<LambdaEquation, NrError> {
    let shape = (target.rows(), target.cols());
    if (m1.rows(), m1.cols()) != shape || (m2.rows(), m2.cols()) != shape {
        return Err(NrError::Scenario("lambda equation matrices differ in shape".into()));
    }
    let exact = |m: &Matrix| -> Result<Vec<Vec<BigRational>>, NrError> {
        m.to_rows().iter().map(|r| r.iter().map(|&x| to_rational(x)).collect()).collect()
    };
    let (t, a, b) = (exact(target)?, exact(m1)?, exact(m2)?);

    // Entrywise: λ (a − b) = t − b.
    let mut lambda: Option<BigRational> = None;
    let mut reason = String::new();
    'outer: for i in 0..shape.0 {
        for j in 0..shape.1 {
            let coef = &a[i][j] - &b[i][j];
            let rhs = &t[i][j] - &b[i][j];
            if coef.is_zero() {
                if !rhs.is_zero() {
                    reason = format!("entry ({i},{j}) reads {} = {} for every λ", t[i][j], b[i][j]);
                    break 'outer;
                }
                continue;
            }
            let l = rhs / coef;
            match &lambda {
                Some(prev) if *prev != l => {
                    reason = format!("entry ({i},{j}) forces λ = {l} but an earlier entry forces λ = {prev}");
                    break 'outer;
                }
                _ => lambda = Some(l),
            }
        }
    }
    let solution = if reason.is_empty() {
        let l = lambda.unwrap_or_else(BigRational::zero);
        let one = BigRational::from_integer(1.into());
        if l.is_negative() || l > one {
            reason = format!("the only solution λ = {l} lies outside [0, 1]");
            None
        } else {
            Some(l.to_string())
        }
    } else {
        None
    };
    Ok(LambdaEquation { target: render(&t), m1: render(&a), m2: render(&b), solution, reason })
}

/// The equation `p⁰ = λ·(e₂ ⊗ p⁰_B) + (1−λ)·(e₁ ⊗ p⁰_B)` that a martingale of joint
/// posteriors ending on the two edges `k_A = 1`, `k_A = 2` would have to satisfy.
pub fn boundary_lambda_equation(scenario: &JointScenario) -> Result<LambdaEquation, NrError> {
    if scenario.family_a().n_states() != 2 {
        return Err(NrError::Scenario("the boundary equation needs exactly two A states".into()));
    }
    let pb = scenario.marginal_b().weights();
    let edge = |k: usize| -> Result<Matrix, NrError> {
        let rows: Vec<Vec<f64>> = (0..2).map(|ka| if ka == k { pb.to_vec() } else { vec![0.0; pb.len()] }).collect();
        Ok(Matrix::from_rows(&rows)?)
    };
    let target = Matrix::from_rows(&scenario.prior().rows())?;
    solve_lambda_equation(&target, &edge(1)?, &edge(0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_core::JointBelief;

    fn nonattainable() -> StageGameFamily {
        StageGameFamily::from_matrices(&[
            vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
            vec![vec![-1.0, -1.0], vec![1.0, 1.0]],
        ])
        .unwrap()
    }

    #[test]
    fn section4_constrained_value_equals_v() {
        let f = nonattainable();
        for k in 0..=50 {
            let q = k as f64 / 50.0;
            let v = constrained_nr_value(&f, &Belief::binary(q).unwrap(), 1.0).unwrap();
            assert!((v - (1.0 - 2.0 * q).abs()).abs() < 1e-9, "q={q}: {v}");
        }
        let v = constrained_nr_value(&f, &Belief::binary(0.25).unwrap(), 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infinite_bound_gives_max_entry() {
        let f = StageGameFamily::from_matrices(&[
            vec![vec![4.0, 0.0, 2.0], vec![4.0, 0.0, -2.0]],
            vec![vec![0.0, 4.0, -2.0], vec![0.0, 4.0, 2.0]],
        ])
        .unwrap();
        let p = Belief::binary(0.3).unwrap();
        let m = f.average_matrix(&p.to_affine()).unwrap();
        let v = constrained_nr_value(&f, &p, f64::INFINITY).unwrap();
        assert!((v - m.max_entry()).abs() < 1e-12);
    }

    #[test]
    fn bound_below_every_payoff_is_infeasible() {
        let f = StageGameFamily::from_matrices(&[vec![vec![1.0, 2.0]], vec![vec![3.0, 4.0]]]).unwrap();
        let v = constrained_nr_value(&f, &Belief::binary(0.5).unwrap(), 0.0).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn refinement_reaches_an_off_lattice_optimum() {
        // One column, payoff equal to the weight on row 1.
        let f = StageGameFamily::from_matrices(&[vec![vec![1.0], vec![0.0]]]).unwrap();
        let bound = 0.3333337;
        let v = constrained_nr_value(&f, &Belief::new(vec![1.0]).unwrap(), bound).unwrap();
        assert!(v <= bound && bound - v < REFINE_STEP, "{v}");
        assert!(bound - v < bound - 0.333);
    }

    #[test]
    fn section4_lambda_equation_is_infeasible() {
        let a = nonattainable();
        let b = StageGameFamily::from_matrices(&[
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        ])
        .unwrap();
        let prior = JointBelief::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let eq = boundary_lambda_equation(&JointScenario::new("s4", a, b, prior).unwrap()).unwrap();
        assert!(!eq.is_feasible(), "{eq:?}");
        assert_eq!(eq.m1, vec![vec!["0", "0"], vec!["1/2", "1/2"]]);
        assert!(!eq.reason.is_empty());
    }

    #[test]
    fn consistent_equation_returns_exact_lambda() {
        let m1 = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let m2 = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        let t = Matrix::from_rows(&[vec![0.375, 0.375], vec![0.125, 0.125]]).unwrap();
        let eq = solve_lambda_equation(&t, &m1, &m2).unwrap();
        assert_eq!(eq.solution.as_deref(), Some("1/4"));
    }
}
