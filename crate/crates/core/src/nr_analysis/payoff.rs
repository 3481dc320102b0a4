use serde::Serialize;

use super::interval::IntervalAnalysis;
use super::{full_envelope, sharp_cav, JointScenario, NrError};
use crate::envelope::{ConcaveEnvelope, ValueGrid};
use crate::game_core::lp::{FarkasCertificate, LinearProgram, LpOutcome, Relation, Sense};
use crate::game_core::{Belief, GameError, PayoffVector, StageGameFamily};

/// Slack allowed in `α·q >= v(q)` on the grid.
const DOMINANCE_TOL: f64 = 1e-6;
/// Half-width of the equality `α·p⁰ = Cav(v)(p⁰)`.
const VALUE_TOL: f64 = 1e-7;
/// Distance to `F` accepted as membership.
const FEASIBILITY_TOL: f64 = 1e-7;
/// Largest number of points in the post-check grid.
const FINE_GRID_CAP: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum NrPayoff {
    Found {
        phi: PayoffVector,
        /// Weights on the pure cells `(i, j)`, row-major, realizing `phi`.
        weights: Vec<f64>,
        cav_prior: f64,
        /// Largest `v(q) − φ·q` over the post-check grid.
        fine_violation: f64,
        fine_points: usize,
    },
    Empty {
        cav_prior: f64,
        certificate: FarkasCertificate,
        /// Whether the certificate re-verifies against the program it came from.
        verified: bool,
    },
}

impl NrPayoff {
    pub fn phi(&self) -> Option<&PayoffVector> {
        match self {
            NrPayoff::Found { phi, .. } => Some(phi),
            NrPayoff::Empty { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, NrPayoff::Empty { .. })
    }
}

/// Searches `NR_A(p⁰)`: `α ∈ F`, `α·q >= v(q)` on the grid and `α·p⁰ = Cav(v)(p⁰)`.
/// Among feasible payoffs the one with the largest uniform margin over `v` is returned.
pub fn find_nr_payoff(family: &StageGameFamily, prior: &Belief) -> Result<NrPayoff, NrError> {
    let env = full_envelope(family, &[prior], None)?;
    find_nr_payoff_in(family, &env, prior)
}

pub(crate) fn find_nr_payoff_in(
    family: &StageGameFamily,
    env: &ConcaveEnvelope,
    prior: &Belief,
) -> Result<NrPayoff, NrError> {
    let cells = cell_payoffs(family);
    let cav_prior = sharp_cav(family, env, prior)?;
    let grid = env.grid();
    // Column `n` is a common slack `s >= 0` in `α·q − s >= v(q) − tol`; maximising it
    // picks the payoff that dominates `v` by the widest margin among the feasible ones.
    let n = cells.len();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(n + 1, Sense::Maximize, objective);
    for (q, &v) in grid.points().iter().zip(grid.values()) {
        let row: Vec<f64> = cells.iter().map(|c| c.dot(q)).chain([-1.0]).collect();
        lp.add(row, Relation::Ge, v - DOMINANCE_TOL);
    }
    let mut cap = vec![0.0; n + 1];
    cap[n] = 1.0;
    lp.add(cap, Relation::Le, 1.0);
    let at_prior: Vec<f64> = cells.iter().map(|c| c.dot(prior.weights())).chain([0.0]).collect();
    lp.add(at_prior.clone(), Relation::Le, cav_prior + VALUE_TOL);
    lp.add(at_prior, Relation::Ge, cav_prior - VALUE_TOL);
    let mut simplex = vec![1.0; n + 1];
    simplex[n] = 0.0;
    lp.add(simplex, Relation::Eq, 1.0);
    match lp.solve()? {
        LpOutcome::Optimal(s) => {
            let weights = clean_weights(&s.x[..n]);
            let phi = combine(&cells, &weights);
            let (fine_violation, fine_points) = fine_check(family, env, &phi)?;
            Ok(NrPayoff::Found { phi, weights, cav_prior, fine_violation, fine_points })
        }
        LpOutcome::Infeasible(certificate) => {
            let verified = certificate.verify(&lp, 1e-9);
            Ok(NrPayoff::Empty { cav_prior, certificate, verified })
        }
        LpOutcome::Unbounded => Err(GameError::NumericalFailure("feasibility LP reported unbounded".into()).into()),
    }
}

fn cell_payoffs(family: &StageGameFamily) -> Vec<PayoffVector> {
    (0..family.n_rows()).flat_map(|i| (0..family.n_cols()).map(move |j| family.cell_payoff(i, j))).collect()
}

fn clean_weights(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|w| if *w > 1e-14 { *w } else { 0.0 }).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|w| w / total).collect()
}

fn combine(cells: &[PayoffVector], weights: &[f64]) -> PayoffVector {
    let n = cells[0].len();
    PayoffVector((0..n).map(|k| cells.iter().zip(weights).map(|(c, w)| w * c.0[k]).sum()).collect())
}

fn fine_check(family: &StageGameFamily, env: &ConcaveEnvelope, phi: &PayoffVector) -> Result<(f64, usize), NrError> {
    let m = env.face().len();
    let mut n = (10.0 / env.grid().resolution()).round() as usize;
    while n > 1 && lattice_size(m, n) > FINE_GRID_CAP {
        n -= 1;
    }
    let grid =
        ValueGrid::sample(env.face(), env.n_ambient(), 1.0 / n as f64, &[], |w| Ok(family.value_at_weights(w)?))?;
    let worst = (0..grid.len()).map(|i| grid.values()[i] - phi.dot(&grid.ambient_point(i))).fold(0.0, f64::max);
    Ok((worst, grid.len()))
}

fn lattice_size(m: usize, n: usize) -> usize {
    // C(n + m − 1, m − 1), saturating.
    let mut acc: usize = 1;
    for i in 1..m {
        acc = acc.saturating_mul(n + i) / i;
    }
    acc
}

/// Convex weights over pure cells whose payoff vector is closest to `phi` in sup norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    /// Sup-norm distance from `phi` to the feasible set `F`.
    pub distance: f64,
}

pub fn feasible_decomposition(family: &StageGameFamily, phi: &PayoffVector) -> Result<Decomposition, NrError> {
    if phi.len() != family.n_states() {
        return Err(NrError::Scenario("payoff vector length differs from the number of states".into()));
    }
    let cells = cell_payoffs(family);
    let n = cells.len();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(n + 1, Sense::Minimize, objective);
    for k in 0..family.n_states() {
        let row: Vec<f64> = cells.iter().map(|c| c.0[k]).collect();
        lp.add([row.clone(), vec![-1.0]].concat(), Relation::Le, phi.0[k]);
        lp.add([row, vec![1.0]].concat(), Relation::Ge, phi.0[k]);
    }
    let mut simplex = vec![1.0; n + 1];
    simplex[n] = 0.0;
    lp.add(simplex, Relation::Eq, 1.0);
    match lp.solve()? {
        LpOutcome::Optimal(s) => {
            Ok(Decomposition { weights: clean_weights(&s.x[..n]), distance: s.objective.max(0.0) })
        }
        other => Err(GameError::NumericalFailure(format!("distance-to-F LP ended as {other:?}")).into()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub passed: bool,
    pub residual: f64,
    /// Worst point, where the condition is checked over a grid.
    pub worst: Option<Vec<f64>>,
}

/// Per-condition membership of `(φ_A, φ_B)` in the joint set of non-revealing payoffs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub feasible_a: ConditionCheck,
    pub feasible_b: ConditionCheck,
    /// `φ·q >= h(q)` on `Δ(supp p⁰)`.
    pub rational_informed: ConditionCheck,
    pub rational_a: ConditionCheck,
    pub rational_b: ConditionCheck,
    pub member: bool,
}

pub fn joint_nr_membership(
    scenario: &JointScenario,
    phi_a: &PayoffVector,
    phi_b: &PayoffVector,
) -> Result<MembershipReport, NrError> {
    joint_nr_membership_in(&IntervalAnalysis::new(scenario)?, phi_a, phi_b)
}

pub(crate) fn joint_nr_membership_in(
    analysis: &IntervalAnalysis,
    phi_a: &PayoffVector,
    phi_b: &PayoffVector,
) -> Result<MembershipReport, NrError> {
    let s = analysis.scenario();
    let feasible = |family: &StageGameFamily, phi: &PayoffVector| -> Result<ConditionCheck, NrError> {
        let d = feasible_decomposition(family, phi)?;
        Ok(ConditionCheck { passed: d.distance <= FEASIBILITY_TOL, residual: d.distance, worst: None })
    };
    let feasible_a = feasible(s.family_a(), phi_a)?;
    let feasible_b = feasible(s.family_b(), phi_b)?;

    let joint = joint_payoff(phi_a, phi_b);
    let grid = analysis.envelope_h().grid();
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    for i in 0..grid.len() {
        let q = grid.ambient_point(i);
        let gap = grid.values()[i] - joint.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
        if gap > worst.0 {
            worst = (gap, q);
        }
    }
    let rational_informed =
        ConditionCheck { passed: worst.0 <= DOMINANCE_TOL, residual: worst.0.max(0.0), worst: Some(worst.1) };

    let upper = |phi: &PayoffVector, marginal: &Belief, cav: f64| {
        let excess = phi.dot(marginal.weights()) - cav;
        ConditionCheck { passed: excess <= DOMINANCE_TOL, residual: excess.max(0.0), worst: None }
    };
    let interval = analysis.interval();
    let rational_a = upper(phi_a, s.marginal_a(), interval.cav_a);
    let rational_b = upper(phi_b, s.marginal_b(), interval.cav_b);
    let member =
        feasible_a.passed && feasible_b.passed && rational_informed.passed && rational_a.passed && rational_b.passed;
    Ok(MembershipReport { feasible_a, feasible_b, rational_informed, rational_a, rational_b, member })
}

/// `φ^{k_A,k_B} = φ_A^{k_A} + φ_B^{k_B}` over all joint states, row-major.
pub(crate) fn joint_payoff(phi_a: &PayoffVector, phi_b: &PayoffVector) -> Vec<f64> {
    phi_a.0.iter().flat_map(|a| phi_b.0.iter().map(move |b| a + b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_core::JointBelief;

    fn family(m: &[Vec<Vec<f64>>]) -> StageGameFamily {
        StageGameFamily::from_matrices(m).unwrap()
    }

    fn half() -> Belief {
        Belief::binary(0.5).unwrap()
    }

    #[test]
    fn attainable_example_payoff_is_zero() {
        let f = family(&[vec![vec![0.0, 0.0], vec![0.0, -1.0]], vec![vec![-1.0, 0.0], vec![0.0, 0.0]]]);
        let out = find_nr_payoff(&f, &half()).unwrap();
        let phi = out.phi().unwrap();
        assert!(phi.0.iter().all(|x| x.abs() < 1e-7), "{phi:?}");
    }

    #[test]
    fn example1_b_payoff_is_one_one() {
        let f =
            family(&[vec![vec![4.0, 0.0, 2.0], vec![4.0, 0.0, -2.0]], vec![vec![0.0, 4.0, -2.0], vec![0.0, 4.0, 2.0]]]);
        let NrPayoff::Found { phi, fine_violation, .. } = find_nr_payoff(&f, &half()).unwrap() else {
            panic!("expected a payoff");
        };
        assert!((phi.0[0] - 1.0).abs() < 1e-6 && (phi.0[1] - 1.0).abs() < 1e-6, "{phi:?}");
        assert!(fine_violation <= 1e-6);
    }

    #[test]
    fn nonattainable_example_is_empty_with_certificate() {
        let f = family(&[vec![vec![1.0, 1.0], vec![-1.0, -1.0]], vec![vec![-1.0, -1.0], vec![1.0, 1.0]]]);
        let NrPayoff::Empty { certificate, verified, .. } = find_nr_payoff(&f, &half()).unwrap() else {
            panic!("expected emptiness");
        };
        assert!(verified);
        assert!(certificate.combined_rhs < 0.0);
    }

    #[test]
    fn decomposition_distance() {
        let f = family(&[vec![vec![1.0, 1.0], vec![-1.0, -1.0]], vec![vec![-1.0, -1.0], vec![1.0, 1.0]]]);
        let inside = feasible_decomposition(&f, &PayoffVector(vec![0.5, -0.5])).unwrap();
        assert!(inside.distance < 1e-12);
        let outside = feasible_decomposition(&f, &PayoffVector(vec![1.0, 1.0])).unwrap();
        assert!((outside.distance - 1.0).abs() < 1e-9);
    }

    fn remark_scenario(eps: f64, q0: f64) -> JointScenario {
        let a = family(&[vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 1.0]]]);
        let b = family(&[vec![vec![-eps, -eps], vec![eps, eps]], vec![vec![eps, eps], vec![-eps, -eps]]]);
        let prior = JointBelief::from_rows(&[vec![q0, 0.0], vec![0.0, 1.0 - q0]]).unwrap();
        JointScenario::new("remark", a, b, prior).unwrap()
    }

    #[test]
    fn remark_pair_is_a_member() {
        let s = remark_scenario(0.05, 0.2);
        let r = joint_nr_membership(&s, &PayoffVector(vec![16.0 / 25.0, 1.0 / 25.0]), &PayoffVector(vec![-0.05, 0.05]))
            .unwrap();
        assert!(r.member, "{r:?}");
    }

    #[test]
    fn remark_symmetric_b_vector_is_infeasible() {
        let s = remark_scenario(0.05, 0.2);
        let r = joint_nr_membership(&s, &PayoffVector(vec![16.0 / 25.0, 1.0 / 25.0]), &PayoffVector(vec![0.05, 0.05]))
            .unwrap();
        assert!(!r.feasible_b.passed);
        assert!(!r.member);
    }
}
