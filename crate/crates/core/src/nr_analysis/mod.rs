//! Certificates for the NR and locally-non-revealing properties, the set of
//! non-revealing payoffs of a component game, membership in the joint set, the
//! equilibrium payoff interval `I(p⁰)` and the constrained value `V_A`.

mod constrained;
mod interval;
mod locally;
mod payoff;
mod property;
mod report;
mod scenario;

pub use constrained::{boundary_lambda_equation, constrained_nr_value, solve_lambda_equation, LambdaEquation};
pub use interval::{compute_interval, IntervalAnalysis, PayoffInterval};
pub use locally::{check_locally_nonrevealing, LocalCheck};
pub use payoff::{
    feasible_decomposition, find_nr_payoff, joint_nr_membership, ConditionCheck, Decomposition, MembershipReport,
    NrPayoff,
};
pub use property::{
    check_nr_property, check_nr_property_in, CandidateReport, CandidateSource, ConditionResiduals, NrCertificate,
    NrCheck, NrSettings,
};
pub use report::{analyze_scenario, ComponentReport, ScenarioReport};
pub use scenario::JointScenario;

pub(crate) use payoff::{find_nr_payoff_in, joint_nr_membership_in};

use thiserror::Error;

use crate::envelope::{concavify, default_resolution, sample_value_with, ConcaveEnvelope, EnvelopeError, ValueGrid};
use crate::game_core::{Belief, GameError, StageGameFamily};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NrError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Envelope of `v` over the full simplex of `family`, with the given beliefs added
/// as extra samples.
pub fn full_envelope(
    family: &StageGameFamily,
    extra: &[&Belief],
    resolution: Option<f64>,
) -> Result<ConcaveEnvelope, NrError> {
    let n = family.n_states();
    let face: Vec<usize> = (0..n).collect();
    let res = resolution.unwrap_or_else(|| default_resolution(n));
    let extra: Vec<Vec<f64>> = extra.iter().map(|b| b.weights().to_vec()).collect();
    Ok(concavify(sample_value_with(family, &face, res, &extra)?))
}

/// Cav of `v` at `belief`, sharpened on one-dimensional faces by resampling a
/// neighbourhood of the supporting facet's endpoints at 1/1000 of the grid step.
pub(crate) fn sharp_cav(family: &StageGameFamily, env: &ConcaveEnvelope, belief: &Belief) -> Result<f64, NrError> {
    let p = env.grid().restrict(belief.weights())?;
    if p.len() != 2 {
        return Ok(env.eval_face(&p)?);
    }
    let res = env.grid().resolution();
    let fine = res / 1000.0;
    let mut extra: Vec<Vec<f64>> = Vec::new();
    for facet in env.supporting_facets(&p)? {
        for v in facet.vertices {
            let x0 = v.point[0];
            for k in -1000i32..=1000 {
                let x = x0 + k as f64 * fine;
                if (0.0..=1.0).contains(&x) {
                    extra.push(vec![x, 1.0 - x]);
                }
            }
        }
    }
    let grid = env.grid();
    let resampled = ValueGrid::sample(grid.face(), grid.n_ambient(), res, &extra, |w| Ok(family.value_at_weights(w)?))?;
    Ok(concavify(resampled).eval_face(&p)?)
}
