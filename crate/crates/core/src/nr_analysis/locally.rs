use serde::Serialize;

use super::{full_envelope, NrError};
use crate::envelope::{ConcaveEnvelope, SplitScheme};
use crate::game_core::{Belief, StageGameFamily};

/// Interiority margin for the posterior that must avoid the simplex boundary.
const INTERIOR_MARGIN: f64 = 1e-6;
/// Gap below which `Cav(v)(p) = v(p)`, scaled by `1 + max|payoff|`.
const TOUCH_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LocalCheck {
    Found(SplitScheme),
    NotFound,
}

impl LocalCheck {
    pub fn split(&self) -> Option<&SplitScheme> {
        match self {
            LocalCheck::Found(s) => Some(s),
            LocalCheck::NotFound => None,
        }
    }
}

/// Looks for an optimal split of `prior` with an interior posterior.
pub fn check_locally_nonrevealing(family: &StageGameFamily, prior: &Belief) -> Result<LocalCheck, NrError> {
    let env = full_envelope(family, &[prior], None)?;
    check_locally_nonrevealing_in(family, &env, prior)
}

pub(crate) fn check_locally_nonrevealing_in(
    family: &StageGameFamily,
    env: &ConcaveEnvelope,
    prior: &Belief,
) -> Result<LocalCheck, NrError> {
    let scale = 1.0 + family.max_abs_payoff();
    let gap = env.eval_cav(prior)? - family.value_at_weights(prior.weights())?;
    if gap <= TOUCH_TOL * scale {
        return Ok(if prior.is_interior(INTERIOR_MARGIN) {
            LocalCheck::Found(SplitScheme::trivial(prior.clone()))
        } else {
            LocalCheck::NotFound
        });
    }
    let split = env.optimal_split(prior)?;
    if split.atoms().iter().any(|a| a.belief.is_interior(INTERIOR_MARGIN)) {
        Ok(LocalCheck::Found(split))
    } else {
        Ok(LocalCheck::NotFound)
    }
}
