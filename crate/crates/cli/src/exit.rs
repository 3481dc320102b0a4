//! Exit codes: 0 success, 2 validation, 3 analysis inconclusive, 4 internal
//! numerical failure.

use spillover::envelope::EnvelopeError;
use spillover::game_core::GameError;
use spillover::nr_analysis::NrError;
use spillover::simulator::SimError;
use spillover::strategy_synthesis::StrategyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Inconclusive(String),
    #[error("{0}")]
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Inconclusive(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            Failure::Validation(m) => Failure::Validation(format!("{what}: {m}")),
            Failure::Inconclusive(m) => Failure::Inconclusive(format!("{what}: {m}")),
            Failure::Numerical(m) => Failure::Numerical(format!("{what}: {m}")),
        }
    }
}

fn game(e: &GameError) -> Failure {
    match e {
        GameError::KinkDetected { .. } => Failure::Inconclusive(e.to_string()),
        GameError::NumericalFailure(_) => Failure::Numerical(e.to_string()),
        _ => Failure::Validation(e.to_string()),
    }
}

fn envelope(e: &EnvelopeError) -> Failure {
    match e {
        EnvelopeError::AllProbesKinked => Failure::Inconclusive(e.to_string()),
        EnvelopeError::Game(g) => game(g),
        EnvelopeError::BadResolution(_) => Failure::Validation(e.to_string()),
        _ => Failure::Numerical(e.to_string()),
    }
}

impl From<NrError> for Failure {
    fn from(e: NrError) -> Self {
        match &e {
            NrError::Scenario(_) => Failure::Validation(e.to_string()),
            NrError::Envelope(x) => envelope(x),
            NrError::Game(g) => game(g),
        }
    }
}

impl From<StrategyError> for Failure {
    fn from(e: StrategyError) -> Self {
        match e {
            // Surfaced verbatim: the scenario does not support the requested construction.
            StrategyError::MembershipFailed(_)
            | StrategyError::PreconditionViolated(_)
            | StrategyError::NotEnoughSignals { .. } => Failure::Inconclusive(e.to_string()),
            StrategyError::Invalid(_) => Failure::Validation(e.to_string()),
            StrategyError::Nr(x) => x.into(),
            StrategyError::Envelope(x) => envelope(&x),
            StrategyError::Game(g) => game(&g),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid(_) => Failure::Validation(e.to_string()),
            SimError::Strategy(x) => x.into(),
            SimError::Envelope(x) => envelope(&x),
            SimError::Game(g) => game(&g),
            SimError::ZeroProbabilityObservation { .. } | SimError::Io(_) => Failure::Numerical(e.to_string()),
        }
    }
}

/// Exit code for an error coming out of a command.
pub fn code_of(err: &anyhow::Error) -> i32 {
    err.chain().find_map(|e| e.downcast_ref::<Failure>()).map_or(4, Failure::code)
}
