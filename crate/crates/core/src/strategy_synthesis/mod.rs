//! Executable strategies: Aumann–Maschler signaling, Blackwell trackers,
//! deterministic frequency paths, punishment-backed non-revealing profiles,
//! lower-end profiles and jointly controlled lotteries.
//!
//! Strategies are declarative records ([`EquilibriumProfile`]); the simulator
//! turns them into per-episode agents ([`InformedAgent`], [`UninformedAgent`]).

mod context;
mod frequency;
mod profile;
mod runtime;
mod signal;

pub use context::{GameContext, PublicState, Role, StageActions, View};
pub use frequency::{frequency_sequence, FrequencyPath, FrequencyScheduler};
pub use profile::{
    blackwell_uninformed, jcl_profile, lower_end_profile, nr_equilibrium_profile, standard_optimal_profile,
    upper_end_profile, BlackwellTarget, ComponentPlan, EquilibriumProfile, InformedStrategy, Lottery, MemoryClass,
    Provenance, Targets, UninformedStrategy,
};
pub use runtime::{InformedAgent, StageRule, UninformedAgent};
pub use signal::{aumann_maschler_informed, splitting_signal, AmPlan, SignalLottery};

use thiserror::Error;

use crate::envelope::EnvelopeError;
use crate::game_core::GameError;
use crate::nr_analysis::NrError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("{atoms} split atoms but only {actions} distinguishable signal actions")]
    NotEnoughSignals { atoms: usize, actions: usize },
    #[error("approachability precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("payoff pair is not in the joint non-revealing set: {0}")]
    MembershipFailed(String),
    #[error("invalid strategy: {0}")]
    Invalid(String),
    #[error(transparent)]
    Nr(#[from] NrError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Game(#[from] GameError),
}
