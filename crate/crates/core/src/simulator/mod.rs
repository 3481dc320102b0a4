//! Plays the three-player repeated game: episodes with exact posterior
//! tracking, seeded ensembles, martingale diagnostics and deviation batteries.

mod diagnostics;
mod ensemble;
mod episode;
mod epsilon;
mod export;

pub use diagnostics::{
    beta_proxies, martingale_diagnostics, product_deviation, BetaProxy, DiagnosticsReport, JensenCheck, PrefixResidual,
};
pub use ensemble::{run_ensemble, seed_range, Ensemble, EnsembleSummary, Estimate, StateSummary};
pub use episode::{
    posterior_update, run_episode, run_episode_with, Deviation, DeviationKind, EpisodeOptions, Trace, PREFIX_DEPTH,
};
pub use epsilon::{
    epsilon_equilibrium_check, standard_battery, EpsilonRow, EpsilonTable, GainEstimate, BATTERY_CAVEAT,
};
pub use export::write_trace_csv;

use thiserror::Error;

use crate::envelope::EnvelopeError;
use crate::game_core::GameError;
use crate::strategy_synthesis::StrategyError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("observed joint row {row} has probability zero under the declared rule")]
    ZeroProbabilityObservation { row: usize },
    #[error("invalid simulation input: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Game(#[from] GameError),
}
