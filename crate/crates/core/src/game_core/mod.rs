//! Matrix games, beliefs over states, the affine chart of the simplex and the
//! non-revealing value of a state-indexed family of zero-sum stage games.

mod belief;
mod chart;
mod family;
pub mod lp;
mod matrix;

pub use belief::{AffinePoint, Belief, JointBelief, MixedAction, PayoffVector};
pub use chart::SimplexChart;
pub use family::{solve_matrix_game, ActionGradient, GameSolution, StageGameFamily};
pub use matrix::Matrix;

use thiserror::Error;

/// Sum tolerance for beliefs and mixed actions at construction.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("empty {0}")]
    Empty(String),
    #[error("kink detected: action gradient and finite difference differ by {gap:.3e}")]
    KinkDetected { gap: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}
