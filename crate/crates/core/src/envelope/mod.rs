//! Concave envelopes of sampled value functions over belief faces, optimal
//! splittings, restricted superdifferentials and sampled Clarke gradients.

mod clarke;
mod grid;
mod hull;
mod superdiff;

pub use clarke::{clarke_gradient, one_sided_quotients, ClarkeGradient, ClarkeSettings};
pub use grid::{
    default_resolution, lattice, sample_value, sample_value_with, ValueGrid, FACE_RESOLUTION, LINE_RESOLUTION,
};
pub use hull::{concavify, ConcaveEnvelope, Facet, HullVertex, SplitAtom, SplitScheme};
pub use superdiff::{restricted_superdifferential, HalfSpace, Superdifferential};

use thiserror::Error;

use crate::game_core::GameError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("face is empty")]
    EmptyFace,
    #[error("face refers to a state outside the family")]
    FaceOutOfRange,
    #[error("grid resolution {0} is not in (0, 1]")]
    BadResolution(f64),
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("point lies outside the envelope's face")]
    OutsideFace,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("every gradient probe landed on a kink")]
    AllProbesKinked,
    #[error(transparent)]
    Game(#[from] GameError),
}
