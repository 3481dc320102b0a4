//! Analysis of repeated zero-sum games with one-sided incomplete information in
//! which an informed player faces two uninformed opponents in two component games
//! at once, so that actions in one game leak information into the other.
//!
//! Modules follow the pipeline: [`game_core`] solves stage games, [`envelope`]
//! concavifies value functions, [`nr_analysis`] certifies non-revealing payoffs
//! and the equilibrium payoff interval, [`strategy_synthesis`] builds executable
//! profiles and [`simulator`] plays them.

pub mod catalog;
pub mod envelope;
pub mod game_core;
pub mod nr_analysis;
pub mod numfmt;
pub mod simulator;
pub mod strategy_synthesis;
