#![allow(dead_code)]

pub mod suites;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use spillover::game_core::{Belief, JointBelief, StageGameFamily};

/// Fixed-seed config so every run draws the same scenarios.
pub fn config(cases: u32, seed: u64) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
}

pub fn family(states: usize, rows: usize, cols: usize, bound: f64) -> impl Strategy<Value = StageGameFamily> {
    prop::collection::vec(-bound..bound, states * rows * cols).prop_map(move |e| {
        let matrices: Vec<Vec<Vec<f64>>> =
            e.chunks(rows * cols).map(|m| m.chunks(cols).map(|r| r.to_vec()).collect()).collect();
        StageGameFamily::from_matrices(&matrices).unwrap()
    })
}

pub fn interior_belief(n: usize) -> impl Strategy<Value = Belief> {
    prop::collection::vec(0.05..1.0f64, n).prop_map(|w| Belief::normalized(&w).unwrap())
}

/// Joint prior whose entries are zero with probability about 1/4.
pub fn joint_prior(n_a: usize, n_b: usize) -> impl Strategy<Value = JointBelief> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.05..1.0f64], n_a * n_b).prop_map(move |mut w| {
        if w.iter().all(|x| *x == 0.0) {
            w[0] = 1.0;
        }
        JointBelief::normalized(n_a, n_b, &w).unwrap()
    })
}

pub fn from_matrices(m: &[Vec<Vec<f64>>]) -> StageGameFamily {
    StageGameFamily::from_matrices(m).unwrap()
}
