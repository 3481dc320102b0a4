//! Built-in scenarios. Two-player examples are embedded with a trivial game B
//! (one state, one action each, payoff 0).

use crate::game_core::{JointBelief, StageGameFamily};
use crate::nr_analysis::{JointScenario, NrError};

pub const NAMES: [&str; 6] = ["example1", "example1_b", "attainable", "nonattainable", "section4", "remark_eps"];

/// `ε` of the `remark_eps` scenario.
pub const REMARK_EPS: f64 = 0.05;

fn family(m: &[Vec<Vec<f64>>]) -> StageGameFamily {
    StageGameFamily::from_matrices(m).expect("built-in matrices are valid")
}

pub fn example1_a() -> StageGameFamily {
    family(&[vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 1.0]]])
}

pub fn example1_b() -> StageGameFamily {
    family(&[vec![vec![4.0, 0.0, 2.0], vec![4.0, 0.0, -2.0]], vec![vec![0.0, 4.0, -2.0], vec![0.0, 4.0, 2.0]]])
}

pub fn attainable() -> StageGameFamily {
    family(&[vec![vec![0.0, 0.0], vec![0.0, -1.0]], vec![vec![-1.0, 0.0], vec![0.0, 0.0]]])
}

pub fn nonattainable() -> StageGameFamily {
    family(&[vec![vec![1.0, 1.0], vec![-1.0, -1.0]], vec![vec![-1.0, -1.0], vec![1.0, 1.0]]])
}

/// `B¹ = [[−ε,−ε],[ε,ε]]`, `B² = [[ε,ε],[−ε,−ε]]`.
pub fn remark_b(eps: f64) -> StageGameFamily {
    family(&[vec![vec![-eps, -eps], vec![eps, eps]], vec![vec![eps, eps], vec![-eps, -eps]]])
}

pub fn trivial() -> StageGameFamily {
    family(&[vec![vec![0.0]]])
}

fn diagonal() -> JointBelief {
    JointBelief::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).expect("valid prior")
}

/// Two-player game `family` at prior `q` on its first state.
pub fn two_player(name: &str, family: StageGameFamily, q: f64) -> Result<JointScenario, NrError> {
    let prior = JointBelief::from_rows(&[vec![q], vec![1.0 - q]])?;
    JointScenario::new(name, family, trivial(), prior)
}

pub fn example(name: &str) -> Option<JointScenario> {
    let s = match name {
        "example1" => JointScenario::new(name, example1_a(), example1_b(), diagonal()),
        "example1_b" => two_player(name, example1_b(), 0.5),
        "attainable" => two_player(name, attainable(), 0.5),
        "nonattainable" => two_player(name, nonattainable(), 0.5),
        "section4" => JointScenario::new(name, nonattainable(), example1_a(), diagonal()),
        "remark_eps" => JointScenario::new(
            name,
            example1_a(),
            remark_b(REMARK_EPS),
            JointBelief::from_rows(&[vec![0.2, 0.0], vec![0.0, 0.8]]).expect("valid prior"),
        ),
        _ => return None,
    };
    Some(s.expect("built-in scenarios are valid"))
}

pub fn description(name: &str) -> &'static str {
    match name {
        "example1" => "Example 1: A and B on a diagonal prior; I = [19/16, 5/4]",
        "example1_b" => "Example 1's game B alone at prior 1/2",
        "attainable" => "two-player game with the NR property at p=0",
        "nonattainable" => "two-player game without the NR property",
        "section4" => "non-attainable A with Example 1's A as B on a diagonal prior; I = [1, 5/4]",
        "remark_eps" => "Example 1's A with an ε-perturbed B (ε = 0.05) at prior 1/5",
        _ => "",
    }
}
