use serde::{Deserialize, Serialize};

use super::StrategyError;
use crate::envelope::ConcaveEnvelope;
use crate::game_core::{solve_matrix_game, GameSolution, Matrix, StageGameFamily};
use crate::nr_analysis::{IntervalAnalysis, JointScenario};

/// Which stage game a component strategy plays and whose states it conditions on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum View {
    A,
    B,
    /// `G_{A+B}` over joint states and joint actions.
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Informed,
    /// Player 2, the column player of game A.
    UninformedA,
    /// Player 3, the column player of game B.
    UninformedB,
}

/// One stage of public play.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StageActions {
    pub row_a: usize,
    pub row_b: usize,
    pub col_a: usize,
    pub col_b: usize,
}

/// Public information at the start of a stage.
#[derive(Clone, Copy, Debug)]
pub struct PublicState<'a> {
    /// 1-based stage index.
    pub t: usize,
    /// Joint posterior `p_t`, row-major over `K_A × K_B`.
    pub posterior: &'a [f64],
}

/// A scenario with the envelopes strategies need at run time.
#[derive(Clone, Debug)]
pub struct GameContext {
    analysis: IntervalAnalysis,
    sum_family: StageGameFamily,
    /// Position of each joint state in the support, if any.
    support_pos: Vec<Option<usize>>,
}

fn weighted(matrices: impl Iterator<Item = (f64, Matrix)>, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for (w, a) in matrices {
        if w != 0.0 {
            m.add_scaled(w, &a);
        }
    }
    m
}

impl GameContext {
    pub fn new(scenario: &JointScenario) -> Result<Self, StrategyError> {
        Self::from_analysis(IntervalAnalysis::new(scenario)?)
    }

    pub fn from_analysis(analysis: IntervalAnalysis) -> Result<Self, StrategyError> {
        let scenario = analysis.scenario();
        let sum_family = scenario.sum_family()?;
        let mut support_pos = vec![None; scenario.n_joint()];
        for (i, &f) in scenario.support().iter().enumerate() {
            support_pos[f] = Some(i);
        }
        Ok(Self { analysis, sum_family, support_pos })
    }

    pub fn scenario(&self) -> &JointScenario {
        self.analysis.scenario()
    }

    pub fn analysis(&self) -> &IntervalAnalysis {
        &self.analysis
    }

    pub fn sum_family(&self) -> &StageGameFamily {
        &self.sum_family
    }

    pub fn n_joint(&self) -> usize {
        self.support_pos.len()
    }

    pub fn n_joint_rows(&self) -> usize {
        self.scenario().family_a().n_rows() * self.scenario().family_b().n_rows()
    }

    pub fn join_row(&self, row_a: usize, row_b: usize) -> usize {
        row_a * self.scenario().family_b().n_rows() + row_b
    }

    pub fn split_row(&self, r: usize) -> (usize, usize) {
        let nb = self.scenario().family_b().n_rows();
        (r / nb, r % nb)
    }

    pub fn split_state(&self, f: usize) -> (usize, usize) {
        self.scenario().prior().split_index(f)
    }

    pub fn support_position(&self, f: usize) -> Option<usize> {
        self.support_pos[f]
    }

    pub fn family(&self, view: View) -> &StageGameFamily {
        match view {
            View::A => self.scenario().family_a(),
            View::B => self.scenario().family_b(),
            View::Sum => &self.sum_family,
        }
    }

    /// Number of states a `view` strategy conditions on; `Sum` uses joint states.
    pub fn n_view_states(&self, view: View) -> usize {
        match view {
            View::A => self.scenario().family_a().n_states(),
            View::B => self.scenario().family_b().n_states(),
            View::Sum => self.n_joint(),
        }
    }

    pub fn view_state(&self, view: View, f: usize) -> usize {
        let (ka, kb) = self.split_state(f);
        match view {
            View::A => ka,
            View::B => kb,
            View::Sum => f,
        }
    }

    pub fn view_rows(&self, view: View) -> usize {
        self.family(view).n_rows()
    }

    pub fn view_cols(&self, view: View) -> usize {
        self.family(view).n_cols()
    }

    /// The posterior as seen by a `view` strategy.
    pub fn marginal(&self, view: View, posterior: &[f64]) -> Vec<f64> {
        match view {
            View::A => self.scenario().marginals_of(posterior).0,
            View::B => self.scenario().marginals_of(posterior).1,
            View::Sum => posterior.to_vec(),
        }
    }

    /// `Σ_k w_k M^k` over view states. For `Sum`, weight off the support is ignored.
    pub fn view_matrix(&self, view: View, weights: &[f64]) -> Matrix {
        let family = self.family(view);
        let (rows, cols) = (family.n_rows(), family.n_cols());
        match view {
            View::A | View::B => {
                weighted(weights.iter().enumerate().map(|(k, &w)| (w, family.matrix(k).clone())), rows, cols)
            }
            View::Sum => weighted(
                weights
                    .iter()
                    .enumerate()
                    .filter_map(|(f, &w)| self.support_pos[f].map(|i| (w, family.matrix(i).clone()))),
                rows,
                cols,
            ),
        }
    }

    pub fn solve_view(&self, view: View, weights: &[f64]) -> Result<GameSolution, StrategyError> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(StrategyError::Invalid("belief weights sum to zero".into()));
        }
        let w: Vec<f64> = weights.iter().map(|x| x / total).collect();
        Ok(solve_matrix_game(&self.view_matrix(view, &w))?)
    }

    /// Envelope over the view's simplex: `Cav(v_A)`, `Cav(v_B)`, or `Cav(h)` on `Δ(supp p⁰)`.
    pub fn envelope(&self, view: View) -> &ConcaveEnvelope {
        match view {
            View::A => self.analysis.envelope_a(),
            View::B => self.analysis.envelope_b(),
            View::Sum => self.analysis.envelope_h(),
        }
    }

    /// Stage payoffs `(A^{k_A}_{i_A j_A}, B^{k_B}_{i_B j_B})` in joint state `f`.
    pub fn stage_payoffs(&self, f: usize, a: &StageActions) -> (f64, f64) {
        let (ka, kb) = self.split_state(f);
        let s = self.scenario();
        (s.family_a().matrix(ka).get(a.row_a, a.col_a), s.family_b().matrix(kb).get(a.row_b, a.col_b))
    }
}
