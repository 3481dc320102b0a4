use serde::{Deserialize, Serialize};

use super::lp::{LinearProgram, LpOutcome, Relation, Sense};
use super::{AffinePoint, GameError, Matrix, MixedAction, PayoffVector, SimplexChart};

/// Central finite-difference step used to validate action gradients.
pub const FD_STEP: f64 = 1e-5;
/// Largest sup-norm gap between the action gradient and the finite difference.
pub const KINK_GAP: f64 = 1e-3;

/// Value and optimal strategies of a zero-sum matrix game (row player maximizes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    pub row: MixedAction,
    pub col: MixedAction,
}

impl GameSolution {
    /// Worst payoff the row strategy guarantees against pure columns.
    pub fn row_guarantee(&self, m: &Matrix) -> f64 {
        (0..m.cols())
            .map(|j| (0..m.rows()).map(|i| self.row.weights()[i] * m.get(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest payoff the column strategy concedes against pure rows.
    pub fn col_guarantee(&self, m: &Matrix) -> f64 {
        (0..m.rows())
            .map(|i| m.row(i).iter().zip(self.col.weights()).map(|(a, t)| a * t).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solves `max_s min_t s M t` via the shifted minimax LP.
pub fn solve_matrix_game(m: &Matrix) -> Result<GameSolution, GameError> {
    if m.entries().iter().any(|v| !v.is_finite()) {
        return Err(GameError::NonFinite("matrix game".into()));
    }
    let shift = 1.0 - m.min_entry();
    let (rows, cols) = (m.rows(), m.cols());
    // Column player: maximize Σy subject to (M + shift) y <= 1, y >= 0.
    let mut lp = LinearProgram::new(cols, Sense::Maximize, vec![1.0; cols]);
    for i in 0..rows {
        lp.add(m.row(i).iter().map(|a| a + shift).collect(), Relation::Le, 1.0);
    }
    let solution = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        other => return Err(GameError::NumericalFailure(format!("minimax LP ended as {other:?}"))),
    };
    if solution.objective <= 0.0 {
        return Err(GameError::NumericalFailure("minimax LP returned a nonpositive objective".into()));
    }
    let value = 1.0 / solution.objective - shift;
    let col = MixedAction::from_solver(&solution.x)?;
    let row = MixedAction::from_solver(&solution.duals)?;
    Ok(GameSolution { value, row, col })
}

/// Gradient of `v ∘ T` at a point, read off an optimal action pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionGradient {
    pub gradient: Vec<f64>,
    pub payoff: PayoffVector,
    pub row: MixedAction,
    pub col: MixedAction,
}

/// State-indexed payoff matrices of one zero-sum component game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageGameFamily {
    states: Vec<String>,
    row_actions: Vec<String>,
    col_actions: Vec<String>,
    matrices: Vec<Matrix>,
}

impl StageGameFamily {
    pub fn new(
        states: Vec<String>,
        row_actions: Vec<String>,
        col_actions: Vec<String>,
        matrices: Vec<Matrix>,
    ) -> Result<Self, GameError> {
        if states.is_empty() || row_actions.is_empty() || col_actions.is_empty() {
            return Err(GameError::Empty("states or action sets".into()));
        }
        if matrices.len() != states.len() {
            return Err(GameError::DimensionMismatch(format!(
                "{} matrices for {} states",
                matrices.len(),
                states.len()
            )));
        }
        for (k, m) in matrices.iter().enumerate() {
            if m.rows() != row_actions.len() || m.cols() != col_actions.len() {
                return Err(GameError::DimensionMismatch(format!(
                    "matrix for state {k} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    row_actions.len(),
                    col_actions.len()
                )));
            }
            if m.entries().iter().any(|v| !v.is_finite()) {
                return Err(GameError::NonFinite(format!("matrix for state {k}")));
            }
        }
        Ok(Self { states, row_actions, col_actions, matrices })
    }

    /// Builds a family with generated labels (`k1…`, `r1…`, `c1…`).
    pub fn from_matrices(matrices: &[Vec<Vec<f64>>]) -> Result<Self, GameError> {
        let parsed = matrices.iter().map(|m| Matrix::from_rows(m)).collect::<Result<Vec<_>, _>>()?;
        let (rows, cols) = parsed.first().map(|m| (m.rows(), m.cols())).ok_or(GameError::Empty("family".into()))?;
        Self::new(
            (1..=parsed.len()).map(|k| format!("k{k}")).collect(),
            (1..=rows).map(|i| format!("r{i}")).collect(),
            (1..=cols).map(|j| format!("c{j}")).collect(),
            parsed,
        )
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn row_actions(&self) -> &[String] {
        &self.row_actions
    }

    pub fn col_actions(&self) -> &[String] {
        &self.col_actions
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, k: usize) -> &Matrix {
        &self.matrices[k]
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_rows(&self) -> usize {
        self.row_actions.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_actions.len()
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.matrices.iter().flat_map(|m| m.entries().iter()).fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `Σ_k point_k · M^k`, valid on the whole affine hull.
    pub fn average_matrix(&self, point: &AffinePoint) -> Result<Matrix, GameError> {
        self.average_weights(point.coords())
    }

    pub(crate) fn average_weights(&self, weights: &[f64]) -> Result<Matrix, GameError> {
        if weights.len() != self.n_states() {
            return Err(GameError::DimensionMismatch(format!(
                "point has {} coordinates, family has {} states",
                weights.len(),
                self.n_states()
            )));
        }
        let mut out = Matrix::zeros(self.n_rows(), self.n_cols());
        for (w, m) in weights.iter().zip(&self.matrices) {
            if *w != 0.0 {
                out.add_scaled(*w, m);
            }
        }
        Ok(out)
    }

    pub fn solve_at(&self, point: &AffinePoint) -> Result<GameSolution, GameError> {
        solve_matrix_game(&self.average_matrix(point)?)
    }

    /// Non-revealing value, extended to the affine hull by the same min-max formula.
    pub fn nr_value(&self, point: &AffinePoint) -> Result<f64, GameError> {
        Ok(self.solve_at(point)?.value)
    }

    /// Non-revealing value at a weight vector of length |K| (no simplex check).
    pub fn value_at_weights(&self, weights: &[f64]) -> Result<f64, GameError> {
        Ok(solve_matrix_game(&self.average_weights(weights)?)?.value)
    }

    /// Entry `k` is `rowᵀ M^k col`.
    pub fn payoff_vector(&self, row: &MixedAction, col: &MixedAction) -> Result<PayoffVector, GameError> {
        if row.len() != self.n_rows() || col.len() != self.n_cols() {
            return Err(GameError::DimensionMismatch("action sizes do not match the family".into()));
        }
        Ok(PayoffVector(self.matrices.iter().map(|m| m.bilinear(row.weights(), col.weights())).collect()))
    }

    /// Per-state payoff of the pure cell `(i, j)`.
    pub fn cell_payoff(&self, i: usize, j: usize) -> PayoffVector {
        PayoffVector(self.matrices.iter().map(|m| m.get(i, j)).collect())
    }

    /// Gradient of `v ∘ T` at `point` from an optimal action pair, checked against
    /// a central finite difference.
    pub fn gradient_from_actions(
        &self,
        point: &AffinePoint,
        chart: &SimplexChart,
    ) -> Result<ActionGradient, GameError> {
        if chart.n_states() != self.n_states() || point.len() != self.n_states() {
            return Err(GameError::DimensionMismatch("chart, point and family disagree on |K|".into()));
        }
        let solution = self.solve_at(point)?;
        let payoff = self.payoff_vector(&solution.row, &solution.col)?;
        let gradient = chart.slope(&payoff);
        let x = chart.coordinates(point.coords());
        let mut gap = 0.0f64;
        for i in 0..x.len() {
            let mut plus = x.clone();
            plus[i] += FD_STEP;
            let mut minus = x.clone();
            minus[i] -= FD_STEP;
            let fd =
                (self.nr_value(&chart.to_point(&plus)?)? - self.nr_value(&chart.to_point(&minus)?)?) / (2.0 * FD_STEP);
            gap = gap.max((fd - gradient[i]).abs());
        }
        if gap > KINK_GAP {
            return Err(GameError::KinkDetected { gap });
        }
        Ok(ActionGradient { gradient, payoff, row: solution.row, col: solution.col })
    }
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, c), r)
                .prop_map(|rows| Matrix::from_rows(&rows).unwrap())
        })
    }

    /// Value of a game with at most two rows by scanning the row player's mixtures.
    fn scan_value(m: &Matrix) -> f64 {
        let steps = 20_000;
        let guarantee = |s: &[f64]| {
            (0..m.cols()).map(|j| (0..m.rows()).map(|i| s[i] * m.get(i, j)).sum::<f64>()).fold(f64::INFINITY, f64::min)
        };
        if m.rows() == 1 {
            return guarantee(&[1.0]);
        }
        (0..=steps).map(|k| k as f64 / steps as f64).map(|p| guarantee(&[p, 1.0 - p])).fold(f64::NEG_INFINITY, f64::max)
    }

    proptest! {
        #[test]
        fn duality_gap_closes(m in matrix_strategy()) {
            let s = solve_matrix_game(&m).unwrap();
            prop_assert!((s.row_guarantee(&m) - s.value).abs() <= 1e-9);
            prop_assert!((s.col_guarantee(&m) - s.value).abs() <= 1e-9);
        }

        #[test]
        fn two_row_values_match_scan(m in matrix_strategy().prop_filter("two rows", |m| m.rows() <= 2)) {
            let s = solve_matrix_game(&m).unwrap();
            prop_assert!((scan_value(&m) - s.value).abs() <= 1e-3);
        }

        #[test]
        fn shift_covariance(m in matrix_strategy(), c in -10.0f64..10.0) {
            let s = solve_matrix_game(&m).unwrap();
            let shifted = m.map(|v| v + c);
            let t = solve_matrix_game(&shifted).unwrap();
            prop_assert!((t.value - s.value - c).abs() <= 1e-9);
            let moved = GameSolution { value: s.value + c, row: s.row.clone(), col: s.col.clone() };
            prop_assert!(moved.row_guarantee(&shifted) >= t.value - 1e-9);
            prop_assert!(moved.col_guarantee(&shifted) <= t.value + 1e-9);
        }

        #[test]
        fn payoff_vector_is_bilinear(
            a in proptest::collection::vec(-3.0f64..3.0, 6),
            b in proptest::collection::vec(-3.0f64..3.0, 6),
            s1 in 0.0f64..1.0, s2 in 0.0f64..1.0, t in 0.0f64..1.0, lambda in 0.0f64..1.0,
        ) {
            let family = StageGameFamily::from_matrices(&[
                vec![a[0..3].to_vec(), a[3..6].to_vec()],
                vec![b[0..3].to_vec(), b[3..6].to_vec()],
            ]).unwrap();
            let r1 = MixedAction::new(vec![s1, 1.0 - s1]).unwrap();
            let r2 = MixedAction::new(vec![s2, 1.0 - s2]).unwrap();
            let col = MixedAction::new(vec![t, (1.0 - t) / 2.0, (1.0 - t) / 2.0]).unwrap();
            let mixed = family.payoff_vector(&r1.mix(lambda, &r2).unwrap(), &col).unwrap();
            let p1 = family.payoff_vector(&r1, &col).unwrap();
            let p2 = family.payoff_vector(&r2, &col).unwrap();
            for k in 0..2 {
                prop_assert!((mixed.0[k] - lambda * p1.0[k] - (1.0 - lambda) * p2.0[k]).abs() <= 1e-12);
            }
        }
    }
}
