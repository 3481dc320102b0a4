use serde::{Deserialize, Serialize};

use super::{AffinePoint, GameError, Matrix, PayoffVector};

/// Affine chart of the simplex: `T(x) = e_K + S x` with `S = [I; −1ᵀ]`.
///
/// Chart coordinates are the first `|K|−1` belief coordinates, so `P` is the
/// standard corner simplex `{x ≥ 0, Σx ≤ 1}`. For two states `S x = (x, −x)` and
/// `x` is the weight on the first state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexChart {
    dim: usize,
    linear: Matrix,
}

impl SimplexChart {
    pub fn new(n_states: usize) -> Result<Self, GameError> {
        if n_states == 0 {
            return Err(GameError::Empty("chart over zero states".into()));
        }
        let d = n_states - 1;
        let mut linear = Matrix::zeros(n_states, d.max(1));
        for i in 0..d {
            linear.set(i, i, 1.0);
            linear.set(d, i, -1.0);
        }
        Ok(Self { dim: n_states, linear })
    }

    /// Number of states |K|.
    pub fn n_states(&self) -> usize {
        self.dim
    }

    /// Dimension of the chart domain, |K|−1.
    pub fn chart_dim(&self) -> usize {
        self.dim - 1
    }

    /// The linear part `S` as a `|K| × (|K|−1)` matrix.
    pub fn linear_part(&self) -> &Matrix {
        &self.linear
    }

    pub fn to_point(&self, x: &[f64]) -> Result<AffinePoint, GameError> {
        if x.len() != self.chart_dim() {
            return Err(GameError::DimensionMismatch(format!(
                "chart vector has {} coordinates, expected {}",
                x.len(),
                self.chart_dim()
            )));
        }
        let mut coords = Vec::with_capacity(self.dim);
        coords.extend_from_slice(x);
        coords.push(1.0 - x.iter().sum::<f64>());
        Ok(AffinePoint::new_unchecked(coords))
    }

    pub fn coordinates(&self, point: &[f64]) -> Vec<f64> {
        point[..self.chart_dim()].to_vec()
    }

    /// `φ S`, the chart slope of the affine function `q ↦ φ·q`.
    pub fn slope(&self, phi: &PayoffVector) -> Vec<f64> {
        let last = phi.0[self.dim - 1];
        phi.0[..self.chart_dim()].iter().map(|v| v - last).collect()
    }

    /// Membership in `P = T⁻¹(Δ(K))`.
    pub fn in_polytope(&self, x: &[f64], tol: f64) -> bool {
        x.iter().all(|v| *v >= -tol) && x.iter().sum::<f64>() <= 1.0 + tol
    }
}
