use serde::{Deserialize, Serialize};

use super::GameError;

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GameError> {
        let n_rows = rows.len();
        if n_rows == 0 || rows[0].is_empty() {
            return Err(GameError::Empty("matrix".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(n_rows * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(GameError::DimensionMismatch(format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(GameError::NonFinite(format!("matrix row {i}")));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: n_rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, weight: f64, other: &Matrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += weight * b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `rowᵀ · self · col`.
    pub fn bilinear(&self, row: &[f64], col: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, &r) in row.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let line = self.row(i);
            let inner: f64 = line.iter().zip(col).map(|(a, c)| a * c).sum();
            total += r * inner;
        }
        total
    }
}
