use serde::{Deserialize, Serialize};

use super::StrategyError;

/// Target frequencies over pure cells `(row, col)` of one component game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPath {
    pub cells: Vec<(usize, usize)>,
    pub lambda: Vec<f64>,
}

impl FrequencyPath {
    pub fn new(cells: Vec<(usize, usize)>, lambda: Vec<f64>) -> Result<Self, StrategyError> {
        if cells.is_empty() || cells.len() != lambda.len() {
            return Err(StrategyError::Invalid("frequency path needs one weight per cell".into()));
        }
        if lambda.iter().any(|w| !w.is_finite() || *w < 0.0) || (lambda.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(StrategyError::Invalid("frequency weights must form a probability vector".into()));
        }
        Ok(Self { cells, lambda })
    }

    /// Drops cells with weight below `1e-12` and renormalizes; `weights` are
    /// row-major over an `rows × cols` grid of cells.
    pub fn from_cell_weights(weights: &[f64], cols: usize) -> Result<Self, StrategyError> {
        let kept: Vec<(usize, f64)> = weights.iter().copied().enumerate().filter(|(_, w)| *w > 1e-12).collect();
        let total: f64 = kept.iter().map(|(_, w)| w).sum();
        if kept.is_empty() || total <= 0.0 {
            return Err(StrategyError::Invalid("no cell has positive weight".into()));
        }
        let cells = kept.iter().map(|(i, _)| (i / cols, i % cols)).collect();
        Self::new(cells, kept.iter().map(|(_, w)| w / total).collect())
    }

    pub fn scheduler(&self) -> FrequencyScheduler {
        FrequencyScheduler { lambda: self.lambda.clone(), counts: vec![0; self.lambda.len()], t: 0 }
    }
}

/// Greedy largest-deficit schedule: stage `t` plays the cell maximizing
/// `t·λ − count`, earliest cell on ties.
#[derive(Clone, Debug)]
pub struct FrequencyScheduler {
    lambda: Vec<f64>,
    counts: Vec<usize>,
    t: usize,
}

impl FrequencyScheduler {
    /// Index (into the path's cells) for the next stage.
    pub fn peek(&self) -> usize {
        let t = (self.t + 1) as f64;
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for (i, (&l, &c)) in self.lambda.iter().zip(&self.counts).enumerate() {
            let deficit = t * l - c as f64;
            if deficit > best_deficit + 1e-12 {
                best = i;
                best_deficit = deficit;
            }
        }
        best
    }

    pub fn advance(&mut self) -> usize {
        let i = self.peek();
        self.counts[i] += 1;
        self.t += 1;
        i
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// The first `horizon` cells of the schedule, as indices into `path.cells`.
pub fn frequency_sequence(path: &FrequencyPath, horizon: usize) -> Vec<usize> {
    let mut s = path.scheduler();
    (0..horizon).map(|_| s.advance()).collect()
}
