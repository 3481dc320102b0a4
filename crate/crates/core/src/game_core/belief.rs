use serde::{Deserialize, Serialize};

use super::{GameError, SIMPLEX_TOL};

fn check_distribution(what: &str, weights: &[f64]) -> Result<(), GameError> {
    if weights.is_empty() {
        return Err(GameError::Empty(what.into()));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(GameError::NonFinite(what.into()));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
        return Err(GameError::InvalidDistribution(format!("{what}: entry {i} is negative ({w})")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(GameError::InvalidDistribution(format!("{what}: weights sum to {total}")));
    }
    Ok(())
}

fn normalize(what: &str, weights: &[f64]) -> Result<Vec<f64>, GameError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(GameError::InvalidDistribution(format!("{what}: entries must be finite and nonnegative")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(GameError::InvalidDistribution(format!("{what}: zero total mass")));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// A point of the belief simplex Δ(K).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    weights: Vec<f64>,
}

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self, GameError> {
        check_distribution("belief", &weights)?;
        Ok(Self { weights })
    }

    /// Divides nonnegative weights by their total.
    pub fn normalized(weights: &[f64]) -> Result<Self, GameError> {
        Ok(Self { weights: normalize("belief", weights)? })
    }

    pub fn point_mass(n: usize, k: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[k] = 1.0;
        Self { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    /// Two-state belief with weight `q` on the first state.
    pub fn binary(q: f64) -> Result<Self, GameError> {
        Self::new(vec![q, 1.0 - q])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| i).collect()
    }

    pub fn to_affine(&self) -> AffinePoint {
        AffinePoint { coords: self.weights.clone() }
    }

    /// True when every coordinate exceeds `margin`.
    pub fn is_interior(&self, margin: f64) -> bool {
        self.weights.iter().all(|w| *w > margin)
    }

    pub fn distance_l1(&self, other: &Belief) -> f64 {
        self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// A point of the affine hull of the simplex: coordinates sum to one, signs free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePoint {
    coords: Vec<f64>,
}

impl AffinePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, GameError> {
        if coords.is_empty() {
            return Err(GameError::Empty("affine point".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GameError::NonFinite("affine point".into()));
        }
        let total: f64 = coords.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(GameError::InvalidDistribution(format!("affine point coordinates sum to {total}")));
        }
        Ok(Self { coords })
    }

    pub(crate) fn new_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn in_simplex(&self) -> bool {
        self.coords.iter().all(|c| *c >= 0.0)
    }
}

/// A mixed action over a finite action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedAction {
    weights: Vec<f64>,
}

impl MixedAction {
    pub fn new(weights: Vec<f64>) -> Result<Self, GameError> {
        check_distribution("mixed action", &weights)?;
        Ok(Self { weights })
    }

    /// Clips round-off negatives and renormalizes; used on LP output.
    pub fn from_solver(raw: &[f64]) -> Result<Self, GameError> {
        let clipped: Vec<f64> = raw.iter().map(|w| if *w < 0.0 { 0.0 } else { *w }).collect();
        Ok(Self { weights: normalize("mixed action", &clipped)? })
    }

    pub fn pure(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `λ·self + (1−λ)·other`.
    pub fn mix(&self, lambda: f64, other: &MixedAction) -> Result<MixedAction, GameError> {
        if self.len() != other.len() {
            return Err(GameError::DimensionMismatch("mixed actions of different sizes".into()));
        }
        let weights = self.weights.iter().zip(&other.weights).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Ok(MixedAction { weights })
    }
}

/// Per-state payoff to the informed player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffVector(pub Vec<f64>);

impl PayoffVector {
    pub fn new(values: Vec<f64>) -> Result<Self, GameError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GameError::NonFinite("payoff vector".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(a, b)| a * b).sum()
    }
}

/// Belief over the product state space `K_A × K_B`, stored row-major (rows = `K_A`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointBelief {
    n_a: usize,
    n_b: usize,
    weights: Vec<f64>,
}

impl JointBelief {
    pub fn new(n_a: usize, n_b: usize, weights: Vec<f64>) -> Result<Self, GameError> {
        if weights.len() != n_a * n_b {
            return Err(GameError::DimensionMismatch(format!(
                "joint belief has {} entries, expected {}",
                weights.len(),
                n_a * n_b
            )));
        }
        check_distribution("joint belief", &weights)?;
        Ok(Self { n_a, n_b, weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GameError> {
        let n_a = rows.len();
        let n_b = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_b) {
            return Err(GameError::DimensionMismatch("ragged joint belief rows".into()));
        }
        Self::new(n_a, n_b, rows.concat())
    }

    pub fn normalized(n_a: usize, n_b: usize, weights: &[f64]) -> Result<Self, GameError> {
        if weights.len() != n_a * n_b {
            return Err(GameError::DimensionMismatch("joint belief size".into()));
        }
        Ok(Self { n_a, n_b, weights: normalize("joint belief", weights)? })
    }

    pub fn product(a: &Belief, b: &Belief) -> Self {
        let weights = a.weights().iter().flat_map(|x| b.weights().iter().map(move |y| x * y)).collect();
        Self { n_a: a.len(), n_b: b.len(), weights }
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, ka: usize, kb: usize) -> f64 {
        self.weights[ka * self.n_b + kb]
    }

    pub fn index(&self, ka: usize, kb: usize) -> usize {
        ka * self.n_b + kb
    }

    pub fn split_index(&self, flat: usize) -> (usize, usize) {
        (flat / self.n_b, flat % self.n_b)
    }

    pub fn marginal_a(&self) -> Belief {
        let w = (0..self.n_a).map(|ka| (0..self.n_b).map(|kb| self.get(ka, kb)).sum()).collect();
        Belief { weights: w }
    }

    pub fn marginal_b(&self) -> Belief {
        let w = (0..self.n_b).map(|kb| (0..self.n_a).map(|ka| self.get(ka, kb)).sum()).collect();
        Belief { weights: w }
    }

    /// Flat indices of the states with positive weight, in row-major order.
    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| i).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.n_b).map(<[f64]>::to_vec).collect()
    }

    /// `||self − marginal_a ⊗ marginal_b||₁`.
    pub fn product_deviation(&self) -> f64 {
        let a = self.marginal_a();
        let b = self.marginal_b();
        let mut total = 0.0;
        for ka in 0..self.n_a {
            for kb in 0..self.n_b {
                total += (self.get(ka, kb) - a.weights[ka] * b.weights[kb]).abs();
            }
        }
        total
    }
}
