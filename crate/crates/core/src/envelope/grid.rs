use rayon::prelude::*;
use serde::Serialize;

use super::EnvelopeError;
use crate::game_core::StageGameFamily;

/// Grid step on one-dimensional faces.
pub const LINE_RESOLUTION: f64 = 1e-3;
/// Per-coordinate grid step on faces with three or more states.
pub const FACE_RESOLUTION: f64 = 2e-2;

pub fn default_resolution(face_len: usize) -> f64 {
    if face_len <= 2 {
        LINE_RESOLUTION
    } else {
        FACE_RESOLUTION
    }
}

/// Samples of a value function on a regular lattice of `Δ(face)`, plus optional
/// extra points. Points are stored in face coordinates (one weight per face state).
#[derive(Clone, Debug, Serialize)]
pub struct ValueGrid {
    face: Vec<usize>,
    n_ambient: usize,
    resolution: f64,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// Lattice points of `Δ(m)` with denominator `n`, first coordinate ascending.
pub fn lattice(m: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, remaining: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == m {
            prefix.push(remaining);
            out.push(prefix.iter().map(|&c| c as f64 / n as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=remaining {
            prefix.push(c);
            rec(m, remaining - c, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, n, n, &mut Vec::with_capacity(m), &mut out);
    out
}

impl ValueGrid {
    /// Samples `value` (which receives ambient-length weights) on the lattice of
    /// `Δ(face)` and at `extra` face points.
    pub fn sample<F>(
        face: &[usize],
        n_ambient: usize,
        resolution: f64,
        extra: &[Vec<f64>],
        value: F,
    ) -> Result<Self, EnvelopeError>
    where
        F: Fn(&[f64]) -> Result<f64, EnvelopeError> + Sync,
    {
        if face.is_empty() {
            return Err(EnvelopeError::EmptyFace);
        }
        if face.iter().any(|&k| k >= n_ambient) {
            return Err(EnvelopeError::FaceOutOfRange);
        }
        if !(resolution > 0.0 && resolution <= 1.0) {
            return Err(EnvelopeError::BadResolution(resolution));
        }
        let n = (1.0 / resolution).round().max(1.0) as usize;
        let mut points = lattice(face.len(), n);
        for p in extra {
            if p.len() != face.len() {
                return Err(EnvelopeError::DimensionMismatch);
            }
            if !points.iter().any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-12)) {
                points.push(p.clone());
            }
        }
        if face.len() == 2 {
            points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        }
        let values = points.par_iter().map(|p| value(&embed(face, n_ambient, p))).collect::<Result<Vec<_>, _>>()?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EnvelopeError::NonFinite(i));
        }
        Ok(Self { face: face.to_vec(), n_ambient, resolution, points, values })
    }

    pub fn face(&self) -> &[usize] {
        &self.face
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ambient weights of sample `i`.
    pub fn ambient_point(&self, i: usize) -> Vec<f64> {
        embed(&self.face, self.n_ambient, &self.points[i])
    }

    /// Face coordinates of an ambient vector; fails if mass lies off the face.
    pub fn restrict(&self, ambient: &[f64]) -> Result<Vec<f64>, EnvelopeError> {
        restrict(&self.face, ambient)
    }

    /// Replaces the sampled values, keeping the points (used for re-concavifying).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, EnvelopeError> {
        if values.len() != self.points.len() {
            return Err(EnvelopeError::DimensionMismatch);
        }
        Ok(Self { values, ..self.clone() })
    }
}

pub(crate) fn embed(face: &[usize], n_ambient: usize, coords: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n_ambient];
    for (&k, &c) in face.iter().zip(coords) {
        out[k] = c;
    }
    out
}

pub(crate) fn restrict(face: &[usize], ambient: &[f64]) -> Result<Vec<f64>, EnvelopeError> {
    let off_face: f64 = ambient.iter().enumerate().filter(|(k, _)| !face.contains(k)).map(|(_, w)| w.abs()).sum();
    if off_face > 1e-12 {
        return Err(EnvelopeError::OutsideFace);
    }
    Ok(face.iter().map(|&k| ambient[k]).collect())
}

/// Non-revealing value of `family` sampled on `Δ(face)`.
pub fn sample_value(family: &StageGameFamily, face: &[usize], resolution: f64) -> Result<ValueGrid, EnvelopeError> {
    sample_value_with(family, face, resolution, &[])
}

/// As [`sample_value`], also sampling the given extra face points.
pub fn sample_value_with(
    family: &StageGameFamily,
    face: &[usize],
    resolution: f64,
    extra: &[Vec<f64>],
) -> Result<ValueGrid, EnvelopeError> {
    ValueGrid::sample(face, family.n_states(), resolution, extra, |w| Ok(family.value_at_weights(w)?))
}
