use serde::Serialize;

use super::hull::ConcaveEnvelope;
use super::EnvelopeError;
use crate::game_core::Belief;

/// `normal·v >= offset`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Chart slopes `v` with `Cav(p) + v·h >= Cav(T(x+h))` for every `x+h` in the face.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Superdifferential {
    /// One-dimensional faces; bounds may be infinite at face endpoints.
    Interval { lower: f64, upper: f64 },
    /// General faces, one inequality per sample of the grid.
    Polyhedron { rows: Vec<HalfSpace> },
}

impl Superdifferential {
    /// Largest constraint violation of `v` (zero when `v` belongs to the set).
    pub fn residual(&self, v: &[f64]) -> f64 {
        match self {
            Superdifferential::Interval { lower, upper } => (lower - v[0]).max(v[0] - upper).max(0.0),
            Superdifferential::Polyhedron { rows } => rows
                .iter()
                .map(|r| r.offset - r.normal.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.residual(v) <= tol
    }
}

/// Restricted superdifferential of the envelope at `belief`, in chart coordinates
/// of the envelope's face.
pub fn restricted_superdifferential(
    env: &ConcaveEnvelope,
    belief: &Belief,
) -> Result<Superdifferential, EnvelopeError> {
    let p = env.grid().restrict(belief.weights())?;
    let cav = env.eval_face(&p)?;
    match p.len() {
        1 => Ok(Superdifferential::Polyhedron { rows: Vec::new() }),
        2 => {
            let hull = env.vertices()?;
            let x = p[0];
            if hull.len() == 1 {
                return Ok(Superdifferential::Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY });
            }
            let slope = |i: usize| (hull[i + 1].value - hull[i].value) / (hull[i + 1].point[0] - hull[i].point[0]);
            if let Some(j) = hull.iter().position(|v| (v.point[0] - x).abs() <= 1e-12) {
                let lower = if j + 1 < hull.len() { slope(j) } else { f64::NEG_INFINITY };
                let upper = if j > 0 { slope(j - 1) } else { f64::INFINITY };
                return Ok(Superdifferential::Interval { lower, upper });
            }
            let i = hull.partition_point(|v| v.point[0] <= x).clamp(1, hull.len() - 1) - 1;
            let s = slope(i);
            Ok(Superdifferential::Interval { lower: s, upper: s })
        }
        _ => {
            let x = env.chart_coords(&p);
            let rows = env
                .grid()
                .points()
                .iter()
                .zip(env.grid().values())
                .map(|(q, &v)| {
                    let y = env.chart_coords(q);
                    HalfSpace { normal: y.iter().zip(&x).map(|(a, b)| a - b).collect(), offset: v - cav }
                })
                .collect();
            Ok(Superdifferential::Polyhedron { rows })
        }
    }
}
