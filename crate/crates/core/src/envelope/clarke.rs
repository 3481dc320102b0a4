use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::EnvelopeError;
use crate::game_core::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::game_core::{Belief, GameError, SimplexChart, StageGameFamily};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClarkeSettings {
    pub n_dirs: usize,
    pub step_max: f64,
    pub step_min: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl Default for ClarkeSettings {
    fn default() -> Self {
        Self { n_dirs: 64, step_max: 1e-2, step_min: 1e-6, n_steps: 5, seed: 0x00c1_a4ce }
    }
}

impl ClarkeSettings {
    fn steps(&self) -> Vec<f64> {
        if self.n_steps <= 1 {
            return vec![self.step_max];
        }
        let ratio = self.step_min / self.step_max;
        (0..self.n_steps).map(|k| self.step_max * ratio.powf(k as f64 / (self.n_steps - 1) as f64)).collect()
    }
}

/// Sampled limit gradients of `v ∘ T` near a point; the generalized gradient is
/// approximated by their convex hull.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClarkeGradient {
    pub samples: Vec<Vec<f64>>,
    /// One-dimensional charts: limits from the left and from the right.
    pub left: Option<f64>,
    pub right: Option<f64>,
}

impl ClarkeGradient {
    /// Sup-norm distance from `v` to the convex hull of the samples.
    pub fn distance(&self, v: &[f64]) -> Result<f64, EnvelopeError> {
        if v.len() == 1 {
            let lo = self.samples.iter().map(|g| g[0]).fold(f64::INFINITY, f64::min);
            let hi = self.samples.iter().map(|g| g[0]).fold(f64::NEG_INFINITY, f64::max);
            return Ok((lo - v[0]).max(v[0] - hi).max(0.0));
        }
        let n = self.samples.len();
        // Variables: hull weights, then the distance bound t.
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let mut lp = LinearProgram::new(n + 1, Sense::Minimize, objective);
        let mut simplex_row = vec![1.0; n + 1];
        simplex_row[n] = 0.0;
        lp.add(simplex_row, Relation::Eq, 1.0);
        for (d, &target) in v.iter().enumerate() {
            let mut upper: Vec<f64> = self.samples.iter().map(|g| g[d]).collect();
            upper.push(-1.0);
            lp.add(upper, Relation::Le, target);
            let mut lower: Vec<f64> = self.samples.iter().map(|g| g[d]).collect();
            lower.push(1.0);
            lp.add(lower, Relation::Ge, target);
        }
        match lp.solve().map_err(EnvelopeError::Game)? {
            LpOutcome::Optimal(s) => Ok(s.objective.max(0.0)),
            _ => Err(EnvelopeError::Game(GameError::NumericalFailure("hull distance LP".into()))),
        }
    }
}

/// Samples gradients of `v ∘ T` around `belief` along `n_dirs` directions at
/// shrinking steps, keeping for each direction the estimate at the smallest step
/// that is not flagged as a kink.
pub fn clarke_gradient(
    family: &StageGameFamily,
    belief: &Belief,
    chart: &SimplexChart,
    settings: &ClarkeSettings,
) -> Result<ClarkeGradient, EnvelopeError> {
    if belief.len() != family.n_states() || chart.n_states() != family.n_states() {
        return Err(EnvelopeError::DimensionMismatch);
    }
    let d = chart.chart_dim();
    if d == 0 {
        return Ok(ClarkeGradient { samples: vec![Vec::new()], left: None, right: None });
    }
    let x0 = chart.coordinates(belief.weights());
    let directions: Vec<Vec<f64>> = if d == 1 {
        vec![vec![-1.0], vec![1.0]]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        (0..settings.n_dirs).map(|_| unit_direction(&mut rng, d)).collect()
    };
    let steps = settings.steps();
    let mut limits: Vec<Option<Vec<f64>>> = Vec::with_capacity(directions.len());
    for dir in &directions {
        let mut last = None;
        for &h in &steps {
            let probe: Vec<f64> = x0.iter().zip(dir).map(|(x, u)| x + h * u).collect();
            match family.gradient_from_actions(&chart.to_point(&probe)?, chart) {
                Ok(g) => last = Some(g.gradient),
                Err(GameError::KinkDetected { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        limits.push(last);
    }
    let (left, right) =
        if d == 1 { (limits[0].as_ref().map(|g| g[0]), limits[1].as_ref().map(|g| g[0])) } else { (None, None) };
    let samples: Vec<Vec<f64>> = limits.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(EnvelopeError::AllProbesKinked);
    }
    Ok(ClarkeGradient { samples, left, right })
}

/// Left and right difference quotients of `v ∘ T` at chart point `x` with step `delta`
/// (one-dimensional charts).
pub fn one_sided_quotients(family: &StageGameFamily, x: f64, delta: f64) -> Result<(f64, f64), EnvelopeError> {
    let chart = SimplexChart::new(family.n_states())?;
    if chart.chart_dim() != 1 {
        return Err(EnvelopeError::DimensionMismatch);
    }
    let v = |t: f64| -> Result<f64, EnvelopeError> { Ok(family.nr_value(&chart.to_point(&[t])?)?) };
    let here = v(x)?;
    Ok(((here - v(x - delta)?) / delta, (v(x + delta)? - here) / delta))
}

/// Uniform direction on the unit sphere of dimension `d`.
fn unit_direction<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
