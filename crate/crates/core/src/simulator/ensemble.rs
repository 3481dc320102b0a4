use rayon::prelude::*;
use serde::Serialize;

use super::episode::{run_episode_with, EpisodeOptions, Trace};
use super::SimError;
use crate::strategy_synthesis::{EquilibriumProfile, GameContext};

/// Sample mean and standard error; the error is infinite below two samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::INFINITY, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n < 2 {
            f64::INFINITY
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { mean, se, n }
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSummary {
    pub joint_state: usize,
    pub total: Estimate,
    pub game_a: Estimate,
    pub game_b: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSummary {
    /// Player 1's average payoff over all episodes.
    pub ex_ante: Estimate,
    pub game_a: Estimate,
    pub game_b: Estimate,
    pub per_state: Vec<StateSummary>,
}

impl EnsembleSummary {
    pub fn of(traces: &[Trace], n_joint: usize) -> Self {
        let col = |f: &dyn Fn(&Trace) -> f64, keep: &dyn Fn(&Trace) -> bool| -> Estimate {
            Estimate::from_samples(&traces.iter().filter(|t| keep(t)).map(f).collect::<Vec<_>>())
        };
        let all = |_: &Trace| true;
        let per_state = (0..n_joint)
            .filter(|&g| traces.iter().any(|t| t.joint_state == g))
            .map(|g| {
                let here = move |t: &Trace| t.joint_state == g;
                StateSummary {
                    joint_state: g,
                    total: col(&Trace::avg_total, &here),
                    game_a: col(&Trace::avg_a, &here),
                    game_b: col(&Trace::avg_b, &here),
                }
            })
            .collect();
        Self {
            ex_ante: col(&Trace::avg_total, &all),
            game_a: col(&Trace::avg_a, &all),
            game_b: col(&Trace::avg_b, &all),
            per_state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ensemble {
    pub scenario: String,
    pub profile: EquilibriumProfile,
    pub horizon: usize,
    pub traces: Vec<Trace>,
    pub summary: EnsembleSummary,
}

/// Runs one episode per seed in parallel; traces come back in seed order.
pub fn run_ensemble(
    ctx: &GameContext,
    profile: &EquilibriumProfile,
    horizon: usize,
    seeds: &[u64],
    options: &EpisodeOptions,
) -> Result<Ensemble, SimError> {
    let traces: Vec<Trace> =
        seeds.par_iter().map(|&s| run_episode_with(ctx, profile, horizon, s, options)).collect::<Result<_, _>>()?;
    let summary = EnsembleSummary::of(&traces, ctx.n_joint());
    Ok(Ensemble { scenario: ctx.scenario().name().to_string(), profile: profile.clone(), horizon, traces, summary })
}

/// `n` consecutive seeds from `base`.
pub fn seed_range(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| base.wrapping_add(i)).collect()
}
