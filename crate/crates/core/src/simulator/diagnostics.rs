use std::collections::BTreeMap;

use serde::Serialize;

use super::ensemble::{Ensemble, Estimate};
use super::episode::PREFIX_DEPTH;
use super::SimError;
use crate::game_core::Belief;
use crate::strategy_synthesis::{GameContext, View};

/// Cav-martingale residuals of every distinct public history of length `depth − 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrefixResidual {
    /// Stage at which the residual is taken.
    pub stage: usize,
    /// Actions `(i_A, i_B, j_A, j_B)` of the earlier stages.
    pub history: Vec<[usize; 4]>,
    pub count: usize,
    pub residual: [f64; 2],
}

/// Mean of `Cav(v_ℓ)` at the last posterior against its value at the prior.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JensenCheck {
    pub prior_cav: f64,
    pub mean_final_cav: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// Largest `|E[p_{t+1} | h_t] − p_t|` over all traces and stages.
    pub martingale_residual: f64,
    /// Traces whose posterior put weight outside `supp(p⁰)`.
    pub support_violations: usize,
    /// Traces that left the declared rule's support (posterior frozen there).
    pub off_path: usize,
    pub prefixes: Vec<PrefixResidual>,
    /// Ensemble mean residual per stage `t <= 3`, for `A` and `B`.
    pub stage_means: Vec<[f64; 2]>,
    /// Ensemble mean of the summed residuals over the whole horizon.
    pub total_means: [f64; 2],
    pub jensen: [JensenCheck; 2],
    /// `(t, mean ||p_t − p_{tA} ⊗ p_{tB}||₁)`.
    pub product_deviation: Vec<(usize, f64)>,
}

/// `||p − p_A ⊗ p_B||₁`.
pub fn product_deviation(ctx: &GameContext, p: &[f64]) -> f64 {
    let (a, b) = ctx.scenario().marginals_of(p);
    p.iter()
        .enumerate()
        .map(|(f, x)| {
            let (ka, kb) = ctx.split_state(f);
            (x - a[ka] * b[kb]).abs()
        })
        .sum()
}

/// Stage and action prefix of a group of traces.
type PrefixKey = (usize, Vec<[usize; 4]>);

fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut ts = vec![1, 2, 3, 4];
    let mut t = 10;
    while t <= horizon {
        ts.push(t + 1);
        t *= 10;
    }
    ts.push(horizon + 1);
    ts.retain(|&t| t <= horizon + 1);
    ts.dedup();
    ts
}

pub fn martingale_diagnostics(ensemble: &Ensemble, ctx: &GameContext) -> Result<DiagnosticsReport, SimError> {
    let traces = &ensemble.traces;
    let n = traces.len().max(1) as f64;
    let support = ctx.scenario().support();
    let martingale_residual = traces.iter().map(|t| t.martingale_residual).fold(0.0, f64::max);
    let support_violations = traces
        .iter()
        .filter(|t| {
            t.posteriors.iter().any(|(_, p)| p.iter().enumerate().any(|(f, x)| *x > 0.0 && !support.contains(&f)))
        })
        .count();

    let mut groups: BTreeMap<PrefixKey, (usize, [f64; 2])> = BTreeMap::new();
    let depth = PREFIX_DEPTH.min(ensemble.horizon);
    for t in traces {
        for d in 0..depth.min(t.cav_residuals.len()) {
            let history = t.prefix[..d].iter().map(|a| [a.row_a, a.row_b, a.col_a, a.col_b]).collect();
            let e = groups.entry((d + 1, history)).or_insert((0, t.cav_residuals[d]));
            e.0 += 1;
        }
    }
    let prefixes = groups
        .into_iter()
        .map(|((stage, history), (count, residual))| PrefixResidual { stage, history, count, residual })
        .collect();
    let stage_means = (0..depth)
        .map(|d| {
            let mut m = [0.0; 2];
            for t in traces {
                m[0] += t.cav_residuals[d][0] / n;
                m[1] += t.cav_residuals[d][1] / n;
            }
            m
        })
        .collect();
    let mut total_means = [0.0; 2];
    for t in traces {
        total_means[0] += t.cav_residual_total[0] / n;
        total_means[1] += t.cav_residual_total[1] / n;
    }

    let cav = |view: View, p: &[f64]| -> Result<f64, SimError> {
        Ok(ctx.envelope(view).eval_cav(&Belief::normalized(&ctx.marginal(view, p))?)?)
    };
    let prior = ctx.scenario().prior().weights();
    let jensen = |view: View| -> Result<JensenCheck, SimError> {
        let prior_cav = cav(view, prior)?;
        let mut mean = 0.0;
        for t in traces {
            mean += cav(view, t.final_posterior())? / n;
        }
        Ok(JensenCheck { prior_cav, mean_final_cav: mean, passed: mean <= prior_cav + 1e-6 })
    };
    let jensen = [jensen(View::A)?, jensen(View::B)?];

    let product_deviation = checkpoints(ensemble.horizon)
        .into_iter()
        .map(|s| (s, traces.iter().map(|t| product_deviation(ctx, t.posterior_at(s))).sum::<f64>() / n))
        .collect();

    Ok(DiagnosticsReport {
        martingale_residual,
        support_violations,
        off_path: traces.iter().filter(|t| t.off_path.is_some()).count(),
        prefixes,
        stage_means,
        total_means,
        jensen,
        product_deviation,
    })
}

impl DiagnosticsReport {
    /// Flat `(key, value)` record.
    pub fn records(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("martingale_residual".to_string(), self.martingale_residual),
            ("support_violations".to_string(), self.support_violations as f64),
            ("off_path".to_string(), self.off_path as f64),
        ];
        for (t, m) in self.stage_means.iter().enumerate() {
            out.push((format!("cav_residual.a.t{}", t + 1), m[0]));
            out.push((format!("cav_residual.b.t{}", t + 1), m[1]));
        }
        out.push(("cav_residual.a.total".into(), self.total_means[0]));
        out.push(("cav_residual.b.total".into(), self.total_means[1]));
        for (l, j) in ["a", "b"].iter().zip(&self.jensen) {
            out.push((format!("jensen.{l}.prior_cav"), j.prior_cav));
            out.push((format!("jensen.{l}.mean_final_cav"), j.mean_final_cav));
        }
        for (t, d) in &self.product_deviation {
            out.push((format!("product_deviation.t{t}"), *d));
        }
        out
    }
}

/// Continuation average of one game from stage `t+1` to `T`, grouped by the
/// posterior `p_{t+1}`, against `Cav(v_ℓ)` there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaProxy {
    pub view: View,
    pub t: usize,
    pub posterior: Vec<f64>,
    pub continuation: Estimate,
    pub cav: f64,
    /// `5/√(T−t)`.
    pub slack: f64,
    pub passed: bool,
}

/// Finite-horizon proxies of `β_{ℓ,t}`. Needs traces that kept their path.
pub fn beta_proxies(ensemble: &Ensemble, ctx: &GameContext, stages: &[usize]) -> Result<Vec<BetaProxy>, SimError> {
    let horizon = ensemble.horizon;
    let mut out = Vec::new();
    for &t in stages.iter().filter(|&&t| t < horizon) {
        for view in [View::A, View::B] {
            let mut groups: BTreeMap<Vec<u64>, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for tr in &ensemble.traces {
                if tr.payoffs.len() != horizon {
                    return Err(SimError::Invalid("beta proxies need traces with their paths".into()));
                }
                let p = tr.posterior_at(t + 1);
                let key = p.iter().map(|x| (x * 1e12).round() as u64).collect();
                let rest = &tr.payoffs[t..];
                let sum: f64 = rest.iter().map(|(a, b)| if view == View::A { *a } else { *b }).sum();
                groups.entry(key).or_insert_with(|| (p.to_vec(), Vec::new())).1.push(sum / rest.len() as f64);
            }
            for (_, (p, xs)) in groups {
                let cav = ctx.envelope(view).eval_cav(&Belief::normalized(&ctx.marginal(view, &p))?)?;
                let continuation = Estimate::from_samples(&xs);
                let slack = 5.0 / ((horizon - t) as f64).sqrt();
                out.push(BetaProxy {
                    view,
                    t,
                    posterior: p,
                    continuation,
                    cav,
                    slack,
                    passed: continuation.mean <= cav + slack,
                });
            }
        }
    }
    Ok(out)
}
