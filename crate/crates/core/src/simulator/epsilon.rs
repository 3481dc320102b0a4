use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::Estimate;
use super::episode::{run_episode_with, Deviation, DeviationKind, EpisodeOptions};
use super::SimError;
use crate::strategy_synthesis::{EquilibriumProfile, GameContext, Role, View};

/// Printed with every verdict.
pub const BATTERY_CAVEAT: &str =
    "battery-limited: no improving deviation found in the battery; this is not a proof of equilibrium";

/// Gain of one deviation; per state for player 1, ex ante for players 2 and 3.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainEstimate {
    pub joint_state: Option<usize>,
    pub gain: Estimate,
    /// `3·SE`.
    pub ci: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonRow {
    pub horizon: usize,
    pub deviation: Deviation,
    pub label: String,
    pub epsilon: f64,
    pub gains: Vec<GainEstimate>,
    /// Every gain is at most `ε + CI`.
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonTable {
    pub rows: Vec<EpsilonRow>,
    /// `(T, no battery deviation gains more than ε + CI)`.
    pub verdicts: Vec<(usize, bool)>,
    pub caveat: &'static str,
}

impl EpsilonTable {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|(_, ok)| *ok)
    }
}

/// Stationary pure actions, the myopic reply and one-shot deviations to the
/// last action at stages 1–3, for each player.
pub fn standard_battery(ctx: &GameContext) -> Vec<Deviation> {
    let mut out = Vec::new();
    for (role, n) in [
        (Role::Informed, ctx.n_joint_rows()),
        (Role::UninformedA, ctx.view_cols(View::A)),
        (Role::UninformedB, ctx.view_cols(View::B)),
    ] {
        for a in 0..n {
            out.push(Deviation { role, kind: DeviationKind::StationaryPure(a) });
        }
        out.push(Deviation { role, kind: DeviationKind::MyopicBestResponse });
        for stage in 1..=3 {
            out.push(Deviation { role, kind: DeviationKind::OneShot { stage, action: n - 1 } });
        }
    }
    out
}

struct Outcome {
    state: usize,
    avg_total: f64,
    avg_a: f64,
    avg_b: f64,
}

fn outcomes(
    ctx: &GameContext,
    profile: &EquilibriumProfile,
    horizon: usize,
    seeds: &[u64],
    deviation: Option<Deviation>,
) -> Result<Vec<Outcome>, SimError> {
    let options = EpisodeOptions { deviation, keep_path: false };
    seeds
        .par_iter()
        .map(|&s| {
            let t = run_episode_with(ctx, profile, horizon, s, &options)?;
            Ok(Outcome { state: t.joint_state, avg_total: t.avg_total(), avg_a: t.avg_a(), avg_b: t.avg_b() })
        })
        .collect()
}

fn gain(diffs: Vec<f64>, joint_state: Option<usize>) -> GainEstimate {
    let gain = Estimate::from_samples(&diffs);
    // Paired runs that never differ have no sampling error.
    let ci = if diffs.iter().all(|d| *d == diffs[0]) { 0.0 } else { 3.0 * gain.se };
    GainEstimate { joint_state, gain, ci }
}

/// Paired-seed estimate of every deviation's gain at every horizon.
pub fn epsilon_equilibrium_check(
    ctx: &GameContext,
    profile: &EquilibriumProfile,
    deviations: &[Deviation],
    horizons: &[usize],
    seeds: &[u64],
    epsilon: impl Fn(usize) -> f64,
) -> Result<EpsilonTable, SimError> {
    if seeds.is_empty() {
        return Err(SimError::Invalid("the check needs at least one seed".into()));
    }
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &horizon in horizons {
        let eps = epsilon(horizon);
        let base = outcomes(ctx, profile, horizon, seeds, None)?;
        let mut all_ok = true;
        for d in deviations {
            let dev = outcomes(ctx, profile, horizon, seeds, Some(*d))?;
            let gains: Vec<GainEstimate> = match d.role {
                Role::Informed => ctx
                    .scenario()
                    .support()
                    .iter()
                    .filter(|&&f| base.iter().any(|o| o.state == f))
                    .map(|&f| {
                        let diffs = base
                            .iter()
                            .zip(&dev)
                            .filter(|(b, _)| b.state == f)
                            .map(|(b, x)| x.avg_total - b.avg_total)
                            .collect();
                        gain(diffs, Some(f))
                    })
                    .collect(),
                Role::UninformedA => vec![gain(base.iter().zip(&dev).map(|(b, x)| b.avg_a - x.avg_a).collect(), None)],
                Role::UninformedB => vec![gain(base.iter().zip(&dev).map(|(b, x)| b.avg_b - x.avg_b).collect(), None)],
            };
            let passed = gains.iter().all(|g| g.gain.mean <= eps + g.ci);
            all_ok &= passed;
            rows.push(EpsilonRow { horizon, deviation: *d, label: d.label(), epsilon: eps, gains, passed });
        }
        verdicts.push((horizon, all_ok));
    }
    Ok(EpsilonTable { rows, verdicts, caveat: BATTERY_CAVEAT })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::example;
    use crate::simulator::seed_range;
    use crate::strategy_synthesis::upper_end_profile;

    #[test]
    fn null_deviation_gains_nothing() {
        let ctx = GameContext::new(&example("example1").unwrap()).unwrap();
        let p = upper_end_profile(&ctx).unwrap();
        let null = [
            Deviation { role: Role::Informed, kind: DeviationKind::Null },
            Deviation { role: Role::UninformedB, kind: DeviationKind::Null },
        ];
        let table = epsilon_equilibrium_check(&ctx, &p, &null, &[50], &seed_range(0, 8), |_| 0.0).unwrap();
        assert!(table.passed());
        for row in &table.rows {
            for g in &row.gains {
                assert_eq!(g.gain.mean, 0.0);
                assert_eq!(g.ci, 0.0);
            }
        }
        assert_eq!(table.caveat, BATTERY_CAVEAT);
    }

    #[test]
    fn battery_covers_every_player() {
        let ctx = GameContext::new(&example("example1").unwrap()).unwrap();
        let b = standard_battery(&ctx);
        // 4 joint rows, 2 and 3 columns, plus myopic and three one-shots each.
        assert_eq!(b.len(), (4 + 4) + (2 + 4) + (3 + 4));
        assert!(epsilon_equilibrium_check(&ctx, &upper_end_profile(&ctx).unwrap(), &b, &[10], &[], |_| 0.0).is_err());
    }
}
