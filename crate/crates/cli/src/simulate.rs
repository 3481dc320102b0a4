use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use clap::ValueEnum;
use spillover::nr_analysis::IntervalAnalysis;
use spillover::numfmt::sig;
use spillover::simulator::{
    epsilon_equilibrium_check, martingale_diagnostics, run_ensemble, run_episode_with, seed_range, standard_battery,
    write_trace_csv, Ensemble, EpisodeOptions, EpsilonTable, Estimate,
};
use spillover::strategy_synthesis::{
    jcl_profile, lower_end_profile, standard_optimal_profile, upper_end_profile, EquilibriumProfile, GameContext,
};

use crate::exit::Failure;
use crate::output::{Bundle, Cell, Format, Table};
use crate::scenario::Loaded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileName {
    /// Non-revealing profile paying the upper end of the interval.
    NrUpper,
    /// Signalling profile paying the lower end.
    LowerEnd,
    /// Jointly controlled lottery between the two ends.
    Jcl,
    /// Aumann–Maschler play in each game against posterior-minimax columns.
    Standard,
}

#[derive(Clone, Debug)]
pub struct SimArgs {
    pub profile: ProfileName,
    pub weight: f64,
    pub lottery_stages: usize,
    pub horizons: Vec<usize>,
    pub seeds: usize,
    pub base_seed: u64,
    /// Seeds used by the ε-check; 0 skips it.
    pub epsilon_seeds: usize,
}

pub fn build_profile(ctx: &GameContext, args: &SimArgs) -> Result<EquilibriumProfile, Failure> {
    Ok(match args.profile {
        ProfileName::NrUpper => upper_end_profile(ctx)?,
        ProfileName::LowerEnd => lower_end_profile(ctx)?,
        ProfileName::Standard => standard_optimal_profile(ctx),
        ProfileName::Jcl => {
            if !(0.0..=1.0).contains(&args.weight) {
                return Err(Failure::Validation(format!("--weight {} is not in [0, 1]", args.weight)));
            }
            let (lo, hi) = (lower_end_profile(ctx)?, upper_end_profile(ctx)?);
            jcl_profile(ctx, &lo, &hi, args.weight, args.lottery_stages)?
        }
    })
}

fn estimate_cells(e: &Estimate) -> Vec<Cell> {
    vec![e.mean.into(), e.se.into(), e.n.into()]
}

fn ensemble_tables(ctx: &GameContext, ens: &Ensemble) -> (Table, Table) {
    let s = ctx.scenario();
    let mut traces = Table::new(["seed", "k_a", "k_b", "avg_total", "avg_a", "avg_b", "off_path_stage"]);
    for t in &ens.traces {
        traces.push(vec![
            t.seed.into(),
            s.family_a().states()[t.state.0].as_str().into(),
            s.family_b().states()[t.state.1].as_str().into(),
            t.avg_total().into(),
            t.avg_a().into(),
            t.avg_b().into(),
            t.off_path.map_or(Cell::Text(String::new()), Cell::from),
        ]);
    }
    let mut summary = Table::new(["scope", "quantity", "mean", "se", "n", "target"]);
    let declared = &ens.profile.targets;
    let target = |x: Option<f64>| x.map_or(Cell::Text(String::new()), Cell::from);
    for (q, e, t) in [
        ("total", &ens.summary.ex_ante, declared.ex_ante),
        ("game_a", &ens.summary.game_a, None),
        ("game_b", &ens.summary.game_b, None),
    ] {
        let mut row = vec!["ex_ante".into(), q.into()];
        row.extend(estimate_cells(e));
        row.push(target(t));
        summary.push(row);
    }
    for st in &ens.summary.per_state {
        let (ka, kb) = ctx.split_state(st.joint_state);
        let scope = format!("{}_{}", s.family_a().states()[ka], s.family_b().states()[kb]);
        for (q, e) in [("total", &st.total), ("game_a", &st.game_a), ("game_b", &st.game_b)] {
            let mut row = vec![scope.as_str().into(), q.into()];
            row.extend(estimate_cells(e));
            row.push(if q == "total" { target(declared.per_state[st.joint_state]) } else { Cell::Text(String::new()) });
            summary.push(row);
        }
    }
    (traces, summary)
}

fn epsilon_rows(ctx: &GameContext, table: &EpsilonTable) -> Table {
    let s = ctx.scenario();
    let mut t = Table::new(["horizon", "deviation", "state", "gain", "se", "ci", "epsilon", "passed"]);
    for r in &table.rows {
        for g in &r.gains {
            let state = g.joint_state.map_or("ex_ante".to_string(), |f| {
                let (ka, kb) = ctx.split_state(f);
                format!("{}_{}", s.family_a().states()[ka], s.family_b().states()[kb])
            });
            t.push(vec![
                r.horizon.into(),
                r.label.as_str().into(),
                state.into(),
                g.gain.mean.into(),
                g.gain.se.into(),
                g.ci.into(),
                r.epsilon.into(),
                r.passed.into(),
            ]);
        }
    }
    t
}

pub fn run(
    loaded: &Loaded,
    grid_res: Option<f64>,
    args: &SimArgs,
    out_root: &Path,
    format: Format,
) -> Result<(String, Bundle)> {
    let s = &loaded.scenario;
    let analysis =
        IntervalAnalysis::with_resolution(s, grid_res.or(loaded.file.options.grid_res)).map_err(Failure::from)?;
    let ctx = GameContext::from_analysis(analysis).map_err(Failure::from)?;
    let profile = build_profile(&ctx, args)?;
    let seeds = seed_range(args.base_seed, args.seeds);
    let label = args.profile.to_possible_value().expect("no skipped variants").get_name().to_string();
    let mut bundle = Bundle::create(out_root, &format!("{}-{label}", s.name()), format)?;
    bundle.write_text("scenario.json", &loaded.file.to_canonical_json())?;
    bundle.write_text("profile.json", &(serde_json::to_string_pretty(&profile)? + "\n"))?;

    let i = ctx.analysis().interval();
    let mut text = String::new();
    writeln!(text, "scenario {} profile {label}", s.name())?;
    writeln!(text, "I = [{}, {}]", sig(i.lower), sig(i.upper))?;
    if let Some(t) = profile.targets.ex_ante {
        writeln!(text, "declared ex-ante payoff {}", sig(t))?;
    }
    let quiet = EpisodeOptions { deviation: None, keep_path: false };
    for &horizon in &args.horizons {
        let ens = run_ensemble(&ctx, &profile, horizon, &seeds, &quiet).map_err(Failure::from)?;
        let (traces, summary) = ensemble_tables(&ctx, &ens);
        bundle.write_table(&format!("ensemble_T{horizon}"), &traces)?;
        bundle.write_table(&format!("summary_T{horizon}"), &summary)?;
        let m = &ens.summary.ex_ante;
        writeln!(
            text,
            "T={horizon}: ex-ante {} ± {} (SE, {} seeds); game A {} game B {}",
            sig(m.mean),
            sig(m.se),
            m.n,
            sig(ens.summary.game_a.mean),
            sig(ens.summary.game_b.mean)
        )?;
        let d = martingale_diagnostics(&ens, &ctx).map_err(Failure::from)?;
        bundle.write_table(&format!("diagnostics_T{horizon}"), &Table::records(&d.records()))?;
        writeln!(
            text,
            "  martingale residual {}; off-path traces {}; Jensen A {} B {}",
            sig(d.martingale_residual),
            d.off_path,
            if d.jensen[0].passed { "pass" } else { "fail" },
            if d.jensen[1].passed { "pass" } else { "fail" }
        )?;
    }

    // One full trace for plotting.
    let first = run_episode_with(&ctx, &profile, args.horizons[0], seeds[0], &EpisodeOptions::default())
        .map_err(Failure::from)?;
    let mut buf = Vec::new();
    write_trace_csv(&ctx, &first, &mut buf).map_err(Failure::from)?;
    bundle.write_text(&format!("trace_T{}_seed{}.csv", args.horizons[0], seeds[0]), &String::from_utf8(buf)?)?;

    if args.epsilon_seeds > 0 {
        let eps_seeds = seed_range(args.base_seed, args.epsilon_seeds);
        let table =
            epsilon_equilibrium_check(&ctx, &profile, &standard_battery(&ctx), &args.horizons, &eps_seeds, |t| {
                5.0 / (t as f64).sqrt()
            })
            .map_err(Failure::from)?;
        bundle.write_table("epsilon", &epsilon_rows(&ctx, &table))?;
        for (t, ok) in &table.verdicts {
            writeln!(text, "ε-check T={t} (ε = 5/√T): {} [{}]", if *ok { "pass" } else { "fail" }, table.caveat)?;
        }
    }
    bundle.write_text("report.txt", &text)?;
    Ok((text, bundle))
}
