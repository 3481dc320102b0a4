//! Pass/fail checklists for the built-in worked examples.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use clap::ValueEnum;
use spillover::catalog::{self, REMARK_EPS};
use spillover::envelope::{clarke_gradient, lattice, ClarkeSettings};
use spillover::game_core::{Belief, PayoffVector, SimplexChart, StageGameFamily};
use spillover::nr_analysis::{
    boundary_lambda_equation, check_locally_nonrevealing, check_nr_property, constrained_nr_value, find_nr_payoff,
    joint_nr_membership, LocalCheck, NrCheck, NrPayoff,
};
use spillover::numfmt::{sig, sig_tuple};
use spillover::simulator::{martingale_diagnostics, run_ensemble, seed_range, EpisodeOptions};
use spillover::strategy_synthesis::{
    aumann_maschler_informed, jcl_profile, lower_end_profile, standard_optimal_profile, upper_end_profile, GameContext,
};

use crate::analyze::{self, Overrides};
use crate::exit::Failure;
use crate::output::{Format, Table};
use crate::scenario::{Loaded, ScenarioFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExampleId {
    Example1,
    Attainable,
    Nonattainable,
    Section4,
    RemarkEps,
}

impl ExampleId {
    pub fn catalog_name(self) -> &'static str {
        match self {
            ExampleId::Example1 => "example1",
            ExampleId::Attainable => "attainable",
            ExampleId::Nonattainable => "nonattainable",
            ExampleId::Section4 => "section4",
            ExampleId::RemarkEps => "remark_eps",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Simulation sizes for the checks that run ensembles.
#[derive(Clone, Debug)]
pub struct SimSize {
    pub horizon: usize,
    pub seeds: usize,
    pub base_seed: u64,
}

struct List(Vec<Check>);

impl List {
    fn add(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }
}

fn quiet() -> EpisodeOptions {
    EpisodeOptions { deviation: None, keep_path: false }
}

fn grid_error(n: usize, f: impl Fn(f64) -> Result<f64, Failure>) -> Result<f64, Failure> {
    let mut worst = 0.0f64;
    for k in 0..=n {
        worst = worst.max(f(k as f64 / n as f64)?.abs());
    }
    Ok(worst)
}

fn value(f: &StageGameFamily, q: f64) -> Result<f64, Failure> {
    Ok(f.value_at_weights(&[q, 1.0 - q]).map_err(spillover::nr_analysis::NrError::from)?)
}

fn example1(ctx: &GameContext, size: &SimSize, out: &mut List) -> Result<(), Failure> {
    let s = ctx.scenario();
    let va = grid_error(100, |q| Ok(value(s.family_a(), q)? - q * (1.0 - q)))?;
    out.add("v_A(q) = q(1-q) at 101 points", va <= 1e-9, format!("max error {}", sig(va)));
    let vb =
        grid_error(100, |q| Ok(value(s.family_b(), q)? - (4.0 * q).min(4.0 - 4.0 * q).min((2.0 - 4.0 * q).abs())))?;
    out.add("v_B(q) = min(4q, 4-4q, |2-4q|) at 101 points", vb <= 1e-9, format!("max error {}", sig(vb)));
    let i = ctx.analysis().interval();
    out.add("Cav(v_B)(1/2) = 1", (i.cav_b - 1.0).abs() <= 1e-6, sig(i.cav_b));
    out.add(
        "I = [19/16, 5/4]",
        (i.lower - 19.0 / 16.0).abs() <= 1e-4 && (i.upper - 1.25).abs() <= 1e-4,
        format!("[{}, {}]", sig(i.lower), sig(i.upper)),
    );
    let plan = aumann_maschler_informed(s.family_b(), s.marginal_b(), ctx.analysis().envelope_b())?;
    let mut post: Vec<f64> = plan.signal.iter().flat_map(|l| l.posteriors.iter().map(|b| b.weights()[0])).collect();
    post.sort_by(f64::total_cmp);
    let exact = post.len() == 2 && (post[0] - 0.25).abs() <= 1e-12 && (post[1] - 0.75).abs() <= 1e-12;
    out.add("B signal posteriors {1/4, 3/4}", exact, format!("{post:?}"));

    let std = standard_optimal_profile(ctx);
    let ens = run_ensemble(ctx, &std, 20, &seed_range(size.base_seed, 50), &quiet())?;
    let r = martingale_diagnostics(&ens, ctx)?.stage_means[0][0];
    out.add("stage-1 Cav(v_A) residual = 1/16", (r - 1.0 / 16.0).abs() <= 1e-9, sig(r));

    let seeds = seed_range(size.base_seed, size.seeds);
    let t = size.horizon;
    let upper = upper_end_profile(ctx)?;
    let m = run_ensemble(ctx, &upper, t, &seeds, &quiet())?.summary.ex_ante;
    let band = 3.0 * m.se + 12.0 / t as f64;
    out.add(
        &format!("nr_upper ex-ante = 5/4 within 3SE + 12/T (T={t})"),
        (m.mean - 1.25).abs() <= band,
        format!("{} ± {} (SE)", sig(m.mean), sig(m.se)),
    );
    let jcl = jcl_profile(ctx, &lower_end_profile(ctx)?, &upper, 0.5, 10)?;
    let m = run_ensemble(ctx, &jcl, t, &seeds, &quiet())?.summary.ex_ante;
    out.add(
        &format!("jcl w=1/2 ex-ante = 39/32 within 3SE (T={t})"),
        m.covers(39.0 / 32.0, 3.0),
        format!("{} ± {} (SE)", sig(m.mean), sig(m.se)),
    );
    Ok(())
}

fn attainable(ctx: &GameContext, out: &mut List) -> Result<(), Failure> {
    let f = ctx.scenario().family_a();
    let p = ctx.scenario().marginal_a();
    let chart = SimplexChart::new(2).map_err(spillover::nr_analysis::NrError::from)?;
    let check = check_nr_property(f, p, &chart)?;
    match check.certificate() {
        Some(c) => out.add(
            "NR certificate p=0, φ=(0,0)",
            c.p_star.weights()[0].abs() <= 1e-12 && c.phi.0.iter().all(|x| x.abs() <= 1e-9),
            format!("p={} φ={}", sig(c.p_star.weights()[0]), sig_tuple(&c.phi.0)),
        ),
        None => out.add("NR certificate p=0, φ=(0,0)", false, check.verdict()),
    }
    match find_nr_payoff(f, p)? {
        NrPayoff::Found { phi, .. } => {
            out.add("find_nr_payoff = (0,0)", phi.0.iter().all(|x| x.abs() <= 1e-6), sig_tuple(&phi.0))
        }
        NrPayoff::Empty { .. } => out.add("find_nr_payoff = (0,0)", false, "empty"),
    }
    let local = check_locally_nonrevealing(f, p)?;
    out.add("not locally non-revealing", local == LocalCheck::NotFound, format!("{local:?}"));
    Ok(())
}

/// Smallest violation of the `NR_A` conditions over a lattice of `F_A`, the
/// hull of the cell payoff vectors; positive means no lattice point qualifies.
fn nr_set_violation(f: &StageGameFamily, p: &Belief, cav: f64) -> Result<f64, Failure> {
    let cells: Vec<Vec<f64>> = (0..f.n_rows())
        .flat_map(|i| (0..f.n_cols()).map(move |j| (i, j)))
        .map(|(i, j)| f.cell_payoff(i, j).0)
        .collect();
    let qs: Vec<Vec<f64>> = lattice(f.n_states(), 100);
    let vs: Vec<f64> = qs
        .iter()
        .map(|q| f.value_at_weights(q))
        .collect::<Result<_, _>>()
        .map_err(spillover::nr_analysis::NrError::from)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut best = f64::INFINITY;
    for w in lattice(cells.len(), 40) {
        let phi: Vec<f64> = (0..f.n_states()).map(|k| cells.iter().zip(&w).map(|(c, x)| c[k] * x).sum()).collect();
        let mut v = (dot(&phi, p.weights()) - cav).abs();
        for (q, vq) in qs.iter().zip(&vs) {
            v = v.max(vq - dot(&phi, q));
        }
        best = best.min(v);
    }
    Ok(best)
}

fn nonattainable(ctx: &GameContext, out: &mut List) -> Result<(), Failure> {
    let f = ctx.scenario().family_a();
    let p = ctx.scenario().marginal_a();
    let nr = |e| spillover::nr_analysis::NrError::from(e);
    let chart = SimplexChart::new(2).map_err(nr)?;
    let g = clarke_gradient(f, &Belief::binary(0.0).map_err(nr)?, &chart, &ClarkeSettings::default())
        .map_err(spillover::nr_analysis::NrError::from)?;
    let spread = g.samples.iter().map(|s| (s[0] + 2.0).abs()).fold(0.0, f64::max);
    out.add(
        "generalized gradient at p=0 is {-2}",
        !g.samples.is_empty() && spread <= 1e-3,
        format!("spread {}", sig(spread)),
    );
    let check = check_nr_property(f, p, &chart)?;
    let least = check
        .candidates()
        .iter()
        .filter_map(|c| c.residuals.as_ref())
        .map(|r| r.gradient)
        .fold(f64::INFINITY, f64::min);
    out.add(
        "NR NotFound, condition-(2) residual >= 2",
        matches!(check, NrCheck::NotFound { .. }) && least >= 2.0 - 1e-3,
        format!("{} (residual {})", check.verdict(), sig(least)),
    );
    match find_nr_payoff(f, p)? {
        NrPayoff::Empty { verified, certificate, .. } => out.add(
            "NR_A empty with a dual certificate",
            verified,
            format!("combined rhs {}", sig(certificate.combined_rhs)),
        ),
        NrPayoff::Found { phi, .. } => out.add("NR_A empty with a dual certificate", false, sig_tuple(&phi.0)),
    }
    let cav = ctx.analysis().interval().cav_a;
    let v = nr_set_violation(f, p, cav)?;
    out.add("F_A lattice search finds no NR payoff", v > 1e-3, format!("smallest violation {}", sig(v)));
    Ok(())
}

fn section4(ctx: &GameContext, size: &SimSize, out: &mut List) -> Result<(), Failure> {
    let s = ctx.scenario();
    let env = ctx.analysis().envelope_a();
    let err = grid_error(50, |q| {
        let b = Belief::binary(q).map_err(spillover::nr_analysis::NrError::from)?;
        let cav = env.eval_cav(&b).map_err(spillover::nr_analysis::NrError::from)?;
        Ok(constrained_nr_value(s.family_a(), &b, cav)? - value(s.family_a(), q)?)
    })?;
    out.add("V_A = v_A at 51 points", err <= 1e-3, format!("max gap {}", sig(err)));
    let eq = boundary_lambda_equation(s)?;
    out.add(
        "λ-equation infeasible",
        !eq.is_feasible(),
        if eq.is_feasible() { format!("λ = {:?}", eq.solution) } else { eq.reason.clone() },
    );
    let i = ctx.analysis().interval();
    out.add(
        "I = [1, 5/4]",
        (i.lower - 1.0).abs() <= 1e-4 && (i.upper - 1.25).abs() <= 1e-4,
        format!("[{}, {}]", sig(i.lower), sig(i.upper)),
    );
    let t = size.horizon;
    let m = run_ensemble(ctx, &lower_end_profile(ctx)?, t, &seed_range(size.base_seed, size.seeds), &quiet())?
        .summary
        .ex_ante;
    out.add(
        &format!("lower_end ex-ante = 1 within 3SE (T={t})"),
        m.covers(1.0, 3.0),
        format!("{} ± {} (SE)", sig(m.mean), sig(m.se)),
    );
    Ok(())
}

fn remark(ctx: &GameContext, out: &mut List) -> Result<(), Failure> {
    let s = ctx.scenario();
    let empty = find_nr_payoff(s.family_b(), s.marginal_b())?.is_empty();
    out.add("NR_B empty", empty, if empty { "empty" } else { "found a payoff" });
    let phi_a = PayoffVector(vec![16.0 / 25.0, 1.0 / 25.0]);
    let p = s.marginal_a().weights();
    let at_prior = phi_a.dot(p) - value(s.family_a(), p[0])?;
    let below = grid_error(1000, |q| Ok((value(s.family_a(), q)? - phi_a.dot(&[q, 1.0 - q])).max(0.0)))?;
    out.add(
        "φ_A = (16/25, 1/25) is tangent to v_A at the prior",
        at_prior.abs() <= 1e-9 && below <= 1e-9,
        format!("gap at prior {}, worst excess of v_A {}", sig(at_prior), sig(below)),
    );
    let m = joint_nr_membership(s, &phi_a, &PayoffVector(vec![-REMARK_EPS, REMARK_EPS]))?;
    out.add(
        "(φ_A, (-ε, ε)) is a joint NR payoff",
        m.member,
        format!("informed-rationality residual {}", sig(m.rational_informed.residual)),
    );
    let m = joint_nr_membership(s, &phi_a, &PayoffVector(vec![REMARK_EPS, REMARK_EPS]))?;
    out.add("(ε, ε) lies outside F_B", !m.feasible_b.passed, format!("distance {}", sig(m.feasible_b.residual)));
    Ok(())
}

pub struct Outcome {
    pub checks: Vec<Check>,
    pub text: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run(id: ExampleId, size: &SimSize, o: &Overrides, out_root: &Path, format: Format) -> Result<Outcome> {
    let name = id.catalog_name();
    let scenario = catalog::example(name).expect("reproducible examples are in the catalog");
    let mut file = ScenarioFile::from_scenario(&scenario);
    file.options.horizons = vec![size.horizon];
    file.options.seeds = size.seeds;
    file.options.base_seed = size.base_seed;
    let loaded: Loaded = file.validate()?;
    let (report, mut bundle) = analyze::run(&loaded, o, out_root, format)?;
    let ctx = GameContext::from_analysis(
        spillover::nr_analysis::IntervalAnalysis::with_resolution(
            &loaded.scenario,
            analyze::settings(&loaded, o).resolution,
        )
        .map_err(Failure::from)?,
    )
    .map_err(Failure::from)?;
    let mut list = List(Vec::new());
    match id {
        ExampleId::Example1 => example1(&ctx, size, &mut list)?,
        ExampleId::Attainable => attainable(&ctx, &mut list)?,
        ExampleId::Nonattainable => nonattainable(&ctx, &mut list)?,
        ExampleId::Section4 => section4(&ctx, size, &mut list)?,
        ExampleId::RemarkEps => remark(&ctx, &mut list)?,
    }
    let mut text = format!("reproduce {name}: {}\n", catalog::description(name));
    let mut table = Table::new(["check", "passed", "detail"]);
    for c in &list.0 {
        writeln!(text, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        table.push(vec![c.name.as_str().into(), c.passed.into(), c.detail.as_str().into()]);
    }
    writeln!(text, "\n{}", report.to_text().trim_end())?;
    bundle.write_table("checklist", &table)?;
    bundle.write_text("checklist.txt", &text)?;
    Ok(Outcome { checks: list.0, text })
}
