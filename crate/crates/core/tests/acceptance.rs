//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//! Built without the libtest harness so the lines always reach the terminal.

mod common;

use std::time::{Duration, Instant};

use common::suites::{self, SUITE_CASES};
use proptest::test_runner::TestRunner;
use spillover::catalog::{example, example1_b};
use spillover::envelope::{clarke_gradient, ClarkeSettings, LINE_RESOLUTION};
use spillover::game_core::{Belief, MixedAction, SimplexChart, StageGameFamily};
use spillover::nr_analysis::{
    boundary_lambda_equation, check_locally_nonrevealing, check_nr_property, constrained_nr_value, find_nr_payoff,
    full_envelope, LocalCheck, NrCheck, NrPayoff,
};
use spillover::simulator::{
    epsilon_equilibrium_check, martingale_diagnostics, run_ensemble, run_episode_with, seed_range, standard_battery,
    Deviation, DeviationKind, EpisodeOptions,
};
use spillover::strategy_synthesis::{
    aumann_maschler_informed, blackwell_uninformed, jcl_profile, lower_end_profile, standard_optimal_profile,
    upper_end_profile, ComponentPlan, EquilibriumProfile, GameContext, InformedStrategy, Provenance, Role, Targets,
    UninformedStrategy, View,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn context(name: &str) -> Result<GameContext, String> {
    GameContext::new(&example(name).ok_or(format!("no example {name}"))?).map_err(|e| e.to_string())
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn quiet() -> EpisodeOptions {
    EpisodeOptions { deviation: None, keep_path: false }
}

/// `v_B(q) = min(4q, 4 − 4q, |2 − 4q|)`: the column player picks the smallest
/// of the two constant columns and the signed column that the row player
/// pushes to `|2 − 4q|`.
fn example1_vb(q: f64) -> f64 {
    (4.0 * q).min(4.0 - 4.0 * q).min((2.0 - 4.0 * q).abs())
}

fn criterion1() -> Check {
    let start = Instant::now();
    let chart = SimplexChart::new(2).map_err(e)?;
    let s = example("example1").unwrap();
    let (fa, fb) = (s.family_a(), s.family_b());
    let mut worst = 0.0f64;
    for k in 0..=100 {
        let q = k as f64 / 100.0;
        let point = chart.to_point(&[q]).map_err(e)?;
        worst = worst.max((fa.nr_value(&point).map_err(e)? - q * (1.0 - q)).abs());
        worst = worst.max((fb.nr_value(&point).map_err(e)? - example1_vb(q)).abs());
    }
    ensure(worst <= 1e-9, format!("v_A/v_B off by {worst:.2e}"))?;
    let half = Belief::binary(0.5).map_err(e)?;
    let cav_b = full_envelope(fb, &[&half], Some(LINE_RESOLUTION)).map_err(e)?.eval_cav(&half).map_err(e)?;
    ensure((cav_b - 1.0).abs() <= 1e-6, format!("Cav(v_B)(1/2) = {cav_b}"))?;
    let ctx = GameContext::new(&s).map_err(e)?;
    let i = ctx.analysis().interval();
    ensure(
        (i.lower - 19.0 / 16.0).abs() <= 1e-4 && (i.upper - 1.25).abs() <= 1e-4,
        format!("I = [{}, {}]", i.lower, i.upper),
    )?;
    ensure(i.upper > i.lower, "upper end does not exceed lower end")?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), format!("took {t:?}"))?;
    Ok(format!(
        "101-point v_A, v_B error {worst:.1e}; Cav(v_B)(1/2) = {cav_b:.9}; I = [{:.6}, {:.6}]; {t:.2?}",
        i.lower, i.upper
    ))
}

fn two_state(name: &str) -> StageGameFamily {
    example(name).unwrap().family_a().clone()
}

fn criterion2() -> Check {
    let f = two_state("attainable");
    let half = Belief::binary(0.5).map_err(e)?;
    let chart = SimplexChart::new(2).map_err(e)?;
    let check = check_nr_property(&f, &half, &chart).map_err(e)?;
    let cert = check.certificate().ok_or(format!("no certificate: {check:?}"))?;
    let q = cert.p_star.weights()[0];
    ensure(q.abs() <= 1e-12, format!("certificate at q = {q}"))?;
    ensure(cert.phi.0.iter().all(|x| x.abs() <= 1e-9), format!("certificate φ = {:?}", cert.phi.0))?;
    let phi = match find_nr_payoff(&f, &half).map_err(e)? {
        NrPayoff::Found { phi, .. } => phi,
        other => return Err(format!("find_nr_payoff: {other:?}")),
    };
    ensure(phi.0.iter().all(|x| x.abs() <= 1e-6), format!("find_nr_payoff φ = {:?}", phi.0))?;
    let local = check_locally_nonrevealing(&f, &half).map_err(e)?;
    ensure(local == LocalCheck::NotFound, format!("locally non-revealing check: {local:?}"))?;
    Ok(format!("certificate (q=0, φ={:?}); find_nr_payoff φ={:?}; local check NotFound", cert.phi.0, phi.0))
}

fn criterion3() -> Check {
    let f = two_state("nonattainable");
    let chart = SimplexChart::new(2).map_err(e)?;
    let g = clarke_gradient(&f, &Belief::binary(0.0).map_err(e)?, &chart, &ClarkeSettings::default()).map_err(e)?;
    ensure(!g.samples.is_empty(), "no gradient samples")?;
    let spread = g.samples.iter().map(|s| (s[0] + 2.0).abs()).fold(0.0, f64::max);
    ensure(spread <= 1e-3, format!("gradient samples {:?}", g.samples))?;
    let half = Belief::binary(0.5).map_err(e)?;
    let check = check_nr_property(&f, &half, &chart).map_err(e)?;
    ensure(matches!(check, NrCheck::NotFound { .. }), format!("NR check: {check:?}"))?;
    let mut least = f64::INFINITY;
    for c in check.candidates() {
        let r = c.residuals.as_ref().ok_or("candidate without residuals")?;
        least = least.min(r.gradient);
    }
    ensure(least >= 2.0 - 1e-3, format!("condition-(2) residual {least}"))?;
    match find_nr_payoff(&f, &half).map_err(e)? {
        NrPayoff::Empty { certificate, verified, .. } => {
            ensure(verified && certificate.combined_rhs < 0.0, format!("certificate {certificate:?}"))?
        }
        other => return Err(format!("find_nr_payoff: {other:?}")),
    }
    Ok(format!(
        "∂v(0) = {{-2}} (spread {spread:.1e}); NotFound, residual {least:.4}; Empty with verified dual certificate"
    ))
}

fn criterion4() -> Check {
    let ctx = context("section4")?;
    let f = ctx.scenario().family_a().clone();
    let env = ctx.envelope(View::A);
    let mut worst = 0.0f64;
    for k in 0..=50 {
        let p = Belief::binary(k as f64 / 50.0).map_err(e)?;
        let big_v = constrained_nr_value(&f, &p, env.eval_cav(&p).map_err(e)?).map_err(e)?;
        worst = worst.max((big_v - f.value_at_weights(p.weights()).map_err(e)?).abs());
    }
    ensure(worst <= 1e-3, format!("V_A differs from v_A by {worst}"))?;
    let eq = boundary_lambda_equation(ctx.scenario()).map_err(e)?;
    ensure(!eq.is_feasible(), format!("λ-equation solved: {eq:?}"))?;
    let i = ctx.analysis().interval();
    ensure((i.lower - 1.0).abs() <= 1e-4 && (i.upper - 1.25).abs() <= 1e-4, format!("I = [{}, {}]", i.lower, i.upper))?;
    let profile = lower_end_profile(&ctx).map_err(e)?;
    let ens = run_ensemble(&ctx, &profile, 10_000, &seed_range(0, 200), &quiet()).map_err(e)?;
    let m = ens.summary.ex_ante;
    let detail = format!(
        "V_A = v_A (max gap {worst:.1e}); λ-equation infeasible; I = [{:.6}, {:.6}]; lower-end ex-ante {:.7} ± {:.2e} (SE), off by {:.1} SE",
        i.lower,
        i.upper,
        m.mean,
        m.se,
        (m.mean - 1.0).abs() / m.se
    );
    ensure(m.covers(1.0, 3.0), detail.clone())?;
    Ok(detail)
}

fn criterion5() -> Check {
    let fb = example1_b();
    let half = Belief::binary(0.5).map_err(e)?;
    let env = full_envelope(&fb, &[&half], Some(LINE_RESOLUTION)).map_err(e)?;
    let plan = aumann_maschler_informed(&fb, &half, &env).map_err(e)?;
    let signal = plan.signal.ok_or("no signal at 1/2")?;
    let mut post: Vec<f64> = signal.posteriors.iter().map(|b| b.weights()[0]).collect();
    post.sort_by(f64::total_cmp);
    ensure(
        post.len() == 2 && (post[0] - 0.25).abs() <= 1e-12 && (post[1] - 0.75).abs() <= 1e-12,
        format!("posteriors {post:?}"),
    )?;

    let ctx = context("example1_b")?;
    let ens = run_ensemble(&ctx, &standard_optimal_profile(&ctx), 10_000, &seed_range(0, 200), &quiet()).map_err(e)?;
    let m = ens.summary.ex_ante;
    ensure(m.covers(1.0, 3.0), format!("ex-ante {} ± {}", m.mean, m.se))?;

    let ctx1 = context("example1")?;
    let ens1 = run_ensemble(&ctx1, &standard_optimal_profile(&ctx1), 20, &seed_range(0, 50), &quiet()).map_err(e)?;
    let d = martingale_diagnostics(&ens1, &ctx1).map_err(e)?;
    let r = d.stage_means[0][0];
    ensure((r - 1.0 / 16.0).abs() <= 1e-9, format!("Cav(v_A) residual at stage 1 = {r}"))?;
    Ok(format!(
        "posteriors {{{}, {}}}; ex-ante {:.5} ± {:.4} (SE); Cav(v_A) residual at stage 1 = {r:.12}",
        post[0], post[1], m.mean, m.se
    ))
}

/// Informed strategies run against the tracker in criterion 6.
fn blackwell_battery(ctx: &GameContext) -> Vec<(String, InformedStrategy, Option<Deviation>)> {
    let trivial = || ComponentPlan::Stationary(MixedAction::pure(1, 0));
    let rows = ctx.view_rows(View::A);
    let with = |a: ComponentPlan| InformedStrategy::Components { a, b: trivial() };
    let mut out = Vec::new();
    for i in 0..rows {
        out.push((format!("pure{i}"), with(ComponentPlan::Stationary(MixedAction::pure(rows, i))), None));
    }
    out.push(("uniform".into(), with(ComponentPlan::Stationary(MixedAction::uniform(rows))), None));
    let reveal = (0..ctx.n_view_states(View::A)).map(|k| MixedAction::pure(rows, k % rows)).collect();
    out.push(("revealing".into(), with(ComponentPlan::PerState(reveal)), None));
    out.push(("splitting".into(), with(ComponentPlan::AumannMaschler), None));
    out.push((
        "myopic".into(),
        with(ComponentPlan::AumannMaschler),
        Some(Deviation { role: Role::Informed, kind: DeviationKind::MyopicBestResponse }),
    ));
    out
}

fn criterion6() -> Check {
    let start = Instant::now();
    let ctx = context("example1_b")?;
    let phi = vec![1.0, 1.0];
    let target = blackwell_uninformed(&ctx, View::A, phi.clone()).map_err(e)?;
    let horizons = [100usize, 1_000, 10_000];
    let seeds = seed_range(600, 200);
    // excess[battery][state][horizon] = (mean − φ, SE)
    let mut excess = Vec::new();
    for (name, informed, deviation) in blackwell_battery(&ctx) {
        let profile = EquilibriumProfile {
            provenance: Provenance::StandardOptimal,
            informed,
            uninformed_a: UninformedStrategy::Blackwell(target.clone()),
            uninformed_b: UninformedStrategy::Stationary(MixedAction::pure(1, 0)),
            targets: Targets {
                per_state: vec![None; ctx.n_joint()],
                ex_ante: None,
                uninformed_a: None,
                uninformed_b: None,
            },
        };
        let mut per_state = vec![Vec::new(); 2];
        for &t in &horizons {
            let opts = EpisodeOptions { deviation, keep_path: false };
            let ens = run_ensemble(&ctx, &profile, t, &seeds, &opts).map_err(e)?;
            for s in &ens.summary.per_state {
                per_state[s.joint_state].push((s.game_a.mean - phi[s.joint_state], s.game_a.se));
            }
        }
        excess.push((name, per_state));
    }
    let fitted = excess
        .iter()
        .flat_map(|(_, ps)| ps.iter().map(|h| (h[0].0 + 3.0 * h[0].1).max(0.0) * (horizons[0] as f64).sqrt()))
        .fold(0.0, f64::max);
    let c = fitted;
    ensure(c <= 10.0, format!("fitted C = {c}"))?;
    let mut worst = (f64::NEG_INFINITY, String::new());
    for (name, ps) in &excess {
        for (k, h) in ps.iter().enumerate() {
            for (i, &t) in horizons.iter().enumerate() {
                // The fit at T=10² carries 3SE; later horizons get the same allowance.
                let slack = c / (t as f64).sqrt() + 3.0 * h[i].1 - h[i].0;
                ensure(slack >= 0.0, format!("{name}, state {k}, T={t}: excess {:.4} > C/√T + 3SE", h[i].0))?;
                if i > 0 {
                    let (prev, now) = (h[i - 1].0.max(0.0), h[i].0.max(0.0));
                    let noise = 3.0 * (h[i - 1].1.powi(2) + h[i].1.powi(2)).sqrt();
                    ensure(
                        now <= prev + noise,
                        format!("{name}, state {k}: excess rose from {prev:.4} to {now:.4} at T={t}"),
                    )?;
                }
                if h[i].0 > worst.0 {
                    worst = (h[i].0, format!("{name}/state {k}/T={t}"));
                }
            }
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!(
        "C = {c:.3} (max of (excess + 3SE)·√100 over {} strategies × 2 states); largest mean excess {:.2e} at {}; {t:.1?}",
        excess.len(),
        worst.0,
        worst.1
    ))
}

fn criterion7() -> Check {
    let ctx = context("example1")?;
    let profile = upper_end_profile(&ctx).map_err(e)?;
    let horizon = 10_000;
    let ens = run_ensemble(&ctx, &profile, horizon, &seed_range(0, 200), &quiet()).map_err(e)?;
    let prior = ctx.scenario().prior().weights();
    let mut worst = 0.0f64;
    for t in &ens.traces {
        ensure(
            t.posteriors.len() == 1 && t.final_posterior() == prior,
            format!("seed {} moved the posterior", t.seed),
        )?;
        let target = profile.targets.per_state[t.joint_state].ok_or("state outside the support")?;
        worst = worst.max((t.avg_total() - target).abs());
    }
    ensure(worst <= 12.0 / horizon as f64, format!("per-state error {worst:.2e} > 12/T"))?;
    let battery = standard_battery(&ctx);
    let table = epsilon_equilibrium_check(&ctx, &profile, &battery, &[horizon], &seed_range(0, 100), |t| {
        5.0 / (t as f64).sqrt()
    })
    .map_err(e)?;
    let top = table
        .rows
        .iter()
        .flat_map(|r| r.gains.iter().map(move |g| (g.gain.mean, g.ci, r.label.clone())))
        .fold((f64::NEG_INFINITY, 0.0, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    ensure(table.passed(), format!("ε-check failed; largest gain {:.4} ± {:.4} ({})", top.0, top.1, top.2))?;
    Ok(format!(
        "posterior constant on path; per-state error {worst:.1e} ≤ 12/T; {} battery deviations, largest gain {:.4} (CI {:.4}, {}) ≤ ε = 0.05 + CI [{}]",
        battery.len(),
        top.0,
        top.1,
        top.2,
        table.caveat
    ))
}

fn criterion8() -> Check {
    let ctx = context("example1")?;
    let (lo, hi) = (lower_end_profile(&ctx).map_err(e)?, upper_end_profile(&ctx).map_err(e)?);
    let (w, n) = (0.75, 10);
    let jcl = jcl_profile(&ctx, &lo, &hi, w, n).map_err(e)?;
    let InformedStrategy::Lottery { lottery, .. } = &jcl.informed else {
        return Err("JCL profile without a lottery".into());
    };
    let p = lottery.high_probability();
    // Decode the lottery from the first n stages of each trace.
    let trials = 100_000u64;
    let opts = EpisodeOptions { deviation: None, keep_path: true };
    let mut high = 0u64;
    for seed in 0..trials {
        let t = run_episode_with(&ctx, &jcl, n, seed, &opts).map_err(e)?;
        let bits = t.actions.iter().fold(0u64, |acc, a| 2 * acc + (a.row_a == a.col_a && a.row_a < 2) as u64);
        high += (bits < (p * (1u64 << n) as f64).round() as u64) as u64;
    }
    let freq = high as f64 / trials as f64;
    let band = 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
    ensure((freq - p).abs() <= band, format!("selection {freq} vs {p} ± {band}"))?;

    let target = jcl.targets.ex_ante.ok_or("no declared payoff")?;
    let want = w * hi.targets.ex_ante.unwrap() + (1.0 - w) * lo.targets.ex_ante.unwrap();
    ensure((target - want).abs() <= 1e-12, format!("declared {target} vs {want}"))?;
    let ens = run_ensemble(&ctx, &jcl, 10_000, &seed_range(0, 1000), &quiet()).map_err(e)?;
    let m = ens.summary.ex_ante;
    let detail =
        format!("selection {freq:.5} vs {p} (band ±{band:.5}); ex-ante {:.5} ± {:.5} (SE) vs {want:.5}", m.mean, m.se);
    ensure(m.covers(want, 3.0), detail.clone())?;
    Ok(detail)
}

fn criterion9() -> Check {
    let start = Instant::now();
    let runner = || TestRunner::new(common::config(SUITE_CASES, 90));
    let mut done = Vec::new();
    let mut run = |name: &str, r: Result<(), String>| -> Result<(), String> {
        r.map_err(|m| format!("{name}: {m}"))?;
        done.push(name.to_string());
        Ok(())
    };
    run("LP duality", runner().run(&suites::any_matrix(), |m| suites::lp_duality(&m)).map_err(e))?;
    run(
        "envelope invariants",
        runner().run(&suites::envelope_case(), |(f, p, s)| suites::envelope_invariants(&f, &p, s)).map_err(e),
    )?;
    run(
        "splitting Bayes-consistency",
        runner().run(&suites::splitting_case(), |(f, p)| suites::splitting_bayes(&f, &p)).map_err(e),
    )?;
    run(
        "frequency-scheduler bound",
        runner().run(&suites::frequency_case(), |l| suites::frequency_bound(&l)).map_err(e),
    )?;
    run(
        "gradient vs finite differences",
        runner().run(&suites::gradient_case(), |(f, p)| suites::gradient_fd(&f, &p)).map_err(e),
    )?;
    run(
        "product-prior degeneracy",
        runner().run(&suites::product_case(), |(a, b, pa, pb)| suites::product_degeneracy(&a, &b, &pa, &pb)).map_err(e),
    )?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(120), format!("took {t:?}"))?;
    Ok(format!("{} suites × {SUITE_CASES} cases, no violations; {t:.1?}", done.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Example 1 values", criterion1),
        ("attainable example", criterion2),
        ("non-attainable example", criterion3),
        ("section4 lower end", criterion4),
        ("splitting strategy", criterion5),
        ("Blackwell guarantee", criterion6),
        ("NR equilibrium profile", criterion7),
        ("jointly controlled lottery", criterion8),
        ("property suites", criterion9),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|n| n != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{t:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{t:.1?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
