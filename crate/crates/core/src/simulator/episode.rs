use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SimError;
use crate::game_core::{Belief, JointBelief};
use crate::strategy_synthesis::{
    EquilibriumProfile, GameContext, InformedAgent, PublicState, Role, StageActions, StageRule, UninformedAgent, View,
};

/// Stream labels of the per-player generators.
const NATURE_STREAM: u64 = 0;
const INFORMED_STREAM: u64 = 1;
const UNINFORMED_A_STREAM: u64 = 2;
const UNINFORMED_B_STREAM: u64 = 3;
/// Stages whose Cav-martingale residuals are kept per trace.
pub const PREFIX_DEPTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DeviationKind {
    /// Play the profile strategy.
    Null,
    /// The same pure action at every stage; a joint row for player 1.
    StationaryPure(usize),
    /// Best reply to the other players' current mixed actions (player 1, who
    /// knows the state) or to the posterior and player 1's declared rule (players 2, 3).
    MyopicBestResponse,
    /// `action` at stage `stage`, the profile strategy otherwise.
    OneShot { stage: usize, action: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub role: Role,
    pub kind: DeviationKind,
}

impl Deviation {
    pub fn label(&self) -> String {
        let who = match self.role {
            Role::Informed => "p1",
            Role::UninformedA => "p2",
            Role::UninformedB => "p3",
        };
        let what = match self.kind {
            DeviationKind::Null => "null".to_string(),
            DeviationKind::StationaryPure(a) => format!("pure{a}"),
            DeviationKind::MyopicBestResponse => "myopic".to_string(),
            DeviationKind::OneShot { stage, action } => format!("oneshot{stage}:{action}"),
        };
        format!("{who}-{what}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOptions {
    pub deviation: Option<Deviation>,
    /// Keep per-stage actions and payoffs; aggregates are always kept.
    pub keep_path: bool,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self { deviation: None, keep_path: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub seed: u64,
    pub horizon: usize,
    /// Drawn `(k_A, k_B)` and its flat index.
    pub state: (usize, usize),
    pub joint_state: usize,
    /// Empty unless the episode kept its path.
    pub actions: Vec<StageActions>,
    pub payoffs: Vec<(f64, f64)>,
    /// First stages, kept even without the path.
    pub prefix: Vec<StageActions>,
    /// `(t, p_t)` at `t = 1` and at every stage after which the posterior moved;
    /// the last entry may be `p_{T+1}`.
    pub posteriors: Vec<(usize, Vec<f64>)>,
    pub total_a: f64,
    pub total_b: f64,
    /// Largest `|E[p_{t+1} | h_t] − p_t|` over stages.
    pub martingale_residual: f64,
    /// `Cav(v_ℓ)(p_{tℓ}) − E[Cav(v_ℓ)(p_{t+1,ℓ}) | h_t]` for `ℓ = A, B` at the first stages.
    pub cav_residuals: Vec<[f64; 2]>,
    /// Sum of the same residuals over all stages.
    pub cav_residual_total: [f64; 2],
    /// First stage whose observed row had probability zero under the declared rule;
    /// the posterior is frozen from then on.
    pub off_path: Option<usize>,
}

impl Trace {
    pub fn avg_a(&self) -> f64 {
        self.total_a / self.horizon as f64
    }

    pub fn avg_b(&self) -> f64 {
        self.total_b / self.horizon as f64
    }

    /// Player 1's average payoff.
    pub fn avg_total(&self) -> f64 {
        (self.total_a + self.total_b) / self.horizon as f64
    }

    /// `p_t` for `1 <= t <= T+1`.
    pub fn posterior_at(&self, t: usize) -> &[f64] {
        let i = self.posteriors.partition_point(|(s, _)| *s <= t);
        &self.posteriors[i.max(1) - 1].1
    }

    pub fn final_posterior(&self) -> &[f64] {
        self.posterior_at(self.horizon + 1)
    }
}

fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

fn sample(weights: &[f64], rng: &mut ChaCha8Rng) -> Result<usize, SimError> {
    let dist = WeightedIndex::new(weights.iter().map(|w| w.max(0.0)))
        .map_err(|e| SimError::Invalid(format!("cannot sample from {weights:?}: {e}")))?;
    Ok(dist.sample(rng))
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 + 1e-12 {
            best = (i, v);
        }
    }
    best.0
}

/// Bayes update of the joint posterior after player 1 plays joint row `observed`.
pub fn posterior_update(prior: &JointBelief, rule: &StageRule, observed: usize) -> Result<JointBelief, SimError> {
    if rule.probs.len() != prior.weights().len() {
        return Err(SimError::Invalid("rule and belief cover different states".into()));
    }
    let post = rule.update(prior.weights(), observed).ok_or(SimError::ZeroProbabilityObservation { row: observed })?;
    Ok(JointBelief::normalized(prior.n_a(), prior.n_b(), &post)?)
}

pub fn run_episode(
    ctx: &GameContext,
    profile: &EquilibriumProfile,
    horizon: usize,
    seed: u64,
) -> Result<Trace, SimError> {
    run_episode_with(ctx, profile, horizon, seed, &EpisodeOptions::default())
}

fn check_deviation(ctx: &GameContext, d: &Deviation) -> Result<(), SimError> {
    let n = match d.role {
        Role::Informed => ctx.n_joint_rows(),
        Role::UninformedA => ctx.view_cols(View::A),
        Role::UninformedB => ctx.view_cols(View::B),
    };
    let bad = match d.kind {
        DeviationKind::StationaryPure(a) => a >= n,
        DeviationKind::OneShot { stage, action } => action >= n || stage == 0,
        _ => false,
    };
    if bad {
        return Err(SimError::Invalid(format!("deviation {} is out of range", d.label())));
    }
    Ok(())
}

struct CavResidual {
    stage: [f64; 2],
    martingale: f64,
}

/// One-step residuals at a stage whose rule is informative.
fn one_step(ctx: &GameContext, rule: &StageRule, posterior: &[f64]) -> Result<CavResidual, SimError> {
    let cav = |view: View, p: &[f64]| -> Result<f64, SimError> {
        Ok(ctx.envelope(view).eval_cav(&Belief::normalized(&ctx.marginal(view, p))?)?)
    };
    let mut mean = vec![0.0; posterior.len()];
    let mut expected = [0.0; 2];
    for r in 0..ctx.n_joint_rows() {
        let pr = rule.row_probability(posterior, r);
        if pr <= 0.0 {
            continue;
        }
        let post = rule.update(posterior, r).unwrap_or_else(|| posterior.to_vec());
        for (m, q) in mean.iter_mut().zip(&post) {
            *m += pr * q;
        }
        expected[0] += pr * cav(View::A, &post)?;
        expected[1] += pr * cav(View::B, &post)?;
    }
    let martingale = mean.iter().zip(posterior).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(CavResidual {
        stage: [cav(View::A, posterior)? - expected[0], cav(View::B, posterior)? - expected[1]],
        martingale,
    })
}

/// Plays `horizon` stages. Every player draws from the profile with its own
/// stream, even when a deviation overrides the draw, so paired runs share all
/// randomness that the deviation does not touch.
pub fn run_episode_with(
    ctx: &GameContext,
    profile: &EquilibriumProfile,
    horizon: usize,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<Trace, SimError> {
    if horizon == 0 {
        return Err(SimError::Invalid("horizon must be at least 1".into()));
    }
    if let Some(d) = &options.deviation {
        check_deviation(ctx, d)?;
    }
    let scenario = ctx.scenario();
    let prior = scenario.prior().weights();
    let mut rng_nature = stream(seed, NATURE_STREAM);
    let mut rng_1 = stream(seed, INFORMED_STREAM);
    let mut rng_2 = stream(seed, UNINFORMED_A_STREAM);
    let mut rng_3 = stream(seed, UNINFORMED_B_STREAM);
    let f = sample(prior, &mut rng_nature)?;
    let (ka, kb) = ctx.split_state(f);

    let mut informed = InformedAgent::new(ctx, &profile.informed)?;
    let mut player_a = UninformedAgent::new(ctx, &profile.uninformed_a, Role::UninformedA)?;
    let mut player_b = UninformedAgent::new(ctx, &profile.uninformed_b, Role::UninformedB)?;

    let mut trace = Trace {
        seed,
        horizon,
        state: (ka, kb),
        joint_state: f,
        actions: Vec::with_capacity(if options.keep_path { horizon } else { 0 }),
        payoffs: Vec::with_capacity(if options.keep_path { horizon } else { 0 }),
        prefix: Vec::new(),
        posteriors: vec![(1, prior.to_vec())],
        total_a: 0.0,
        total_b: 0.0,
        martingale_residual: 0.0,
        cav_residuals: Vec::new(),
        cav_residual_total: [0.0; 2],
        off_path: None,
    };
    let mut posterior = prior.to_vec();
    let fa = scenario.family_a();
    let fb = scenario.family_b();

    for t in 1..=horizon {
        let public = PublicState { t, posterior: &posterior };
        let rule = informed.rule(ctx, &public)?;
        let mix_a = player_a.policy(ctx, &public)?;
        let mix_b = player_b.policy(ctx, &public)?;
        let mut r = sample(&rule.probs[f], &mut rng_1)?;
        let mut ja = sample(&mix_a, &mut rng_2)?;
        let mut jb = sample(&mix_b, &mut rng_3)?;

        if let Some(d) = &options.deviation {
            let chosen = match d.kind {
                DeviationKind::Null => None,
                DeviationKind::StationaryPure(a) => Some(a),
                DeviationKind::OneShot { stage, action } => (stage == t).then_some(action),
                DeviationKind::MyopicBestResponse => Some(match d.role {
                    Role::Informed => argmax((0..ctx.n_joint_rows()).map(|row| {
                        let (ia, ib) = ctx.split_row(row);
                        let ea: f64 = fa.matrix(ka).row(ia).iter().zip(&mix_a).map(|(x, p)| x * p).sum();
                        let eb: f64 = fb.matrix(kb).row(ib).iter().zip(&mix_b).map(|(x, p)| x * p).sum();
                        ea + eb
                    })),
                    Role::UninformedA | Role::UninformedB => {
                        let in_a = d.role == Role::UninformedA;
                        let cols = if in_a { fa.n_cols() } else { fb.n_cols() };
                        argmax((0..cols).map(|j| {
                            let mut e = 0.0;
                            for (g, p) in posterior.iter().enumerate() {
                                if *p == 0.0 {
                                    continue;
                                }
                                let (ga, gb) = ctx.split_state(g);
                                for (row, pr) in rule.probs[g].iter().enumerate() {
                                    let (ia, ib) = ctx.split_row(row);
                                    let x = if in_a { fa.matrix(ga).get(ia, j) } else { fb.matrix(gb).get(ib, j) };
                                    e += p * pr * x;
                                }
                            }
                            -e
                        }))
                    }
                }),
            };
            if let Some(a) = chosen {
                match d.role {
                    Role::Informed => r = a,
                    Role::UninformedA => ja = a,
                    Role::UninformedB => jb = a,
                }
            }
        }

        let (ia, ib) = ctx.split_row(r);
        let actions = StageActions { row_a: ia, row_b: ib, col_a: ja, col_b: jb };
        let (pa, pb) = ctx.stage_payoffs(f, &actions);
        trace.total_a += pa;
        trace.total_b += pb;
        if options.keep_path {
            trace.actions.push(actions);
            trace.payoffs.push((pa, pb));
        }
        if t <= PREFIX_DEPTH {
            trace.prefix.push(actions);
        }

        let informative = trace.off_path.is_none() && !rule.is_uninformative(&posterior);
        let mut residual = [0.0; 2];
        if informative {
            let step = one_step(ctx, &rule, &posterior)?;
            residual = step.stage;
            trace.martingale_residual = trace.martingale_residual.max(step.martingale);
        }
        if t <= PREFIX_DEPTH {
            trace.cav_residuals.push(residual);
        }
        trace.cav_residual_total[0] += residual[0];
        trace.cav_residual_total[1] += residual[1];

        if trace.off_path.is_none() {
            if rule.row_probability(&posterior, r) <= 0.0 {
                trace.off_path = Some(t);
            } else if informative {
                if let Some(p) = rule.update(&posterior, r) {
                    if p != posterior {
                        posterior = p;
                        trace.posteriors.push((t + 1, posterior.clone()));
                    }
                }
            }
        }

        informed.observe(ctx, &actions)?;
        player_a.observe(ctx, &actions)?;
        player_b.observe(ctx, &actions)?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::example;
    use crate::strategy_synthesis::{standard_optimal_profile, upper_end_profile};

    fn ctx(name: &str) -> GameContext {
        GameContext::new(&example(name).unwrap()).unwrap()
    }

    #[test]
    fn posterior_update_examples() {
        let prior = JointBelief::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        let signal = StageRule { probs: vec![vec![0.25, 0.75], vec![0.75, 0.25]] };
        assert_eq!(posterior_update(&prior, &signal, 0).unwrap().weights(), &[0.25, 0.75]);
        assert_eq!(posterior_update(&prior, &signal, 1).unwrap().weights(), &[0.75, 0.25]);
        let flat = StageRule { probs: vec![vec![0.3, 0.7], vec![0.3, 0.7]] };
        assert_eq!(posterior_update(&prior, &flat, 1).unwrap().weights(), &[0.5, 0.5]);
        let point = JointBelief::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(posterior_update(&point, &signal, 1).unwrap().weights(), &[1.0, 0.0]);
        let reveal = StageRule { probs: vec![vec![1.0, 0.0], vec![0.0, 1.0]] };
        assert!(matches!(posterior_update(&point, &reveal, 1), Err(SimError::ZeroProbabilityObservation { row: 1 })));
    }

    #[test]
    fn same_seed_same_trace() {
        let c = ctx("example1");
        let p = standard_optimal_profile(&c);
        assert_eq!(run_episode(&c, &p, 50, 9).unwrap(), run_episode(&c, &p, 50, 9).unwrap());
    }

    #[test]
    fn horizon_one_and_zero() {
        let c = ctx("example1");
        let p = standard_optimal_profile(&c);
        let t = run_episode(&c, &p, 1, 0).unwrap();
        assert_eq!(t.actions.len(), 1);
        assert_eq!(t.cav_residuals.len(), 1);
        assert!(matches!(run_episode(&c, &p, 0, 0), Err(SimError::Invalid(_))));
    }

    #[test]
    fn splitting_moves_posterior_once() {
        let c = ctx("example1");
        let p = standard_optimal_profile(&c);
        for seed in 0..10 {
            let t = run_episode(&c, &p, 20, seed).unwrap();
            assert_eq!(t.posteriors.len(), 2);
            let (s, q) = &t.posteriors[1];
            assert_eq!(*s, 2);
            assert!((q[0] - 0.25).abs() < 1e-12 || (q[0] - 0.75).abs() < 1e-12, "{q:?}");
            assert!(t.martingale_residual < 1e-12);
            assert!((t.cav_residuals[0][0] - 1.0 / 16.0).abs() < 1e-6);
        }
    }

    #[test]
    fn nr_profile_keeps_prior() {
        let c = ctx("example1");
        let p = upper_end_profile(&c).unwrap();
        let horizon = 1000;
        for seed in 0..4 {
            let t = run_episode(&c, &p, horizon, seed).unwrap();
            assert_eq!(t.posteriors.len(), 1);
            assert_eq!(t.off_path, None);
            let target = p.targets.per_state[t.joint_state].unwrap();
            assert!((t.avg_total() - target).abs() <= 12.0 / horizon as f64);
        }
    }

    #[test]
    fn informed_deviation_leaves_path() {
        let c = ctx("example1");
        let p = upper_end_profile(&c).unwrap();
        let on = run_episode(&c, &p, 5, 3).unwrap();
        let r = c.join_row(on.actions[0].row_a, on.actions[0].row_b);
        let other = (r + 1) % c.n_joint_rows();
        let d = Deviation { role: Role::Informed, kind: DeviationKind::OneShot { stage: 1, action: other } };
        let t = run_episode_with(&c, &p, 5, 3, &EpisodeOptions { deviation: Some(d), keep_path: true }).unwrap();
        assert_eq!(t.off_path, Some(1));
        assert_eq!(t.final_posterior(), c.scenario().prior().weights());
        let bad = Deviation { role: Role::UninformedA, kind: DeviationKind::StationaryPure(7) };
        assert!(run_episode_with(&c, &p, 5, 3, &EpisodeOptions { deviation: Some(bad), keep_path: false }).is_err());
    }

    #[test]
    fn labels() {
        let d = Deviation { role: Role::UninformedB, kind: DeviationKind::OneShot { stage: 2, action: 1 } };
        assert_eq!(d.label(), "p3-oneshot2:1");
    }
}
