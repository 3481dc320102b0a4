//! Per-episode state machines instantiated from the declarative strategies.

use super::context::{GameContext, PublicState, Role, StageActions, View};
use super::frequency::{FrequencyPath, FrequencyScheduler};
use super::profile::{BlackwellTarget, ComponentPlan, InformedStrategy, Lottery, UninformedStrategy};
use super::signal::plan_with;
use super::StrategyError;
use crate::game_core::Belief;

/// Player 1's mixed action over joint rows in every joint state.
#[derive(Clone, Debug, PartialEq)]
pub struct StageRule {
    /// `probs[f][r]`, with `r = i_A·|I_B| + i_B`.
    pub probs: Vec<Vec<f64>>,
}

impl StageRule {
    /// `P(r | p) = Σ_f p_f probs[f][r]`.
    pub fn row_probability(&self, posterior: &[f64], r: usize) -> f64 {
        posterior.iter().zip(&self.probs).map(|(p, row)| p * row[r]).sum()
    }

    /// Bayes update after observing `r`; `None` when `r` has probability zero.
    pub fn update(&self, posterior: &[f64], r: usize) -> Option<Vec<f64>> {
        let total = self.row_probability(posterior, r);
        if total <= 0.0 {
            return None;
        }
        Some(posterior.iter().zip(&self.probs).map(|(p, row)| p * row[r] / total).collect())
    }

    /// Whether every state in the posterior's support uses the same distribution.
    pub fn is_uninformative(&self, posterior: &[f64]) -> bool {
        let mut support = posterior.iter().zip(&self.probs).filter(|(p, _)| **p > 0.0).map(|(_, r)| r);
        match support.next() {
            None => true,
            Some(first) => support.all(|r| r == first),
        }
    }
}

type Cache = Option<(Vec<f64>, Vec<f64>)>;

/// Optimal row (or column) of `view` at `weights`, reusing the last solve when the
/// weights repeat.
fn cached_solve(
    ctx: &GameContext,
    view: View,
    weights: Vec<f64>,
    cache: &mut Cache,
    row: bool,
) -> Result<Vec<f64>, StrategyError> {
    if let Some((key, action)) = cache {
        if *key == weights {
            return Ok(action.clone());
        }
    }
    let s = ctx.solve_view(view, &weights)?;
    let action = if row { s.row } else { s.col }.weights().to_vec();
    *cache = Some((weights, action.clone()));
    Ok(action)
}

fn pure(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn check_path(ctx: &GameContext, view: View, path: &FrequencyPath) -> Result<(), StrategyError> {
    let (rows, cols) = (ctx.view_rows(view), ctx.view_cols(view));
    if path.cells.iter().any(|&(i, j)| i >= rows || j >= cols) {
        return Err(StrategyError::Invalid(format!("frequency path leaves the {rows}x{cols} game {view:?}")));
    }
    Ok(())
}

enum InformedPart {
    Stationary { view: View, action: Vec<f64> },
    PerState(Vec<Vec<f64>>),
    Schedule { view: View, path: FrequencyPath, sched: FrequencyScheduler },
    Am { view: View, started: bool, cache: Cache },
}

impl InformedPart {
    fn new(ctx: &GameContext, view: View, plan: &ComponentPlan) -> Result<Self, StrategyError> {
        Ok(match plan {
            ComponentPlan::Stationary(a) => {
                if a.len() != ctx.view_rows(view) {
                    return Err(StrategyError::Invalid(format!("stationary row has the wrong length for {view:?}")));
                }
                InformedPart::Stationary { view, action: a.weights().to_vec() }
            }
            ComponentPlan::PerState(rows) => {
                if rows.len() != ctx.n_view_states(view) || rows.iter().any(|a| a.len() != ctx.view_rows(view)) {
                    return Err(StrategyError::Invalid(format!("per-state rows do not match game {view:?}")));
                }
                InformedPart::PerState(rows.iter().map(|a| a.weights().to_vec()).collect())
            }
            ComponentPlan::Schedule(path) => {
                check_path(ctx, view, path)?;
                InformedPart::Schedule { view, path: path.clone(), sched: path.scheduler() }
            }
            ComponentPlan::AumannMaschler => InformedPart::Am { view, started: false, cache: None },
        })
    }

    /// Distribution over the view's rows in each view state.
    fn rule(&mut self, ctx: &GameContext, public: &PublicState) -> Result<Vec<Vec<f64>>, StrategyError> {
        let (view, action) = match self {
            InformedPart::Stationary { view, action } => (*view, action.clone()),
            InformedPart::PerState(rows) => return Ok(rows.clone()),
            InformedPart::Schedule { view, path, sched } => {
                (*view, pure(ctx.view_rows(*view), path.cells[sched.peek()].0))
            }
            InformedPart::Am { view, started, cache } => {
                let view = *view;
                let m = ctx.marginal(view, public.posterior);
                if !*started {
                    *started = true;
                    let belief = Belief::normalized(&m)?;
                    let plan =
                        plan_with(ctx.envelope(view), &belief, ctx.view_rows(view), |w| ctx.solve_view(view, w))?;
                    if let Some(signal) = plan.signal {
                        return Ok(signal.probs);
                    }
                }
                (view, cached_solve(ctx, view, m, cache, true)?)
            }
        };
        Ok(vec![action; ctx.n_view_states(view)])
    }

    fn observe(&mut self) {
        if let InformedPart::Schedule { sched, .. } = self {
            sched.advance();
        }
    }
}

fn compose(ctx: &GameContext, a: &[Vec<f64>], b: &[Vec<f64>]) -> StageRule {
    let probs = (0..ctx.n_joint())
        .map(|f| {
            let (ka, kb) = ctx.split_state(f);
            a[ka].iter().flat_map(|x| b[kb].iter().map(move |y| x * y)).collect()
        })
        .collect();
    StageRule { probs }
}

/// Shared view of the NR paths and of who, if anyone, left them first.
#[derive(Clone, Debug)]
struct GrimMonitor {
    path_a: FrequencyPath,
    path_b: FrequencyPath,
    sched_a: FrequencyScheduler,
    sched_b: FrequencyScheduler,
    deviator: Option<Role>,
}

impl GrimMonitor {
    fn new(ctx: &GameContext, path_a: &FrequencyPath, path_b: &FrequencyPath) -> Result<Self, StrategyError> {
        check_path(ctx, View::A, path_a)?;
        check_path(ctx, View::B, path_b)?;
        Ok(Self {
            path_a: path_a.clone(),
            path_b: path_b.clone(),
            sched_a: path_a.scheduler(),
            sched_b: path_b.scheduler(),
            deviator: None,
        })
    }

    fn cells(&self) -> ((usize, usize), (usize, usize)) {
        (self.path_a.cells[self.sched_a.peek()], self.path_b.cells[self.sched_b.peek()])
    }

    /// Returns the deviator when this stage is the first one off the path.
    /// Player 1 is blamed first when several players deviate together.
    fn observe(&mut self, a: &StageActions) -> Option<Role> {
        let (ca, cb) = self.cells();
        self.sched_a.advance();
        self.sched_b.advance();
        if self.deviator.is_some() {
            return None;
        }
        let who = if a.row_a != ca.0 || a.row_b != cb.0 {
            Role::Informed
        } else if a.col_a != ca.1 {
            Role::UninformedA
        } else if a.col_b != cb.1 {
            Role::UninformedB
        } else {
            return None;
        };
        self.deviator = Some(who);
        Some(who)
    }
}

/// The lottery stages shared by all three players.
#[derive(Clone, Debug)]
struct LotteryClock {
    lottery: Lottery,
    t: usize,
    bits: u64,
}

impl LotteryClock {
    fn running(&self) -> bool {
        self.t < self.lottery.stages
    }

    /// `Some(high)` once the last lottery stage has been observed.
    fn observe(&mut self, a: &StageActions) -> Option<bool> {
        if !self.running() {
            return None;
        }
        let bit = a.row_a < 2 && a.col_a < 2 && a.row_a == a.col_a;
        self.bits = 2 * self.bits + bit as u64;
        self.t += 1;
        (!self.running()).then_some(self.bits < self.lottery.threshold)
    }
}

/// Player 1 for one episode.
pub struct InformedAgent(InformedKind);

enum InformedKind {
    Components {
        a: InformedPart,
        b: InformedPart,
    },
    Joint(InformedPart),
    Grim {
        monitor: GrimMonitor,
        am_a: Option<InformedPart>,
        am_b: Option<InformedPart>,
    },
    Lottery {
        clock: LotteryClock,
        b_action: Vec<f64>,
        low: InformedStrategy,
        high: InformedStrategy,
        active: Option<Box<InformedAgent>>,
    },
}

impl InformedAgent {
    pub fn new(ctx: &GameContext, spec: &InformedStrategy) -> Result<Self, StrategyError> {
        Ok(Self(match spec {
            InformedStrategy::Components { a, b } => InformedKind::Components {
                a: InformedPart::new(ctx, View::A, a)?,
                b: InformedPart::new(ctx, View::B, b)?,
            },
            InformedStrategy::Joint(p) => InformedKind::Joint(InformedPart::new(ctx, View::Sum, p)?),
            InformedStrategy::GrimNr { path_a, path_b } => {
                InformedKind::Grim { monitor: GrimMonitor::new(ctx, path_a, path_b)?, am_a: None, am_b: None }
            }
            InformedStrategy::Lottery { lottery, low, high } => {
                if lottery.stages == 0 {
                    let branch = if lottery.threshold > 0 { high } else { low };
                    return Self::new(ctx, branch);
                }
                let b_action = ctx.solve_view(View::B, ctx.scenario().marginal_b().weights())?.row.weights().to_vec();
                InformedKind::Lottery {
                    clock: LotteryClock { lottery: *lottery, t: 0, bits: 0 },
                    b_action,
                    low: (**low).clone(),
                    high: (**high).clone(),
                    active: None,
                }
            }
        }))
    }

    pub fn rule(&mut self, ctx: &GameContext, public: &PublicState) -> Result<StageRule, StrategyError> {
        match &mut self.0 {
            InformedKind::Components { a, b } => {
                let (ra, rb) = (a.rule(ctx, public)?, b.rule(ctx, public)?);
                Ok(compose(ctx, &ra, &rb))
            }
            InformedKind::Joint(p) => Ok(StageRule { probs: p.rule(ctx, public)? }),
            InformedKind::Grim { monitor, am_a, am_b } => {
                let (ca, cb) = monitor.cells();
                let ra = match am_a {
                    Some(p) => p.rule(ctx, public)?,
                    None => vec![pure(ctx.view_rows(View::A), ca.0); ctx.n_view_states(View::A)],
                };
                let rb = match am_b {
                    Some(p) => p.rule(ctx, public)?,
                    None => vec![pure(ctx.view_rows(View::B), cb.0); ctx.n_view_states(View::B)],
                };
                Ok(compose(ctx, &ra, &rb))
            }
            InformedKind::Lottery { b_action, active, .. } => {
                if let Some(agent) = active {
                    return agent.rule(ctx, public);
                }
                let mut coin = vec![0.0; ctx.view_rows(View::A)];
                coin[0] = 0.5;
                coin[1] = 0.5;
                let ra = vec![coin; ctx.n_view_states(View::A)];
                let rb = vec![b_action.clone(); ctx.n_view_states(View::B)];
                Ok(compose(ctx, &ra, &rb))
            }
        }
    }

    pub fn observe(&mut self, ctx: &GameContext, a: &StageActions) -> Result<(), StrategyError> {
        match &mut self.0 {
            InformedKind::Components { a: pa, b: pb } => {
                pa.observe();
                pb.observe();
            }
            InformedKind::Joint(p) => p.observe(),
            InformedKind::Grim { monitor, am_a, am_b } => match monitor.observe(a) {
                Some(Role::UninformedA) => {
                    *am_a = Some(InformedPart::Am { view: View::A, started: false, cache: None })
                }
                Some(Role::UninformedB) => {
                    *am_b = Some(InformedPart::Am { view: View::B, started: false, cache: None })
                }
                _ => {}
            },
            InformedKind::Lottery { clock, low, high, active, .. } => match active {
                Some(agent) => agent.observe(ctx, a)?,
                None => {
                    if let Some(h) = clock.observe(a) {
                        *active = Some(Box::new(InformedAgent::new(ctx, if h { high } else { low })?));
                    }
                }
            },
        }
        Ok(())
    }
}

/// Blackwell tracker of an orthant target; its state is a function of the public history.
struct Tracker {
    view: View,
    role: Role,
    phi: Vec<f64>,
    /// View states indexed by the target's coordinates.
    coords: Vec<usize>,
    sum: Vec<f64>,
    t: usize,
    cache: Cache,
}

impl Tracker {
    fn new(ctx: &GameContext, target: &BlackwellTarget, role: Role) -> Result<Self, StrategyError> {
        let own = own_view(role)?;
        let coords: Vec<usize> = match target.view {
            View::Sum => ctx.scenario().support().to_vec(),
            v if v == own => (0..ctx.n_view_states(v)).collect(),
            v => return Err(StrategyError::Invalid(format!("{role:?} cannot track a target in game {v:?}"))),
        };
        if coords.len() != target.phi.len() {
            return Err(StrategyError::Invalid("tracker target has the wrong length".into()));
        }
        Ok(Self {
            view: target.view,
            role,
            phi: target.phi.clone(),
            sum: vec![0.0; coords.len()],
            coords,
            t: 0,
            cache: None,
        })
    }

    fn policy(&mut self, ctx: &GameContext) -> Result<Vec<f64>, StrategyError> {
        let n = self.coords.len();
        let excess: Vec<f64> = if self.t == 0 {
            vec![0.0; n]
        } else {
            self.sum.iter().zip(&self.phi).map(|(s, p)| (s / self.t as f64 - p).max(0.0)).collect()
        };
        let total: f64 = excess.iter().sum();
        let lambda: Vec<f64> =
            if total > 0.0 { excess.iter().map(|e| e / total).collect() } else { vec![1.0 / n as f64; n] };
        let mut weights = vec![0.0; ctx.n_view_states(self.view)];
        for (c, l) in self.coords.iter().zip(&lambda) {
            weights[*c] = *l;
        }
        let own = own_view(self.role)?;
        if self.view == View::Sum {
            let (a, b) = ctx.scenario().marginals_of(&weights);
            weights = if own == View::A { a } else { b };
        }
        cached_solve(ctx, own, weights, &mut self.cache, false)
    }

    fn observe(&mut self, ctx: &GameContext, a: &StageActions) {
        for (s, &c) in self.sum.iter_mut().zip(&self.coords) {
            *s += match self.view {
                View::A => ctx.scenario().family_a().matrix(c).get(a.row_a, a.col_a),
                View::B => ctx.scenario().family_b().matrix(c).get(a.row_b, a.col_b),
                View::Sum => {
                    let (x, y) = ctx.stage_payoffs(c, a);
                    x + y
                }
            };
        }
        self.t += 1;
    }
}

fn own_view(role: Role) -> Result<View, StrategyError> {
    match role {
        Role::UninformedA => Ok(View::A),
        Role::UninformedB => Ok(View::B),
        Role::Informed => Err(StrategyError::Invalid("player 1 has no column strategy".into())),
    }
}

enum UninformedPart {
    Stationary(Vec<f64>),
    Schedule { path: FrequencyPath, sched: FrequencyScheduler },
    Tracker(Tracker),
    PosteriorMinimax(Cache),
}

/// Player 2 or 3 for one episode.
pub struct UninformedAgent {
    role: Role,
    kind: UninformedKind,
}

enum UninformedKind {
    Simple(UninformedPart),
    Grim {
        monitor: GrimMonitor,
        punish: BlackwellTarget,
        tracker: Option<Tracker>,
    },
    Lottery {
        clock: LotteryClock,
        waiting: Vec<f64>,
        low: UninformedStrategy,
        high: UninformedStrategy,
        active: Option<Box<UninformedAgent>>,
    },
}

impl UninformedAgent {
    pub fn new(ctx: &GameContext, spec: &UninformedStrategy, role: Role) -> Result<Self, StrategyError> {
        let own = own_view(role)?;
        let kind = match spec {
            UninformedStrategy::Stationary(a) => {
                if a.len() != ctx.view_cols(own) {
                    return Err(StrategyError::Invalid("stationary column has the wrong length".into()));
                }
                UninformedKind::Simple(UninformedPart::Stationary(a.weights().to_vec()))
            }
            UninformedStrategy::Schedule(path) => {
                check_path(ctx, own, path)?;
                UninformedKind::Simple(UninformedPart::Schedule { path: path.clone(), sched: path.scheduler() })
            }
            UninformedStrategy::Blackwell(target) => {
                UninformedKind::Simple(UninformedPart::Tracker(Tracker::new(ctx, target, role)?))
            }
            UninformedStrategy::PosteriorMinimax => UninformedKind::Simple(UninformedPart::PosteriorMinimax(None)),
            UninformedStrategy::GrimNr { path_a, path_b, punish } => {
                Tracker::new(ctx, punish, role)?;
                UninformedKind::Grim {
                    monitor: GrimMonitor::new(ctx, path_a, path_b)?,
                    punish: punish.clone(),
                    tracker: None,
                }
            }
            UninformedStrategy::Lottery { lottery, low, high } => {
                if lottery.stages == 0 {
                    let branch = if lottery.threshold > 0 { high } else { low };
                    return Self::new(ctx, branch, role);
                }
                let waiting = if role == Role::UninformedA {
                    let mut coin = vec![0.0; ctx.view_cols(View::A)];
                    coin[0] = 0.5;
                    coin[1] = 0.5;
                    coin
                } else {
                    ctx.solve_view(View::B, ctx.scenario().marginal_b().weights())?.col.weights().to_vec()
                };
                UninformedKind::Lottery {
                    clock: LotteryClock { lottery: *lottery, t: 0, bits: 0 },
                    waiting,
                    low: (**low).clone(),
                    high: (**high).clone(),
                    active: None,
                }
            }
        };
        Ok(Self { role, kind })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Mixed action over the player's own columns.
    pub fn policy(&mut self, ctx: &GameContext, public: &PublicState) -> Result<Vec<f64>, StrategyError> {
        let own = own_view(self.role)?;
        match &mut self.kind {
            UninformedKind::Simple(part) => match part {
                UninformedPart::Stationary(a) => Ok(a.clone()),
                UninformedPart::Schedule { path, sched } => Ok(pure(ctx.view_cols(own), path.cells[sched.peek()].1)),
                UninformedPart::Tracker(t) => t.policy(ctx),
                UninformedPart::PosteriorMinimax(cache) => {
                    cached_solve(ctx, own, ctx.marginal(own, public.posterior), cache, false)
                }
            },
            UninformedKind::Grim { monitor, tracker, .. } => match tracker {
                Some(t) => t.policy(ctx),
                None => {
                    let (ca, cb) = monitor.cells();
                    Ok(pure(ctx.view_cols(own), if own == View::A { ca.1 } else { cb.1 }))
                }
            },
            UninformedKind::Lottery { waiting, active, .. } => match active {
                Some(agent) => agent.policy(ctx, public),
                None => Ok(waiting.clone()),
            },
        }
    }

    pub fn observe(&mut self, ctx: &GameContext, a: &StageActions) -> Result<(), StrategyError> {
        let role = self.role;
        match &mut self.kind {
            UninformedKind::Simple(part) => match part {
                UninformedPart::Schedule { sched, .. } => {
                    sched.advance();
                }
                UninformedPart::Tracker(t) => t.observe(ctx, a),
                UninformedPart::Stationary(_) | UninformedPart::PosteriorMinimax(_) => {}
            },
            UninformedKind::Grim { monitor, punish, tracker } => {
                if let Some(t) = tracker {
                    t.observe(ctx, a);
                }
                if monitor.observe(a) == Some(Role::Informed) {
                    *tracker = Some(Tracker::new(ctx, punish, role)?);
                }
            }
            UninformedKind::Lottery { clock, low, high, active, .. } => match active {
                Some(agent) => agent.observe(ctx, a)?,
                None => {
                    if let Some(h) = clock.observe(a) {
                        *active = Some(Box::new(UninformedAgent::new(ctx, if h { high } else { low }, role)?));
                    }
                }
            },
        }
        Ok(())
    }
}
