use serde::{Deserialize, Serialize};

use super::context::{GameContext, View};
use super::frequency::FrequencyPath;
use super::StrategyError;
use crate::game_core::{Belief, MixedAction, PayoffVector};
use crate::nr_analysis::{feasible_decomposition, find_nr_payoff_in, joint_nr_membership_in, NrPayoff};

/// Slack allowed in the approachability check `φ·q >= v(q)`.
const APPROACH_TOL: f64 = 1e-6;

/// Behaviour of the informed player in one stage game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ComponentPlan {
    /// The same mixed row in every state.
    Stationary(MixedAction),
    /// A fixed mixed row per state of the view; reveals whatever the rows differ on.
    PerState(Vec<MixedAction>),
    /// Row of the scheduled cell.
    Schedule(FrequencyPath),
    /// Optimal split of the current posterior at the first stage it is used, then
    /// the optimal row of the averaged game at the current posterior.
    AumannMaschler,
}

/// Orthant target `{x <= φ}` of a Blackwell tracker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackwellTarget {
    pub view: View,
    /// One entry per state of `A` or `B`, or per support state for `Sum`.
    pub phi: Vec<f64>,
}

/// Public lottery generated by players 1 and 2 in game A: bits are matches of
/// uniform draws over rows and columns `{0, 1}`, and the high branch is taken
/// when the bits, read as a binary fraction, fall below `threshold / 2^stages`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lottery {
    pub stages: usize,
    pub threshold: u64,
}

impl Lottery {
    pub fn new(weight: f64, stages: usize) -> Result<Self, StrategyError> {
        if !(0.0..=1.0).contains(&weight) || stages > 62 {
            return Err(StrategyError::Invalid(format!(
                "lottery needs w in [0,1] and at most 62 stages, got {weight}"
            )));
        }
        Ok(Self { stages, threshold: (weight * (1u64 << stages) as f64).round() as u64 })
    }

    /// Probability of the high branch, `round(w·2ⁿ)/2ⁿ`.
    pub fn high_probability(&self) -> f64 {
        self.threshold as f64 / (1u64 << self.stages) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InformedStrategy {
    /// Independent plans in the two games.
    Components {
        a: ComponentPlan,
        b: ComponentPlan,
    },
    /// One plan over joint rows in `G_{A+B}`.
    Joint(ComponentPlan),
    /// Frequency paths in both games; after a deviation by player 2 (3) the
    /// game-A (B) plan becomes Aumann–Maschler for good.
    GrimNr {
        path_a: FrequencyPath,
        path_b: FrequencyPath,
    },
    Lottery {
        lottery: Lottery,
        low: Box<InformedStrategy>,
        high: Box<InformedStrategy>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum UninformedStrategy {
    Stationary(MixedAction),
    /// Column of the scheduled cell of the player's own game.
    Schedule(FrequencyPath),
    Blackwell(BlackwellTarget),
    /// Optimal column of the own game averaged at the current posterior.
    PosteriorMinimax,
    /// Follows the paths; once player 1 leaves them, tracks `punish` (a `Sum` target).
    GrimNr {
        path_a: FrequencyPath,
        path_b: FrequencyPath,
        punish: BlackwellTarget,
    },
    Lottery {
        lottery: Lottery,
        low: Box<UninformedStrategy>,
        high: Box<UninformedStrategy>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemoryClass {
    Stationary,
    StationaryAfterStage1,
    FrequencyPath,
    BlackwellTracker,
    AutomatonWithPunishment,
    Lottery,
}

impl InformedStrategy {
    pub fn memory_class(&self) -> MemoryClass {
        let plan = |p: &ComponentPlan| match p {
            ComponentPlan::Stationary(_) | ComponentPlan::PerState(_) => MemoryClass::Stationary,
            ComponentPlan::Schedule(_) => MemoryClass::FrequencyPath,
            ComponentPlan::AumannMaschler => MemoryClass::StationaryAfterStage1,
        };
        match self {
            InformedStrategy::Components { a, b } => plan(a).max_with(plan(b)),
            InformedStrategy::Joint(p) => plan(p),
            InformedStrategy::GrimNr { .. } => MemoryClass::AutomatonWithPunishment,
            InformedStrategy::Lottery { .. } => MemoryClass::Lottery,
        }
    }
}

impl UninformedStrategy {
    pub fn memory_class(&self) -> MemoryClass {
        match self {
            UninformedStrategy::Stationary(_) => MemoryClass::Stationary,
            UninformedStrategy::Schedule(_) => MemoryClass::FrequencyPath,
            UninformedStrategy::Blackwell(_) => MemoryClass::BlackwellTracker,
            UninformedStrategy::PosteriorMinimax => MemoryClass::StationaryAfterStage1,
            UninformedStrategy::GrimNr { .. } => MemoryClass::AutomatonWithPunishment,
            UninformedStrategy::Lottery { .. } => MemoryClass::Lottery,
        }
    }
}

impl MemoryClass {
    fn rank(self) -> u8 {
        match self {
            MemoryClass::Stationary => 0,
            MemoryClass::StationaryAfterStage1 => 1,
            MemoryClass::FrequencyPath => 2,
            MemoryClass::BlackwellTracker => 3,
            MemoryClass::AutomatonWithPunishment => 4,
            MemoryClass::Lottery => 5,
        }
    }

    fn max_with(self, other: Self) -> Self {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    UpperEndNr,
    LowerEnd,
    JclMixture { weight: f64 },
    StandardOptimal,
}

/// Declared payoffs of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    /// Player 1's payoff in each joint state; `None` off the support.
    pub per_state: Vec<Option<f64>>,
    pub ex_ante: Option<f64>,
    /// Players 2 and 3, whose payoffs are the negatives of games A and B.
    pub uninformed_a: Option<f64>,
    pub uninformed_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub provenance: Provenance,
    pub informed: InformedStrategy,
    pub uninformed_a: UninformedStrategy,
    pub uninformed_b: UninformedStrategy,
    pub targets: Targets,
}

/// Checks `φ·q >= v(q)` on the value grid of `view` and returns the tracker target.
pub fn blackwell_uninformed(ctx: &GameContext, view: View, phi: Vec<f64>) -> Result<BlackwellTarget, StrategyError> {
    let grid = ctx.envelope(view).grid();
    let n = grid.face().len();
    if phi.len() != n {
        return Err(StrategyError::Invalid(format!("target has {} entries, expected {n}", phi.len())));
    }
    let scale = 1.0 + ctx.family(view).max_abs_payoff();
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    for (q, v) in grid.points().iter().zip(grid.values()) {
        let gap = v - phi.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
        if gap > worst.0 {
            worst = (gap, q.clone());
        }
    }
    if worst.0 > APPROACH_TOL * scale {
        return Err(StrategyError::PreconditionViolated(format!(
            "v exceeds φ·q by {:.3e} at q={:?}",
            worst.0, worst.1
        )));
    }
    Ok(BlackwellTarget { view, phi })
}

fn joint_targets(ctx: &GameContext, phi: impl Fn(usize, usize) -> f64) -> Vec<Option<f64>> {
    (0..ctx.n_joint())
        .map(|f| {
            ctx.support_position(f).map(|_| {
                let (ka, kb) = ctx.split_state(f);
                phi(ka, kb)
            })
        })
        .collect()
}

/// Frequency paths realizing `(φ_A, φ_B)` on path, grim punishments off path.
pub fn nr_equilibrium_profile(
    ctx: &GameContext,
    phi_a: &PayoffVector,
    phi_b: &PayoffVector,
) -> Result<EquilibriumProfile, StrategyError> {
    let m = joint_nr_membership_in(ctx.analysis(), phi_a, phi_b)?;
    if !m.member {
        let failed: Vec<String> = [
            ("F_A", &m.feasible_a),
            ("F_B", &m.feasible_b),
            ("informed rationality", &m.rational_informed),
            ("player 2 rationality", &m.rational_a),
            ("player 3 rationality", &m.rational_b),
        ]
        .iter()
        .filter(|(_, c)| !c.passed)
        .map(|(name, c)| format!("{name} (residual {:.3e})", c.residual))
        .collect();
        return Err(StrategyError::MembershipFailed(failed.join(", ")));
    }
    let s = ctx.scenario();
    let path = |view: View, phi: &PayoffVector| -> Result<FrequencyPath, StrategyError> {
        let d = feasible_decomposition(ctx.family(view), phi)?;
        FrequencyPath::from_cell_weights(&d.weights, ctx.view_cols(view))
    };
    let path_a = path(View::A, phi_a)?;
    let path_b = path(View::B, phi_b)?;
    let punish_phi: Vec<f64> = s.support_pairs().iter().map(|&(ka, kb)| phi_a.0[ka] + phi_b.0[kb]).collect();
    let punish = blackwell_uninformed(ctx, View::Sum, punish_phi)?;
    let per_state = joint_targets(ctx, |ka, kb| phi_a.0[ka] + phi_b.0[kb]);
    let ex_ante = phi_a.dot(s.marginal_a().weights()) + phi_b.dot(s.marginal_b().weights());
    Ok(EquilibriumProfile {
        provenance: Provenance::UpperEndNr,
        informed: InformedStrategy::GrimNr { path_a: path_a.clone(), path_b: path_b.clone() },
        uninformed_a: UninformedStrategy::GrimNr {
            path_a: path_a.clone(),
            path_b: path_b.clone(),
            punish: punish.clone(),
        },
        uninformed_b: UninformedStrategy::GrimNr { path_a, path_b, punish },
        targets: Targets {
            per_state,
            ex_ante: Some(ex_ante),
            uninformed_a: Some(-phi_a.dot(s.marginal_a().weights())),
            uninformed_b: Some(-phi_b.dot(s.marginal_b().weights())),
        },
    })
}

/// [`nr_equilibrium_profile`] at the NR payoffs found for each game.
pub fn upper_end_profile(ctx: &GameContext) -> Result<EquilibriumProfile, StrategyError> {
    let s = ctx.scenario();
    let find = |view: View, prior: &Belief| -> Result<PayoffVector, StrategyError> {
        match find_nr_payoff_in(ctx.family(view), ctx.envelope(view), prior)? {
            NrPayoff::Found { phi, .. } => Ok(phi),
            NrPayoff::Empty { .. } => {
                Err(StrategyError::MembershipFailed(format!("game {view:?} has no non-revealing payoff at its prior")))
            }
        }
    };
    let phi_a = find(View::A, s.marginal_a())?;
    let phi_b = find(View::B, s.marginal_b())?;
    nr_equilibrium_profile(ctx, &phi_a, &phi_b)
}

/// Aumann–Maschler play of `G_{A+B}` against a joint tracker aimed at a
/// supporting hyperplane of `Cav(h)` at the prior.
pub fn lower_end_profile(ctx: &GameContext) -> Result<EquilibriumProfile, StrategyError> {
    let s = ctx.scenario();
    let env = ctx.envelope(View::Sum);
    let p = env.grid().restrict(s.prior().weights())?;
    let facets = env.supporting_facets(&p)?;
    let mut phi = vec![0.0; p.len()];
    for f in &facets {
        for (x, n) in phi.iter_mut().zip(&f.normal) {
            *x += n / facets.len() as f64;
        }
    }
    let target = blackwell_uninformed(ctx, View::Sum, phi.clone())?;
    let support = s.support();
    let per_state = (0..ctx.n_joint()).map(|f| support.iter().position(|&g| g == f).map(|i| phi[i])).collect();
    Ok(EquilibriumProfile {
        provenance: Provenance::LowerEnd,
        informed: InformedStrategy::Joint(ComponentPlan::AumannMaschler),
        uninformed_a: UninformedStrategy::Blackwell(target.clone()),
        uninformed_b: UninformedStrategy::Blackwell(target),
        targets: Targets {
            per_state,
            ex_ante: Some(ctx.analysis().interval().lower),
            uninformed_a: None,
            uninformed_b: None,
        },
    })
}

/// Aumann–Maschler play in each game separately against posterior-optimal columns.
pub fn standard_optimal_profile(ctx: &GameContext) -> EquilibriumProfile {
    EquilibriumProfile {
        provenance: Provenance::StandardOptimal,
        informed: InformedStrategy::Components { a: ComponentPlan::AumannMaschler, b: ComponentPlan::AumannMaschler },
        uninformed_a: UninformedStrategy::PosteriorMinimax,
        uninformed_b: UninformedStrategy::PosteriorMinimax,
        targets: Targets {
            per_state: vec![None; ctx.n_joint()],
            ex_ante: None,
            uninformed_a: None,
            uninformed_b: None,
        },
    }
}

/// Runs a lottery over `stages` stages, then `high` with probability
/// `round(w·2ⁿ)/2ⁿ` and `low` otherwise.
pub fn jcl_profile(
    ctx: &GameContext,
    low: &EquilibriumProfile,
    high: &EquilibriumProfile,
    weight: f64,
    stages: usize,
) -> Result<EquilibriumProfile, StrategyError> {
    let fa = ctx.scenario().family_a();
    if stages > 0 && (fa.n_rows() < 2 || fa.n_cols() < 2) {
        return Err(StrategyError::Invalid("the lottery needs two rows and two columns in game A".into()));
    }
    if low.targets.per_state.len() != ctx.n_joint() || high.targets.per_state.len() != ctx.n_joint() {
        return Err(StrategyError::Invalid("profiles belong to a different scenario".into()));
    }
    let lottery = Lottery::new(weight, stages)?;
    let w = lottery.high_probability();
    let mix = |l: Option<f64>, h: Option<f64>| Some(w * h? + (1.0 - w) * l?);
    let t = (&low.targets, &high.targets);
    let targets = Targets {
        per_state: t.0.per_state.iter().zip(&t.1.per_state).map(|(l, h)| mix(*l, *h)).collect(),
        ex_ante: mix(t.0.ex_ante, t.1.ex_ante),
        uninformed_a: mix(t.0.uninformed_a, t.1.uninformed_a),
        uninformed_b: mix(t.0.uninformed_b, t.1.uninformed_b),
    };
    Ok(EquilibriumProfile {
        provenance: Provenance::JclMixture { weight },
        informed: InformedStrategy::Lottery {
            lottery,
            low: Box::new(low.informed.clone()),
            high: Box::new(high.informed.clone()),
        },
        uninformed_a: UninformedStrategy::Lottery {
            lottery,
            low: Box::new(low.uninformed_a.clone()),
            high: Box::new(high.uninformed_a.clone()),
        },
        uninformed_b: UninformedStrategy::Lottery {
            lottery,
            low: Box::new(low.uninformed_b.clone()),
            high: Box::new(high.uninformed_b.clone()),
        },
        targets,
    })
}
