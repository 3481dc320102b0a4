use serde::Serialize;

use super::StrategyError;
use crate::envelope::{ConcaveEnvelope, SplitScheme};
use crate::game_core::{Belief, GameSolution, MixedAction, StageGameFamily};

/// Tolerance on `barycenter(split) = prior`.
const BARYCENTER_TOL: f64 = 1e-9;

/// Per-state stage-1 lottery over pure actions realizing a split.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalLottery {
    /// `probs[k][a]`: probability of pure action `a` in state `k`.
    pub probs: Vec<Vec<f64>>,
    /// Pure action used as the signal of each atom.
    pub signal_actions: Vec<usize>,
    pub weights: Vec<f64>,
    /// Posterior after each signal.
    pub posteriors: Vec<Belief>,
}

/// `σ^k(signal_i) = α_i p_i^k / prior^k`. States outside the prior's support
/// draw signals with the atom weights; they never occur.
pub fn splitting_signal(
    prior: &Belief,
    split: &SplitScheme,
    signal_actions: &[usize],
    n_actions: usize,
) -> Result<SignalLottery, StrategyError> {
    let atoms = split.atoms();
    if atoms.len() > n_actions {
        return Err(StrategyError::NotEnoughSignals { atoms: atoms.len(), actions: n_actions });
    }
    if signal_actions.len() != atoms.len() {
        return Err(StrategyError::Invalid(format!(
            "{} signal actions for {} atoms",
            signal_actions.len(),
            atoms.len()
        )));
    }
    let mut seen = vec![false; n_actions];
    for &a in signal_actions {
        if a >= n_actions || seen[a] {
            return Err(StrategyError::Invalid(format!("signal action {a} is out of range or repeated")));
        }
        seen[a] = true;
    }
    if split.barycenter().len() != prior.len()
        || split.barycenter().weights().iter().zip(prior.weights()).any(|(a, b)| (a - b).abs() > BARYCENTER_TOL)
    {
        return Err(StrategyError::Invalid("split barycenter differs from the prior".into()));
    }
    let weights: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
    let probs = (0..prior.len())
        .map(|k| {
            let pk = prior.weights()[k];
            let mut row = vec![0.0; n_actions];
            for (i, atom) in atoms.iter().enumerate() {
                row[signal_actions[i]] =
                    if pk > 0.0 { atom.weight * atom.belief.weights()[k] / pk } else { atom.weight };
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= total);
            row
        })
        .collect();
    Ok(SignalLottery {
        probs,
        signal_actions: signal_actions.to_vec(),
        weights,
        posteriors: atoms.iter().map(|a| a.belief.clone()).collect(),
    })
}

/// Split-then-stationary plan of the informed player in one component game.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmPlan {
    pub split: SplitScheme,
    /// Absent when the split is trivial.
    pub signal: Option<SignalLottery>,
    /// Optimal row of the averaged game at each atom's posterior.
    pub stationary: Vec<MixedAction>,
}

impl AmPlan {
    /// Stationary action after observing `signal_action`.
    pub fn after_signal(&self, signal_action: usize) -> Option<&MixedAction> {
        match &self.signal {
            None => self.stationary.first(),
            Some(s) => s.signal_actions.iter().position(|&a| a == signal_action).map(|i| &self.stationary[i]),
        }
    }
}

/// Signal the optimal split of `env` at `prior` with atom `i` on row `i`, then
/// play the optimal row of `family` at the realized posterior.
pub fn aumann_maschler_informed(
    family: &StageGameFamily,
    prior: &Belief,
    env: &ConcaveEnvelope,
) -> Result<AmPlan, StrategyError> {
    if env.n_ambient() != family.n_states() {
        return Err(StrategyError::Invalid("envelope was built for another family".into()));
    }
    plan_with(env, prior, family.n_rows(), |w| Ok(family.solve_at(&Belief::normalized(w)?.to_affine())?))
}

pub(crate) fn plan_with(
    env: &ConcaveEnvelope,
    prior: &Belief,
    n_rows: usize,
    solve_at: impl Fn(&[f64]) -> Result<GameSolution, StrategyError>,
) -> Result<AmPlan, StrategyError> {
    let split = env.optimal_split(prior)?;
    let signal = if split.is_trivial() {
        None
    } else {
        let actions: Vec<usize> = (0..split.atoms().len()).collect();
        Some(splitting_signal(prior, &split, &actions, n_rows)?)
    };
    let stationary = split
        .atoms()
        .iter()
        .map(|a| Ok(solve_at(a.belief.weights())?.row))
        .collect::<Result<Vec<_>, StrategyError>>()?;
    Ok(AmPlan { split, signal, stationary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::SplitAtom;
    use crate::nr_analysis::full_envelope;

    fn atom(w: f64, p: Vec<f64>) -> SplitAtom {
        SplitAtom { weight: w, belief: Belief::new(p).unwrap() }
    }

    fn example1_b() -> StageGameFamily {
        StageGameFamily::from_matrices(&[
            vec![vec![4.0, 0.0, 2.0], vec![4.0, 0.0, -2.0]],
            vec![vec![0.0, 4.0, -2.0], vec![0.0, 4.0, 2.0]],
        ])
        .unwrap()
    }

    #[test]
    fn example1_b_split_signals_u_with_one_quarter() {
        let prior = Belief::binary(0.5).unwrap();
        let split =
            SplitScheme::new(vec![atom(0.5, vec![0.25, 0.75]), atom(0.5, vec![0.75, 0.25])], prior.clone()).unwrap();
        let s = splitting_signal(&prior, &split, &[0, 1], 2).unwrap();
        assert!((s.probs[0][0] - 0.25).abs() < 1e-15);
        assert!((s.probs[1][0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn derived_split_arithmetic() {
        let prior = Belief::binary(0.5).unwrap();
        let split =
            SplitScheme::new(vec![atom(1.0 / 3.0, vec![1.0, 0.0]), atom(2.0 / 3.0, vec![0.25, 0.75])], prior.clone())
                .unwrap();
        let s = splitting_signal(&prior, &split, &[0, 1], 2).unwrap();
        assert!((s.probs[0][0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.probs[1][0], 0.0);
        // Bayes: Σ_k prior^k σ^k(i) = α_i and the posterior is p_i.
        for i in 0..2 {
            let mass: f64 = (0..2).map(|k| prior.weights()[k] * s.probs[k][i]).sum();
            assert!((mass - s.weights[i]).abs() < 1e-12);
            for k in 0..2 {
                let post = prior.weights()[k] * s.probs[k][i] / mass;
                assert!((post - s.posteriors[i].weights()[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trivial_split_is_a_pure_signal() {
        let prior = Belief::binary(0.3).unwrap();
        let s = splitting_signal(&prior, &SplitScheme::trivial(prior.clone()), &[1], 2).unwrap();
        assert_eq!(s.probs, vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn too_many_atoms() {
        let prior = Belief::new(vec![1.0 / 3.0; 3]).unwrap();
        let split = SplitScheme::new(
            vec![
                atom(1.0 / 3.0, vec![1.0, 0.0, 0.0]),
                atom(1.0 / 3.0, vec![0.0, 1.0, 0.0]),
                atom(1.0 / 3.0, vec![0.0, 0.0, 1.0]),
            ],
            prior.clone(),
        )
        .unwrap();
        assert_eq!(
            splitting_signal(&prior, &split, &[0, 1, 2], 2),
            Err(StrategyError::NotEnoughSignals { atoms: 3, actions: 2 })
        );
    }

    #[test]
    fn am_plan_for_example1_b() {
        let f = example1_b();
        let prior = Belief::binary(0.5).unwrap();
        let env = full_envelope(&f, &[&prior], None).unwrap();
        let plan = aumann_maschler_informed(&f, &prior, &env).unwrap();
        let signal = plan.signal.as_ref().unwrap();
        assert!((signal.posteriors[0].weights()[0] - 0.25).abs() < 1e-9);
        assert!((signal.probs[0][0] - 0.25).abs() < 1e-9);
        // Optimal row of B(1/4) is D.
        assert!((plan.after_signal(0).unwrap().weights()[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn am_plan_without_signaling() {
        let f = StageGameFamily::from_matrices(&[
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        ])
        .unwrap();
        let prior = Belief::binary(0.5).unwrap();
        let env = full_envelope(&f, &[&prior], None).unwrap();
        let plan = aumann_maschler_informed(&f, &prior, &env).unwrap();
        assert!(plan.signal.is_none());
        let row = plan.after_signal(0).unwrap().weights();
        assert!((row[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn singleton_state_plays_the_matrix_optimum() {
        let f = StageGameFamily::from_matrices(&[vec![vec![3.0, -1.0], vec![0.0, 1.0]]]).unwrap();
        let prior = Belief::new(vec![1.0]).unwrap();
        let env = full_envelope(&f, &[&prior], None).unwrap();
        let plan = aumann_maschler_informed(&f, &prior, &env).unwrap();
        assert!(plan.signal.is_none());
        let row = plan.stationary[0].weights();
        assert!((row[0] - 0.2).abs() < 1e-9, "{row:?}");
    }
}
