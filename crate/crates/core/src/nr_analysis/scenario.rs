use serde::Serialize;

use super::NrError;
use crate::game_core::{Belief, JointBelief, Matrix, StageGameFamily};

/// Two component games sharing an informed player, and a prior over `K_A × K_B`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointScenario {
    name: String,
    family_a: StageGameFamily,
    family_b: StageGameFamily,
    prior: JointBelief,
    marginal_a: Belief,
    marginal_b: Belief,
    support: Vec<usize>,
}

impl JointScenario {
    pub fn new(
        name: impl Into<String>,
        family_a: StageGameFamily,
        family_b: StageGameFamily,
        prior: JointBelief,
    ) -> Result<Self, NrError> {
        if prior.n_a() != family_a.n_states() || prior.n_b() != family_b.n_states() {
            return Err(NrError::Scenario(format!(
                "prior is {}x{} but the families have {} and {} states",
                prior.n_a(),
                prior.n_b(),
                family_a.n_states(),
                family_b.n_states()
            )));
        }
        let marginal_a = prior.marginal_a();
        let marginal_b = prior.marginal_b();
        let support = prior.support();
        Ok(Self { name: name.into(), family_a, family_b, prior, marginal_a, marginal_b, support })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family_a(&self) -> &StageGameFamily {
        &self.family_a
    }

    pub fn family_b(&self) -> &StageGameFamily {
        &self.family_b
    }

    pub fn prior(&self) -> &JointBelief {
        &self.prior
    }

    pub fn marginal_a(&self) -> &Belief {
        &self.marginal_a
    }

    pub fn marginal_b(&self) -> &Belief {
        &self.marginal_b
    }

    /// Flat (row-major) indices of `supp(p⁰)`.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn support_pairs(&self) -> Vec<(usize, usize)> {
        self.support.iter().map(|&f| self.prior.split_index(f)).collect()
    }

    pub fn n_joint(&self) -> usize {
        self.prior.n_a() * self.prior.n_b()
    }

    /// Marginals of a joint weight vector.
    pub fn marginals_of(&self, joint: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n_a, n_b) = (self.prior.n_a(), self.prior.n_b());
        let mut a = vec![0.0; n_a];
        let mut b = vec![0.0; n_b];
        for ka in 0..n_a {
            for kb in 0..n_b {
                let w = joint[ka * n_b + kb];
                a[ka] += w;
                b[kb] += w;
            }
        }
        (a, b)
    }

    /// `h(q) = v_A(q_A) + v_B(q_B)`.
    pub fn h(&self, joint: &[f64]) -> Result<f64, NrError> {
        if joint.len() != self.n_joint() {
            return Err(NrError::Scenario("joint point has the wrong length".into()));
        }
        let (a, b) = self.marginals_of(joint);
        Ok(self.family_a.value_at_weights(&a)? + self.family_b.value_at_weights(&b)?)
    }

    /// The same games with another prior.
    pub fn with_prior(&self, prior: JointBelief) -> Result<Self, NrError> {
        Self::new(self.name.clone(), self.family_a.clone(), self.family_b.clone(), prior)
    }

    /// Family of `G_{A+B}` restricted to `supp(p⁰)`: states are support pairs, rows
    /// `(i_A, i_B)` and columns `(j_A, j_B)` in row-major order, entries
    /// `A^{k_A}_{i_A j_A} + B^{k_B}_{i_B j_B}`.
    pub fn sum_family(&self) -> Result<StageGameFamily, NrError> {
        let (fa, fb) = (&self.family_a, &self.family_b);
        let mut states = Vec::new();
        let mut matrices = Vec::new();
        for (ka, kb) in self.support_pairs() {
            states.push(format!("({},{})", fa.states()[ka], fb.states()[kb]));
            let mut m = Matrix::zeros(fa.n_rows() * fb.n_rows(), fa.n_cols() * fb.n_cols());
            for ia in 0..fa.n_rows() {
                for ib in 0..fb.n_rows() {
                    for ja in 0..fa.n_cols() {
                        for jb in 0..fb.n_cols() {
                            let v = fa.matrix(ka).get(ia, ja) + fb.matrix(kb).get(ib, jb);
                            m.set(ia * fb.n_rows() + ib, ja * fb.n_cols() + jb, v);
                        }
                    }
                }
            }
            matrices.push(m);
        }
        let pairs = |x: &[String], y: &[String]| -> Vec<String> {
            x.iter().flat_map(|a| y.iter().map(move |b| format!("({a},{b})"))).collect()
        };
        Ok(StageGameFamily::new(
            states,
            pairs(fa.row_actions(), fb.row_actions()),
            pairs(fa.col_actions(), fb.col_actions()),
            matrices,
        )?)
    }

    /// Prior restricted to the support, in the state order of [`Self::sum_family`].
    pub fn support_prior(&self) -> Result<Belief, NrError> {
        Ok(Belief::normalized(&self.support.iter().map(|&f| self.prior.weights()[f]).collect::<Vec<_>>())?)
    }
}
