use serde::Serialize;

use super::{full_envelope, NrError};
use crate::envelope::{
    clarke_gradient, one_sided_quotients, restricted_superdifferential, ClarkeGradient, ClarkeSettings,
    ConcaveEnvelope, EnvelopeError,
};
use crate::game_core::{Belief, PayoffVector, SimplexChart, StageGameFamily};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NrSettings {
    /// Grid step; `None` picks the per-dimension default.
    pub resolution: Option<f64>,
    /// Condition (1): the identities between `Cav`, `v` and `φ·q`.
    pub identity_tol: f64,
    /// Condition (2): distance from `φS` to the sampled generalized gradient.
    pub gradient_tol: f64,
    /// Condition (3): residual of `φS` in the restricted superdifferential.
    pub superdiff_tol: f64,
    pub clarke: ClarkeSettings,
}

impl Default for NrSettings {
    fn default() -> Self {
        Self {
            resolution: None,
            identity_tol: 1e-5,
            gradient_tol: 1e-3,
            superdiff_tol: 1e-6,
            clarke: ClarkeSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResiduals {
    pub identity: f64,
    pub gradient: f64,
    pub superdifferential: f64,
}

impl ConditionResiduals {
    fn passes(&self, s: &NrSettings) -> bool {
        self.identity <= s.identity_tol && self.gradient <= s.gradient_tol && self.superdifferential <= s.superdiff_tol
    }
}

/// A pair `(p, φ)` satisfying conditions (1)–(3) within tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NrCertificate {
    pub p_star: Belief,
    pub phi: PayoffVector,
    pub diagnostics: ConditionResiduals,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CandidateSource {
    /// `p = p⁰` with `φ` the payoff vector of an optimal action pair at `p⁰`.
    OptimalActions,
    /// A vertex of a supporting facet through `p⁰`, with `φ` the facet's normal.
    Facet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateReport {
    pub p: Belief,
    pub phi: PayoffVector,
    pub source: CandidateSource,
    /// `None` when every gradient probe hit a kink.
    pub residuals: Option<ConditionResiduals>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum NrCheck {
    Certified {
        certificate: NrCertificate,
        candidates: Vec<CandidateReport>,
    },
    /// No facet-based candidate satisfies all three conditions.
    NotFound {
        candidates: Vec<CandidateReport>,
    },
    /// No certificate, and at least one candidate could not be decided.
    Inconclusive {
        candidates: Vec<CandidateReport>,
        reason: String,
    },
}

impl NrCheck {
    pub fn certificate(&self) -> Option<&NrCertificate> {
        match self {
            NrCheck::Certified { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn candidates(&self) -> &[CandidateReport] {
        match self {
            NrCheck::Certified { candidates, .. }
            | NrCheck::NotFound { candidates }
            | NrCheck::Inconclusive { candidates, .. } => candidates,
        }
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            NrCheck::Certified { .. } => "certified",
            NrCheck::NotFound { .. } => "not found",
            NrCheck::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Searches for an NR certificate at `prior` with default settings.
pub fn check_nr_property(family: &StageGameFamily, prior: &Belief, chart: &SimplexChart) -> Result<NrCheck, NrError> {
    let settings = NrSettings::default();
    let env = full_envelope(family, &[prior], settings.resolution)?;
    check_nr_property_in(family, &env, prior, chart, &settings)
}

/// As [`check_nr_property`], over a prebuilt envelope of `v` on the full simplex.
pub fn check_nr_property_in(
    family: &StageGameFamily,
    env: &ConcaveEnvelope,
    prior: &Belief,
    chart: &SimplexChart,
    settings: &NrSettings,
) -> Result<NrCheck, NrError> {
    if prior.len() != family.n_states()
        || chart.n_states() != family.n_states()
        || env.face().len() != family.n_states()
    {
        return Err(NrError::Scenario("prior, chart and envelope must cover the family's states".into()));
    }
    let p0 = prior.weights();
    let scale = 1.0 + family.max_abs_payoff();
    let mut queue: Vec<(Belief, PayoffVector, CandidateSource)> = Vec::new();
    if env.eval_face(p0)? - family.value_at_weights(p0)? <= 1e-6 * scale {
        let sol = family.solve_at(&prior.to_affine())?;
        queue.push((prior.clone(), family.payoff_vector(&sol.row, &sol.col)?, CandidateSource::OptimalActions));
    }
    for facet in env.supporting_facets(p0)? {
        let mut vertices = facet.vertices.clone();
        vertices.sort_by(|a, b| {
            a.point
                .iter()
                .zip(&b.point)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for v in vertices {
            let p = Belief::normalized(&v.point)?;
            queue.push((p, PayoffVector(facet.normal.clone()), CandidateSource::Facet));
        }
    }
    let mut candidates: Vec<CandidateReport> = Vec::new();
    let mut inconclusive = false;
    for (p, phi, source) in queue {
        let duplicate = candidates
            .iter()
            .any(|c| c.p.distance_l1(&p) <= 1e-12 && c.phi.0.iter().zip(&phi.0).all(|(a, b)| (a - b).abs() <= 1e-12));
        if duplicate {
            continue;
        }
        let residuals = match residuals(family, env, prior, chart, &p, &phi, settings) {
            Ok(r) => Some(r),
            Err(NrError::Envelope(EnvelopeError::AllProbesKinked)) => {
                inconclusive = true;
                None
            }
            Err(e) => return Err(e),
        };
        let report = CandidateReport { p: p.clone(), phi: phi.clone(), source, residuals: residuals.clone() };
        candidates.push(report);
        if let Some(r) = residuals {
            if r.passes(settings) {
                let certificate = NrCertificate { p_star: p, phi, diagnostics: r };
                return Ok(NrCheck::Certified { certificate, candidates });
            }
        }
    }
    if inconclusive {
        let reason = "gradient probes around a candidate all landed on kinks".to_string();
        return Ok(NrCheck::Inconclusive { candidates, reason });
    }
    Ok(NrCheck::NotFound { candidates })
}

fn residuals(
    family: &StageGameFamily,
    env: &ConcaveEnvelope,
    prior: &Belief,
    chart: &SimplexChart,
    p: &Belief,
    phi: &PayoffVector,
    settings: &NrSettings,
) -> Result<ConditionResiduals, NrError> {
    let cav_p = env.eval_cav(p)?;
    let v_p = family.value_at_weights(p.weights())?;
    let cav_0 = env.eval_cav(prior)?;
    let identity =
        (cav_p - v_p).abs().max((v_p - phi.dot(p.weights())).abs()).max((cav_0 - phi.dot(prior.weights())).abs());

    let slope = chart.slope(phi);
    let mut clarke = clarke_gradient(family, p, chart, &settings.clarke)?;
    if chart.chart_dim() == 1 {
        let (left, right) = one_sided_quotients(family, p.weights()[0], env.grid().resolution())?;
        clarke = ClarkeGradient { samples: [clarke.samples, vec![vec![left], vec![right]]].concat(), ..clarke };
    }
    let gradient = clarke.distance(&slope)?;
    let superdifferential = restricted_superdifferential(env, p)?.residual(&slope);
    Ok(ConditionResiduals { identity, gradient, superdifferential })
}
