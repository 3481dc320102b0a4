use std::fmt::Write as _;

use serde::Serialize;

use super::constrained::{boundary_lambda_equation, LambdaEquation};
use super::interval::{IntervalAnalysis, PayoffInterval};
use super::locally::{check_locally_nonrevealing_in, LocalCheck};
use super::payoff::{find_nr_payoff_in, joint_nr_membership_in, MembershipReport, NrPayoff};
use super::property::{check_nr_property_in, NrCheck, NrSettings};
use super::{JointScenario, NrError};
use crate::envelope::ConcaveEnvelope;
use crate::game_core::{Belief, SimplexChart, StageGameFamily};
use crate::numfmt::{sig, sig_tuple};

/// Analyses of one component game at its marginal prior.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentReport {
    pub label: String,
    pub prior: Belief,
    pub value_prior: f64,
    pub cav_prior: f64,
    pub local: LocalCheck,
    pub nr: NrCheck,
    pub nr_payoff: NrPayoff,
}

impl ComponentReport {
    fn build(
        label: &str,
        family: &StageGameFamily,
        env: &ConcaveEnvelope,
        prior: &Belief,
        settings: &NrSettings,
    ) -> Result<Self, NrError> {
        let chart = SimplexChart::new(family.n_states())?;
        Ok(Self {
            label: label.to_string(),
            prior: prior.clone(),
            value_prior: family.value_at_weights(prior.weights())?,
            cav_prior: env.eval_cav(prior)?,
            local: check_locally_nonrevealing_in(family, env, prior)?,
            nr: check_nr_property_in(family, env, prior, &chart, settings)?,
            nr_payoff: find_nr_payoff_in(family, env, prior)?,
        })
    }

    fn write_text(&self, out: &mut String) {
        let chart = |w: &[f64]| sig_tuple(&w[..w.len() - 1]).trim_matches(|c| c == '(' || c == ')').to_string();
        let _ = writeln!(out, "[game {}]", self.label);
        let _ = writeln!(out, "prior p={}", chart(self.prior.weights()));
        let _ = writeln!(out, "v(prior)={} Cav(v)(prior)={}", sig(self.value_prior), sig(self.cav_prior));
        match &self.local {
            LocalCheck::Found(split) => {
                let atoms: Vec<String> = split
                    .atoms()
                    .iter()
                    .map(|a| format!("{}@p={}", sig(a.weight), chart(a.belief.weights())))
                    .collect();
                let _ = writeln!(out, "locally non-revealing: found, split {}", atoms.join(" + "));
            }
            LocalCheck::NotFound => {
                let _ = writeln!(out, "locally non-revealing: not found");
            }
        }
        match &self.nr {
            NrCheck::Certified { certificate: c, .. } => {
                let _ = writeln!(out, "NR certificate: p={}, φ={}", chart(c.p_star.weights()), sig_tuple(&c.phi.0));
                let d = &c.diagnostics;
                let _ = writeln!(
                    out,
                    "  residuals: identity={} gradient={} superdifferential={}",
                    sig(d.identity),
                    sig(d.gradient),
                    sig(d.superdifferential)
                );
            }
            NrCheck::NotFound { candidates } => {
                let _ = writeln!(out, "NR NotFound ({} facet candidates rejected)", candidates.len());
            }
            NrCheck::Inconclusive { reason, .. } => {
                let _ = writeln!(out, "NR inconclusive: {reason}");
            }
        }
        match &self.nr_payoff {
            NrPayoff::Found { phi, fine_violation, fine_points, .. } => {
                let _ = writeln!(
                    out,
                    "NR payoff: φ={} (fine-grid violation {} over {} points)",
                    sig_tuple(&phi.0),
                    sig(*fine_violation),
                    fine_points
                );
            }
            NrPayoff::Empty { certificate, verified, .. } => {
                let _ = writeln!(
                    out,
                    "NR payoff set empty (Farkas certificate {}, combined rhs {})",
                    if *verified { "verified" } else { "NOT verified" },
                    sig(certificate.combined_rhs)
                );
            }
        }
    }

    fn records(&self, out: &mut Vec<(String, f64)>) {
        let l = self.label.to_lowercase();
        out.push((format!("{l}.value_prior"), self.value_prior));
        out.push((format!("{l}.cav_prior"), self.cav_prior));
        out.push((format!("{l}.locally_nonrevealing"), if self.local.split().is_some() { 1.0 } else { 0.0 }));
        out.push((format!("{l}.nr_certified"), if self.nr.certificate().is_some() { 1.0 } else { 0.0 }));
        if let Some(c) = self.nr.certificate() {
            out.push((format!("{l}.nr.identity"), c.diagnostics.identity));
            out.push((format!("{l}.nr.gradient"), c.diagnostics.gradient));
            out.push((format!("{l}.nr.superdifferential"), c.diagnostics.superdifferential));
        }
        match &self.nr_payoff {
            NrPayoff::Found { phi, fine_violation, .. } => {
                for (k, x) in phi.0.iter().enumerate() {
                    out.push((format!("{l}.nr_payoff.phi{k}"), *x));
                }
                out.push((format!("{l}.nr_payoff.fine_violation"), *fine_violation));
            }
            NrPayoff::Empty { certificate, .. } => {
                out.push((format!("{l}.nr_payoff.empty_rhs"), certificate.combined_rhs));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub interval: PayoffInterval,
    pub component_a: ComponentReport,
    pub component_b: ComponentReport,
    /// Membership of the pair of NR payoffs found for each game, when both exist.
    pub membership: Option<MembershipReport>,
    /// Present when game A has two states.
    pub lambda_equation: Option<LambdaEquation>,
}

/// Runs every analysis of `nr_analysis` on `scenario`.
pub fn analyze_scenario(scenario: &JointScenario, settings: &NrSettings) -> Result<ScenarioReport, NrError> {
    let analysis = IntervalAnalysis::with_resolution(scenario, settings.resolution)?;
    let component_a =
        ComponentReport::build("A", scenario.family_a(), analysis.envelope_a(), scenario.marginal_a(), settings)?;
    let component_b =
        ComponentReport::build("B", scenario.family_b(), analysis.envelope_b(), scenario.marginal_b(), settings)?;
    let membership = match (component_a.nr_payoff.phi(), component_b.nr_payoff.phi()) {
        (Some(a), Some(b)) => Some(joint_nr_membership_in(&analysis, a, b)?),
        _ => None,
    };
    let lambda_equation =
        if scenario.family_a().n_states() == 2 { Some(boundary_lambda_equation(scenario)?) } else { None };
    Ok(ScenarioReport {
        name: scenario.name().to_string(),
        interval: analysis.interval(),
        component_a,
        component_b,
        membership,
        lambda_equation,
    })
}

impl ScenarioReport {
    pub fn is_inconclusive(&self) -> bool {
        matches!(self.component_a.nr, NrCheck::Inconclusive { .. })
            || matches!(self.component_b.nr, NrCheck::Inconclusive { .. })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let i = &self.interval;
        let _ = writeln!(out, "scenario {}", self.name);
        let _ = writeln!(out, "I = [{}, {}]", sig(i.lower), sig(i.upper));
        let _ =
            writeln!(out, "  Cav(v_A)(p_A)={} Cav(v_B)(p_B)={} h(p)={}", sig(i.cav_a), sig(i.cav_b), sig(i.h_prior));
        self.component_a.write_text(&mut out);
        self.component_b.write_text(&mut out);
        if let Some(m) = &self.membership {
            let mark = |c: &super::ConditionCheck| if c.passed { "pass" } else { "fail" };
            let _ = writeln!(
                out,
                "joint membership: {} (F_A {}, F_B {}, informed {}, A {}, B {})",
                if m.member { "member" } else { "not a member" },
                mark(&m.feasible_a),
                mark(&m.feasible_b),
                mark(&m.rational_informed),
                mark(&m.rational_a),
                mark(&m.rational_b)
            );
        }
        if let Some(eq) = &self.lambda_equation {
            match &eq.solution {
                Some(l) => {
                    let _ = writeln!(out, "λ-equation feasible: λ = {l}");
                }
                None => {
                    let _ = writeln!(out, "λ-equation infeasible: {}", eq.reason);
                }
            }
        }
        out
    }

    /// Flat `(key, value)` record of the numbers behind the verdicts.
    pub fn records(&self) -> Vec<(String, f64)> {
        let i = &self.interval;
        let mut out = vec![
            ("interval.lower".to_string(), i.lower),
            ("interval.upper".to_string(), i.upper),
            ("interval.cav_a".to_string(), i.cav_a),
            ("interval.cav_b".to_string(), i.cav_b),
            ("interval.h_prior".to_string(), i.h_prior),
        ];
        self.component_a.records(&mut out);
        self.component_b.records(&mut out);
        if let Some(m) = &self.membership {
            for (k, c) in [
                ("feasible_a", &m.feasible_a),
                ("feasible_b", &m.feasible_b),
                ("rational_informed", &m.rational_informed),
                ("rational_a", &m.rational_a),
                ("rational_b", &m.rational_b),
            ] {
                out.push((format!("membership.{k}"), c.residual));
            }
            out.push(("membership.member".into(), if m.member { 1.0 } else { 0.0 }));
        }
        if let Some(eq) = &self.lambda_equation {
            out.push(("lambda_equation.feasible".into(), if eq.is_feasible() { 1.0 } else { 0.0 }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_core::JointBelief;

    fn family(m: &[Vec<Vec<f64>>]) -> StageGameFamily {
        StageGameFamily::from_matrices(m).unwrap()
    }

    #[test]
    fn example1_report() {
        let a = family(&[vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 1.0]]]);
        let b =
            family(&[vec![vec![4.0, 0.0, 2.0], vec![4.0, 0.0, -2.0]], vec![vec![0.0, 4.0, -2.0], vec![0.0, 4.0, 2.0]]]);
        let prior = JointBelief::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let s = JointScenario::new("example1", a, b, prior).unwrap();
        let r = analyze_scenario(&s, &NrSettings::default()).unwrap();
        let text = r.to_text();
        assert!(text.contains("I = [1.1875"), "{text}");
        assert!(r.component_a.nr.certificate().is_some());
        assert!(r.component_b.nr.certificate().is_some());
        let m = r.membership.as_ref().unwrap();
        assert!(m.member, "{m:?}");
        assert!(r.records().iter().any(|(k, _)| k == "interval.lower"));
    }

    #[test]
    fn attainable_text_names_the_certificate() {
        let a = family(&[vec![vec![0.0, 0.0], vec![0.0, -1.0]], vec![vec![-1.0, 0.0], vec![0.0, 0.0]]]);
        let b = family(&[vec![vec![0.0]]]);
        let prior = JointBelief::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        let s = JointScenario::new("attainable", a, b, prior).unwrap();
        let text = analyze_scenario(&s, &NrSettings::default()).unwrap().to_text();
        assert!(text.contains("NR certificate: p=0, φ=(0,0)"), "{text}");
    }
}
