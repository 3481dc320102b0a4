use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{full_envelope, JointScenario, NrError};
use crate::envelope::{concavify, default_resolution, lattice, ConcaveEnvelope, EnvelopeError, ValueGrid};
use crate::game_core::{JointBelief, StageGameFamily};

/// `I(p⁰) = [Cav(h)(p⁰), Cav(v_A)(p⁰_A) + Cav(v_B)(p⁰_B)]` with its ingredients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PayoffInterval {
    pub lower: f64,
    pub upper: f64,
    pub cav_a: f64,
    pub cav_b: f64,
    /// `h(p⁰)`, the non-revealing value of the sum game at the prior.
    pub h_prior: f64,
}

impl PayoffInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// `w·upper + (1−w)·lower`.
    pub fn interpolate(&self, w: f64) -> f64 {
        w * self.upper + (1.0 - w) * self.lower
    }
}

/// Envelopes of `v_A`, `v_B` and of `h` over `Δ(supp p⁰)`.
#[derive(Clone, Debug)]
pub struct IntervalAnalysis {
    scenario: JointScenario,
    env_a: ConcaveEnvelope,
    env_b: ConcaveEnvelope,
    env_h: ConcaveEnvelope,
    interval: PayoffInterval,
}

pub fn compute_interval(scenario: &JointScenario) -> Result<PayoffInterval, NrError> {
    Ok(IntervalAnalysis::new(scenario)?.interval)
}

impl IntervalAnalysis {
    pub fn new(scenario: &JointScenario) -> Result<Self, NrError> {
        Self::with_resolution(scenario, None)
    }

    /// `resolution` overrides the grid step of every envelope.
    pub fn with_resolution(scenario: &JointScenario, resolution: Option<f64>) -> Result<Self, NrError> {
        let (pa, pb) = (scenario.marginal_a(), scenario.marginal_b());
        let env_a = full_envelope(scenario.family_a(), &[pa], resolution)?;
        let env_b = full_envelope(scenario.family_b(), &[pb], resolution)?;

        let face = scenario.support().to_vec();
        let n_joint = scenario.n_joint();
        let mut extra = vec![face.iter().map(|&f| scenario.prior().weights()[f]).collect::<Vec<f64>>()];
        let (split_a, split_b) = (env_a.optimal_split(pa)?, env_b.optimal_split(pb)?);
        for a in split_a.atoms() {
            for b in split_b.atoms() {
                let joint = JointBelief::product(&a.belief, &b.belief);
                let off_face: f64 =
                    joint.weights().iter().enumerate().filter(|(i, _)| !face.contains(i)).map(|(_, w)| *w).sum();
                if off_face <= 1e-12 {
                    extra.push(face.iter().map(|&f| joint.weights()[f]).collect());
                }
            }
        }

        let res = resolution.unwrap_or_else(|| default_resolution(face.len()));
        let n = (1.0 / res).round().max(1.0) as usize;
        let mut points = lattice(face.len(), n);
        points.extend(extra.iter().cloned());
        let embed = |p: &[f64]| {
            let mut w = vec![0.0; n_joint];
            for (&f, &x) in face.iter().zip(p) {
                w[f] = x;
            }
            w
        };
        let mut keys_a: Vec<Vec<f64>> = Vec::new();
        let mut keys_b: Vec<Vec<f64>> = Vec::new();
        for p in &points {
            let (a, b) = scenario.marginals_of(&embed(p));
            keys_a.push(a);
            keys_b.push(b);
        }
        let table_a = value_table(scenario.family_a(), keys_a)?;
        let table_b = value_table(scenario.family_b(), keys_b)?;
        let grid = ValueGrid::sample(&face, n_joint, res, &extra, |w| {
            let (a, b) = scenario.marginals_of(w);
            Ok(lookup(scenario.family_a(), &table_a, &a)? + lookup(scenario.family_b(), &table_b, &b)?)
        })?;
        let env_h = concavify(grid);

        let prior_face: Vec<f64> = face.iter().map(|&f| scenario.prior().weights()[f]).collect();
        let cav_a = env_a.eval_cav(pa)?;
        let cav_b = env_b.eval_cav(pb)?;
        let interval = PayoffInterval {
            lower: env_h.eval_face(&prior_face)?,
            upper: cav_a + cav_b,
            cav_a,
            cav_b,
            h_prior: scenario.h(scenario.prior().weights())?,
        };
        Ok(Self { scenario: scenario.clone(), env_a, env_b, env_h, interval })
    }

    pub fn scenario(&self) -> &JointScenario {
        &self.scenario
    }

    pub fn envelope_a(&self) -> &ConcaveEnvelope {
        &self.env_a
    }

    pub fn envelope_b(&self) -> &ConcaveEnvelope {
        &self.env_b
    }

    /// Envelope of `h` on `Δ(supp p⁰)`; its face lists flat joint indices.
    pub fn envelope_h(&self) -> &ConcaveEnvelope {
        &self.env_h
    }

    pub fn interval(&self) -> PayoffInterval {
        self.interval
    }
}

fn key(w: &[f64]) -> Vec<i64> {
    w.iter().map(|x| (x * 1e12).round() as i64).collect()
}

fn value_table(family: &StageGameFamily, points: Vec<Vec<f64>>) -> Result<HashMap<Vec<i64>, f64>, NrError> {
    let mut unique: HashMap<Vec<i64>, Vec<f64>> = HashMap::new();
    for p in points {
        unique.entry(key(&p)).or_insert(p);
    }
    let mut entries: Vec<(Vec<i64>, Vec<f64>)> = unique.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
        .into_par_iter()
        .map(|(k, p)| Ok((k, family.value_at_weights(&p)?)))
        .collect::<Result<HashMap<_, _>, NrError>>()
}

fn lookup(family: &StageGameFamily, table: &HashMap<Vec<i64>, f64>, w: &[f64]) -> Result<f64, EnvelopeError> {
    match table.get(&key(w)) {
        Some(v) => Ok(*v),
        None => Ok(family.value_at_weights(w)?),
    }
}
