//! Scenario files: one JSON document per scenario, matrices row-major with
//! explicit state and action labels.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spillover::catalog;
use spillover::game_core::{JointBelief, Matrix, StageGameFamily};
use spillover::nr_analysis::JointScenario;

use crate::exit::Failure;

/// Off-simplex slack accepted without renormalizing.
pub const PRIOR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub states: Vec<String>,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// One `rows × cols` matrix per state.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub identity: f64,
    pub gradient: f64,
    pub superdiff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = spillover::nr_analysis::NrSettings::default();
        Self { identity: d.identity_tol, gradient: d.gradient_tol, superdiff: d.superdiff_tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Envelope grid step; `null` picks the per-dimension default.
    pub grid_res: Option<f64>,
    pub tolerances: Tolerances,
    pub horizons: Vec<usize>,
    pub seeds: usize,
    pub base_seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self { grid_res: None, tolerances: Tolerances::default(), horizons: vec![10_000], seeds: 200, base_seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub game_a: GameSpec,
    pub game_b: GameSpec,
    /// `|K_A| × |K_B|`, rows indexed by game A's states.
    pub prior: Vec<Vec<f64>>,
    #[serde(default)]
    pub options: Options,
}

/// A validated scenario together with the warnings raised while loading it.
pub struct Loaded {
    pub file: ScenarioFile,
    pub scenario: JointScenario,
    pub warnings: Vec<String>,
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Validation(format!("{path}: {msg}"))
}

impl GameSpec {
    fn from_family(f: &StageGameFamily) -> Self {
        Self {
            states: f.states().to_vec(),
            rows: f.row_actions().to_vec(),
            cols: f.col_actions().to_vec(),
            matrices: f.matrices().iter().map(Matrix::to_rows).collect(),
        }
    }

    fn build(&self, path: &str) -> Result<StageGameFamily, Failure> {
        for (what, labels) in [("states", &self.states), ("rows", &self.rows), ("cols", &self.cols)] {
            if labels.is_empty() {
                return Err(invalid(&format!("{path}.{what}"), "must not be empty"));
            }
        }
        if self.matrices.len() != self.states.len() {
            return Err(invalid(
                &format!("{path}.matrices"),
                format!("{} matrices for {} states", self.matrices.len(), self.states.len()),
            ));
        }
        let mut parsed = Vec::new();
        for (k, m) in self.matrices.iter().enumerate() {
            let here = format!("{path}.matrices[{k}]");
            if m.len() != self.rows.len() {
                return Err(invalid(&here, format!("{} rows, expected {}", m.len(), self.rows.len())));
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != self.cols.len() {
                    return Err(invalid(
                        &format!("{here}[{i}]"),
                        format!("{} entries, expected {}", row.len(), self.cols.len()),
                    ));
                }
                if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                    return Err(invalid(&format!("{here}[{i}][{j}]"), "not a finite number"));
                }
            }
            parsed.push(Matrix::from_rows(m).map_err(|e| invalid(&here, e))?);
        }
        StageGameFamily::new(self.states.clone(), self.rows.clone(), self.cols.clone(), parsed)
            .map_err(|e| invalid(path, e))
    }
}

impl ScenarioFile {
    pub fn from_scenario(s: &JointScenario) -> Self {
        Self {
            name: s.name().to_string(),
            game_a: GameSpec::from_family(s.family_a()),
            game_b: GameSpec::from_family(s.family_b()),
            prior: s.prior().rows(),
            options: Options::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Failure::Validation(format!(
                "line {} column {}: {}: {inner}",
                inner.line(),
                inner.column(),
                if e.path().to_string() == "." { "document".to_string() } else { e.path().to_string() }
            ))
        })
    }

    /// Validates every invariant and builds the scenario. A prior off the
    /// simplex by more than [`PRIOR_TOL`] is renormalized with a warning; the
    /// returned file carries the normalized prior.
    pub fn validate(mut self) -> Result<Loaded, Failure> {
        let a = self.game_a.build("game_a")?;
        let b = self.game_b.build("game_b")?;
        let mut warnings = Vec::new();
        if self.prior.len() != a.n_states() {
            return Err(invalid("prior", format!("{} rows, expected {}", self.prior.len(), a.n_states())));
        }
        for (i, row) in self.prior.iter().enumerate() {
            if row.len() != b.n_states() {
                return Err(invalid(
                    &format!("prior[{i}]"),
                    format!("{} entries, expected {}", row.len(), b.n_states()),
                ));
            }
            for (j, x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(invalid(&format!("prior[{i}][{j}]"), "not a finite number"));
                }
                if *x < -PRIOR_TOL {
                    return Err(invalid(&format!("prior[{i}][{j}]"), format!("negative probability {x}")));
                }
            }
        }
        let flat: Vec<f64> = self.prior.concat().iter().map(|x| x.max(0.0)).collect();
        let total: f64 = flat.iter().sum();
        if total <= 0.0 {
            return Err(invalid("prior", "has no mass"));
        }
        let prior = if (total - 1.0).abs() > PRIOR_TOL || self.prior.concat().iter().any(|x| *x < 0.0) {
            warnings.push(format!("prior sums to {total}; renormalized"));
            JointBelief::normalized(a.n_states(), b.n_states(), &flat).map_err(|e| invalid("prior", e))?
        } else {
            JointBelief::from_rows(&self.prior).map_err(|e| invalid("prior", e))?
        };
        self.prior = prior.rows();
        if let Some(r) = self.options.grid_res {
            if !(r > 0.0 && r <= 1.0) {
                return Err(invalid("options.grid_res", format!("{r} is not in (0, 1]")));
            }
        }
        if self.options.horizons.is_empty() || self.options.horizons.contains(&0) {
            return Err(invalid("options.horizons", "needs at least one positive horizon"));
        }
        if self.options.seeds == 0 {
            return Err(invalid("options.seeds", "must be positive"));
        }
        let scenario = JointScenario::new(self.name.clone(), a, b, prior).map_err(|e| invalid("prior", e))?;
        Ok(Loaded { file: self, scenario, warnings })
    }

    /// Pretty JSON with a trailing newline; stable under load/save.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario files always serialize");
        s.push('\n');
        s
    }
}

/// Reads `arg` as a scenario file, or as a built-in example name when no such
/// file exists.
pub fn load(arg: &str) -> Result<Loaded, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(s) = catalog::example(arg) {
            return ScenarioFile::from_scenario(&s).validate();
        }
        return Err(Failure::Validation(format!("{arg}: no such file or built-in example")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{arg}: {e}")))?;
    ScenarioFile::parse(&text).map_err(|f| f.context(arg))?.validate().map_err(|f| f.context(arg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_json() -> String {
        ScenarioFile::from_scenario(&catalog::example("example1").unwrap()).to_canonical_json()
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let text = example1_json();
        let again = ScenarioFile::parse(&text).unwrap().validate().unwrap().file.to_canonical_json();
        assert_eq!(text, again);
    }

    #[test]
    fn off_simplex_prior_is_renormalized() {
        let mut f = ScenarioFile::parse(&example1_json()).unwrap();
        f.prior = vec![vec![1.0, 0.0], vec![0.0, 3.0]];
        let loaded = f.validate().unwrap();
        assert_eq!(loaded.file.prior, vec![vec![0.25, 0.0], vec![0.0, 0.75]]);
        assert_eq!(loaded.warnings.len(), 1);
        let text = loaded.file.to_canonical_json();
        let again = ScenarioFile::parse(&text).unwrap().validate().unwrap();
        assert!(again.warnings.is_empty());
        assert_eq!(again.file.to_canonical_json(), text);
    }

    #[test]
    fn field_paths_in_diagnostics() {
        let mut f = ScenarioFile::parse(&example1_json()).unwrap();
        f.prior[1] = vec![0.5];
        let msg = f.validate().err().unwrap().to_string();
        assert!(msg.contains("prior[1]"), "{msg}");

        let mut f = ScenarioFile::parse(&example1_json()).unwrap();
        f.game_b.matrices[1][0].pop();
        let msg = f.validate().err().unwrap().to_string();
        assert!(msg.contains("game_b.matrices[1][0]"), "{msg}");

        let mut f = ScenarioFile::parse(&example1_json()).unwrap();
        f.prior[0][1] = -0.2;
        assert!(f.validate().err().unwrap().to_string().contains("prior[0][1]"));
    }

    #[test]
    fn parse_errors_carry_line_and_path() {
        let text = example1_json().replacen("\"rows\": [", "\"rows\": [1, ", 1);
        let msg = ScenarioFile::parse(&text).err().unwrap().to_string();
        assert!(msg.contains("game_a.rows"), "{msg}");
        assert!(msg.contains("line "), "{msg}");
    }
}
