use std::path::Path;

use anyhow::Result;
use spillover::nr_analysis::{analyze_scenario, IntervalAnalysis, NrSettings, ScenarioReport};

use crate::exit::Failure;
use crate::output::{envelope_table, gnuplot_envelope, Bundle, Format, Table};
use crate::scenario::Loaded;

/// Grid and tolerance overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid_res: Option<f64>,
    pub tol: Option<f64>,
}

pub fn settings(loaded: &Loaded, o: &Overrides) -> NrSettings {
    let t = &loaded.file.options.tolerances;
    NrSettings {
        resolution: o.grid_res.or(loaded.file.options.grid_res),
        identity_tol: o.tol.unwrap_or(t.identity),
        gradient_tol: t.gradient,
        superdiff_tol: t.superdiff,
        ..NrSettings::default()
    }
}

/// Writes the analysis bundle and returns the report; inconclusive NR checks
/// are reported after the files are written.
pub fn run(loaded: &Loaded, o: &Overrides, out_root: &Path, format: Format) -> Result<(ScenarioReport, Bundle)> {
    let s = &loaded.scenario;
    let settings = settings(loaded, o);
    let report = analyze_scenario(s, &settings).map_err(Failure::from)?;
    let analysis = IntervalAnalysis::with_resolution(s, settings.resolution).map_err(Failure::from)?;
    let mut bundle = Bundle::create(out_root, s.name(), format)?;
    bundle.write_text("scenario.json", &loaded.file.to_canonical_json())?;

    let joint_labels: Vec<String> = (0..s.n_joint())
        .map(|f| {
            let (ka, kb) = s.prior().split_index(f);
            format!("{}_{}", s.family_a().states()[ka], s.family_b().states()[kb])
        })
        .collect();
    for (stem, env, labels, title) in [
        ("value_a", analysis.envelope_a(), s.family_a().states().to_vec(), "v_A and Cav(v_A)"),
        ("value_b", analysis.envelope_b(), s.family_b().states().to_vec(), "v_B and Cav(v_B)"),
        ("value_h", analysis.envelope_h(), joint_labels, "h and Cav(h) on the prior's support"),
    ] {
        let file = bundle.write_table(stem, &envelope_table(env, &labels)?)?;
        let name = file.file_name().unwrap().to_string_lossy().into_owned();
        bundle.write_text(&format!("{stem}.gp"), &gnuplot_envelope(&name, title, env.face().len(), format))?;
    }
    bundle.write_table("report", &Table::records(&report.records()))?;
    bundle.write_text("report.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    bundle.write_text("summary.txt", &report.to_text())?;
    Ok((report, bundle))
}
