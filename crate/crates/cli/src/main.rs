//! `spillover`: analyze scenario files, simulate equilibrium profiles and
//! reproduce the built-in worked examples.

mod analyze;
mod exit;
mod output;
mod reproduce;
mod scenario;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use analyze::Overrides;
use exit::Failure;
use output::Format;
use reproduce::{ExampleId, SimSize};
use simulate::{ProfileName, SimArgs};

#[derive(Parser, Debug)]
#[command(name = "spillover", version, about = "Repeated games with one informed player facing two component games")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Envelope grid step (default: 1e-3 on a line, 2e-2 on larger faces).
    #[arg(long, global = true)]
    grid_res: Option<f64>,
    /// Identity tolerance of the NR-property check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Base seed; episode `i` uses seed `seed + i`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Root of the output bundles.
    #[arg(long, global = true, env = "SPILLOVER_OUT_DIR", default_value = "spillover-out")]
    out_dir: PathBuf,
    /// Table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Value functions, envelopes, NR verdicts and the payoff interval.
    Analyze {
        /// Scenario JSON file, or the name of a built-in example.
        scenario: String,
    },
    /// Ensemble simulation of a built-in profile with diagnostics and an ε-check.
    Simulate {
        scenario: String,
        #[arg(long, value_enum)]
        profile: ProfileName,
        /// Weight on the upper end (jcl only).
        #[arg(long, default_value_t = 0.5)]
        weight: f64,
        /// Lottery stages (jcl only).
        #[arg(long, default_value_t = 10)]
        lottery_stages: usize,
        /// Horizons; defaults to the scenario's options.
        #[arg(short = 'T', long = "horizon", value_delimiter = ',')]
        horizons: Vec<usize>,
        /// Episodes per horizon; defaults to the scenario's options.
        #[arg(long)]
        seeds: Option<usize>,
        /// Episodes per deviation in the ε-check; 0 skips the check.
        #[arg(long, default_value_t = 50)]
        epsilon_seeds: usize,
    },
    /// Pass/fail checklist for a built-in example.
    Reproduce {
        #[arg(value_enum)]
        example: ExampleId,
        #[arg(short = 'T', long = "horizon", default_value_t = 10_000)]
        horizon: usize,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
    },
    /// Names and descriptions of the built-in examples.
    ListExamples,
}

/// Prints to stdout, treating a closed pipe as the reader having stopped.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn warn(loaded: &scenario::Loaded) {
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
}

fn report_files(bundle: &output::Bundle) {
    emit(&format!("wrote {} files to {}\n", bundle.written().len(), bundle.dir().display()));
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let overrides = Overrides { grid_res: c.grid_res, tol: c.tol };
    match cli.command {
        Command::Analyze { scenario } => {
            let loaded = scenario::load(&scenario)?;
            warn(&loaded);
            let (report, bundle) = analyze::run(&loaded, &overrides, &c.out_dir, c.format)?;
            emit(&report.to_text());
            report_files(&bundle);
            if report.is_inconclusive() {
                return Err(Failure::Inconclusive("NR check inconclusive".into()).into());
            }
        }
        Command::Simulate { scenario, profile, weight, lottery_stages, horizons, seeds, epsilon_seeds } => {
            let loaded = scenario::load(&scenario)?;
            warn(&loaded);
            let o = &loaded.file.options;
            let horizons = if horizons.is_empty() { o.horizons.clone() } else { horizons };
            if horizons.contains(&0) {
                return Err(Failure::Validation("--horizon must be positive".into()).into());
            }
            let seeds = seeds.unwrap_or(o.seeds);
            if seeds == 0 {
                return Err(Failure::Validation("--seeds must be positive".into()).into());
            }
            let args = SimArgs {
                profile,
                weight,
                lottery_stages,
                horizons,
                seeds,
                base_seed: c.seed.unwrap_or(o.base_seed),
                epsilon_seeds,
            };
            let (text, bundle) = simulate::run(&loaded, c.grid_res, &args, &c.out_dir, c.format)?;
            emit(&text);
            report_files(&bundle);
        }
        Command::Reproduce { example, horizon, seeds } => {
            if horizon == 0 || seeds == 0 {
                return Err(Failure::Validation("--horizon and --seeds must be positive".into()).into());
            }
            let size = SimSize { horizon, seeds, base_seed: c.seed.unwrap_or(0) };
            let outcome = reproduce::run(example, &size, &overrides, &c.out_dir, c.format)?;
            emit(&outcome.text);
            if !outcome.passed() {
                let failed = outcome.checks.iter().filter(|x| !x.passed).count();
                return Err(Failure::Inconclusive(format!("{failed} checks failed")).into());
            }
        }
        Command::ListExamples => {
            for name in spillover::catalog::NAMES {
                emit(&format!("{name:<14} {}\n", spillover::catalog::description(name)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_of(&e) as u8)
        }
    }
}
