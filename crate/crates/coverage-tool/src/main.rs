//! Command-line front end: scenario ingestion, analysis subcommands, and
//! CSV/JSON emission.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numerical error, 4 unachievable target.

// `!(x > 0.0)` guards reject NaN as well as nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relay_coverage::validate::Suite;
use relay_coverage::{CoverageMode, Error as LibError};

mod commands;
mod output;
mod scenario_file;

use scenario_file::ToolScenario;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_UNACHIEVABLE: u8 = 4;

/// Tool-level error with its process exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self {
            message,
            code: EXIT_CONFIG,
        }
    }
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        let code = match e {
            LibError::OutOfRange(_)
            | LibError::DegenerateGeometry(_)
            | LibError::DimensionMismatch { .. } => EXIT_CONFIG,
            LibError::NumericalInstability(_) | LibError::NoConvergence(_) => EXIT_NUMERICAL,
            LibError::Unachievable(_) => EXIT_UNACHIEVABLE,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            message: format!("i/o error: {e}"),
            code: EXIT_CONFIG,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "coverage-tool",
    version,
    about = "Capacity bounds, relay placement, and coverage regions for MIMO relay channels"
)]
struct Cli {
    /// Scenario key-value file (defaults apply for missing keys).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = all cores). Outputs are invariant to this.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Override the source-relay distance.
    #[arg(long, global = true)]
    u2: Option<f64>,

    /// Override the target rate in bps/Hz.
    #[arg(long, global = true)]
    rate: Option<f64>,

    /// Override the Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Override the random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the source power in dB.
    #[arg(long, global = true)]
    p1_db: Option<f64>,

    /// Override the relay power in dB.
    #[arg(long, global = true)]
    p2_db: Option<f64>,

    /// Override the path-loss exponent.
    #[arg(long, global = true)]
    eta: Option<f64>,

    /// Set all four antenna counts at once.
    #[arg(long, global = true)]
    antennas: Option<usize>,

    /// Override the grid resolution.
    #[arg(long, global = true)]
    grid_resolution: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate vs relay distance table with a Monte Carlo cross-check.
    Rate {
        #[arg(long, default_value_t = 0.4)]
        d_min: f64,
        #[arg(long, default_value_t = 2.0)]
        d_max: f64,
        #[arg(long, default_value_t = 0.05)]
        d_step: f64,
    },
    /// Largest relay distance that still supports the target rate.
    OptimalDistance,
    /// Coverage-region mask, boundary, and area for one strategy.
    Coverage {
        /// df, cs, or norelay.
        #[arg(long)]
        mode: String,
    },
    /// Multi-antenna placement ratio along single-antenna distances.
    AntennaRatio {
        #[arg(long, default_value_t = 0.2)]
        d1_min: f64,
        #[arg(long, default_value_t = 3.0)]
        d1_max: f64,
        #[arg(long, default_value_t = 0.1)]
        d1_step: f64,
    },
    /// Exact rate vs symmetric antenna count, with a linear fit.
    RateVsAntennas {
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        /// Link distance held fixed across antenna counts.
        #[arg(long, default_value_t = 1.0)]
        distance: f64,
    },
    /// Run the validation suite (quick skips the coverage-grid criterion).
    Validate {
        #[arg(long, default_value = "quick")]
        suite: String,
    },
    /// Re-run a named recipe: fig3, fig4, fig5, fig6, fig7, or fig8.
    Repro { figure: String },
}

fn load_scenario(cli: &Cli) -> Result<ToolScenario, CliError> {
    let mut scenario = match &cli.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::config(format!("cannot read scenario {}: {e}", path.display()))
            })?;
            ToolScenario::parse(&text).map_err(CliError::config)?
        }
        None => ToolScenario::default(),
    };
    if let Some(u2) = cli.u2 {
        scenario.u2 = u2;
    }
    if let Some(rate) = cli.rate {
        scenario.rate = rate;
    }
    if let Some(samples) = cli.samples {
        scenario.samples = samples;
        scenario.samples_from_env = false;
    }
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    if let Some(p1) = cli.p1_db {
        scenario.p1_db = p1;
    }
    if let Some(p2) = cli.p2_db {
        scenario.p2_db = p2;
    }
    if let Some(eta) = cli.eta {
        scenario.eta = eta;
    }
    if let Some(n) = cli.antennas {
        scenario.m1 = n;
        scenario.m2 = n;
        scenario.n2 = n;
        scenario.n3 = n;
    }
    if let Some(res) = cli.grid_resolution {
        scenario.grid.resolution = res;
    }
    // surface configuration problems before any command runs
    scenario.to_config().map_err(CliError::from)?;
    Ok(scenario)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let scenario = load_scenario(cli)?;
    if cli.workers > 0 {
        // results do not depend on the pool size; this only bounds threads
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    let out = &cli.out;
    let workers = cli.workers;
    match &cli.command {
        Command::Rate {
            d_min,
            d_max,
            d_step,
        } => {
            commands::cmd_rate(&scenario, out, workers, *d_min, *d_max, *d_step)?;
        }
        Command::OptimalDistance => {
            commands::cmd_optimal_distance(&scenario, out, workers)?;
        }
        Command::Coverage { mode } => {
            let mode: CoverageMode = mode.parse()?;
            commands::cmd_coverage(&scenario, out, workers, mode)?;
        }
        Command::AntennaRatio {
            d1_min,
            d1_max,
            d1_step,
        } => {
            commands::cmd_antenna_ratio(&scenario, out, workers, *d1_min, *d1_max, *d1_step)?;
        }
        Command::RateVsAntennas { n_max, distance } => {
            commands::cmd_rate_vs_antennas(&scenario, out, workers, *n_max, *distance)?;
        }
        Command::Validate { suite } => {
            let suite = match suite.as_str() {
                "quick" => Suite::Quick,
                "full" => Suite::Full,
                other => {
                    return Err(CliError::config(format!(
                        "unknown suite '{other}' (expected quick or full)"
                    )))
                }
            };
            return commands::cmd_validate(&scenario, out, workers, suite);
        }
        Command::Repro { figure } => {
            commands::cmd_repro(&scenario, out, workers, figure)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
