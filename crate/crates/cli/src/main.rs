//! `sirsn`: sample speed-marked line networks, route between points, draw
//! figures, and run the statistical experiment suite.
//!
//! Every command is a deterministic function of its flags and the seed
//! (`--seed`, default 0x5EED). Exit codes: 0 success, 2 usage error,
//! 3 resource cap exceeded, 4 I/O failure.

mod commands;
mod emit;

use clap::{Args, Parser, Subcommand};
use sirsn_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Fixed default seed; pass --seed to change it. Never wall-clock.
pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser)]
#[command(
    name = "sirsn",
    about = "Speed-marked Poisson line networks: sampling, minimum-time routing, figures, experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Restrict emitted formats (repeatable); default: all that apply.
    #[arg(long, value_enum)]
    pub format: Vec<Format>,
}

impl OutputArgs {
    pub fn wants(&self, f: Format) -> bool {
        self.format.is_empty() || self.format.contains(&f)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a line sample in a disk window and render it.
    Sample(commands::SampleArgs),
    /// Minimum-time route between two points, optionally across a
    /// refinement schedule.
    Route(commands::RouteArgs),
    /// Two-cluster network figure with the route-sharing fraction.
    Network(commands::NetworkArgs),
    /// Run a named experiment from the registry.
    Experiment(commands::ExperimentArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => commands::run_sample(&args),
        Command::Route(args) => commands::run_route(&args),
        Command::Network(args) => commands::run_network(&args),
        Command::Experiment(args) => commands::run_experiment(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::InvalidParameter(_)
                | Error::InvalidGeometry(_)
                | Error::UnknownExperiment { .. } => 2,
                Error::ResourceCap(_) => 3,
                Error::Io(_) | Error::Json(_) => 4,
                Error::Disconnected => 1,
            };
            ExitCode::from(code)
        }
    }
}

/// Expected-line-count cap, overridable through SIRSN_MAX_LINES.
pub fn max_lines_cap() -> Result<f64, Error> {
    match std::env::var("SIRSN_MAX_LINES") {
        Ok(text) => text.parse::<f64>().map_err(|_| {
            Error::invalid_parameter(format!("SIRSN_MAX_LINES must be a number, got '{text}'"))
        }),
        Err(_) => Ok(sirsn_core::line_process::DEFAULT_MAX_EXPECTED_LINES),
    }
}
