//! `chemostat`: trajectories, invasion rates, sign-map sweeps and the
//! cross-check suite for the switched chemostat and the two-vessel gradostat.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "CHEMOSTAT_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "chemostat", version, about = "Competition for one resource in switched and coupled chemostats")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write it as CSV with a manifest.
    Simulate(SimulateArgs),
    /// Print invasion rates, their limits and both verdicts as JSON.
    Rates(RatesArgs),
    /// Evaluate a sign map on an (s, lambda) grid and write CSVs.
    Sweep(SweepArgs),
    /// Run the cross-check suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    /// Randomly switched chemostat.
    Pdmp,
    /// Two coupled vessels, six equations.
    Gradostat,
    /// One vessel without switching.
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateMode {
    One,
    Two,
    Both,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub kind: SimKind,
    #[arg(long)]
    pub config: PathBuf,
    /// Decimal or 0x-hex; overrides the config.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Keep every n-th integrator step (jumps are always kept).
    #[arg(long)]
    pub every: Option<usize>,
    /// Vessel used by `simple`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub vessel: u8,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File stem for the outputs (defaults to the kind).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `two` and `both` need equal inputs; the default picks `both` when
    /// inputs are equal and `one` otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<RateMode>,
    /// Also write the report to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// One of fig2-a, fig2-b, fig3-a, fig3-b, fig4-a, fig4-b.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub figure: Option<String>,
    /// Vessel parameters for a custom sweep (its s and lambda are ignored).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `min,max,count` for s (uniform).
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// `min,max,count` for lambda (log-spaced).
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Rates compared in a custom sweep (default: two when inputs are equal).
    #[arg(long, value_enum)]
    pub mode: Option<RateMode>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated check numbers (default: all).
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u8>>,
    /// Print the reports as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Rates(a) => commands::rates(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
