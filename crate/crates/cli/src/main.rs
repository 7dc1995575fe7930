//! Batch front end: system definitions in, curves / spectra / verification
//! reports out. One process, deterministic outputs, exit status reflects
//! the verification verdict.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;
mod verify;

#[derive(Debug, Parser)]
#[command(name = "thermofractal")]
#[command(
    about = "Temperature curves, multifractal spectra and Gibbs verification for subshifts of finite type"
)]
struct Args {
    /// Path to the run configuration (JSON).
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,

    /// Output directory; overrides the config's `outputs` field.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override for all stochastic operations.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated list of verification checks to run.
    #[arg(long, global = true, value_delimiter = ',')]
    checks: Option<Vec<String>>,

    /// Suppress progress lines; files are still written.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pressure table P(q, t) over a sub-grid, with monotonicity audit.
    Pressure,
    /// Temperature curve with derivatives and the degeneracy test.
    Temperature,
    /// Spectrum points, Legendre residuals, endpoints, variational checks.
    Spectrum,
    /// Run the named verification checks; exit 0 iff all pass.
    Verify,
    /// Dump sampled orbits and the level-set concentration report.
    Orbits,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(args: Args) -> Result<bool> {
    let run = config::load(&args.config, args.seed, args.checks.clone())?;
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&run.config.outputs));
    match args.cmd {
        Command::Pressure => {
            commands::cmd_pressure(&run, &out_dir, args.quiet)?;
            Ok(true)
        }
        Command::Temperature => {
            commands::cmd_temperature(&run, &out_dir, args.quiet)?;
            Ok(true)
        }
        Command::Spectrum => {
            commands::cmd_spectrum(&run, &out_dir, args.quiet)?;
            Ok(true)
        }
        Command::Orbits => {
            commands::cmd_orbits(&run, &out_dir, args.quiet)?;
            Ok(true)
        }
        Command::Verify => verify::cmd_verify(&run, &out_dir, args.quiet),
    }
}
