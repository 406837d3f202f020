//! `spinsynth`: time-optimal spin-1/2 gate synthesis from the command line.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 solver failure,
//! 4 file I/O failure.

mod ensemble;
mod error;
mod output;
mod single;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "spinsynth",
    version,
    about = "Time-optimal SU(2) gate synthesis under a planar control field"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time-optimal coordinates of a single-spin target.
    Synthesize(single::SynthesizeArgs),
    /// Sampled propagator, Hopf projection and optional spin path as CSV.
    Trajectory(single::TrajectoryArgs),
    /// Optimal, Euler and unconstrained times of z-rotations as CSV.
    Sweep(single::SweepArgs),
    /// Two-spin control driven by a JSON config.
    Ensemble(ensemble::EnsembleArgs),
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synthesize(a) => single::synthesize(a),
        Command::Trajectory(a) => single::trajectory(a),
        Command::Sweep(a) => single::sweep(a),
        Command::Ensemble(a) => ensemble::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinsynth: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
