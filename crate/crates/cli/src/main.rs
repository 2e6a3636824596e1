//! `cdm`: simulate, fit, diagnose, evaluate, and benchmark Bayesian
//! cognitive diagnosis models (DINA and probit G-DINA) from the command
//! line.

use std::process::ExitCode;

use cdm_cli::commands::{bench, diagnose, evaluate, fit, rerun, simulate};
use cdm_core::error::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cdm",
    version,
    about = "Gibbs samplers for cognitive diagnosis models",
    long_about = "Simulates, fits, and evaluates Bayesian DINA / probit G-DINA models.\n\
                  Every command is deterministic given its configuration and seed, and\n\
                  writes a manifest.json from which `cdm rerun` reproduces the outputs."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset (responses, Q-matrix, and generating truth).
    Simulate(simulate::SimulateArgs),
    /// Run MCMC chains on a dataset directory.
    Fit(fit::FitArgs),
    /// Potential-scale-reduction diagnostics across chains.
    Diagnose(diagnose::DiagnoseArgs),
    /// Parameter-recovery metrics against simulation truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Time the samplers across attribute counts.
    Bench(bench::BenchArgs),
    /// Replay a previous run from its manifest.
    Rerun(rerun::RerunArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Fit(args) => fit::run(args),
        Command::Diagnose(args) => diagnose::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Rerun(args) => rerun::run(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Data(_) => 3,
                Error::Numerical { .. } => 4,
            })
        }
    }
}
