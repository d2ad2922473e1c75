//! `cfec`: chart generation, design, construction, simulation and reporting.
//!
//! Exit status: 0 success, 1 infeasible (a legitimate result), 2 usage or
//! configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use concat_fec::Error;

mod commands;
mod config;
mod manifest;
mod report;

#[derive(Parser, Debug)]
#[command(name = "cfec", version, about = "Concatenated LDPC / staircase FEC design toolkit")]
struct Cli {
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate elementary EXIT charts into the chart cache.
    ExitGen,
    /// Optimize inner ensembles over SNR points and outer codes.
    Design,
    /// Build a random or quasi-cyclic parity-check matrix.
    Construct,
    /// Simulate a code against the outer threshold.
    Simulate,
    /// Merge run reports into one summary table.
    Report {
        /// `run.json` files written by `simulate`.
        inputs: Vec<PathBuf>,
    },
}

pub struct Globals {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn infeasible(message: String) -> Self {
        Self { code: 1, message }
    }
}

pub fn is_infeasible(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible(_) | Error::InfeasibleRate(_) | Error::Unrealizable(_) | Error::NotOpen { .. }
    )
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if is_infeasible(&e) { 1 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    // Results do not depend on the pool size; this only bounds parallelism.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    let g = Globals {
        config: cli.config,
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out,
    };
    let result = match &cli.command {
        Command::ExitGen => commands::exit_gen(&g),
        Command::Design => commands::design(&g),
        Command::Construct => commands::construct(&g),
        Command::Simulate => commands::simulate(&g),
        Command::Report { inputs } => report::report(&g, inputs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
