//! `oscillab`: constants, norms, certificate suites and sweeps from the shell.
//!
//! Exit codes: 0 success, 1 a certificate check failed, 2 usage or parse
//! error, 3 domain error, 4 degenerate corpus.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "oscillab", version, about = "Discrete oscillation spaces and weighted inequality certificates")]
struct Cli {
    /// Flat `key = value` run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Muckenhoupt, reverse Hölder, A1 or doubling constant of a weight file.
    Constant(commands::ConstantArgs),
    /// Oscillation norm of a function file.
    Norm(commands::NormArgs),
    /// Run seeded certificate suites and write one report per trial.
    Verify(commands::VerifyArgs),
    /// Corpus-level estimates over a parameter grid, as CSV.
    Sweep(commands::SweepArgs),
    /// Generate weights or a corpus of functions and weights.
    Gen(commands::GenArgs),
    /// Version, suites, base kinds and the effective configuration.
    Info,
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("OSCILLAB_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("OSCILLAB_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(Failure::usage("OSCILLAB_THREADS must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    init_threads()?;
    let config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::from)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Constant(a) => commands::constant(&config, a),
        Command::Norm(a) => commands::norm(&config, a),
        Command::Verify(a) => commands::verify(&config, a),
        Command::Sweep(a) => commands::sweep(&config, a),
        Command::Gen(a) => commands::gen(&config, a),
        Command::Info => commands::info(&config),
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
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
