//! Command-line front end for GraphKV experiments.
//!
//! Exit codes: 0 success, 2 user or configuration error, 3 internal
//! invariant failure. `GRAPHKV_THREADS` caps the rayon thread pool; all
//! outputs are byte-identical regardless of thread count.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use graphkv_core::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "graphkv",
    version,
    about = "Graph-based refinement of token importance scores for KV-cache eviction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a clustered synthetic workload.
    Synth(commands::synth::SynthArgs),
    /// Run one eviction and write kept indices, sub-matrices, scores.
    Evict(commands::evict::EvictArgs),
    /// Similarity statistics, histogram, coverage, and PCA for a subset.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Run a parameter grid and emit one CSV row per cell.
    Sweep(commands::sweep::SweepArgs),
    /// Print a KV-cache memory table for a model geometry.
    Memcalc(commands::memcalc::MemcalcArgs),
}

fn init_thread_pool() -> Result<()> {
    let Some(raw) = std::env::var_os("GRAPHKV_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .to_str()
        .and_then(|s| s.parse().ok())
        .filter(|&t| t >= 1)
        .ok_or_else(|| {
            Error::config(format!("GRAPHKV_THREADS must be a positive integer, got {raw:?}"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::config(format!("failed to size thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Evict(args) => commands::evict::run(args),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
        Command::Memcalc(args) => commands::memcalc::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_thread_pool().and_then(|()| run(&cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Invariant(msg)) => {
            eprintln!("internal invariant violated: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
