//! `meanfield` command-line entry point.
//!
//! Exit status: 0 all checks passed, 1 an acceptance band was violated,
//! 2 usage or config error, 3 study failure (including divergence),
//! 4 an existing artifact for the same config has different contents.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use meanfield_cli::{load_config, output_dir, run_into, ExperimentConfig, RunError, Subcommand};
use meanfield_core::Exec;

#[derive(Debug, Parser)]
#[command(name = "meanfield", version, about = "Mean-field network experiments")]
struct Cli {
    /// Study to run.
    #[arg(value_enum)]
    command: Command,

    /// TOML config, or a previous artifact's JSON to rerun it. Defaults apply when omitted.
    config: Option<PathBuf>,

    /// Worker threads for study cells. Results do not depend on it.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,

    /// Run every loop on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Command {
    Train,
    Limit,
    Compare,
    RateStudy,
    Lyapunov,
    Ablation,
    Moments,
    /// Print the default config as TOML and exit.
    Defaults,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn subcommand(c: Command) -> Option<Subcommand> {
    Some(match c {
        Command::Train => Subcommand::Train,
        Command::Limit => Subcommand::Limit,
        Command::Compare => Subcommand::Compare,
        Command::RateStudy => Subcommand::RateStudy,
        Command::Lyapunov => Subcommand::Lyapunov,
        Command::Ablation => Subcommand::Ablation,
        Command::Moments => Subcommand::Moments,
        Command::Defaults => return None,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(sub) = subcommand(cli.command) else {
        print!("{}", ExperimentConfig::default().to_toml());
        return ExitCode::SUCCESS;
    };
    if cli.workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    let cfg = match &cli.config {
        Some(p) => load_config(p, sub),
        None => Ok(ExperimentConfig::default()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let dir = output_dir(&cfg);
    match pool.install(|| run_into(sub, &cfg, exec, &dir)) {
        Ok(summary) => {
            println!("{}", summary.line());
            if summary.mismatched() {
                ExitCode::from(4)
            } else if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        RunError::Config(_) => ExitCode::from(2),
        RunError::Study(_) | RunError::Io(_) => ExitCode::from(3),
    }
}
