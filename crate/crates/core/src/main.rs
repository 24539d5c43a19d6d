use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use strata_lab::harness::{run, ExperimentConfig, Overrides, Subcommand};
use strata_lab::Error;

/// Quantized acceleration, determinant zeros and localization experiments
/// for quasi-periodic Schrödinger operators.
#[derive(Debug, Parser)]
#[command(name = "strata-lab", version)]
struct Cli {
    /// lyapunov, acceleration, zeros, verify-acc-zeros, green, riesz, ids,
    /// holder, strata, ldt, localize or all
    subcommand: String,
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config)
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Validate and estimate cost without computing
    #[arg(long)]
    dry_run: bool,
}

fn exit_for(e: &Error) -> ExitCode {
    if e.is_validation() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub: Subcommand = match cli.subcommand.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let overrides = Overrides { output: cli.out, threads: cli.threads, seed: cli.seed };
    let loaded = match ExperimentConfig::load(&cli.config, &overrides) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    match run(sub, &loaded, cli.dry_run) {
        Ok(m) => {
            for t in &m.tasks {
                match &t.error {
                    Some(err) => eprintln!("{:<18} {:<8} {err}", t.task, t.status),
                    None => {
                        eprintln!("{:<18} {:<8} {:.1}s (cost ~{:.2e})", t.task, t.status, t.seconds, t.estimated_cost)
                    }
                }
            }
            let failed: Vec<_> = m.failed().collect();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else if failed.iter().all(|t| t.error_kind.as_deref() == Some("validation")) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
