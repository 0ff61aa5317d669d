mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{Ctx, Failure};
use config::Config;

const DEFAULT_SEED: u64 = 20240601;
const DEFAULT_OUT: &str = "resonance-out";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Verify,
    Integrate,
    Reduce,
    NfTable,
    Equilibria,
}

#[derive(Debug, Parser)]
#[command(
    name = "resonance-lab",
    version,
    about = "Reductions, normal forms and equilibria of the perturbed 4-D oscillator"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `workers` in the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; falls back to the config's `out`, then `resonance-out`.
    #[arg(long, env = "RESONANCE_LAB_OUT")]
    out: Option<PathBuf>,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("usage: resonance-lab <verify|integrate|reduce|nf-table|equilibria> --config <path> [--seed N] [--workers N] [--out DIR]");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match Config::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    let workers =
        cli.workers.or(cfg.workers).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return usage_error("workers must be at least 1");
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(1);
    }
    let ctx = Ctx { seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED), workers, out, cfg };
    let result = match cli.command {
        Command::Verify => commands::verify(&ctx),
        Command::Integrate => commands::integrate(&ctx),
        Command::Reduce => commands::reduce(&ctx),
        Command::NfTable => commands::nf_table(&ctx),
        Command::Equilibria => commands::equilibria(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => usage_error(&e),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
