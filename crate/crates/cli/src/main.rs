use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qou_core::experiments::{run_command, Command, ExperimentConfig};
use qou_core::Error;

#[derive(Parser)]
#[command(name = "qou", version, about = "QOU caplet smiles, error surfaces and checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact and approximate implied-volatility smiles per reset date.
    Smile(Common),
    /// Relative error of the second-order approximation over (k - x, T).
    ErrorSurface(Common),
    /// Exact price and implied volatilities of the configured contract.
    Price(Common),
    /// Monte Carlo check of the configured contract.
    McCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads` from the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Monte Carlo seed; overrides `mc.seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(command: Command, args: &Common) -> Result<bool, Error> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(n) = args.threads {
        cfg.threads = Some(n);
    }
    if let (Some(seed), Some(mc)) = (args.seed, cfg.mc.as_mut()) {
        mc.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run_command(command, &cfg, &out)?;
    print!("{}", outcome.report);
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Smile(a) => (Command::Smile, a),
        Cmd::ErrorSurface(a) => (Command::ErrorSurface, a),
        Cmd::Price(a) => (Command::Price, a),
        Cmd::McCheck(a) => (Command::McCheck, a),
    };
    match run(command, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qou {}: {e}", command.name());
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
