use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use decoh_cli::config::{EngineChoice, RunConfig};
use decoh_cli::run::{self, CliError, Context};

/// Decoherence curves for a heavy body in a linear-momentum environment:
/// closed-form engine, grid-based cross-check, timescales, and decay fits.
#[derive(Parser)]
#[command(name = "decoh", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV and JSON files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Engine override: analytic, oracle, or both.
    #[arg(long, value_enum)]
    engine: Option<EngineChoice>,
    /// Seed for randomized draws (compare).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the off-diagonal element over the configured time grid and
    /// write one CSV per engine plus a JSON metadata sidecar.
    Curve(Common),
    /// Report the decoherence timescale and its doubling table.
    Tau(Common),
    /// Classify the modulus decay (power / exponential / gaussian) over the
    /// configured |z| window.
    Decayfit(Common),
    /// Run both engines on the same queries and check agreement against the
    /// configured tolerances.
    Compare(Common),
}

fn load(common: &Common) -> Result<Context, CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    let engine = common.engine.unwrap_or(config.engine);
    Ok(Context { config, out_dir: common.out.clone(), engine, seed: common.seed })
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Curve(common) => run::cmd_curve(&load(common)?),
        Command::Tau(common) => run::cmd_tau(&load(common)?),
        Command::Decayfit(common) => run::cmd_decayfit(&load(common)?),
        Command::Compare(common) => {
            let mut ctx = load(common)?;
            ctx.engine = EngineChoice::Both;
            run::cmd_compare(&ctx)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
