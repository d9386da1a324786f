use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
mod spec;

use commands::Loaded;
use error::CliError;
use spec::{DesignMode, GameSpecDocument, Overrides};

/// Subsidy design and equilibrium selection for coordination games with noisy signals.
#[derive(Debug, Parser)]
#[command(name = "ggp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design a subsidy scheme; writes design.csv and design.json.
    Design {
        #[command(flatten)]
        common: Common,
        /// Overrides the design mode of the spec.
        #[arg(long, value_enum)]
        mode: Option<DesignMode>,
    },
    /// Run both elimination sequences; writes report.json and trace.csv.
    Solve(Common),
    /// Simulate play at the solved switching points; writes draws.csv and summary.json.
    Simulate(Common),
    /// Compare the solver with exhaustive elimination on a grid; writes verify.json.
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Game specification (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    draws: Option<usize>,
    /// Noise scale override.
    #[arg(long)]
    eps: Option<f64>,
    /// Outer-iteration stopping tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for simulation.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(common: &Common, mode: Option<DesignMode>) -> Result<Loaded, CliError> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("cannot size the thread pool: {e}")))?;
    }
    let overrides =
        Overrides { mode, seed: common.seed, draws: common.draws, eps: common.eps, tol: common.tol };
    let doc = GameSpecDocument::read(&common.spec)?.resolve(&overrides)?;
    Loaded::new(doc)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { common, mode } => commands::cmd_design(&load(&common, mode)?, &common.out).map(drop),
        Command::Solve(c) => commands::cmd_solve(&load(&c, None)?, &c.out).map(drop),
        Command::Simulate(c) => commands::cmd_simulate(&load(&c, None)?, &c.out).map(drop),
        Command::Verify(c) => commands::cmd_verify(&load(&c, None)?, &c.out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GGP_LOG_LEVEL", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
