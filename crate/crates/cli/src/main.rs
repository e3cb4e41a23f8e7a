//! `roqam` command-line driver.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical infeasibility, 4 I/O failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Method;
use config::{GlobalOverrides, Overrides, RunConfig};
use output::{emit, render};

#[derive(Parser, Debug)]
#[command(name = "roqam", version, about = "Spectral-function emulation and resource estimates for the Anderson impurity model")]
struct Cli {
    /// TOML run configuration; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact and ROQAM Green's functions at several depths.
    Spectral(Overrides),
    /// Error versus depth with and without noise.
    Convergence(Overrides),
    /// Error versus time step.
    TimestepScan(Overrides),
    /// Error medians under the three error budgets.
    BudgetCompare(Overrides),
    /// Finite-temperature Green's function.
    Thermal(Overrides),
    /// T-gate estimates.
    Resources {
        #[arg(long, value_enum)]
        method: Method,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn run(cli: Cli) -> roqam::Result<()> {
    let globals = GlobalOverrides { seed: cli.seed, out: cli.out, format: cli.format };
    let (name, overrides, method) = match &cli.command {
        Command::Spectral(o) => ("spectral", o, None),
        Command::Convergence(o) => ("convergence", o, None),
        Command::TimestepScan(o) => ("timestep-scan", o, None),
        Command::BudgetCompare(o) => ("budget-compare", o, None),
        Command::Thermal(o) => ("thermal", o, None),
        Command::Resources { method, overrides } => ("resources", overrides, Some(*method)),
    };
    let cfg = RunConfig::resolve(cli.config.as_deref(), overrides, &globals)?;
    let payload = match &cli.command {
        Command::Spectral(_) => commands::spectral(&cfg)?,
        Command::Convergence(_) => commands::convergence(&cfg)?,
        Command::TimestepScan(_) => commands::timestep_scan(&cfg)?,
        Command::BudgetCompare(_) => commands::budget_compare(&cfg)?,
        Command::Thermal(_) => commands::thermal(&cfg)?,
        Command::Resources { .. } => commands::resources(&cfg, method.expect("resources has a method"))?,
    };
    let label = match method {
        Some(m) => format!("{name} {}", m.name()),
        None => name.to_string(),
    };
    emit(&render(&label, &cfg, &payload)?, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
