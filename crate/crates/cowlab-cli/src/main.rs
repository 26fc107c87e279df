mod config;
mod oracle;
mod output;
mod reproduce;
mod sweep;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cowlab_core::usd::{four_state_usd, three_state_usd};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Config(String),
    /// Computation or tolerance failure: exit code 1.
    Failure(String),
}

impl CliError {
    fn io(e: impl std::fmt::Display) -> Self {
        CliError::Failure(format!("I/O error: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "cowlab", version, about = "Zero-error attack analysis for COW QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute a results table and compare it with the stored references.
    Reproduce {
        table: reproduce::TableId,
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV here and a manifest next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a figure's curves on a grid of log10 values.
    Sweep {
        figure: sweep::FigureId,
        #[arg(long)]
        config: PathBuf,
        /// `lo:hi:n` in log10 units.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal unambiguous discrimination of the signals, as JSON.
    Usd {
        #[arg(long)]
        mu: f64,
        /// Decoy probability of the three-state protocol.
        #[arg(long, default_value_t = 0.155, conflicts_with = "four_state")]
        f: f64,
        #[arg(long, requires_all = ["fd", "fv"])]
        four_state: bool,
        #[arg(long, requires = "four_state")]
        fd: Option<f64>,
        #[arg(long, requires = "four_state")]
        fv: Option<f64>,
    },
    /// Randomized closed-form versus brute-force comparisons.
    OracleCheck {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        cases: usize,
        #[arg(long, hide = true)]
        inject_fault: Option<oracle::Family>,
    },
}

fn stdout(text: &str) -> Result<(), CliError> {
    std::io::stdout().write_all(text.as_bytes()).map_err(CliError::io)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Reproduce { table, config, out } => reproduce::run(table, &config, out.as_deref()),
        Command::Sweep { figure, config, grid, out } => {
            let grid = sweep::Grid::parse(&grid)?;
            sweep::run(figure, &config, &grid, out.as_deref())
        }
        Command::Usd { mu, f, four_state, fd, fv } => {
            let sol = if four_state {
                four_state_usd(mu, fd.unwrap_or(f64::NAN), fv.unwrap_or(f64::NAN))
            } else {
                three_state_usd(mu, f)
            };
            let sol = sol.map_err(|e| match e {
                cowlab_core::Error::InvalidParams(m) => CliError::Config(m),
                e => CliError::Failure(e.to_string()),
            })?;
            let text = serde_json::to_string_pretty(&sol).map_err(|e| CliError::Failure(e.to_string()))?;
            stdout(&(text + "\n"))?;
            Ok(())
        }
        Command::OracleCheck { seed, cases, inject_fault } => {
            let (report, ok) = oracle::run(seed, cases, inject_fault)?;
            stdout(&report)?;
            if ok {
                Ok(())
            } else {
                Err(CliError::Failure(format!("deviation above {:e}", oracle::TOLERANCE)))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
