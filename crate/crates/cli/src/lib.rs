//! Command-line driver: corpus scanning, tail fitting, ensemble
//! experiments and gene-length analysis.
//!
//! Exit status: 0 success, 1 usage error, 2 input error, 3 internal error.

pub mod fit;
pub mod genes;
pub mod report;
pub mod scan;
pub mod simulate;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use infocons::Execution;

pub use report::{Diagnostics, RunReport, TOOL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Input = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Usage,
            error: e.into(),
        }
    }

    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Input,
            error: e.into(),
        }
    }

    pub fn internal(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Internal,
            error: e.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "infocons",
    version,
    about = "Token-level component measurement, power-law fitting and ensemble simulation"
)]
pub struct Cli {
    /// Primary output file (records, fit or experiment JSON); stdout if absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Record format for `scan` output.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    pub format: Format,
    /// Random seed; overrides any seed in a configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Log more (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize and segment source trees and write one record per component.
    Scan(scan::ScanArgs),
    /// Build a size CCDF from records and fit its tail on log-log axes.
    Fit(fit::FitArgs),
    /// Run an ensemble experiment from a JSON configuration.
    Simulate(simulate::SimulateArgs),
    /// Regress total coding length on gene count per kingdom.
    Genes(genes::GenesArgs),
    /// Write a synthetic gene-length table from a generator configuration.
    GenGenes(genes::GenGenesArgs),
}

impl Cli {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Scan(args) => scan::cmd_scan(cli, args).map(|_| ()),
        Command::Fit(args) => fit::cmd_fit(cli, args).map(|_| ()),
        Command::Simulate(args) => simulate::cmd_simulate(cli, args).map(|_| ()),
        Command::Genes(args) => genes::cmd_genes(cli, args).map(|_| ()),
        Command::GenGenes(args) => genes::cmd_gen_genes(cli, args),
    }
}

/// Writes `bytes` to `path`, or to stdout when `path` is `None`.
pub(crate) fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::input(anyhow::anyhow!("{}: {e}", dir.display())))?;
            }
            std::fs::write(p, bytes).map_err(|e| CliError::input(anyhow::anyhow!("{}: {e}", p.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(CliError::internal)
        }
    }
}

pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(CliError::internal)?;
    v.push(b'\n');
    Ok(v)
}
