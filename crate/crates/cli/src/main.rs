//! `polylin`: polygonal L1 approximation from the command line.
//!
//! Exit codes: 0 on success, 2 for a bad configuration, 3 for a numerical
//! failure (including a best-L1 fit that did not converge).

mod commands;
mod function;
mod model;
mod table;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Failure::Numeric(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<polylin::Error> for Failure {
    fn from(e: polylin::Error) -> Self {
        use polylin::Error as E;
        match e {
            E::InvalidInterval { .. }
            | E::ZeroSegments
            | E::NotStrictlyIncreasing { .. }
            | E::LengthMismatch { .. }
            | E::IndexOutOfRange { .. }
            | E::OutOfDomain { .. }
            | E::ComponentMismatch
            | E::InvalidOptions(_)
            | E::InvalidTolerance(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polylin",
    version,
    about = "Polygonal (piecewise-linear) L1 approximation of univariate functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the knots of a uniform or optimized partition.
    Partition(Common),
    /// Fit a polygonal model and write it as JSON (or its knot table as CSV).
    Fit(Common),
    /// Measured L1 distance and all four error bounds.
    Error {
        #[command(flatten)]
        common: Common,
        /// Model file written by `fit`; replaces the function and partition flags.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Smallest N per approximant kind for a tolerance.
    Plan(Common),
    /// Per-evaluation timings of the fast evaluator.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Evaluations per timed pass (at least 100000).
        #[arg(long, default_value_t = 1_000_000)]
        evals: usize,
    },
    /// Regenerate an experiment table over N in {31, 63, 127, 255, 511}.
    Reproduce {
        experiment: Experiment,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Gaussian04,
    Gaussian08,
    Chirp,
    Gain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionKind {
    Uniform,
    Optimized,
}

impl PartitionKind {
    pub fn name(self) -> &'static str {
        match self {
            PartitionKind::Uniform => "uniform",
            PartitionKind::Optimized => "optimized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Interpolant,
    L2,
    L1,
}

impl FitKind {
    pub fn name(self) -> &'static str {
        match self {
            FitKind::Interpolant => "interpolant",
            FitKind::L2 => "l2",
            FitKind::L1 => "l1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by the per-function commands.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// gaussian | chirp | poly7 | poly:C0,C1,... | expr:EXPR (an expression in x)
    #[arg(long, default_value = "gaussian")]
    function: String,
    /// Domain [a, b]; defaults to the built-in function's own interval.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// Number of subintervals N.
    #[arg(long, conflicts_with = "tolerance")]
    segments: Option<usize>,
    /// Target L1 error; N is taken from the matching bound.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value_t = PartitionKind::Uniform)]
    partition: PartitionKind,
    #[arg(long, value_enum, default_value_t = FitKind::Interpolant)]
    fit: FitKind,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for pseudo-random inputs (used by `bench`).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (text, out, outcome) = match cli.command {
        Command::Partition(c) => {
            let t = commands::partition(&c)?;
            (commands::render(&t, c.format.unwrap_or(Format::Csv)), c.out, Ok(()))
        }
        Command::Fit(c) => {
            let (text, outcome) = commands::fit(&c)?;
            (text, c.out, outcome)
        }
        Command::Error { common, model } => {
            let t = commands::error(&common, model.as_deref())?;
            (
                commands::render(&t, common.format.unwrap_or(Format::Csv)),
                common.out,
                Ok(()),
            )
        }
        Command::Plan(c) => {
            let t = commands::plan(&c)?;
            (commands::render(&t, c.format.unwrap_or(Format::Csv)), c.out, Ok(()))
        }
        Command::Bench { common, evals } => {
            let t = commands::bench(&common, evals)?;
            (
                commands::render(&t, common.format.unwrap_or(Format::Csv)),
                common.out,
                Ok(()),
            )
        }
        Command::Reproduce {
            experiment,
            format,
            out,
        } => {
            let t = commands::reproduce(experiment)?;
            (commands::render(&t, format), out, Ok(()))
        }
    };
    emit(&text, out.as_ref())?;
    outcome
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polylin: {e}");
            ExitCode::from(e.code())
        }
    }
}
