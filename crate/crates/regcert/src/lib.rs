//! Command-line front end for `regcert-core`: argument parsing, file
//! formats and the serialisable records each subcommand emits.

// `!(x > 0.0)` is the NaN-rejecting form used throughout validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod io;
pub mod records;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use regcert_core::Arithmetic;

pub use error::CliError;

/// How a successful run ended; maps onto exit codes 0 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    Indeterminate,
}

#[derive(Debug, Parser)]
#[command(name = "regcert", about = "Exact and certified regularity constants for sparse regression", disable_version_flag = true)]
pub struct Cli {
    /// Seed for every random choice; overrides seeds inside config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub arithmetic: Option<ArithmeticArg>,
    /// Print the tool and output schema versions.
    #[arg(long)]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArithmeticArg {
    Float,
    Rational,
}

impl From<ArithmeticArg> for Arithmetic {
    fn from(a: ArithmeticArg) -> Self {
        match a {
            ArithmeticArg::Float => Arithmetic::Float,
            ArithmeticArg::Rational => Arithmetic::Rational,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    Spark,
    Incoherence,
    Rip,
    Re,
    Compat,
    Lq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReducibleArg {
    Re,
    Compat,
    Lq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    OrthogonalRows,
    ConePreservingRight,
    LinfExpansiveLeft,
    AdditivePerturbation,
    Averaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Stiv,
    Dantzig,
}

/// Parses `1`, `2.5`, `inf`.
pub fn parse_q(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()).and_then(|q| {
            if q >= 1.0 {
                Ok(q)
            } else {
                Err(format!("q = {q} must be at least 1"))
            }
        }),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one regularity constant, optionally deciding it against γ.
    Check {
        #[arg(long, value_enum)]
        property: PropertyArg,
        #[arg(long)]
        matrix: PathBuf,
        /// Instruments for `lq`; defaults to the design itself.
        #[arg(long)]
        instruments: Option<PathBuf>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value = "1", value_parser = parse_q)]
        q: f64,
        #[arg(long)]
        gamma: Option<f64>,
        /// Require integer entries.
        #[arg(long)]
        integral: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the spark reduction on an integer design in exact arithmetic.
    Reduce {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum)]
        property: ReducibleArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw `(X, Z)` from a model and sampler given as JSON.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Apply a regularity-preserving operation and report before/after.
    Transform {
        #[arg(long, value_enum)]
        kind: TransformArg,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        instruments: Option<PathBuf>,
        /// `M`, `Δ`, or the second design for averaging.
        #[arg(long)]
        payload: PathBuf,
        /// Second instruments for averaging; defaults to the payload.
        #[arg(long)]
        payload_instruments: Option<PathBuf>,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value = "1", value_parser = parse_q)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve STIV or the Dantzig selector on a stored instance.
    Estimate {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long = "A", default_value_t = 1.0)]
        a: f64,
        /// Also evaluate the oracle chain (exact sensitivity, small p only).
        #[arg(long)]
        chain: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median estimation error against n, with fitted log-log slopes.
    RateStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo sensitivity, tail or mixture experiment.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Configure the worker pool and run one subcommand.
pub fn run(cli: Cli) -> Result<Status, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if cli.version {
        let v = records::VersionInfo::current();
        println!("{}", io::to_json_string(&v)?);
        return Ok(Status::Done);
    }
    let command = cli.command.ok_or_else(|| CliError::validation("no subcommand given; see --help"))?;
    let ctx = commands::Context { seed: cli.seed, arithmetic: cli.arithmetic.map(Into::into) };
    commands::dispatch(&ctx, command)
}
