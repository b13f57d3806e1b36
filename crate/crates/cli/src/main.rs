use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use farey_thermo::Error;

mod commands;
mod config;

/// Environment variable that overrides the working-precision cap, in bits.
pub const PRECISION_ENV: &str = "FAREY_THERMO_PRECISION_BITS";

#[derive(Parser, Debug)]
#[command(name = "farey-thermo", version, about = "Partition functions over Farey matrices and free-energy experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// Worker threads for enumeration (output does not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Largest working precision in bits.
    #[arg(long, global = true)]
    pub precision_bits: Option<u64>,
    /// Longest word length that may be enumerated.
    #[arg(long, global = true)]
    pub enum_cap: Option<usize>,
    /// Largest partial quotient, in decimal digits, a rule may produce.
    #[arg(long, global = true)]
    pub digit_cap: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Exactly one of these selects `alpha`.
#[derive(Args, Debug, Default, Clone)]
#[group(multiple = false)]
pub struct AlphaArgs {
    /// `p/q`
    #[arg(long)]
    pub rational: Option<String>,
    /// `P,Q,D` for `(P + sqrt(D)) / Q`
    #[arg(long, allow_hyphen_values = true)]
    pub surd: Option<String>,
    /// golden, e_minus_1 or pi_literal
    #[arg(long)]
    pub named: Option<String>,
    /// thm42 or thm43
    #[arg(long)]
    pub construct: Option<String>,
    /// `<decimal>@<bits>`
    #[arg(long)]
    pub literal: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Knauf,
    Fk,
    Dioph,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Matrix,
    Set,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    /// `ln q_{N_m} / scale(N_m)`
    Convergent,
    /// `(ln q_m - ln q_{m-w}) / (scale_m - scale_{m-w})`
    Increment,
    /// `ln d_{N_m} / scale(N_m)`
    D,
    /// The lower-bound diagnostic of a constructed number.
    Diagnostic,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Print the Farey set F_n from infinity down to zero.
    Farey {
        #[arg(long, short = 'n')]
        n: usize,
    },
    /// Continued fraction expansion and convergent table.
    Cf {
        #[command(flatten)]
        alpha: AlphaArgs,
        /// Quotients to show (all of a finite expansion by default).
        #[arg(long)]
        depth: Option<usize>,
    },
    /// One partition function value.
    Partition {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long = "N", alias = "n")]
        n: usize,
        #[arg(long)]
        beta: Option<String>,
        /// Fiala-Kleban parameter.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Knauf only: matrix form or the sum over F_N.
        #[arg(long, value_enum, default_value = "matrix")]
        form: Form,
        #[command(flatten)]
        alpha: AlphaArgs,
        /// Add the `1/0` term to the Diophantine sum.
        #[arg(long)]
        infinity: bool,
        /// Emit every term instead of the total.
        #[arg(long)]
        terms: bool,
    },
    /// A free-energy series, over N or over convergent checkpoints.
    FreeEnergy {
        #[command(flatten)]
        alpha: AlphaArgs,
        #[arg(long)]
        beta: Option<String>,
        /// N^k or sqrtN_logN.
        #[arg(long)]
        scale: Option<String>,
        /// Enumerate ln Z_N over `a..b` (inclusive) instead of checkpoints.
        #[arg(long)]
        n_range: Option<String>,
        /// Deepest checkpoint m.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum)]
        estimator: Option<Estimator>,
        /// Print logarithms of the estimates (for values that underflow).
        #[arg(long)]
        log: bool,
    },
    /// Classification report: which free-energy limits alpha has.
    Classify {
        #[command(flatten)]
        alpha: AlphaArgs,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        /// Comma-separated exponents k for the N^k scans.
        #[arg(long)]
        k_grid: Option<String>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Longest enumerated Z_N used for cross-checks.
        #[arg(long)]
        enum_n: Option<usize>,
    },
}

/// Distinct nonzero exit code per error kind.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) => 2,
        Error::CapExceeded(_) => 3,
        Error::PrecisionExhausted(_) => 4,
        Error::ZeroForm(_) => 5,
        Error::BoundaryHit(_) => 6,
        Error::Exhausted(_) => 7,
        Error::Io(_) => 8,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
