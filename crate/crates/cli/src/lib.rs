//! Command-line front end for the `polysjt` library.
//!
//! Exit codes: 0 on success, 1 on usage or IO errors, 2 when a numerical
//! method fails (non-convergence, divergence, singular systems).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod check;
pub mod integrate;
pub mod output;
pub mod problem;
pub mod solve;
pub mod stability;

use output::{Format, Sink};
use problem::{PresetParams, Problem};

#[derive(Debug, Parser)]
#[command(name = "polysjt", version, about = "Polynomial systems, exact Jacobians, rank-one solvers and step-size bounds")]
pub struct Cli {
    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve f(U) = 0 with a quasi-Newton or sweep method.
    Solve(solve::SolveArgs),
    /// Compare the exact Jacobian against finite differences and an approximation.
    CheckJacobian(check::CheckArgs),
    /// Step-size bounds and the definiteness certificate at one state.
    Stability(stability::StabilityArgs),
    /// Time-step dU/dt = rhs(U), or scan for the blow-up step size.
    Integrate(integrate::IntegrateArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Preset name (`circle-cubic`, `burgers`) or a JSON file: a polynomial system,
    /// an expression tree, or a report written by this tool.
    pub input: String,
    /// Grid size for `burgers`, or the dimension of an expression tree.
    #[arg(long)]
    pub n: Option<usize>,
    /// Reynolds number for `burgers`.
    #[arg(long = "re", default_value_t = 100.0)]
    pub reynolds: f64,
    /// Comma-separated state (defaults to the problem's start state).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub state: Option<Vec<f64>>,
}

impl ProblemArgs {
    pub fn load(&self) -> Result<Problem, Failure> {
        if !(self.reynolds > 0.0) {
            return Err(Failure::Usage(anyhow::anyhow!("--re must be positive")));
        }
        Problem::load(
            &self.input,
            PresetParams {
                n: self.n,
                reynolds: self.reynolds,
            },
        )
        .usage()
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

pub trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn numerical(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn numerical(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Numerical(e.into()))
    }
}

/// Result of a command that ran to the end: `false` means the numerical
/// method itself reported failure.
pub type Outcome = Result<bool, Failure>;

pub fn execute(cli: &Cli) -> Outcome {
    let sink = Sink {
        format: cli.format,
        out: cli.out.clone(),
    };
    match &cli.command {
        Command::Solve(a) => solve::run(a, &sink),
        Command::CheckJacobian(a) => check::run(a, cli.seed, &sink),
        Command::Stability(a) => stability::run(a, &sink),
        Command::Integrate(a) => integrate::run(a, &sink),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            2
        }
    }
}
