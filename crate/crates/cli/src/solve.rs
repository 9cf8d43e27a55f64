use anyhow::anyhow;
use clap::{Args, ValueEnum};
use polysjt::{iterative_solve, qn_solve, IterMethod, IterativeOptions, QnOptions, QnVariant, SolverTrace, Vector};
use serde::{Deserialize, Serialize};

use crate::output::{num, state_columns, Sink, Tabular};
use crate::problem::Problem;
use crate::{Classify, Outcome, ProblemArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Newton,
    ClassicRank1,
    ModifiedRank1,
    Jacobi,
    GaussSeidel,
    Sor,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = SolveMethod::Newton)]
    pub method: SolveMethod,
    /// SOR relaxation factor in (0, 2].
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Residual tolerance on the max norm of f(U).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Settings {
    QuasiNewton(QnOptions),
    Iterative(IterativeOptions),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: Problem,
    pub method: SolveMethod,
    pub settings: Settings,
    pub start: Vector,
    pub trace: SolverTrace,
}

impl Tabular for SolveReport {
    fn header(&self) -> Vec<String> {
        ["k", "residual", "step"]
            .into_iter()
            .map(String::from)
            .chain(state_columns("U", self.start.len()))
            .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let t = &self.trace;
        (0..t.iterates.len())
            .map(|k| {
                let mut row = vec![k.to_string(), num(t.residual_norms[k]), num(t.step_norms[k])];
                row.extend(t.iterates[k].iter().copied().map(num));
                row
            })
            .collect()
    }
}

fn settings(a: &SolveArgs) -> Settings {
    let qn = |variant| {
        let d = QnOptions::default();
        Settings::QuasiNewton(QnOptions {
            variant,
            tol: a.tol.unwrap_or(d.tol),
            max_iter: a.max_iter.unwrap_or(d.max_iter),
            ..d
        })
    };
    let it = |method| {
        let d = IterativeOptions::default();
        Settings::Iterative(IterativeOptions {
            method,
            omega: a.omega,
            tol: a.tol.unwrap_or(d.tol),
            max_iter: a.max_iter.unwrap_or(d.max_iter),
            ..d
        })
    };
    match a.method {
        SolveMethod::Newton => qn(QnVariant::Newton),
        SolveMethod::ClassicRank1 => qn(QnVariant::ClassicRank1),
        SolveMethod::ModifiedRank1 => qn(QnVariant::ModifiedRank1),
        SolveMethod::Jacobi => it(IterMethod::Jacobi),
        SolveMethod::GaussSeidel => it(IterMethod::GaussSeidel),
        SolveMethod::Sor => it(IterMethod::Sor),
    }
}

pub fn run(a: &SolveArgs, sink: &Sink) -> Outcome {
    let problem = a.problem.load()?;
    let system = problem
        .poly()
        .ok_or_else(|| anyhow!("`solve` needs a polynomial system of degree at most 3"))
        .usage()?;
    let start = problem.state_or_start(a.problem.state.as_deref()).usage()?;
    let settings = settings(a);
    let validated = match &settings {
        Settings::QuasiNewton(o) => o.validate(),
        Settings::Iterative(o) => o.validate(),
    };
    validated.usage()?;
    let trace = match &settings {
        Settings::QuasiNewton(o) => qn_solve(&system, &start, o),
        Settings::Iterative(o) => iterative_solve(&system, &start, o),
    }
    .numerical()?;
    let ok = trace.status.is_converged();
    eprintln!(
        "{}: {:?} after {} iterations, residual {:e}, U = {:?}",
        trace.method,
        trace.status,
        trace.iterations(),
        trace.final_residual(),
        trace.final_state().as_slice()
    );
    let report = SolveReport {
        problem,
        method: a.method,
        settings,
        start,
        trace,
    };
    sink.emit(&report).usage()?;
    Ok(ok)
}
