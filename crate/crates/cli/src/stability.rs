use clap::Args;
use polysjt::linalg::spectral_radius;
use polysjt::pseudo_jacobian::{decompose, default_zero_tol, pj_step_bound_explicit};
use polysjt::stability::{burgers_step_bound, is_negative_definite, step_bound_explicit_euler, step_bound_rk4};
use polysjt::{Error, NormKind, Vector};
use serde::{Deserialize, Serialize};

use crate::output::{num, opt, Sink, Tabular};
use crate::problem::Problem;
use crate::{Classify, Outcome, ProblemArgs};

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
}

/// Step bounds in one norm; `None` marks an unrestricted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub norm: NormKind,
    /// Norm of `A(U)`.
    pub matrix_norm: f64,
    pub explicit_euler: Option<f64>,
    pub rk4: Option<f64>,
    /// Pseudo-Jacobian bounds: `2/(‖L‖ + ‖w‖‖vᵀ‖)` and `2/‖L + w vᵀ‖`.
    pub pj_relaxed: Option<f64>,
    pub pj_tight: Option<f64>,
    /// A-priori Burgers bound, for Burgers problems only.
    pub burgers: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub problem: Problem,
    pub state: Vector,
    pub rows: Vec<BoundRow>,
    /// `2/ρ(A(U))`.
    pub spectral_bound: Option<f64>,
    /// Whether the symmetric part of `A(U)` is negative definite.
    pub negdef: bool,
    pub lambda_max_symmetric: f64,
}

impl Tabular for StabilityTable {
    fn header(&self) -> Vec<String> {
        [
            "norm",
            "matrix_norm",
            "explicit_euler",
            "rk4",
            "pj_relaxed",
            "pj_tight",
            "burgers",
            "spectral_bound",
            "negdef",
            "lambda_max_symmetric",
        ]
        .into_iter()
        .map(String::from)
        .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    match r.norm {
                        NormKind::L1 => "l1".into(),
                        NormKind::Linf => "linf".into(),
                    },
                    num(r.matrix_norm),
                    opt(r.explicit_euler),
                    opt(r.rk4),
                    opt(r.pj_relaxed),
                    opt(r.pj_tight),
                    opt(r.burgers),
                    opt(self.spectral_bound),
                    self.negdef.to_string(),
                    num(self.lambda_max_symmetric),
                ]
            })
            .collect()
    }
}

fn restricted(r: polysjt::Result<f64>) -> polysjt::Result<Option<f64>> {
    match r {
        Ok(h) if h.is_finite() => Ok(Some(h)),
        Ok(_) | Err(Error::Unrestricted) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn table(problem: Problem, state: Vector) -> polysjt::Result<StabilityTable> {
    let a = problem.linearized_matrix(&state)?;
    let form = match problem.nonlinear_rhs() {
        Some(rhs) => Some(decompose(&rhs, 0.0, &state, default_zero_tol(&state))?),
        None => None,
    };
    let burgers = problem
        .semi_discrete()
        .and_then(|ivp| ivp.burgers.as_ref().map(|ops| (ivp, ops.reynolds)));
    let mut rows = Vec::new();
    for norm in [NormKind::L1, NormKind::Linf] {
        let (pj_relaxed, pj_tight) = match &form {
            Some(f) => match pj_step_bound_explicit(f, norm) {
                Ok((r, t)) => (Some(r), t.is_finite().then_some(t)),
                Err(Error::Unrestricted) => (None, None),
                Err(e) => return Err(e),
            },
            None => (None, None),
        };
        rows.push(BoundRow {
            norm,
            matrix_norm: a.norm(norm),
            explicit_euler: restricted(step_bound_explicit_euler(&a, norm))?,
            rk4: restricted(step_bound_rk4(&a, norm))?,
            pj_relaxed,
            pj_tight,
            burgers: match burgers {
                Some((ivp, re)) => Some(burgers_step_bound(ivp, &state, re, norm)?),
                None => None,
            },
        });
    }
    let rho = spectral_radius(&a)?;
    let (negdef, lambda_max_symmetric) = is_negative_definite(&a, 0.0)?;
    Ok(StabilityTable {
        problem,
        state,
        rows,
        spectral_bound: (rho > 0.0).then(|| 2.0 / rho),
        negdef,
        lambda_max_symmetric,
    })
}

pub fn run(a: &StabilityArgs, sink: &Sink) -> Outcome {
    let problem = a.problem.load()?;
    let state = problem.state_or_start(a.problem.state.as_deref()).usage()?;
    let t = table(problem, state).numerical()?;
    for r in &t.rows {
        eprintln!(
            "{:?}: euler {} rk4 {} pseudo-jacobian {} / {} burgers {}",
            r.norm,
            show(r.explicit_euler),
            show(r.rk4),
            show(r.pj_relaxed),
            show(r.pj_tight),
            show(r.burgers)
        );
    }
    eprintln!("negative definite: {} (lambda_max = {:e})", t.negdef, t.lambda_max_symmetric);
    sink.emit(&t).usage()?;
    Ok(true)
}

fn show(x: Option<f64>) -> String {
    x.map_or("-".into(), |x| format!("{x:.6e}"))
}
