use anyhow::anyhow;
use clap::{Args, ValueEnum};
use polysjt::integrate::{integrate_with, scan_blowup_threshold_with, IntegrateOptions, ScanOptions};
use polysjt::stability::{burgers_step_bound, step_bound_explicit_euler, RK4_REAL_AXIS};
use polysjt::{Error, Ivp, Method, NormKind, Trajectory, TrajectoryStatus, Vector};
use serde::{Deserialize, Serialize};

use crate::output::{num, opt, state_columns, Sink, Tabular};
use crate::problem::Problem;
use crate::{Classify, Failure, Outcome, ProblemArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    ExplicitEuler,
    Rk4,
    ImplicitEuler,
    SemiImplicitEuler,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::ExplicitEuler => Method::ExplicitEuler,
            MethodArg::Rk4 => Method::Rk4,
            MethodArg::ImplicitEuler => Method::ImplicitEuler,
            MethodArg::SemiImplicitEuler => Method::SemiImplicitEuler,
        }
    }
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::ExplicitEuler)]
    pub method: MethodArg,
    /// Step size.
    #[arg(long, conflicts_with = "h_factor")]
    pub h: Option<f64>,
    /// Step size as a multiple of the a-priori bound at the start state.
    #[arg(long)]
    pub h_factor: Option<f64>,
    /// Number of steps (default: enough to cover --horizon).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Bisect for the largest step that keeps the solution bounded.
    #[arg(long)]
    pub scan: bool,
    /// Scan bracket as multiples of the a-priori bound.
    #[arg(long, default_value_t = 0.5)]
    pub scan_lo: f64,
    #[arg(long, default_value_t = 50.0)]
    pub scan_hi: f64,
    /// A scan probe is stable while max ‖U‖∞ stays within this multiple of ‖U0‖∞.
    #[arg(long, default_value_t = 2.0)]
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrateReport {
    pub problem: Problem,
    /// A-priori step bound at the start state (Burgers formula for Burgers
    /// problems, `2/‖A(U0)‖∞` otherwise, scaled for RK4).
    pub a_priori_bound: Option<f64>,
    pub trajectory: Trajectory,
}

impl Tabular for IntegrateReport {
    fn header(&self) -> Vec<String> {
        std::iter::once("t".to_string())
            .chain(state_columns("U", self.problem.dim()))
            .chain(["h_bound".to_string(), "negdef".to_string()])
            .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let t = &self.trajectory;
        t.states
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let mut row = vec![num(t.times[k])];
                row.extend(u.iter().copied().map(num));
                let rep = t.per_step_reports.get(k);
                row.push(opt(rep.and_then(|r| r.h_bound)));
                row.push(rep.and_then(|r| r.negdef_certificate).map(|b| b.to_string()).unwrap_or_default());
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub problem: Problem,
    pub method: Method,
    pub horizon: f64,
    pub growth_limit: f64,
    pub bracket: [f64; 2],
    pub a_priori_bound: f64,
    pub threshold: f64,
    /// `threshold / a_priori_bound`.
    pub ratio: f64,
}

impl Tabular for ScanReport {
    fn header(&self) -> Vec<String> {
        ["method", "horizon", "growth_limit", "h_lo", "h_hi", "a_priori_bound", "threshold", "ratio"]
            .into_iter()
            .map(String::from)
            .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            serde_json::to_value(self.method)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            num(self.horizon),
            num(self.growth_limit),
            num(self.bracket[0]),
            num(self.bracket[1]),
            num(self.a_priori_bound),
            num(self.threshold),
            num(self.ratio),
        ]]
    }
}

/// Explicit step bound at `u0`; `None` when the linearized matrix vanishes.
fn a_priori_bound(problem: &Problem, u0: &Vector, method: Method) -> polysjt::Result<Option<f64>> {
    let euler = match problem.semi_discrete().and_then(|ivp| ivp.burgers.as_ref().map(|o| (ivp, o))) {
        Some((ivp, ops)) => burgers_step_bound(ivp, u0, ops.reynolds, NormKind::Linf),
        None => step_bound_explicit_euler(&problem.linearized_matrix(u0)?, NormKind::Linf),
    };
    let euler = match euler {
        Ok(h) => h,
        Err(Error::Unrestricted) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(if method == Method::Rk4 { euler * RK4_REAL_AXIS / 2.0 } else { euler }))
}

fn usage(msg: &str) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

pub fn run(a: &IntegrateArgs, sink: &Sink) -> Outcome {
    let problem = a.problem.load()?;
    let u0 = problem.state_or_start(a.problem.state.as_deref()).usage()?;
    let method = Method::from(a.method);
    let bound = a_priori_bound(&problem, &u0, method).numerical()?;
    let ivp = Ivp::new(problem.rhs_source(), u0, 0.0).usage()?;

    if a.scan {
        let bound = bound.ok_or_else(|| usage("the a-priori bound is unrestricted, nothing to scan against"))?;
        if !(a.horizon > 0.0 && a.scan_lo > 0.0 && a.scan_lo < a.scan_hi && a.growth >= 1.0) {
            return Err(usage("need horizon > 0, 0 < scan-lo < scan-hi and growth >= 1"));
        }
        let bracket = [a.scan_lo * bound, a.scan_hi * bound];
        let opts = ScanOptions {
            growth_limit: a.growth,
            ..Default::default()
        };
        let threshold = scan_blowup_threshold_with(&ivp, method, bracket[0], bracket[1], a.horizon, &opts).numerical()?;
        let report = ScanReport {
            problem,
            method,
            horizon: a.horizon,
            growth_limit: a.growth,
            bracket,
            a_priori_bound: bound,
            threshold,
            ratio: threshold / bound,
        };
        eprintln!("threshold {threshold:.6e} vs a-priori bound {bound:.6e} (ratio {:.3})", report.ratio);
        sink.emit(&report).usage()?;
        return Ok(true);
    }

    let h = match (a.h, a.h_factor) {
        (Some(h), _) => h,
        (None, Some(f)) => f * bound.ok_or_else(|| usage("the a-priori bound is unrestricted, pass --h"))?,
        (None, None) => return Err(usage("pass --h or --h-factor")),
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(usage("step size must be positive"));
    }
    let steps = match a.steps {
        Some(s) => s,
        None if a.horizon > 0.0 => ((a.horizon / h).ceil() as usize).max(1),
        None => return Err(usage("horizon must be positive")),
    };
    let opts = IntegrateOptions {
        report: true,
        norm_kind: NormKind::Linf,
    };
    let trajectory = integrate_with(&ivp, method, h, steps, &opts).numerical()?;
    let ok = trajectory.completed();
    match trajectory.status {
        TrajectoryStatus::Completed => eprintln!(
            "completed {steps} steps of h = {h:e}, max norm {:e}",
            trajectory.max_norm()
        ),
        TrajectoryStatus::Diverged { step } => eprintln!("diverged at step {step} (h = {h:e})"),
        TrajectoryStatus::SolverFailed { step } => eprintln!("step solver failed at step {step} (h = {h:e})"),
    }
    let report = IntegrateReport {
        problem,
        a_priori_bound: bound,
        trajectory,
    };
    sink.emit(&report).usage()?;
    Ok(ok)
}
