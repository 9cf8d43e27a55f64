//! Time integration of `dU/dt = rhs(U)` with per-step stability reports and
//! an empirical blow-up threshold scan.

use serde::{Deserialize, Serialize};

use crate::burgers::SemiDiscreteIvp;
use crate::dense::{rel_diff, DenseMatrix, NormKind, Vector};
use crate::error::{shape_err, Error, Result};
use crate::hexpr::{h_eval, h_jacobian, lower_to_poly};
use crate::linalg::{solve, Lu};
use crate::poly::PolySystem;
use crate::stability::StabilityReport;

/// `‖U‖∞` above which a trajectory is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

/// Picard tolerance and iteration cap for implicit Euler.
pub const PICARD_TOL: f64 = 1e-12;
pub const PICARD_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExplicitEuler,
    Rk4,
    ImplicitEuler,
    SemiImplicitEuler,
}

impl Method {
    pub fn is_explicit(self) -> bool {
        matches!(self, Method::ExplicitEuler | Method::Rk4)
    }
}

/// Right-hand side of an initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsSource {
    /// `rhs(U) = f(U) = L·U + N⁽²⁾(U) + N⁽³⁾(U) + F`.
    Poly(PolySystem),
    /// Expression-tree rhs; `lowered` holds the equivalent polynomial system
    /// when the tree is polynomial of degree ≤ 3.
    SemiDiscrete {
        ivp: SemiDiscreteIvp,
        lowered: Option<PolySystem>,
    },
}

impl RhsSource {
    pub fn semi_discrete(ivp: SemiDiscreteIvp) -> Self {
        let lowered = lower_to_poly(&ivp.rhs, ivp.n).ok();
        RhsSource::SemiDiscrete { ivp, lowered }
    }

    pub fn dim(&self) -> usize {
        match self {
            RhsSource::Poly(s) => s.dim(),
            RhsSource::SemiDiscrete { ivp, .. } => ivp.n,
        }
    }

    fn poly(&self) -> Option<&PolySystem> {
        match self {
            RhsSource::Poly(s) => Some(s),
            RhsSource::SemiDiscrete { lowered, .. } => lowered.as_ref(),
        }
    }

    pub fn rhs(&self, u: &[f64]) -> Result<Vector> {
        match self {
            RhsSource::Poly(s) => s.eval(u),
            RhsSource::SemiDiscrete { ivp, .. } => h_eval(&ivp.rhs, u),
        }
    }

    pub fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        match self {
            RhsSource::Poly(s) => s.jacobian(u),
            RhsSource::SemiDiscrete { ivp, .. } => h_jacobian(&ivp.rhs, u),
        }
    }

    /// `(A(U), F)` with `rhs(U) = A(U)·U + F`, when the rhs is polynomial.
    pub fn linearized(&self, u: &[f64]) -> Option<Result<(DenseMatrix, Vector)>> {
        self.poly()
            .map(|s| s.linearized_matrix(u).map(|lf| (lf.a, s.constant().clone())))
    }

    /// Matrix that stability reports are computed from: `A(U)` when
    /// available, the exact Jacobian otherwise.
    fn report_matrix(&self, u: &[f64]) -> Result<DenseMatrix> {
        match self.linearized(u) {
            Some(r) => r.map(|(a, _)| a),
            None => self.jacobian(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ivp {
    pub source: RhsSource,
    pub u0: Vector,
    pub t0: f64,
}

impl Ivp {
    pub fn new(source: RhsSource, u0: Vector, t0: f64) -> Result<Self> {
        if u0.len() != source.dim() {
            return Err(shape_err("Ivp", source.dim(), u0.len()));
        }
        u0.check_finite("initial state")?;
        Ok(Ivp { source, u0, t0 })
    }

    pub fn poly(s: PolySystem, u0: Vector) -> Result<Self> {
        Ivp::new(RhsSource::Poly(s), u0, 0.0)
    }

    pub fn semi_discrete(ivp: SemiDiscreteIvp, u0: Vector) -> Result<Self> {
        Ivp::new(RhsSource::semi_discrete(ivp), u0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    /// `‖U‖∞` left the admissible range during this step.
    Diverged { step: usize },
    /// The implicit solve failed during this step.
    SolverFailed { step: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub method: Method,
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// Entry `k` describes the step from `states[k]` to `states[k + 1]`.
    #[serde(default)]
    pub per_step_reports: Vec<StabilityReport>,
    pub status: TrajectoryStatus,
    /// Largest relative mismatch between the linearized explicit Euler update
    /// and `U + h·rhs(U)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_linearization_residual: Option<f64>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }

    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// `max_k ‖U_k‖∞`.
    pub fn max_norm(&self) -> f64 {
        self.states.iter().map(|s| s.norm_inf()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Attach a stability report for every step.
    pub report: bool,
    pub norm_kind: NormKind,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            report: false,
            norm_kind: NormKind::Linf,
        }
    }
}

enum StepFailure {
    Solver,
    Fatal(Error),
}

impl From<Error> for StepFailure {
    fn from(e: Error) -> Self {
        StepFailure::Fatal(e)
    }
}

fn lin_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vector, StepFailure> {
    match solve(a, b) {
        Ok(x) => Ok(x),
        Err(Error::Singular) => Err(StepFailure::Solver),
        Err(e) => Err(StepFailure::Fatal(e)),
    }
}

fn converged(prev: &Vector, next: &Vector) -> bool {
    next.sub(prev).norm_inf() <= PICARD_TOL * (1.0 + next.norm_inf())
}

fn implicit_euler_step(src: &RhsSource, u: &Vector, h: f64) -> Result<Vector, StepFailure> {
    let n = u.len();
    let eye = DenseMatrix::identity(n);
    let mut x = u.clone();
    for _ in 0..PICARD_MAX_ITER {
        let next = match src.linearized(&x) {
            // Picard on (I − h·A(x))·x⁺ = U_n + h·F
            Some(lin) => {
                let (a, f) = lin?;
                lin_solve(&eye.axpy(-h, &a)?, &u.axpy(h, &f))?
            }
            // Newton on x − U_n − h·rhs(x) = 0
            None => {
                let g = x.sub(u).axpy(-h, &src.rhs(&x)?);
                let jg = eye.axpy(-h, &src.jacobian(&x)?)?;
                x.sub(&lin_solve(&jg, &g)?)
            }
        };
        if !next.is_finite() {
            return Err(StepFailure::Solver);
        }
        if converged(&x, &next) {
            return Ok(next);
        }
        x = next;
    }
    Err(StepFailure::Solver)
}

struct Stepper<'a> {
    src: &'a RhsSource,
    method: Method,
    h: f64,
    max_residual: Option<f64>,
}

impl Stepper<'_> {
    fn step(&mut self, u: &Vector) -> Result<Vector, StepFailure> {
        let h = self.h;
        match self.method {
            Method::ExplicitEuler => {
                let direct = u.axpy(h, &self.src.rhs(u)?);
                match self.src.linearized(u) {
                    Some(lin) => {
                        // [I + h·A(U)]·U + h·F
                        let (a, f) = lin?;
                        let m = DenseMatrix::identity(u.len()).axpy(h, &a)?;
                        let next = m.matvec(u)?.axpy(h, &f);
                        let r = rel_diff(&next, &direct);
                        if r.is_finite() {
                            self.max_residual = Some(self.max_residual.map_or(r, |m| m.max(r)));
                        }
                        Ok(next)
                    }
                    None => Ok(direct),
                }
            }
            Method::Rk4 => {
                let k1 = self.src.rhs(u)?;
                let k2 = self.src.rhs(&u.axpy(0.5 * h, &k1))?;
                let k3 = self.src.rhs(&u.axpy(0.5 * h, &k2))?;
                let k4 = self.src.rhs(&u.axpy(h, &k3))?;
                let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).add(&k4);
                Ok(u.axpy(h / 6.0, &incr))
            }
            Method::ImplicitEuler => implicit_euler_step(self.src, u, h),
            Method::SemiImplicitEuler => {
                let j = self.src.jacobian(u)?;
                let m = DenseMatrix::identity(u.len()).axpy(-h, &j)?;
                let lu = match Lu::new(&m) {
                    Ok(lu) => lu,
                    Err(Error::Singular) => return Err(StepFailure::Solver),
                    Err(e) => return Err(e.into()),
                };
                Ok(u.axpy(h, &lu.solve(&self.src.rhs(u)?)?))
            }
        }
    }
}

/// Advances `steps` steps of size `h`.
pub fn integrate(ivp: &Ivp, method: Method, h: f64, steps: usize, report: bool) -> Result<Trajectory> {
    integrate_with(
        ivp,
        method,
        h,
        steps,
        &IntegrateOptions {
            report,
            ..Default::default()
        },
    )
}

pub fn integrate_with(ivp: &Ivp, method: Method, h: f64, steps: usize, opts: &IntegrateOptions) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("step size must be positive, got {h}")));
    }
    if ivp.u0.len() != ivp.source.dim() {
        return Err(shape_err("integrate", ivp.source.dim(), ivp.u0.len()));
    }
    let mut stepper = Stepper {
        src: &ivp.source,
        method,
        h,
        max_residual: None,
    };
    let mut traj = Trajectory {
        method,
        h,
        times: vec![ivp.t0],
        states: vec![ivp.u0.clone()],
        per_step_reports: Vec::new(),
        status: TrajectoryStatus::Completed,
        max_linearization_residual: None,
    };
    let mut u = ivp.u0.clone();
    for k in 0..steps {
        let next = match stepper.step(&u) {
            Ok(x) => x,
            Err(StepFailure::Solver) => {
                traj.status = TrajectoryStatus::SolverFailed { step: k + 1 };
                break;
            }
            Err(StepFailure::Fatal(e)) => return Err(e),
        };
        if !next.is_finite() || next.norm_inf() > DIVERGENCE_LIMIT {
            traj.status = TrajectoryStatus::Diverged { step: k + 1 };
            break;
        }
        if opts.report {
            let at = if method.is_explicit() || method == Method::SemiImplicitEuler { &u } else { &next };
            let a = ivp.source.report_matrix(at)?;
            traj.per_step_reports.push(StabilityReport::for_matrix(method, &a, opts.norm_kind)?);
        }
        u = next;
        traj.times.push(ivp.t0 + (k + 1) as f64 * h);
        traj.states.push(u.clone());
    }
    traj.max_linearization_residual = stepper.max_residual;
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// A probe counts as stable when it completes and
    /// `max_t ‖U‖∞ ≤ growth_limit·‖U0‖∞`.
    pub growth_limit: f64,
    /// Bisection stops once `(hi − lo)/hi` falls below this.
    pub rel_width: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            growth_limit: 1.0,
            rel_width: 0.02,
        }
    }
}

fn probe_stable(ivp: &Ivp, method: Method, h: f64, horizon: f64, limit: f64) -> Result<bool> {
    let steps = ((horizon / h).ceil() as usize).max(1);
    let traj = integrate(ivp, method, h, steps, false)?;
    Ok(traj.completed() && traj.max_norm() <= limit)
}

/// Largest step (to 2% relative width) for which `method` stays bounded by
/// the initial max norm over `horizon`.
pub fn scan_blowup_threshold(ivp: &Ivp, method: Method, h_lo: f64, h_hi: f64, horizon: f64) -> Result<f64> {
    scan_blowup_threshold_with(ivp, method, h_lo, h_hi, horizon, &ScanOptions::default())
}

pub fn scan_blowup_threshold_with(
    ivp: &Ivp,
    method: Method,
    h_lo: f64,
    h_hi: f64,
    horizon: f64,
    opts: &ScanOptions,
) -> Result<f64> {
    if !(h_lo > 0.0 && h_lo < h_hi && h_hi.is_finite()) {
        return Err(Error::Invalid(format!("need 0 < h_lo < h_hi, got [{h_lo}, {h_hi}]")));
    }
    if !(horizon > 0.0) || !(opts.growth_limit >= 1.0) || !(opts.rel_width > 0.0) {
        return Err(Error::Invalid("horizon, growth_limit and rel_width out of range".into()));
    }
    let norm0 = ivp.u0.norm_inf();
    if norm0 == 0.0 {
        return Err(Error::Invalid("scan needs a nonzero initial state".into()));
    }
    let limit = opts.growth_limit * norm0 * (1.0 + 1e-12);
    if !probe_stable(ivp, method, h_lo, horizon, limit)? {
        return Err(Error::Invalid(format!("lower bracket h = {h_lo} is not stable")));
    }
    if probe_stable(ivp, method, h_hi, horizon, limit)? {
        return Err(Error::Invalid(format!("upper bracket h = {h_hi} is not unstable")));
    }
    let (mut lo, mut hi) = (h_lo, h_hi);
    while (hi - lo) / hi > opts.rel_width {
        let mid = 0.5 * (lo + hi);
        if probe_stable(ivp, method, mid, horizon, limit)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
