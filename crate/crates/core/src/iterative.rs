//! Nonlinear Jacobi, Gauss-Seidel and SOR sweeps on `A(U)·U = −F`.
//!
//! Each sweep assembles the state-dependent matrix once at the sweep-start
//! iterate; within a Gauss-Seidel/SOR sweep only the solved components use
//! the partially updated vector, the coefficients stay frozen.

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Vector};
use crate::error::{Error, Result};
use crate::poly::PolySystem;
use crate::trace::{SolverStatus, SolverTrace};

/// `‖U‖∞` above which an iteration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterMethod {
    Jacobi,
    GaussSeidel,
    Sor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterativeOptions {
    pub method: IterMethod,
    /// Relaxation factor in `(0, 2]`; only used by SOR.
    pub omega: f64,
    /// Convergence threshold on `‖f(U)‖∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Diagonal entries with magnitude at or below this trigger a row interchange.
    pub pivot_tol: f64,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        IterativeOptions {
            method: IterMethod::GaussSeidel,
            omega: 1.0,
            tol: 1e-8,
            max_iter: 500,
            pivot_tol: 1e-12,
        }
    }
}

impl IterativeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 2.0) {
            return Err(Error::Invalid(format!("omega must lie in (0, 2], got {}", self.omega)));
        }
        if !(self.tol > 0.0) || !(self.pivot_tol > 0.0) {
            return Err(Error::Invalid("tol and pivot_tol must be positive".into()));
        }
        Ok(())
    }
}

enum SweepFailure {
    SingularPivot(usize),
    Other(Error),
}

impl From<Error> for SweepFailure {
    fn from(e: Error) -> Self {
        SweepFailure::Other(e)
    }
}

/// Ensures every diagonal entry exceeds `pivot_tol` by swapping equations.
///
/// For a bad row `i`, rows below are searched first, then rows above; a
/// candidate `j` must have `|a_ji|` and `|a_ij|` above the tolerance so the
/// swap does not break row `j`. The largest `|a_ji|` wins.
fn fix_pivots(a: &mut DenseMatrix, b: &mut [f64], perm: &mut [usize], pivot_tol: f64) -> Result<(), SweepFailure> {
    let n = b.len();
    for i in 0..n {
        if a[(i, i)].abs() > pivot_tol {
            continue;
        }
        let ok = |j: usize| a[(j, i)].abs() > pivot_tol && a[(i, j)].abs() > pivot_tol;
        let best = |range: &mut dyn Iterator<Item = usize>| {
            range
                .filter(|&j| ok(j))
                .max_by(|&x, &y| a[(x, i)].abs().total_cmp(&a[(y, i)].abs()))
        };
        let j = best(&mut (i + 1..n)).or_else(|| best(&mut (0..i)));
        let Some(j) = j else {
            return Err(SweepFailure::SingularPivot(i));
        };
        a.swap_rows(i, j);
        b.swap(i, j);
        perm.swap(i, j);
    }
    Ok(())
}

fn sweep_permuted(
    s: &PolySystem,
    u: &Vector,
    method: IterMethod,
    omega: f64,
    pivot_tol: f64,
    perm: &mut [usize],
) -> Result<Vector, SweepFailure> {
    let n = s.dim();
    let assembled = s.linearized_matrix(u)?.a;
    let rhs = s.constant();
    let mut a = DenseMatrix::from_fn(n, n, |r, c| assembled[(perm[r], c)]);
    let mut b: Vec<f64> = (0..n).map(|r| -rhs[perm[r]]).collect();
    fix_pivots(&mut a, &mut b, perm, pivot_tol)?;

    let mut x = u.clone();
    match method {
        IterMethod::Jacobi => {
            for i in 0..n {
                let row = a.row(i);
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| row[j] * u[j]).sum();
                x[i] = (b[i] - off) / row[i];
            }
        }
        IterMethod::GaussSeidel | IterMethod::Sor => {
            for i in 0..n {
                let row = a.row(i);
                let lower: f64 = (0..i).map(|j| row[j] * x[j]).sum();
                let upper: f64 = (i + 1..n).map(|j| row[j] * u[j]).sum();
                let gs = (b[i] - lower - upper) / row[i];
                x[i] = if method == IterMethod::Sor {
                    (1.0 - omega) * u[i] + omega * gs
                } else {
                    gs
                };
            }
        }
    }
    Ok(x)
}

/// One full sweep from `u` with the natural equation ordering (row
/// interchanges are applied if a diagonal entry vanishes).
pub fn sweep_once(s: &PolySystem, u: &[f64], method: IterMethod, omega: f64, pivot_tol: f64) -> Result<Vector> {
    if u.len() != s.dim() {
        return Err(crate::error::shape_err("sweep_once", s.dim(), u.len()));
    }
    let mut perm: Vec<usize> = (0..s.dim()).collect();
    sweep_permuted(s, &Vector::new(u.to_vec()), method, omega, pivot_tol, &mut perm).map_err(|e| match e {
        SweepFailure::SingularPivot(row) => Error::SingularPivot { row },
        SweepFailure::Other(e) => e,
    })
}

fn method_name(m: IterMethod) -> &'static str {
    match m {
        IterMethod::Jacobi => "jacobi",
        IterMethod::GaussSeidel => "gauss-seidel",
        IterMethod::Sor => "sor",
    }
}

/// Repeats sweeps until `‖f(U)‖∞ ≤ tol`. Row interchanges persist across
/// sweeps and are reported in the trace.
pub fn iterative_solve(s: &PolySystem, u0: &[f64], opts: &IterativeOptions) -> Result<SolverTrace> {
    opts.validate()?;
    let u0 = Vector::new(u0.to_vec());
    if u0.len() != s.dim() {
        return Err(crate::error::shape_err("iterative_solve", s.dim(), u0.len()));
    }
    u0.check_finite("initial state")?;
    let n = s.dim();
    let mut u = u0.clone();
    let mut trace = SolverTrace::start(method_name(opts.method), &u0, s.eval(&u)?.norm_inf(), n);
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..=opts.max_iter {
        if trace.final_residual() <= opts.tol {
            trace.status = SolverStatus::Converged { iterations: k };
            break;
        }
        if k == opts.max_iter {
            trace.status = SolverStatus::MaxIterExceeded;
            break;
        }
        match sweep_permuted(s, &u, opts.method, opts.omega, opts.pivot_tol, &mut perm) {
            Ok(next) => u = next,
            Err(SweepFailure::SingularPivot(row)) => {
                trace.status = SolverStatus::SingularPivot { row };
                break;
            }
            Err(SweepFailure::Other(e)) => return Err(e),
        }
        if !u.is_finite() || u.norm_inf() > DIVERGENCE_LIMIT {
            trace.status = SolverStatus::Diverged { iteration: k + 1 };
            break;
        }
        let r = s.eval(&u)?.norm_inf();
        trace.push(&u, r);
    }
    trace.permutation = perm;
    Ok(trace)
}
