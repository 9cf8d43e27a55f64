//! Newton and rank-one quasi-Newton root finding.
//!
//! The classic update enforces the secant equation `J·q = δf`. The modified
//! update instead enforces `J_i·U_i − J_{i−1}·U_{i−1} = y` with
//! `y = f̄(U_i) − f̄(U_{i−1})`, which is exact for polynomial systems because
//! `f̄(U) = J(U)·U`. Written as `J_i = J_{i−1} + r·qᵀ`, that condition fixes
//! `r = (y − J_{i−1}·q) / (qᵀq + qᵀU_{i−1})`.
//!
//! Every update guards its denominator relative to the size of the terms it
//! is built from and reports [`Error::Guard`] naming the denominator.

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Vector};
use crate::error::{shape_err, Error, Result};
use crate::linalg::{inverse, Lu};
use crate::poly::PolySystem;
use crate::trace::{SolverStatus, SolverTrace};

/// Default relative denominator guard.
pub const DEFAULT_GUARD: f64 = 1e-12;

/// `‖J_inv·J − I‖∞` above which the pair is rebuilt from the exact Jacobian.
pub const PAIRING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QnVariant {
    Newton,
    ClassicRank1,
    ModifiedRank1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReinitPolicy {
    Never,
    OnGuardTrip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnOptions {
    pub variant: QnVariant,
    /// Convergence threshold on `‖f(U)‖∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative guard: a denominator `d` trips when `|d| ≤ denom_guard·scale(d)`.
    pub denom_guard: f64,
    pub reinit_policy: ReinitPolicy,
}

impl Default for QnOptions {
    fn default() -> Self {
        QnOptions {
            variant: QnVariant::ModifiedRank1,
            tol: 1e-10,
            max_iter: 100,
            denom_guard: DEFAULT_GUARD,
            reinit_policy: ReinitPolicy::OnGuardTrip,
        }
    }
}

impl QnOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.denom_guard > 0.0) {
            return Err(Error::Invalid("tol and denom_guard must be positive".into()));
        }
        Ok(())
    }
}

/// `f̄(U) = L·U + 2N⁽²⁾(U) + 3N⁽³⁾(U)`.
pub fn fbar(s: &PolySystem, u: &[f64]) -> Result<Vector> {
    s.fbar(u)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check(d: f64, scale: f64, guard: f64, name: &'static str) -> Result<f64> {
    if !d.is_finite() || d.abs() <= guard * scale || d == 0.0 {
        return Err(Error::Guard(name));
    }
    Ok(d)
}

fn check_square(op: &'static str, m: &DenseMatrix, n: usize) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(shape_err(op, format!("({n}, {n})"), format!("{:?}", m.shape())));
    }
    Ok(())
}

fn check_len(op: &'static str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(shape_err(op, n, v.len()));
    }
    Ok(())
}

/// `J = J_prev − (J_prev·q − δf)·qᵀ/(qᵀq)`.
pub fn classic_update(j_prev: &DenseMatrix, q: &[f64], delta_f: &[f64]) -> Result<DenseMatrix> {
    let n = q.len();
    check_square("classic_update", j_prev, n)?;
    check_len("classic_update", delta_f, n)?;
    let qq = check(dot(q, q), 0.0, 0.0, "q'q")?;
    let r = Vector::new(delta_f.to_vec()).sub(&j_prev.matvec(q)?).scale(1.0 / qq);
    j_prev.add_outer(&r, q)
}

/// Inverse counterpart of [`classic_update`]:
/// `J_inv = J_inv_prev − (J_inv_prev·δf − q)·qᵀJ_inv_prev / (qᵀJ_inv_prev·δf)`.
pub fn classic_inverse_update(jinv_prev: &DenseMatrix, q: &[f64], delta_f: &[f64]) -> Result<DenseMatrix> {
    classic_inverse_update_guarded(jinv_prev, q, delta_f, DEFAULT_GUARD)
}

pub fn classic_inverse_update_guarded(
    jinv_prev: &DenseMatrix,
    q: &[f64],
    delta_f: &[f64],
    guard: f64,
) -> Result<DenseMatrix> {
    let n = q.len();
    check_square("classic_inverse_update", jinv_prev, n)?;
    check_len("classic_inverse_update", delta_f, n)?;
    let h_df = jinv_prev.matvec(delta_f)?;
    let denom = check(dot(q, &h_df), norm2(q) * h_df.norm_l2(), guard, "q'Jinv df")?;
    let qt_h = jinv_prev.transpose().matvec(q)?;
    let num = h_df.sub(&Vector::new(q.to_vec())).scale(-1.0 / denom);
    jinv_prev.add_outer(&num, &qt_h)
}

/// Rank-one correction `r` with `J = J_prev + r·qᵀ`.
fn modified_direction(
    j_prev: &DenseMatrix,
    u_prev: &[f64],
    u_cur: &[f64],
    y: &[f64],
    guard: f64,
) -> Result<(Vector, Vector)> {
    let n = u_prev.len();
    check_square("modified_update", j_prev, n)?;
    check_len("modified_update", u_cur, n)?;
    check_len("modified_update", y, n)?;
    let q: Vector = u_cur.iter().zip(u_prev).map(|(a, b)| a - b).collect();
    let qq = check(q.dot(&q), 0.0, 0.0, "q'q")?;
    let qn = q.norm_l2();
    let d = check(
        qq + dot(&q, u_prev),
        qn * (qn + norm2(u_prev)),
        guard,
        "q'q + q'U_prev",
    )?;
    let r = Vector::new(y.to_vec()).sub(&j_prev.matvec(&q)?).scale(1.0 / d);
    Ok((r, q))
}

/// Rank-one update satisfying `J·U_cur − J_prev·U_prev = y` exactly and
/// leaving `J_prev` unchanged on directions orthogonal to `q = U_cur − U_prev`.
pub fn modified_update(j_prev: &DenseMatrix, u_prev: &[f64], u_cur: &[f64], y: &[f64]) -> Result<DenseMatrix> {
    modified_update_guarded(j_prev, u_prev, u_cur, y, DEFAULT_GUARD)
}

pub fn modified_update_guarded(
    j_prev: &DenseMatrix,
    u_prev: &[f64],
    u_cur: &[f64],
    y: &[f64],
    guard: f64,
) -> Result<DenseMatrix> {
    let (r, q) = modified_direction(j_prev, u_prev, u_cur, y, guard)?;
    j_prev.add_outer(&r, &q)
}

/// Sherman-Morrison inverse of [`modified_update`]'s result.
pub fn modified_inverse_update(
    jinv_prev: &DenseMatrix,
    j_prev: &DenseMatrix,
    u_prev: &[f64],
    u_cur: &[f64],
    y: &[f64],
) -> Result<DenseMatrix> {
    modified_inverse_update_guarded(jinv_prev, j_prev, u_prev, u_cur, y, DEFAULT_GUARD)
}

pub fn modified_inverse_update_guarded(
    jinv_prev: &DenseMatrix,
    j_prev: &DenseMatrix,
    u_prev: &[f64],
    u_cur: &[f64],
    y: &[f64],
    guard: f64,
) -> Result<DenseMatrix> {
    let (r, q) = modified_direction(j_prev, u_prev, u_cur, y, guard)?;
    check_square("modified_inverse_update", jinv_prev, q.len())?;
    sherman_morrison(jinv_prev, &r, &q, guard)
}

/// Inverse of `H⁻¹ + r·qᵀ` given `H = jinv`.
fn sherman_morrison(jinv: &DenseMatrix, r: &[f64], q: &[f64], guard: f64) -> Result<DenseMatrix> {
    let h_r = jinv.matvec(r)?;
    let qn = norm2(q);
    let denom = check(1.0 + dot(q, &h_r), 1.0 + qn * h_r.norm_l2(), guard, "1 + q'Jinv r")?;
    let qt_h = jinv.transpose().matvec(q)?;
    jinv.add_outer(&h_r.scale(-1.0 / denom), &qt_h)
}

fn pairing_error(jinv: &DenseMatrix, j: &DenseMatrix) -> Result<f64> {
    Ok(jinv.matmul(j)?.sub(&DenseMatrix::identity(j.rows()))?.norm_inf())
}

fn variant_name(v: QnVariant) -> &'static str {
    match v {
        QnVariant::Newton => "newton",
        QnVariant::ClassicRank1 => "classic-rank1",
        QnVariant::ModifiedRank1 => "modified-rank1",
    }
}

fn deviation_or_none(s: &PolySystem, u: &[f64], j: &DenseMatrix) -> Result<Option<f64>> {
    match s.jacobian_deviation(u, j) {
        Ok(d) => Ok(Some(d)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Solves `f(U) = 0`. The trace records the Jacobian approximation held at
/// every iterate together with its deviation from the exact Jacobian.
pub fn qn_solve(s: &PolySystem, u0: &[f64], opts: &QnOptions) -> Result<SolverTrace> {
    opts.validate()?;
    let n = s.dim();
    check_len("qn_solve", u0, n)?;
    let mut u = Vector::new(u0.to_vec());
    u.check_finite("initial state")?;
    let mut f = s.eval(&u)?;
    let mut trace = SolverTrace::start(variant_name(opts.variant), &u, f.norm_inf(), n);

    let mut j = s.jacobian(&u)?;
    let mut jinv = match opts.variant {
        QnVariant::Newton => DenseMatrix::zeros(n, n),
        _ => match inverse(&j) {
            Ok(m) => m,
            Err(Error::Singular) => {
                trace.status = SolverStatus::SingularJacobian { iteration: 0 };
                return Ok(trace);
            }
            Err(e) => return Err(e),
        },
    };

    let mut k = 0;
    loop {
        trace.jacobians.push(j.clone());
        trace.deviations.push(deviation_or_none(s, &u, &j)?);
        if f.norm_inf() <= opts.tol {
            trace.status = SolverStatus::Converged { iterations: k };
            break;
        }
        if k == opts.max_iter {
            trace.status = SolverStatus::MaxIterExceeded;
            break;
        }
        let step = match opts.variant {
            QnVariant::Newton => match Lu::new(&j).and_then(|lu| lu.solve(&f)) {
                Ok(x) => x.scale(-1.0),
                Err(Error::Singular) => {
                    trace.status = SolverStatus::SingularJacobian { iteration: k };
                    break;
                }
                Err(e) => return Err(e),
            },
            _ => jinv.matvec(&f)?.scale(-1.0),
        };
        let u_new = u.add(&step);
        k += 1;
        if !u_new.is_finite() || u_new.norm_inf() > crate::iterative::DIVERGENCE_LIMIT {
            trace.status = SolverStatus::Diverged { iteration: k };
            break;
        }
        let f_new = s.eval(&u_new)?;

        let updated = match opts.variant {
            QnVariant::Newton => Ok((s.jacobian(&u_new)?, jinv.clone())),
            QnVariant::ClassicRank1 => {
                let q = u_new.sub(&u);
                let df = f_new.sub(&f);
                classic_update(&j, &q, &df)
                    .and_then(|jn| Ok((jn, classic_inverse_update_guarded(&jinv, &q, &df, opts.denom_guard)?)))
            }
            QnVariant::ModifiedRank1 => {
                let y = s.fbar(&u_new)?.sub(&s.fbar(&u)?);
                modified_direction(&j, &u, &u_new, &y, opts.denom_guard).and_then(|(r, q)| {
                    Ok((j.add_outer(&r, &q)?, sherman_morrison(&jinv, &r, &q, opts.denom_guard)?))
                })
            }
        };

        let mut rebuild = false;
        match updated {
            Ok((jn, jinv_n)) => {
                j = jn;
                jinv = jinv_n;
                if opts.variant != QnVariant::Newton && pairing_error(&jinv, &j)? > PAIRING_TOL {
                    rebuild = true;
                }
            }
            Err(Error::Guard(name)) => match opts.reinit_policy {
                ReinitPolicy::OnGuardTrip => rebuild = true,
                ReinitPolicy::Never => {
                    trace.push(&u_new, f_new.norm_inf());
                    trace.status = SolverStatus::GuardTrip {
                        iteration: k,
                        denominator: name.to_string(),
                    };
                    break;
                }
            },
            Err(e) => return Err(e),
        }
        if rebuild {
            j = s.jacobian(&u_new)?;
            match inverse(&j) {
                Ok(m) => jinv = m,
                Err(Error::Singular) => {
                    trace.push(&u_new, f_new.norm_inf());
                    trace.status = SolverStatus::SingularJacobian { iteration: k };
                    break;
                }
                Err(e) => return Err(e),
            }
            trace.reinitializations += 1;
        }
        u = u_new;
        f = f_new;
        trace.push(&u, f.norm_inf());
    }
    Ok(trace)
}

/// Relative Jacobian deviation of every Jacobian approximation in `trace`;
/// `None` marks iterates where `f̄(U) = 0`.
pub fn deviation_report(s: &PolySystem, trace: &SolverTrace) -> Result<Vec<Option<f64>>> {
    if trace.jacobians.len() > trace.iterates.len() {
        return Err(Error::Invalid("trace holds more Jacobians than iterates".into()));
    }
    trace
        .jacobians
        .iter()
        .zip(&trace.iterates)
        .map(|(j, u)| deviation_or_none(s, u, j))
        .collect()
}
