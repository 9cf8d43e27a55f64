//! Step-size bounds and definiteness certificates for time stepping on the
//! linearized form `dU/dt = A(U)·U + F`.

use serde::{Deserialize, Serialize};

use crate::burgers::SemiDiscreteIvp;
use crate::dense::{DenseMatrix, NormKind};
use crate::error::{Error, Result};
use crate::integrate::Method;
use crate::linalg::symmetric_eigenvalues;

/// Length of the real-axis stability interval of classic RK4.
pub const RK4_REAL_AXIS: f64 = 2.785;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub method: Method,
    pub norm_kind: NormKind,
    /// `‖A‖` in `norm_kind`.
    pub norm_value: f64,
    /// Largest stable step; `None` for implicit methods or a zero matrix.
    pub h_bound: Option<f64>,
    /// Whether the symmetric part of `A` is negative definite.
    pub negdef_certificate: Option<bool>,
    pub eig_max_symmetric_part: Option<f64>,
}

impl StabilityReport {
    /// Report for one step: explicit methods get a norm bound, implicit ones
    /// a definiteness certificate.
    pub fn for_matrix(method: Method, a: &DenseMatrix, norm_kind: NormKind) -> Result<Self> {
        let norm_value = a.norm(norm_kind);
        let (h_bound, negdef, eig) = match method {
            Method::ExplicitEuler | Method::Rk4 => {
                let h = if method == Method::Rk4 {
                    step_bound_rk4(a, norm_kind)
                } else {
                    step_bound_explicit_euler(a, norm_kind)
                };
                let h = match h {
                    Ok(h) => Some(h),
                    Err(Error::Unrestricted) => None,
                    Err(e) => return Err(e),
                };
                (h, None, None)
            }
            Method::ImplicitEuler | Method::SemiImplicitEuler => {
                let (ok, lmax) = is_negative_definite(a, 0.0)?;
                (None, Some(ok), Some(lmax))
            }
        };
        Ok(StabilityReport {
            method,
            norm_kind,
            norm_value,
            h_bound,
            negdef_certificate: negdef,
            eig_max_symmetric_part: eig,
        })
    }
}

fn norm_bound(a: &DenseMatrix, norm_kind: NormKind, c: f64) -> Result<f64> {
    if !a.is_square() {
        return Err(crate::error::shape_err("step bound", "square matrix", format!("{:?}", a.shape())));
    }
    let norm = a.norm(norm_kind);
    if norm == 0.0 {
        return Err(Error::Unrestricted);
    }
    Ok(c / norm)
}

/// `2/‖A‖`: sufficient for explicit Euler since every eigenvalue is bounded
/// by the norm.
pub fn step_bound_explicit_euler(a: &DenseMatrix, norm_kind: NormKind) -> Result<f64> {
    norm_bound(a, norm_kind, 2.0)
}

/// `2.785/‖A‖`.
pub fn step_bound_rk4(a: &DenseMatrix, norm_kind: NormKind) -> Result<f64> {
    norm_bound(a, norm_kind, RK4_REAL_AXIS)
}

/// A-priori explicit Euler bound for the Burgers discretization,
/// `2 / ((1/Re)‖B_x‖ + ‖A_x‖·‖U‖∞)`.
///
/// The state enters through its max norm, which bounds the convection part
/// in both the L1 and L∞ matrix norms, so the result never exceeds
/// `2/‖A(U)‖`.
pub fn burgers_step_bound(ivp: &SemiDiscreteIvp, u: &[f64], reynolds: f64, norm_kind: NormKind) -> Result<f64> {
    let ops = ivp
        .burgers
        .as_ref()
        .ok_or_else(|| Error::Invalid("problem does not carry Burgers difference matrices".into()))?;
    if u.len() != ivp.n {
        return Err(crate::error::shape_err("burgers_step_bound", ivp.n, u.len()));
    }
    if !(reynolds > 0.0) {
        return Err(Error::Invalid(format!("Reynolds number must be positive, got {reynolds}")));
    }
    let u_norm = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(2.0 / (ops.b_x.norm(norm_kind) / reynolds + ops.a_x.norm(norm_kind) * u_norm))
}

/// `(λmax(½(A + Aᵀ)) < −tol, λmax)`.
pub fn is_negative_definite(a: &DenseMatrix, tol: f64) -> Result<(bool, f64)> {
    let eig = symmetric_eigenvalues(a)?;
    let lmax = eig.last().copied().unwrap_or(f64::NEG_INFINITY);
    Ok((lmax < -tol, lmax))
}
