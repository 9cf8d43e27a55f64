//! Rank-one pseudo-Jacobians for `dU/dt = L·U + N(t, U)` with an arbitrary
//! nonlinearity.
//!
//! Any `N(U)` can be written `w·vᵀ·U` with `w = N(U)` and `v = (1/n)·U^∘(−1)`,
//! because `vᵀU = 1`. The linearized matrix `L + w·vᵀ` is therefore exact at
//! the point of decomposition, which gives step bounds and cheap implicit
//! steps through Sherman-Morrison.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, NormKind, Vector};
use crate::error::{shape_err, Error, Result};
use crate::linalg::Lu;
use crate::poly::PolySystem;

type Nonlinearity = dyn Fn(f64, &[f64]) -> Result<Vector> + Send + Sync;

/// `rhs(t, U) = L·U + N(t, U)`.
pub struct NonlinearRhs {
    pub l: DenseMatrix,
    n: Box<Nonlinearity>,
}

impl fmt::Debug for NonlinearRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearRhs").field("l", &self.l).finish_non_exhaustive()
    }
}

impl NonlinearRhs {
    pub fn new(l: DenseMatrix, n: impl Fn(f64, &[f64]) -> Result<Vector> + Send + Sync + 'static) -> Result<Self> {
        if !l.is_square() {
            return Err(shape_err("NonlinearRhs", "square matrix", format!("{:?}", l.shape())));
        }
        Ok(NonlinearRhs { l, n: Box::new(n) })
    }

    /// Polynomial system as `L·U + (N⁽²⁾ + N⁽³⁾ + F)`.
    pub fn from_poly(s: &PolySystem) -> Self {
        let s2 = s.clone();
        NonlinearRhs {
            l: s.linear_part().clone(),
            n: Box::new(move |_, u| {
                let (n2, n3) = s2.nonlinear_parts(u)?;
                Ok(n2.add(&n3).add(s2.constant()))
            }),
        }
    }

    /// Burgers split: `L = (1/Re)·B_x`, `N(U) = −U ∘ (A_x·U)`.
    pub fn burgers(ops: &crate::burgers::BurgersOperators) -> Self {
        let a_x = ops.a_x.clone();
        NonlinearRhs {
            l: ops.b_x.scale(1.0 / ops.reynolds),
            n: Box::new(move |_, u| Ok(a_x.matvec(u)?.hadamard(&Vector::new(u.to_vec())).scale(-1.0))),
        }
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn nonlinear(&self, t: f64, u: &[f64]) -> Result<Vector> {
        if u.len() != self.dim() {
            return Err(shape_err("NonlinearRhs", self.dim(), u.len()));
        }
        let w = (self.n)(t, u)?;
        if w.len() != u.len() {
            return Err(shape_err("nonlinearity output", u.len(), w.len()));
        }
        Ok(w)
    }

    pub fn eval(&self, t: f64, u: &[f64]) -> Result<Vector> {
        Ok(self.l.matvec(u)?.add(&self.nonlinear(t, u)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneForm {
    pub l: DenseMatrix,
    pub w: Vector,
    pub v: Vector,
    /// Shift added to the state before decomposing, if any component was
    /// too close to zero.
    pub shift: Option<Vector>,
    /// State the decomposition is exact at (already shifted).
    pub u_at: Vector,
}

impl RankOneForm {
    /// `L + w·vᵀ`.
    pub fn matrix(&self) -> DenseMatrix {
        self.l.add_outer(&self.w, &self.v).expect("consistent shapes")
    }

    /// `(L + w·vᵀ)·x` without forming the matrix.
    pub fn apply(&self, x: &[f64]) -> Result<Vector> {
        Ok(self.l.matvec(x)?.axpy(self.v.dot(&Vector::new(x.to_vec())), &self.w))
    }
}

/// Default zero tolerance `1e-8·(1 + ‖U‖∞)`.
pub fn default_zero_tol(u: &[f64]) -> f64 {
    1e-8 * (1.0 + u.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

/// Decomposes `N(t, U)` as `w·vᵀ` at `U`. Components with `|U_i| ≤ zero_tol`
/// are moved to `U_i + 2·zero_tol·sign(U_i)` first (sign taken as +1 at 0);
/// the form then describes the rhs at the shifted state.
pub fn decompose(rhs: &NonlinearRhs, t: f64, u: &[f64], zero_tol: f64) -> Result<RankOneForm> {
    let n = rhs.dim();
    if u.len() != n {
        return Err(shape_err("decompose", n, u.len()));
    }
    let u = Vector::new(u.to_vec());
    u.check_finite("state")?;
    let shift: Vector = u
        .iter()
        .map(|&x| {
            if x.abs() <= zero_tol {
                2.0 * zero_tol * if x < 0.0 { -1.0 } else { 1.0 }
            } else {
                0.0
            }
        })
        .collect();
    let shifted = shift.iter().any(|&c| c != 0.0);
    let u_at = if shifted { u.add(&shift) } else { u };
    if u_at.contains(&0.0) {
        return Err(Error::Invalid("zero_tol too small to move zero components".into()));
    }
    let w = rhs.nonlinear(t, &u_at)?;
    let v = u_at.map(|x| 1.0 / (n as f64 * x));
    Ok(RankOneForm {
        l: rhs.l.clone(),
        w,
        v,
        shift: shifted.then_some(shift),
        u_at,
    })
}

/// `(2/(‖L‖ + ‖w‖·‖vᵀ‖), 2/‖L + w·vᵀ‖)`: the triangle-inequality bound and
/// the tight one. `w` is measured as an `n×1` matrix and `vᵀ` as `1×n`.
pub fn pj_step_bound_explicit(form: &RankOneForm, norm_kind: NormKind) -> Result<(f64, f64)> {
    let (w_norm, vt_norm) = match norm_kind {
        NormKind::L1 => (form.w.norm_l1(), form.v.norm_inf()),
        NormKind::Linf => (form.w.norm_inf(), form.v.norm_l1()),
    };
    let relaxed = form.l.norm(norm_kind) + w_norm * vt_norm;
    if relaxed == 0.0 {
        return Err(Error::Unrestricted);
    }
    let tight = form.matrix().norm(norm_kind);
    let tight = if tight == 0.0 { f64::INFINITY } else { 2.0 / tight };
    Ok((2.0 / relaxed, tight))
}

/// `[I − (L + w·vᵀ)h]⁻¹·U_n`: one factorization of `I − L·h` and a
/// Sherman-Morrison correction.
pub fn pj_implicit_step(form: &RankOneForm, u_n: &[f64], h: f64) -> Result<Vector> {
    let n = form.l.rows();
    if u_n.len() != n {
        return Err(shape_err("pj_implicit_step", n, u_n.len()));
    }
    let m = DenseMatrix::identity(n).axpy(-h, &form.l)?;
    let lu = Lu::new(&m)?;
    let x0 = lu.solve(u_n)?;
    let z = lu.solve(&form.w)?;
    let vz = form.v.dot(&z);
    let denom = 1.0 - h * vz;
    if !denom.is_finite() || denom.abs() <= 1e-12 * (1.0 + (h * vz).abs()) {
        return Err(Error::Guard("1 - h v'(I - Lh)^-1 w"));
    }
    Ok(x0.axpy(h * form.v.dot(&x0) / denom, &z))
}

/// `p(U)[j][k] = U_j / (n·U_k)`.
pub fn deviation_matrix(u: &[f64]) -> Result<DenseMatrix> {
    let n = u.len();
    if let Some(k) = u.iter().position(|&x| x == 0.0) {
        return Err(Error::Domain {
            op: "deviation_matrix",
            row: k,
            col: 0,
            reason: "state has a zero entry".into(),
        });
    }
    Ok(DenseMatrix::from_fn(n, n, |j, k| u[j] / (n as f64 * u[k])))
}

/// `Ĵ_N = (2N⁽²⁾(U) + 3N⁽³⁾(U))·((1/n)·U^∘(−1))ᵀ`.
pub fn pseudo_jacobian_of_poly(s: &PolySystem, u: &[f64]) -> Result<DenseMatrix> {
    let n = s.dim();
    if u.len() != n {
        return Err(shape_err("pseudo_jacobian_of_poly", n, u.len()));
    }
    if let Some(k) = u.iter().position(|&x| x == 0.0) {
        return Err(Error::Domain {
            op: "pseudo_jacobian_of_poly",
            row: k,
            col: 0,
            reason: "state has a zero entry".into(),
        });
    }
    let (n2, n3) = s.nonlinear_parts(u)?;
    let g = n2.scale(2.0).axpy(3.0, &n3);
    let v: Vec<f64> = u.iter().map(|&x| 1.0 / (n as f64 * x)).collect();
    Ok(DenseMatrix::outer(&g, &v))
}
