//! Periodic central-difference semi-discretization of the viscous Burgers
//! equation `u_t + u u_x = u_xx / Re` on the unit interval.
//!
//! The grid has `n` points `x_i = i/n` with spacing `Δx = 1/n`; both
//! difference matrices are circulant, so they annihilate constants.

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Vector};
use crate::error::{Error, Result};
use crate::hexpr::HExpr;

/// The matrices behind a Burgers semi-discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurgersOperators {
    pub reynolds: f64,
    /// Central first difference, `(U_{i+1} − U_{i−1}) / (2Δx)`.
    pub a_x: DenseMatrix,
    /// Central second difference, `(U_{i+1} − 2U_i + U_{i−1}) / Δx²`.
    pub b_x: DenseMatrix,
}

/// `dU/dt = rhs(U)` with the right-hand side given as an expression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiDiscreteIvp {
    pub n: usize,
    pub rhs: HExpr,
    pub description: String,
    /// Present when the problem came from [`burgers_discretize`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burgers: Option<BurgersOperators>,
}

pub fn first_difference(n: usize) -> DenseMatrix {
    let dx = 1.0 / n as f64;
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, (i + 1) % n)] += 1.0 / (2.0 * dx);
        a[(i, (i + n - 1) % n)] -= 1.0 / (2.0 * dx);
    }
    a
}

pub fn second_difference(n: usize) -> DenseMatrix {
    let dx = 1.0 / n as f64;
    let inv = 1.0 / (dx * dx);
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        b[(i, i)] -= 2.0 * inv;
        b[(i, (i + 1) % n)] += inv;
        b[(i, (i + n - 1) % n)] += inv;
    }
    b
}

/// Grid points `x_i = i/n`.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

/// Samples of `sin(2πx)` on the periodic grid.
pub fn sine_initial_state(n: usize) -> Vector {
    grid(n)
        .into_iter()
        .map(|x| (2.0 * std::f64::consts::PI * x).sin())
        .collect()
}

/// Builds `rhs(U) = (1/Re)·B_x·U − U ∘ (A_x·U)`.
pub fn burgers_discretize(n: usize, reynolds: f64) -> Result<SemiDiscreteIvp> {
    if n < 4 {
        return Err(Error::Invalid(format!("Burgers grid needs n >= 4, got {n}")));
    }
    if !(reynolds > 0.0 && reynolds.is_finite()) {
        return Err(Error::Invalid(format!("Reynolds number must be positive, got {reynolds}")));
    }
    let a_x = first_difference(n);
    let b_x = second_difference(n);
    let rhs = HExpr::sum(
        vec![
            HExpr::linear_map(b_x.clone()),
            HExpr::product(vec![HExpr::State, HExpr::linear_map(a_x.clone())]),
        ],
        vec![1.0 / reynolds, -1.0],
    );
    Ok(SemiDiscreteIvp {
        n,
        rhs,
        description: format!("periodic Burgers, n = {n}, Re = {reynolds}"),
        burgers: Some(BurgersOperators { reynolds, a_x, b_x }),
    })
}

impl BurgersOperators {
    /// `A(U) = (1/Re)·B_x − ½[I⋄(A_x U) + A_x⋄U]`.
    pub fn linearized_matrix(&self, u: &[f64]) -> Result<DenseMatrix> {
        let axu = self.a_x.matvec(u)?;
        let conv = DenseMatrix::diag(&axu).add(&crate::hadamard::sjt_post(&self.a_x, u)?)?;
        self.b_x.scale(1.0 / self.reynolds).axpy(-0.5, &conv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexpr::{h_eval, h_jacobian};

    #[test]
    fn constant_state_has_zero_rhs() {
        let ivp = burgers_discretize(16, 10.0).unwrap();
        let r = h_eval(&ivp.rhs, &[0.7; 16]).unwrap();
        assert!(r.norm_inf() < 1e-12, "{r:?}");
    }

    #[test]
    fn small_grid_rejected() {
        assert!(burgers_discretize(3, 1.0).is_err());
        assert!(burgers_discretize(8, 0.0).is_err());
    }

    #[test]
    fn rhs_matches_direct_assembly() {
        let n = 8;
        let re = 10.0;
        let ivp = burgers_discretize(n, re).unwrap();
        let u = sine_initial_state(n);
        let h = 1.0 / n as f64;
        // hand-written stencils
        let expect: Vec<f64> = (0..n)
            .map(|i| {
                let (l, c, r) = (u[(i + n - 1) % n], u[i], u[(i + 1) % n]);
                (r - 2.0 * c + l) / (h * h) / re - c * (r - l) / (2.0 * h)
            })
            .collect();
        let got = h_eval(&ivp.rhs, &u).unwrap();
        for i in 0..n {
            assert!((got[i] - expect[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_sign_structure() {
        let n = 8;
        let ivp = burgers_discretize(n, 10.0).unwrap();
        let ops = ivp.burgers.as_ref().unwrap();
        let u = sine_initial_state(n);
        let j = h_jacobian(&ivp.rhs, &u).unwrap();
        let axu = ops.a_x.matvec(&u).unwrap();
        let expect = ops
            .b_x
            .scale(0.1)
            .sub(&DenseMatrix::diag(&axu))
            .unwrap()
            .sub(&crate::hadamard::sjt_post(&ops.a_x, &u).unwrap())
            .unwrap();
        assert!(j.sub(&expect).unwrap().max_abs() < 1e-12);
    }
}
