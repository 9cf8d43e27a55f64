//! Dense factorizations backed by `nalgebra`: LU solves, inverses and
//! symmetric eigenvalues.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dense::{DenseMatrix, Vector};
use crate::error::{shape_err, Error, Result};

pub(crate) fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
pub struct Lu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl Lu {
    /// Factorizes `a`. Pivots below `n·ε·max|pivot|` are treated as singular.
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(shape_err("lu", "square matrix", format!("{:?}", a.shape())));
        }
        let n = a.rows();
        let lu = to_na(a).lu();
        let u = lu.u();
        let piv_max = (0..n).fold(0.0f64, |m, i| m.max(u[(i, i)].abs()));
        let piv_min = (0..n).fold(f64::INFINITY, |m, i| m.min(u[(i, i)].abs()));
        if n > 0 && (piv_max == 0.0 || piv_min <= (n as f64) * f64::EPSILON * piv_max || !piv_min.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(Lu { lu, n })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vector> {
        if b.len() != self.n {
            return Err(shape_err("lu_solve", self.n, b.len()));
        }
        let x = self
            .lu
            .solve(&DVector::from_column_slice(b))
            .ok_or(Error::Singular)?;
        Ok(Vector::new(x.as_slice().to_vec()))
    }
}

/// Solves `a x = b`.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vector> {
    Lu::new(a)?.solve(b)
}

pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let lu = Lu::new(a)?;
    let n = a.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        let col = lu.solve(&e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

pub fn determinant(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(shape_err("determinant", "square matrix", format!("{:?}", a.shape())));
    }
    Ok(to_na(a).determinant())
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(shape_err("eigenvalues", "square matrix", format!("{:?}", a.shape())));
    }
    if a.rows() == 0 {
        return Ok(Vec::new());
    }
    let sym = to_na(&a.symmetric_part());
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Spectral radius from the complex eigenvalues of a general square matrix.
pub fn spectral_radius(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(shape_err("spectral_radius", "square matrix", format!("{:?}", a.shape())));
    }
    let m = to_na(a);
    let ev = m.complex_eigenvalues();
    let rho = ev.iter().fold(0.0f64, |r, z| r.max(z.norm()));
    if rho.is_finite() {
        Ok(rho)
    } else {
        Err(Error::EigenFailure)
    }
}
