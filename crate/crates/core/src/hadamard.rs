//! Hadamard (elementwise) algebra, Kronecker products and the SJT
//! row/column scaling products.
//!
//! The SJT products are the building blocks for exact Jacobians of
//! elementwise expressions: `sjt_post(A, u) = diag(u) A` scales row `i` by
//! `u[i]`, and `sjt_pre(v, A) = A diag(v)` scales column `j` by `v[j]`.

use crate::dense::{DenseMatrix, Vector};
use crate::error::{shape_err, Error, Result};

/// Elementwise product of two equally shaped matrices.
pub fn hadamard_product(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.hadamard_unchecked(b)
}

/// Raises a single scalar to `q` with the domain rules used by
/// [`hadamard_power`]. Integral exponents use repeated multiplication so a
/// negative base never takes the complex branch.
pub(crate) fn scalar_power(x: f64, q: f64) -> std::result::Result<f64, &'static str> {
    if q == 0.0 {
        return Ok(1.0);
    }
    if q < 0.0 && x == 0.0 {
        return Err("zero base with negative exponent");
    }
    if q.fract() == 0.0 && q.abs() <= i32::MAX as f64 {
        return Ok(x.powi(q as i32));
    }
    if x < 0.0 {
        return Err("negative base with fractional exponent");
    }
    Ok(x.powf(q))
}

/// Elementwise power `A^∘q`. `q = 0` gives the all-ones matrix and `q = -1`
/// the Hadamard inverse.
pub fn hadamard_power(a: &DenseMatrix, q: f64) -> Result<DenseMatrix> {
    let mut out = a.clone();
    let cols = a.cols();
    for (idx, x) in out.as_mut_slice().iter_mut().enumerate() {
        *x = scalar_power(*x, q).map_err(|reason| Error::Domain {
            op: "hadamard_power",
            row: idx / cols.max(1),
            col: idx % cols.max(1),
            reason: reason.to_string(),
        })?;
    }
    Ok(out)
}

/// Elementwise power of a vector; the error reports the vector index as `row`.
pub fn hadamard_power_vec(u: &[f64], q: f64) -> Result<Vector> {
    u.iter()
        .enumerate()
        .map(|(i, &x)| {
            scalar_power(x, q).map_err(|reason| Error::Domain {
                op: "hadamard_power",
                row: i,
                col: 0,
                reason: reason.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Vector::new)
}

/// Applies `f` to every entry. A non-finite result marks `f` as undefined at
/// that entry.
pub fn hadamard_function(f: impl Fn(f64) -> f64, a: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = a.clone();
    let cols = a.cols();
    for (idx, x) in out.as_mut_slice().iter_mut().enumerate() {
        let y = f(*x);
        if !y.is_finite() {
            return Err(Error::Domain {
                op: "hadamard_function",
                row: idx / cols.max(1),
                col: idx % cols.max(1),
                reason: format!("function undefined at {x}"),
            });
        }
        *x = y;
    }
    Ok(out)
}

/// Postmultiplying SJT product: `result[i][j] = a[i][j] * u[i]`.
pub fn sjt_post(a: &DenseMatrix, u: &[f64]) -> Result<DenseMatrix> {
    if u.len() != a.rows() {
        return Err(shape_err(
            "sjt_post",
            format!("length {}", a.rows()),
            format!("length {}", u.len()),
        ));
    }
    let mut out = a.clone();
    for (i, &ui) in u.iter().enumerate() {
        out.row_mut(i).iter_mut().for_each(|x| *x *= ui);
    }
    Ok(out)
}

/// Premultiplying SJT product: `result[i][j] = a[i][j] * v[j]`.
pub fn sjt_pre(v: &[f64], a: &DenseMatrix) -> Result<DenseMatrix> {
    if v.len() != a.cols() {
        return Err(shape_err(
            "sjt_pre",
            format!("length {}", a.cols()),
            format!("length {}", v.len()),
        ));
    }
    let mut out = a.clone();
    for i in 0..a.rows() {
        out.row_mut(i).iter_mut().zip(v).for_each(|(x, &vj)| *x *= vj);
    }
    Ok(out)
}

/// Kronecker product with the standard block layout.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two vectors, `(u ⊗ v)[i*len(v) + j] = u[i] v[j]`.
pub fn kron_vec(u: &[f64], v: &[f64]) -> Vector {
    u.iter().flat_map(|&a| v.iter().map(move |&b| a * b)).collect()
}

/// Column-stacking `vec(A)`.
pub fn vec_of(a: &DenseMatrix) -> Vector {
    let (r, c) = a.shape();
    (0..c).flat_map(|j| (0..r).map(move |i| (i, j))).map(|(i, j)| a[(i, j)]).collect()
}

/// Inverse of [`vec_of`]: reshape a length `rows*cols` vector column by column.
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    if v.len() != rows * cols {
        return Err(shape_err("unvec", rows * cols, v.len()));
    }
    Ok(DenseMatrix::from_fn(rows, cols, |i, j| v[j * rows + i]))
}

/// The selection matrix `E_N = [e_1⊗e_1 : … : e_N⊗e_N]` of size `N² x N`,
/// for which `A∘B = E_Nᵀ (A⊗B) E_M`.
pub fn selection_matrix(n: usize) -> DenseMatrix {
    let mut e = DenseMatrix::zeros(n * n, n);
    for i in 0..n {
        e[(i * n + i, i)] = 1.0;
    }
    e
}
