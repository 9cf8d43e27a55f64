//! Dense row-major matrices and vectors.
//!
//! These are deliberately plain containers: the algorithms in this crate
//! work at desk scale and compare against exact oracles, so there is no
//! sparse storage and no implicit broadcasting.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{shape_err, Error, Result};

/// Induced matrix norm selector (and the matching vector norm).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Maximum absolute column sum.
    L1,
    /// Maximum absolute row sum.
    #[default]
    Linf,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::L1 => f.write_str("l1"),
            NormKind::Linf => f.write_str("linf"),
        }
    }
}

/// A real vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Self {
        Vector(data)
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        Vector(vec![1.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Vector(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Vector((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Returns the index of the first non-finite entry.
    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.0.iter().position(|x| !x.is_finite()) {
            Some(index) => Err(Error::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Vector norm compatible with the given induced matrix norm.
    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L1 => self.norm_l1(),
            NormKind::Linf => self.norm_inf(),
        }
    }

    pub fn scale(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|x| k * x).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + k * other`
    pub fn axpy(&self, k: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + k * b).collect())
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&x| f(x)).collect())
    }

    /// The vector as an `n x 1` column matrix.
    pub fn to_column(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.len(),
            cols: 1,
            data: self.0.clone(),
        }
    }

    /// The vector as a `1 x n` row matrix.
    pub fn to_row(&self) -> DenseMatrix {
        DenseMatrix {
            rows: 1,
            cols: self.len(),
            data: self.0.clone(),
        }
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// The all-ones matrix (Hadamard unit).
    pub fn ones(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![1.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data, checking the length and finiteness.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(
                "from_row_major",
                format!("{} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix",
                index,
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Row-major construction without the finiteness check; used for
    /// computed results that may legitimately overflow.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Ragged input is rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(shape_err(
                    "from_rows",
                    format!("{c} columns"),
                    format!("{} columns in row {i}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, k: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| k * x).collect(),
        }
    }

    fn zip_with(&self, other: &DenseMatrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(shape_err(
                op,
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// `self + k * other`, shapes must agree.
    pub fn axpy(&self, k: f64, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "axpy", |a, b| a + k * b)
    }

    pub(crate) fn hadamard_unchecked(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "hadamard_product", |a, b| a * b)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(shape_err(
                "matmul",
                format!("{} rows", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vector> {
        if self.cols != x.len() {
            return Err(shape_err(
                "matvec",
                format!("length {}", self.cols),
                format!("length {}", x.len()),
            ));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Rank-one update `self + a * b^T`.
    pub fn add_outer(&self, a: &[f64], b: &[f64]) -> Result<DenseMatrix> {
        if a.len() != self.rows || b.len() != self.cols {
            return Err(shape_err(
                "add_outer",
                format!("{:?}", self.shape()),
                format!("({}, {})", a.len(), b.len()),
            ));
        }
        let mut out = self.clone();
        for (i, &ai) in a.iter().enumerate() {
            for (d, &bj) in out.row_mut(i).iter_mut().zip(b) {
                *d += ai * bj;
            }
        }
        Ok(out)
    }

    pub fn outer(a: &[f64], b: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
    }

    /// Symmetric part `(A + A^T) / 2`.
    pub fn symmetric_part(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn norm_l1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L1 => self.norm_l1(),
            NormKind::Linf => self.norm_inf(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn diagonal(&self) -> Vector {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Serialize for DenseMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        DenseMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Max-abs relative difference `max|a-b| / max(1, max|b|)`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_small_matrix() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.norm_l1(), 6.0);
        assert_eq!(a.norm_inf(), 7.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let err = DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert_eq!(err, Error::NonFinite { what: "matrix", index: 1 });
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().to_rows(), vec![vec![2.0, 1.0], vec![4.0, 3.0]]);
    }

    #[test]
    fn serde_nested_rows() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.5]]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[1.0,2.5]]");
        let b: DenseMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
