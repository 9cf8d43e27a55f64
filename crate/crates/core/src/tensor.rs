//! Homogeneous polynomial maps stored as symmetric coefficient tensors.
//!
//! An order-`m` term maps `U ∈ ℝⁿ` to `N(U)[i] = Σ T[i][j₁…jₘ] U_{j₁}…U_{jₘ}`
//! with `T` symmetric in its last `m` indices. The authoritative data is the
//! monomial coefficient table (one coefficient per equation and sorted index
//! multiset); the dense symmetric tensor is derived from it by spreading each
//! coefficient evenly over the distinct index permutations.
//!
//! Evaluation contracts one trailing index at a time, so the Jacobian is `m`
//! times the tensor contracted `m-1` times, which is the inductive structure
//! behind `m·N(U) = J(U)·U`.

use std::collections::BTreeMap;

use crate::dense::{DenseMatrix, Vector};
use crate::error::{shape_err, Error, Result};

/// Key of a monomial: equation index followed by the sorted variable indices.
pub type MonomialKey = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousForm {
    n: usize,
    order: usize,
    monomials: BTreeMap<MonomialKey, f64>,
    tensor: Vec<f64>,
}

/// All distinct permutations of a sorted slice, in lexicographic order.
pub(crate) fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    // next lexicographic permutation
    while let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) {
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
    out
}

impl HomogeneousForm {
    /// An all-zero term of the given order.
    pub fn zero(n: usize, order: usize) -> Self {
        assert!(order >= 1, "homogeneous order must be at least 1");
        HomogeneousForm {
            n,
            order,
            monomials: BTreeMap::new(),
            tensor: Vec::new(),
        }
    }

    /// Accumulates raw entries `(i, [j₁…jₘ], value)`; entries that differ only
    /// by the order of the `j` indices add into the same monomial.
    pub fn from_entries<'a, I>(n: usize, order: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, &'a [usize], f64)>,
    {
        let mut form = Self::zero(n, order);
        for (i, idx, value) in entries {
            if idx.len() != order {
                return Err(shape_err("homogeneous term", format!("{order} indices"), idx.len()));
            }
            if i >= n || idx.iter().any(|&j| j >= n) {
                return Err(Error::Invalid(format!(
                    "coefficient index ({i}, {idx:?}) out of range for n = {n}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what: "polynomial coefficient",
                    index: i,
                });
            }
            let mut key = Vec::with_capacity(order + 1);
            key.push(i);
            key.extend_from_slice(idx);
            key[1..].sort_unstable();
            *form.monomials.entry(key).or_insert(0.0) += value;
        }
        form.monomials.retain(|_, v| *v != 0.0);
        form.rebuild_tensor();
        Ok(form)
    }

    /// Builds the term from a flattened `n × n^m` coefficient matrix whose row
    /// `i` multiplies `U⊗…⊗U`. Asymmetric rows are symmetrized.
    pub fn from_flattened(n: usize, order: usize, rows: &DenseMatrix) -> Result<Self> {
        let width = n.pow(order as u32);
        if rows.shape() != (n, width) {
            return Err(shape_err(
                "from_flattened",
                format!("({n}, {width})"),
                format!("{:?}", rows.shape()),
            ));
        }
        let mut idx = vec![0usize; order];
        let mut entries = Vec::new();
        for i in 0..n {
            for (col, &v) in rows.row(i).iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let mut c = col;
                for slot in (0..order).rev() {
                    idx[slot] = c % n;
                    c /= n;
                }
                entries.push((i, idx.clone(), v));
            }
        }
        Self::from_entries(n, order, entries.iter().map(|(i, idx, v)| (*i, idx.as_slice(), *v)))
    }

    fn flat_index(&self, i: usize, idx: &[usize]) -> usize {
        idx.iter().fold(i, |acc, &j| acc * self.n + j)
    }

    fn rebuild_tensor(&mut self) {
        // zero terms keep no dense storage
        self.tensor = if self.monomials.is_empty() {
            Vec::new()
        } else {
            vec![0.0; self.n.pow(self.order as u32 + 1)]
        };
        let entries: Vec<(MonomialKey, f64)> = self.monomials.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for (key, coeff) in entries {
            let perms = distinct_permutations(&key[1..]);
            let share = coeff / perms.len() as f64;
            for p in perms {
                let at = self.flat_index(key[0], &p);
                self.tensor[at] = share;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Monomial coefficients keyed by `[i, j₁ ≤ … ≤ jₘ]`.
    pub fn monomials(&self) -> &BTreeMap<MonomialKey, f64> {
        &self.monomials
    }

    /// Symmetric tensor entry `T[i][j₁…jₘ]`.
    pub fn get(&self, i: usize, idx: &[usize]) -> f64 {
        if self.tensor.is_empty() {
            return 0.0;
        }
        self.tensor[self.flat_index(i, idx)]
    }

    /// Contracts the trailing index `times` times with `u`.
    fn contract(&self, u: &[f64], times: usize) -> Vec<f64> {
        let n = self.n;
        let dot = |c: &[f64]| c.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        if times == 0 {
            return self.tensor.clone();
        }
        let mut cur: Vec<f64> = self.tensor.chunks_exact(n).map(dot).collect();
        for _ in 1..times {
            cur = cur
                .chunks_exact(n)
                .map(dot)
                .collect();
        }
        cur
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vector> {
        self.check_len(u)?;
        if self.is_zero() {
            return Ok(Vector::zeros(self.n));
        }
        Ok(Vector::new(self.contract(u, self.order)))
    }

    /// Jacobian of this term alone: `m · T` contracted `m-1` times.
    pub fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        self.check_len(u)?;
        if self.is_zero() {
            return Ok(DenseMatrix::zeros(self.n, self.n));
        }
        let m = self.order as f64;
        let data: Vec<f64> = self.contract(u, self.order - 1).into_iter().map(|x| m * x).collect();
        Ok(DenseMatrix::from_vec_unchecked(self.n, self.n, data))
    }

    /// Largest absolute tensor entry, used to scale identity tolerances.
    pub fn scale(&self) -> f64 {
        self.tensor.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(shape_err("homogeneous term", format!("length {}", self.n), u.len()));
        }
        Ok(())
    }
}
