//! Pointwise (Hadamard-form) nonlinear expressions and their exact
//! Jacobians via SJT-product chain rules.
//!
//! An [`HExpr`] is a tree over the state vector `U`. Jacobians are carried
//! in a structured form so the SJT rules apply directly: elementwise nodes
//! scale rows of the child Jacobian (`sjt_post`), and a linear map applied
//! to an elementwise function of `U` scales the columns of the map
//! (`sjt_pre`).

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Vector};
use crate::error::{shape_err, Error, Result};
use crate::hadamard::{scalar_power, sjt_post, sjt_pre};
use crate::poly::PolySystem;
use crate::tensor::HomogeneousForm;

/// Elementwise functions supported by [`HExpr::HFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HFunc {
    Sin,
    Cos,
    Exp,
}

impl HFunc {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            HFunc::Sin => x.sin(),
            HFunc::Cos => x.cos(),
            HFunc::Exp => x.exp(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            HFunc::Sin => x.cos(),
            HFunc::Cos => -x.sin(),
            HFunc::Exp => x.exp(),
        }
    }
}

fn state() -> Box<HExpr> {
    Box::new(HExpr::State)
}

/// Expression tree for formulation-H right-hand sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum HExpr {
    /// `matrix · child` (child defaults to the state).
    Linear {
        matrix: DenseMatrix,
        #[serde(default = "state")]
        child: Box<HExpr>,
    },
    /// The state vector `U`.
    State,
    /// Elementwise product of all children.
    HProduct { children: Vec<HExpr> },
    /// Elementwise power `child^∘q`.
    HPower {
        #[serde(default = "state")]
        child: Box<HExpr>,
        q: f64,
    },
    /// Elementwise function of the child.
    HFunction {
        name: HFunc,
        #[serde(default = "state")]
        child: Box<HExpr>,
    },
    /// `c ∘ child` for a fixed coefficient vector `c`.
    DiagScale {
        c: Vector,
        #[serde(default = "state")]
        child: Box<HExpr>,
    },
    /// `Σ weights[k] · children[k]`.
    Sum { children: Vec<HExpr>, weights: Vec<f64> },
}

impl HExpr {
    pub fn linear(matrix: DenseMatrix, child: HExpr) -> Self {
        HExpr::Linear {
            matrix,
            child: Box::new(child),
        }
    }

    /// `matrix · U`.
    pub fn linear_map(matrix: DenseMatrix) -> Self {
        Self::linear(matrix, HExpr::State)
    }

    pub fn product(children: Vec<HExpr>) -> Self {
        HExpr::HProduct { children }
    }

    pub fn power(child: HExpr, q: f64) -> Self {
        HExpr::HPower {
            child: Box::new(child),
            q,
        }
    }

    pub fn function(name: HFunc, child: HExpr) -> Self {
        HExpr::HFunction {
            name,
            child: Box::new(child),
        }
    }

    pub fn diag_scale(c: Vector, child: HExpr) -> Self {
        HExpr::DiagScale {
            c,
            child: Box::new(child),
        }
    }

    pub fn sum(children: Vec<HExpr>, weights: Vec<f64>) -> Self {
        HExpr::Sum { children, weights }
    }
}

/// Structured Jacobian used during the recursive assembly.
#[derive(Debug, Clone)]
enum Jac {
    Identity(usize),
    Diagonal(Vector),
    Dense(DenseMatrix),
}

impl Jac {
    fn into_dense(self) -> DenseMatrix {
        match self {
            Jac::Identity(n) => DenseMatrix::identity(n),
            Jac::Diagonal(d) => DenseMatrix::diag(&d),
            Jac::Dense(m) => m,
        }
    }

    fn diagonal(&self) -> Option<Vector> {
        match self {
            Jac::Identity(n) => Some(Vector::ones(*n)),
            Jac::Diagonal(d) => Some(d.clone()),
            Jac::Dense(_) => None,
        }
    }

    /// `diag(d) · self`, i.e. the SJT post-product with `d`.
    fn scale_rows(self, d: &Vector) -> Result<Jac> {
        Ok(match self {
            Jac::Identity(_) => Jac::Diagonal(d.clone()),
            Jac::Diagonal(e) => Jac::Diagonal(d.hadamard(&e)),
            Jac::Dense(m) => Jac::Dense(sjt_post(&m, d)?),
        })
    }

    /// `a + w · b`.
    fn add_scaled(a: Option<Jac>, w: f64, b: Jac) -> Result<Jac> {
        let Some(a) = a else {
            return Ok(match b {
                Jac::Identity(n) => Jac::Diagonal(Vector::filled(n, w)),
                Jac::Diagonal(d) => Jac::Diagonal(d.scale(w)),
                Jac::Dense(m) => Jac::Dense(m.scale(w)),
            });
        };
        if let (Some(da), Some(db)) = (a.diagonal(), b.diagonal()) {
            if da.len() != db.len() {
                return Err(shape_err("hexpr sum", da.len(), db.len()));
            }
            return Ok(Jac::Diagonal(da.axpy(w, &db)));
        }
        Ok(Jac::Dense(a.into_dense().axpy(w, &b.into_dense())?))
    }
}

fn power_derivative(v: &Vector, q: f64) -> Result<Vector> {
    if q == 0.0 {
        return Ok(Vector::zeros(v.len()));
    }
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            scalar_power(x, q - 1.0).map(|p| q * p).map_err(|reason| Error::Domain {
                op: "hpower derivative",
                row: i,
                col: 0,
                reason: reason.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Vector::new)
}

fn power_value(v: &Vector, q: f64) -> Result<Vector> {
    crate::hadamard::hadamard_power_vec(v, q)
}

fn function_values(name: HFunc, v: &Vector, f: impl Fn(HFunc, f64) -> f64) -> Result<Vector> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let y = f(name, x);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Domain {
                    op: "hfunction",
                    row: i,
                    col: 0,
                    reason: format!("{name:?} not finite at {x}"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(Vector::new)
}

/// Products of all entries except index `k`, for each `k`, without division.
fn leave_one_out_products(values: &[Vector]) -> Vec<Vector> {
    let m = values.len();
    let n = values.first().map_or(0, |v| v.len());
    let mut prefix = vec![Vector::ones(n)];
    for v in values.iter().take(m.saturating_sub(1)) {
        let next = prefix.last().unwrap().hadamard(v);
        prefix.push(next);
    }
    let mut out = vec![Vector::ones(n); m];
    let mut suffix = Vector::ones(n);
    for k in (0..m).rev() {
        out[k] = prefix[k].hadamard(&suffix);
        suffix = suffix.hadamard(&values[k]);
    }
    out
}

fn eval_node(e: &HExpr, u: &Vector, want_jac: bool) -> Result<(Vector, Option<Jac>)> {
    let n = u.len();
    match e {
        HExpr::State => Ok((u.clone(), want_jac.then_some(Jac::Identity(n)))),
        HExpr::Linear { matrix, child } => {
            let (v, jc) = eval_node(child, u, want_jac)?;
            if matrix.cols() != v.len() {
                return Err(shape_err("hexpr linear", format!("{} columns", v.len()), matrix.cols()));
            }
            let val = matrix.matvec(&v)?;
            let jac = match jc {
                None => None,
                Some(Jac::Identity(_)) => Some(Jac::Dense(matrix.clone())),
                // A · diag(d) is the SJT pre-product dᵀ ⋄ A
                Some(Jac::Diagonal(d)) => Some(Jac::Dense(sjt_pre(&d, matrix)?)),
                Some(Jac::Dense(j)) => Some(Jac::Dense(matrix.matmul(&j)?)),
            };
            Ok((val, jac))
        }
        HExpr::HProduct { children } => {
            if children.is_empty() {
                return Err(Error::Invalid("hproduct needs at least one child".into()));
            }
            let mut vals = Vec::with_capacity(children.len());
            let mut jacs = Vec::with_capacity(children.len());
            for c in children {
                let (v, j) = eval_node(c, u, want_jac)?;
                if let Some(first) = vals.first() {
                    let first: &Vector = first;
                    if first.len() != v.len() {
                        return Err(shape_err("hproduct", first.len(), v.len()));
                    }
                }
                vals.push(v);
                jacs.push(j);
            }
            let val = vals.iter().skip(1).fold(vals[0].clone(), |acc, v| acc.hadamard(v));
            if !want_jac {
                return Ok((val, None));
            }
            let others = leave_one_out_products(&vals);
            let mut acc: Option<Jac> = None;
            for (j, o) in jacs.into_iter().zip(&others) {
                let term = j.expect("jacobian requested").scale_rows(o)?;
                acc = Some(Jac::add_scaled(acc, 1.0, term)?);
            }
            Ok((val, acc))
        }
        HExpr::HPower { child, q } => {
            let (v, jc) = eval_node(child, u, want_jac)?;
            let val = power_value(&v, *q)?;
            let jac = match jc {
                Some(j) => Some(j.scale_rows(&power_derivative(&v, *q)?)?),
                None => None,
            };
            Ok((val, jac))
        }
        HExpr::HFunction { name, child } => {
            let (v, jc) = eval_node(child, u, want_jac)?;
            let val = function_values(*name, &v, HFunc::apply)?;
            let jac = match jc {
                Some(j) => Some(j.scale_rows(&function_values(*name, &v, HFunc::derivative)?)?),
                None => None,
            };
            Ok((val, jac))
        }
        HExpr::DiagScale { c, child } => {
            let (v, jc) = eval_node(child, u, want_jac)?;
            if c.len() != v.len() {
                return Err(shape_err("diagscale", v.len(), c.len()));
            }
            let val = c.hadamard(&v);
            let jac = match jc {
                Some(j) => Some(j.scale_rows(c)?),
                None => None,
            };
            Ok((val, jac))
        }
        HExpr::Sum { children, weights } => {
            if children.len() != weights.len() || children.is_empty() {
                return Err(shape_err("sum weights", children.len(), weights.len()));
            }
            let mut val: Option<Vector> = None;
            let mut jac: Option<Jac> = None;
            for (c, &w) in children.iter().zip(weights) {
                let (v, j) = eval_node(c, u, want_jac)?;
                val = Some(match val {
                    None => v.scale(w),
                    Some(acc) => {
                        if acc.len() != v.len() {
                            return Err(shape_err("sum", acc.len(), v.len()));
                        }
                        acc.axpy(w, &v)
                    }
                });
                if let Some(j) = j {
                    jac = Some(Jac::add_scaled(jac, w, j)?);
                }
            }
            Ok((val.expect("non-empty sum"), jac))
        }
    }
}

/// Evaluates the expression at `u`.
pub fn h_eval(e: &HExpr, u: &[f64]) -> Result<Vector> {
    Ok(eval_node(e, &Vector::new(u.to_vec()), false)?.0)
}

/// Exact Jacobian of the expression at `u`, assembled with SJT products.
pub fn h_jacobian(e: &HExpr, u: &[f64]) -> Result<DenseMatrix> {
    let (v, j) = eval_node(e, &Vector::new(u.to_vec()), true)?;
    let j = j.expect("jacobian requested").into_dense();
    if j.shape() != (v.len(), u.len()) {
        return Err(shape_err("h_jacobian", format!("({}, {})", v.len(), u.len()), format!("{:?}", j.shape())));
    }
    Ok(j)
}

/// Value and Jacobian in one pass.
pub fn h_eval_with_jacobian(e: &HExpr, u: &[f64]) -> Result<(Vector, DenseMatrix)> {
    let (v, j) = eval_node(e, &Vector::new(u.to_vec()), true)?;
    Ok((v, j.expect("jacobian requested").into_dense()))
}

/// Row-wise polynomial of degree ≤ 3 used while lowering: for each output
/// row `r`, `c0[r] + lin[r]·U + quad[r]·(U⊗U) + cub[r]·(U⊗U⊗U)`.
#[derive(Debug, Clone)]
struct RowPoly {
    n: usize,
    c0: Vec<f64>,
    lin: DenseMatrix,
    quad: Option<Vec<f64>>,
    cub: Option<Vec<f64>>,
}

impl RowPoly {
    fn rows(&self) -> usize {
        self.c0.len()
    }

    fn state(n: usize) -> Self {
        RowPoly {
            n,
            c0: vec![0.0; n],
            lin: DenseMatrix::identity(n),
            quad: None,
            cub: None,
        }
    }

    fn constant(n: usize, rows: usize, value: f64) -> Self {
        RowPoly {
            n,
            c0: vec![value; rows],
            lin: DenseMatrix::zeros(rows, n),
            quad: None,
            cub: None,
        }
    }

    fn degree(&self) -> usize {
        let nz = |v: &Option<Vec<f64>>| v.as_ref().is_some_and(|d| d.iter().any(|&x| x != 0.0));
        if nz(&self.cub) {
            3
        } else if nz(&self.quad) {
            2
        } else if self.lin.as_slice().iter().any(|&x| x != 0.0) {
            1
        } else {
            0
        }
    }

    fn scale_rows(&mut self, c: &[f64]) {
        let n = self.n;
        for (r, &cr) in c.iter().enumerate() {
            self.c0[r] *= cr;
            self.lin.row_mut(r).iter_mut().for_each(|x| *x *= cr);
            if let Some(q) = self.quad.as_mut() {
                q[r * n * n..(r + 1) * n * n].iter_mut().for_each(|x| *x *= cr);
            }
            if let Some(t) = self.cub.as_mut() {
                t[r * n * n * n..(r + 1) * n * n * n].iter_mut().for_each(|x| *x *= cr);
            }
        }
    }

    /// `matrix · self`.
    fn apply_matrix(&self, m: &DenseMatrix) -> Result<RowPoly> {
        if m.cols() != self.rows() {
            return Err(shape_err("hexpr linear", format!("{} columns", self.rows()), m.cols()));
        }
        let n = self.n;
        let out_rows = m.rows();
        let mix = |src: &[f64], width: usize| {
            let mut dst = vec![0.0; out_rows * width];
            for i in 0..out_rows {
                for (r, &a) in m.row(i).iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let s = &src[r * width..(r + 1) * width];
                    for (d, &x) in dst[i * width..(i + 1) * width].iter_mut().zip(s) {
                        *d += a * x;
                    }
                }
            }
            dst
        };
        Ok(RowPoly {
            n,
            c0: mix(&self.c0, 1),
            lin: DenseMatrix::from_vec_unchecked(out_rows, n, mix(self.lin.as_slice(), n)),
            quad: self.quad.as_ref().map(|q| mix(q, n * n)),
            cub: self.cub.as_ref().map(|t| mix(t, n * n * n)),
        })
    }

    fn add_scaled(&mut self, w: f64, other: &RowPoly) -> Result<()> {
        if other.rows() != self.rows() {
            return Err(shape_err("sum", self.rows(), other.rows()));
        }
        let axpy = |dst: &mut Option<Vec<f64>>, src: &Option<Vec<f64>>| {
            if let Some(s) = src {
                let d = dst.get_or_insert_with(|| vec![0.0; s.len()]);
                d.iter_mut().zip(s).for_each(|(a, b)| *a += w * b);
            }
        };
        self.c0.iter_mut().zip(&other.c0).for_each(|(a, b)| *a += w * b);
        self.lin = self.lin.axpy(w, &other.lin)?;
        axpy(&mut self.quad, &other.quad);
        axpy(&mut self.cub, &other.cub);
        Ok(())
    }

    fn mul(&self, other: &RowPoly) -> Result<RowPoly> {
        if other.rows() != self.rows() {
            return Err(shape_err("hproduct", self.rows(), other.rows()));
        }
        let (da, db) = (self.degree(), other.degree());
        if da + db > 3 {
            return Err(Error::NonPolynomial(format!("product of degrees {da} and {db} exceeds 3")));
        }
        let n = self.n;
        let rows = self.rows();
        let (n2, n3) = (n * n, n * n * n);
        let mut out = RowPoly::constant(n, rows, 0.0);
        let need_quad = da + db >= 2;
        let need_cub = da + db >= 3;
        let mut quad = need_quad.then(|| vec![0.0; rows * n2]);
        let mut cub = need_cub.then(|| vec![0.0; rows * n3]);
        for r in 0..rows {
            let (a0, b0) = (self.c0[r], other.c0[r]);
            let (la, lb) = (self.lin.row(r), other.lin.row(r));
            out.c0[r] = a0 * b0;
            for (d, (&x, &y)) in out.lin.row_mut(r).iter_mut().zip(la.iter().zip(lb)) {
                *d = a0 * y + b0 * x;
            }
            let qa = self.quad.as_ref().map(|q| &q[r * n2..(r + 1) * n2]);
            let qb = other.quad.as_ref().map(|q| &q[r * n2..(r + 1) * n2]);
            if let Some(qd) = quad.as_mut() {
                let qd = &mut qd[r * n2..(r + 1) * n2];
                for j in 0..n {
                    if la[j] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        qd[j * n + k] += la[j] * lb[k];
                    }
                }
                if let Some(qb) = qb {
                    qd.iter_mut().zip(qb).for_each(|(d, &y)| *d += a0 * y);
                }
                if let Some(qa) = qa {
                    qd.iter_mut().zip(qa).for_each(|(d, &x)| *d += b0 * x);
                }
            }
            if let Some(cd) = cub.as_mut() {
                let cd = &mut cd[r * n3..(r + 1) * n3];
                // lin ⊗ quad in both orders
                if let Some(qb) = qb {
                    for j in 0..n {
                        if la[j] == 0.0 {
                            continue;
                        }
                        for (d, &y) in cd[j * n2..(j + 1) * n2].iter_mut().zip(qb) {
                            *d += la[j] * y;
                        }
                    }
                }
                if let Some(qa) = qa {
                    for (jk, &x) in qa.iter().enumerate() {
                        if x == 0.0 {
                            continue;
                        }
                        for l in 0..n {
                            cd[jk * n + l] += x * lb[l];
                        }
                    }
                }
                if let Some(cb) = other.cub.as_ref() {
                    cd.iter_mut().zip(&cb[r * n3..(r + 1) * n3]).for_each(|(d, &y)| *d += a0 * y);
                }
                if let Some(ca) = self.cub.as_ref() {
                    cd.iter_mut().zip(&ca[r * n3..(r + 1) * n3]).for_each(|(d, &x)| *d += b0 * x);
                }
            }
        }
        out.quad = quad;
        out.cub = cub;
        Ok(out)
    }
}

fn lower_node(e: &HExpr, n: usize) -> Result<RowPoly> {
    match e {
        HExpr::State => Ok(RowPoly::state(n)),
        HExpr::Linear { matrix, child } => lower_node(child, n)?.apply_matrix(matrix),
        HExpr::HProduct { children } => {
            let mut it = children.iter();
            let first = it
                .next()
                .ok_or_else(|| Error::Invalid("hproduct needs at least one child".into()))?;
            let mut acc = lower_node(first, n)?;
            for c in it {
                acc = acc.mul(&lower_node(c, n)?)?;
            }
            Ok(acc)
        }
        HExpr::HPower { child, q } => {
            if q.fract() != 0.0 || *q < 0.0 || *q > 3.0 {
                return Err(Error::NonPolynomial(format!("hpower with exponent {q}")));
            }
            let base = lower_node(child, n)?;
            let mut acc = RowPoly::constant(n, base.rows(), 1.0);
            for _ in 0..(*q as usize) {
                acc = acc.mul(&base)?;
            }
            Ok(acc)
        }
        HExpr::HFunction { name, .. } => Err(Error::NonPolynomial(format!("hfunction {name:?}"))),
        HExpr::DiagScale { c, child } => {
            let mut p = lower_node(child, n)?;
            if c.len() != p.rows() {
                return Err(shape_err("diagscale", p.rows(), c.len()));
            }
            p.scale_rows(c);
            Ok(p)
        }
        HExpr::Sum { children, weights } => {
            if children.len() != weights.len() || children.is_empty() {
                return Err(shape_err("sum weights", children.len(), weights.len()));
            }
            let mut acc: Option<RowPoly> = None;
            for (c, &w) in children.iter().zip(weights) {
                let p = lower_node(c, n)?;
                match acc.as_mut() {
                    None => {
                        let mut z = RowPoly::constant(n, p.rows(), 0.0);
                        z.add_scaled(w, &p)?;
                        acc = Some(z);
                    }
                    Some(a) => a.add_scaled(w, &p)?,
                }
            }
            Ok(acc.expect("non-empty sum"))
        }
    }
}

/// Lowers a polynomial expression over `U ∈ ℝⁿ` to an equivalent
/// [`PolySystem`]. Fails on elementwise functions, non-integral or
/// negative powers, and total degree above 3.
pub fn lower_to_poly(e: &HExpr, n: usize) -> Result<PolySystem> {
    let p = lower_node(e, n)?;
    if p.rows() != n {
        return Err(shape_err("lower_to_poly", format!("{n} output rows"), p.rows()));
    }
    let quadratic = match &p.quad {
        Some(q) => HomogeneousForm::from_flattened(n, 2, &DenseMatrix::from_vec_unchecked(n, n * n, q.clone()))?,
        None => HomogeneousForm::zero(n, 2),
    };
    let cubic = match &p.cub {
        Some(c) => HomogeneousForm::from_flattened(n, 3, &DenseMatrix::from_vec_unchecked(n, n * n * n, c.clone()))?,
        None => HomogeneousForm::zero(n, 3),
    };
    PolySystem::new(p.lin, quadratic, cubic, Vector::new(p.c0))
}
