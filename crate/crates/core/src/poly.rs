//! Polynomial systems `f(U) = L·U + N⁽²⁾(U) + N⁽³⁾(U) + F` and their exact
//! calculus.
//!
//! Sign convention: the residual is `f(U)` as written and solvers seek
//! `f(U) = 0`. The state-dependent matrix `A(U) = L + ½J⁽²⁾(U) + ⅓J⁽³⁾(U)`
//! satisfies `A(U)·U = f(U) − F`, so fixed-point style methods target
//! `A(U)·U = −F`.

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Vector};
use crate::error::{shape_err, Error, Result};
use crate::tensor::HomogeneousForm;

/// A cubic-capped polynomial system in Kronecker form with symmetrized
/// coefficient tensors. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    linear: DenseMatrix,
    quadratic: HomogeneousForm,
    cubic: HomogeneousForm,
    constant: Vector,
}

/// `A(U)` together with the state it was assembled at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedForm {
    pub a: DenseMatrix,
    pub u_at: Vector,
}

/// Residuals of the identity `m·N⁽ᵐ⁾(U) = J⁽ᵐ⁾(U)·U` in the ∞-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub quadratic: f64,
    pub cubic: f64,
}

impl IdentityResiduals {
    /// Residuals divided by `(1 + ‖U‖∞)ᵐ`.
    pub fn scaled(&self, u: &[f64]) -> IdentityResiduals {
        let s = 1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        IdentityResiduals {
            quadratic: self.quadratic / (s * s),
            cubic: self.cubic / (s * s * s),
        }
    }
}

impl PolySystem {
    pub fn new(
        linear: DenseMatrix,
        quadratic: HomogeneousForm,
        cubic: HomogeneousForm,
        constant: Vector,
    ) -> Result<Self> {
        let n = constant.len();
        if linear.shape() != (n, n) {
            return Err(shape_err(
                "PolySystem::new",
                format!("linear part ({n}, {n})"),
                format!("{:?}", linear.shape()),
            ));
        }
        if !linear.is_finite() {
            return Err(Error::NonFinite { what: "linear part", index: 0 });
        }
        constant.check_finite("constant term")?;
        if quadratic.dim() != n || quadratic.order() != 2 {
            return Err(shape_err("PolySystem::new", format!("quadratic term of dim {n}"), quadratic.dim()));
        }
        if cubic.dim() != n || cubic.order() != 3 {
            return Err(shape_err("PolySystem::new", format!("cubic term of dim {n}"), cubic.dim()));
        }
        Ok(PolySystem {
            linear,
            quadratic,
            cubic,
            constant,
        })
    }

    /// A purely linear system `L·U + F`.
    pub fn linear(linear: DenseMatrix, constant: Vector) -> Result<Self> {
        let n = constant.len();
        Self::new(linear, HomogeneousForm::zero(n, 2), HomogeneousForm::zero(n, 3), constant)
    }

    /// Ingests the flattened form `K·C + G·(C⊗C) + R·(C⊗C⊗C) + F` with
    /// `G: n×n²` and `R: n×n³`. Rows of `G` and `R` are reshaped and
    /// symmetrized; this does not change the value of the system.
    pub fn from_kronecker(k: &DenseMatrix, g: &DenseMatrix, r: &DenseMatrix, f: &Vector) -> Result<Self> {
        let n = f.len();
        if k.shape() != (n, n) {
            return Err(shape_err("from_kronecker", format!("K ({n}, {n})"), format!("{:?}", k.shape())));
        }
        let quadratic = HomogeneousForm::from_flattened(n, 2, g)?;
        let cubic = HomogeneousForm::from_flattened(n, 3, r)?;
        Self::new(k.clone(), quadratic, cubic, f.clone())
    }

    pub fn dim(&self) -> usize {
        self.constant.len()
    }

    pub fn linear_part(&self) -> &DenseMatrix {
        &self.linear
    }

    pub fn quadratic(&self) -> &HomogeneousForm {
        &self.quadratic
    }

    pub fn cubic(&self) -> &HomogeneousForm {
        &self.cubic
    }

    pub fn constant(&self) -> &Vector {
        &self.constant
    }

    pub fn is_linear(&self) -> bool {
        self.quadratic.is_zero() && self.cubic.is_zero()
    }

    /// Same polynomial part with a different constant vector.
    pub fn with_constant(&self, constant: Vector) -> Result<Self> {
        Self::new(self.linear.clone(), self.quadratic.clone(), self.cubic.clone(), constant)
    }

    fn check_state(&self, u: &[f64], op: &'static str) -> Result<()> {
        if u.len() != self.dim() {
            return Err(shape_err(op, format!("length {}", self.dim()), u.len()));
        }
        Ok(())
    }

    /// `(N⁽²⁾(U), N⁽³⁾(U))`.
    pub fn nonlinear_parts(&self, u: &[f64]) -> Result<(Vector, Vector)> {
        self.check_state(u, "nonlinear_parts")?;
        Ok((self.quadratic.eval(u)?, self.cubic.eval(u)?))
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vector> {
        self.check_state(u, "eval")?;
        let (n2, n3) = self.nonlinear_parts(u)?;
        let lu = self.linear.matvec(u)?;
        Ok(lu.add(&n2).add(&n3).add(&self.constant))
    }

    /// `(J⁽²⁾(U), J⁽³⁾(U))`, the Jacobians of the quadratic and cubic parts alone.
    pub fn partial_jacobians(&self, u: &[f64]) -> Result<(DenseMatrix, DenseMatrix)> {
        self.check_state(u, "jacobian")?;
        Ok((self.quadratic.jacobian(u)?, self.cubic.jacobian(u)?))
    }

    /// Exact Jacobian `L + J⁽²⁾(U) + J⁽³⁾(U)`.
    pub fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        let (j2, j3) = self.partial_jacobians(u)?;
        self.linear.add(&j2)?.add(&j3)
    }

    /// Jacobian of the nonlinear part only, `J⁽²⁾ + J⁽³⁾`.
    pub fn nonlinear_jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        let (j2, j3) = self.partial_jacobians(u)?;
        j2.add(&j3)
    }

    /// `‖2N⁽²⁾ − J⁽²⁾U‖∞` and `‖3N⁽³⁾ − J⁽³⁾U‖∞`.
    pub fn degree_identity_check(&self, u: &[f64]) -> Result<IdentityResiduals> {
        let (n2, n3) = self.nonlinear_parts(u)?;
        let (j2, j3) = self.partial_jacobians(u)?;
        let r2 = n2.scale(2.0).sub(&j2.matvec(u)?).norm_inf();
        let r3 = n3.scale(3.0).sub(&j3.matvec(u)?).norm_inf();
        Ok(IdentityResiduals { quadratic: r2, cubic: r3 })
    }

    /// `A(U) = L + ½J⁽²⁾(U) + ⅓J⁽³⁾(U)`.
    pub fn linearized_matrix(&self, u: &[f64]) -> Result<LinearizedForm> {
        let (j2, j3) = self.partial_jacobians(u)?;
        let a = self.linear.axpy(0.5, &j2)?.axpy(1.0 / 3.0, &j3)?;
        Ok(LinearizedForm {
            a,
            u_at: Vector::new(u.to_vec()),
        })
    }

    /// `f̄(U) = L·U + 2N⁽²⁾(U) + 3N⁽³⁾(U)`, which equals `J(U)·U`.
    pub fn fbar(&self, u: &[f64]) -> Result<Vector> {
        let (n2, n3) = self.nonlinear_parts(u)?;
        Ok(self.linear.matvec(u)?.axpy(2.0, &n2).axpy(3.0, &n3))
    }

    /// Relative deviation `‖f̄(U) − Ĵ·U‖₂ / ‖f̄(U)‖₂` of an approximate
    /// Jacobian `Ĵ` from the exact one.
    pub fn jacobian_deviation(&self, u: &[f64], j_hat: &DenseMatrix) -> Result<f64> {
        if j_hat.shape() != (self.dim(), self.dim()) {
            return Err(shape_err(
                "jacobian_deviation",
                format!("({0}, {0})", self.dim()),
                format!("{:?}", j_hat.shape()),
            ));
        }
        let fb = self.fbar(u)?;
        let denom = fb.norm_l2();
        if denom == 0.0 {
            return Err(Error::Degenerate("f̄(U) = 0, deviation undefined"));
        }
        Ok(fb.sub(&j_hat.matvec(u)?).norm_l2() / denom)
    }

    /// Largest coefficient magnitude across all parts.
    pub fn coefficient_scale(&self) -> f64 {
        self.linear
            .max_abs()
            .max(self.quadratic.scale())
            .max(self.cubic.scale())
            .max(self.constant.norm_inf())
    }
}

impl LinearizedForm {
    /// `A·U_at`.
    pub fn apply(&self) -> Vector {
        self.a
            .matvec(&self.u_at)
            .expect("linearized form is square in the state dimension")
    }
}

/// JSON exchange format for [`PolySystem`].
///
/// `quadratic` holds `[i, j, k, value]` rows and `cubic` holds
/// `[i, j, k, l, value]` rows with 0-based indices; each row adds `value` to
/// the coefficient of the monomial `U_j U_k` (resp. `U_j U_k U_l`) in
/// equation `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySystemJson {
    pub n: usize,
    #[serde(rename = "L")]
    pub linear: Vec<Vec<f64>>,
    #[serde(default)]
    pub quadratic: Vec<Vec<f64>>,
    #[serde(default)]
    pub cubic: Vec<Vec<f64>>,
    #[serde(rename = "F")]
    pub constant: Vec<f64>,
}

fn parse_terms(rows: &[Vec<f64>], order: usize, field: &'static str) -> Result<Vec<(usize, Vec<usize>, f64)>> {
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            if row.len() != order + 2 {
                return Err(Error::Invalid(format!(
                    "field `{field}` entry {r}: expected {} numbers, got {}",
                    order + 2,
                    row.len()
                )));
            }
            let mut idx = Vec::with_capacity(order + 1);
            for &x in &row[..order + 1] {
                if x < 0.0 || x.fract() != 0.0 || !x.is_finite() {
                    return Err(Error::Invalid(format!(
                        "field `{field}` entry {r}: index {x} is not a non-negative integer"
                    )));
                }
                idx.push(x as usize);
            }
            Ok((idx[0], idx[1..].to_vec(), row[order + 1]))
        })
        .collect()
}

impl TryFrom<PolySystemJson> for PolySystem {
    type Error = Error;

    fn try_from(j: PolySystemJson) -> Result<Self> {
        let n = j.n;
        if j.constant.len() != n {
            return Err(Error::Invalid(format!("field `F`: expected length {n}, got {}", j.constant.len())));
        }
        if j.linear.len() != n || j.linear.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("field `L`: expected a {n}x{n} matrix")));
        }
        let linear = DenseMatrix::from_rows(&j.linear)
            .map_err(|e| Error::Invalid(format!("field `L`: {e}")))?;
        let q = parse_terms(&j.quadratic, 2, "quadratic")?;
        let c = parse_terms(&j.cubic, 3, "cubic")?;
        let quadratic = HomogeneousForm::from_entries(n, 2, q.iter().map(|(i, idx, v)| (*i, idx.as_slice(), *v)))
            .map_err(|e| Error::Invalid(format!("field `quadratic`: {e}")))?;
        let cubic = HomogeneousForm::from_entries(n, 3, c.iter().map(|(i, idx, v)| (*i, idx.as_slice(), *v)))
            .map_err(|e| Error::Invalid(format!("field `cubic`: {e}")))?;
        PolySystem::new(linear, quadratic, cubic, Vector::new(j.constant))
    }
}

impl From<&PolySystem> for PolySystemJson {
    fn from(s: &PolySystem) -> Self {
        let terms = |form: &HomogeneousForm| {
            form.monomials()
                .iter()
                .map(|(key, &v)| key.iter().map(|&i| i as f64).chain(std::iter::once(v)).collect())
                .collect()
        };
        PolySystemJson {
            n: s.dim(),
            linear: s.linear.to_rows(),
            quadratic: terms(&s.quadratic),
            cubic: terms(&s.cubic),
            constant: s.constant.as_slice().to_vec(),
        }
    }
}

impl Serialize for PolySystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolySystemJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolySystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PolySystemJson::deserialize(d)?;
        PolySystem::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::circle_cubic;

    #[test]
    fn zero_state_gives_constant() {
        let s = circle_cubic();
        assert_eq!(s.eval(&[0.0, 0.0]).unwrap().as_slice(), &[-1.0, 0.9]);
    }

    #[test]
    fn circle_cubic_near_root() {
        let f = circle_cubic().eval(&[0.357, 0.934]).unwrap();
        assert!(f.norm_inf() < 1e-2, "{f:?}");
    }

    #[test]
    fn circle_cubic_parts_at_ones() {
        let (n2, n3) = circle_cubic().nonlinear_parts(&[1.0, 1.0]).unwrap();
        assert_eq!(n2.as_slice(), &[2.0, 0.0]);
        assert_eq!(n3.as_slice(), &[0.0, 0.75]);
        let r = circle_cubic().degree_identity_check(&[1.0, 1.0]).unwrap();
        assert_eq!((r.quadratic, r.cubic), (0.0, 0.0));
        let (j2, j3) = circle_cubic().partial_jacobians(&[1.0, 1.0]).unwrap();
        assert_eq!(j2.matvec(&[1.0, 1.0]).unwrap().as_slice(), &[4.0, 0.0]);
        assert_eq!(j3.matvec(&[1.0, 1.0]).unwrap().as_slice(), &[0.0, 2.25]);
    }

    #[test]
    fn circle_cubic_jacobian_by_hand() {
        let (x1, x2) = (0.7, -1.3);
        let j = circle_cubic().jacobian(&[x1, x2]).unwrap();
        let expect = [[2.0 * x1, 2.0 * x2], [2.25 * x1 * x1, -1.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - expect[i][k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn circle_cubic_linearized_by_hand() {
        let (x1, x2) = (0.4, 2.0);
        let lf = circle_cubic().linearized_matrix(&[x1, x2]).unwrap();
        let expect = DenseMatrix::from_rows(&[vec![x1, x2], vec![0.75 * x1 * x1, -1.0]]).unwrap();
        assert!(lf.a.sub(&expect).unwrap().max_abs() < 1e-15);
        let au = lf.apply();
        assert!((au[0] - (x1 * x1 + x2 * x2)).abs() < 1e-14);
        assert!((au[1] - (0.75 * x1 * x1 * x1 - x2)).abs() < 1e-14);
    }

    #[test]
    fn linearized_at_zero_is_linear_part() {
        let s = circle_cubic();
        assert_eq!(&s.linearized_matrix(&[0.0, 0.0]).unwrap().a, s.linear_part());
    }

    #[test]
    fn linear_system_jacobian_is_constant() {
        let l = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let s = PolySystem::linear(l.clone(), Vector::from([1.0, -1.0])).unwrap();
        assert_eq!(s.jacobian(&[3.0, -7.0]).unwrap(), l);
        let r = s.degree_identity_check(&[3.0, -7.0]).unwrap();
        assert_eq!((r.quadratic, r.cubic), (0.0, 0.0));
        assert_eq!(s.fbar(&[1.0, 2.0]).unwrap(), l.matvec(&[1.0, 2.0]).unwrap());
    }

    #[test]
    fn circle_cubic_fbar_both_ways() {
        let s = circle_cubic();
        let u = [1.0, 1.0];
        assert_eq!(s.fbar(&u).unwrap().as_slice(), &[4.0, 1.25]);
        assert_eq!(s.jacobian(&u).unwrap().matvec(&u).unwrap().as_slice(), &[4.0, 1.25]);
    }

    #[test]
    fn deviation_zero_for_exact_and_degenerate_at_origin() {
        let s = circle_cubic();
        let u = [0.3, -0.8];
        let j = s.jacobian(&u).unwrap();
        assert!(s.jacobian_deviation(&u, &j).unwrap() < 1e-15);
        assert!(matches!(
            s.jacobian_deviation(&[0.0, 0.0], &j),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let s = circle_cubic();
        assert!(matches!(s.eval(&[1.0]), Err(Error::Shape { .. })));
        assert!(matches!(s.jacobian(&[1.0, 2.0, 3.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let s = circle_cubic();
        let text = serde_json::to_string(&s).unwrap();
        let back: PolySystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);

        let bad = r#"{"n":2,"L":[[0,0],[0,-1]],"quadratic":[[0,0,0.5,1]],"F":[-1,0.9]}"#;
        let err = serde_json::from_str::<PolySystem>(bad).unwrap_err().to_string();
        assert!(err.contains("quadratic"), "{err}");
        let bad_f = r#"{"n":2,"L":[[0,0],[0,-1]],"F":[-1]}"#;
        let err = serde_json::from_str::<PolySystem>(bad_f).unwrap_err().to_string();
        assert!(err.contains("`F`"), "{err}");
    }
}
