//! Built-in example problems.

use rand::Rng;

use crate::burgers::{burgers_discretize, SemiDiscreteIvp};
use crate::dense::{DenseMatrix, Vector};
use crate::error::Result;
use crate::poly::PolySystem;
use crate::tensor::HomogeneousForm;

/// The mixed quadratic/cubic pair
/// `x₁² + x₂² − 1 = 0`, `0.75x₁³ − x₂ + 0.9 = 0`.
pub fn circle_cubic() -> PolySystem {
    let linear = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, -1.0]]).expect("static shape");
    let quadratic =
        HomogeneousForm::from_entries(2, 2, [(0usize, &[0usize, 0][..], 1.0), (0, &[1, 1][..], 1.0)])
            .expect("static indices");
    let cubic = HomogeneousForm::from_entries(2, 3, [(1usize, &[0usize, 0, 0][..], 0.75)]).expect("static indices");
    PolySystem::new(linear, quadratic, cubic, Vector::from([-1.0, 0.9])).expect("consistent shapes")
}

/// Default starting point for [`circle_cubic`].
pub fn circle_cubic_start() -> Vector {
    Vector::from([0.5, 1.0])
}

/// Burgers preset used by the CLI and acceptance runs.
pub fn burgers(n: usize, reynolds: f64) -> Result<SemiDiscreteIvp> {
    burgers_discretize(n, reynolds)
}

/// `U_i + 0.1·U_i² + 0.05·Σ_{j≠i} U_j − 1 = 0`.
pub fn mild_quadratic(n: usize) -> PolySystem {
    let linear = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.05 });
    let entries: Vec<(usize, [usize; 2], f64)> = (0..n).map(|i| (i, [i, i], 0.1)).collect();
    let quadratic = HomogeneousForm::from_entries(n, 2, entries.iter().map(|(i, idx, v)| (*i, &idx[..], *v)))
        .expect("in-range indices");
    PolySystem::new(linear, quadratic, HomogeneousForm::zero(n, 3), Vector::filled(n, -1.0)).expect("consistent shapes")
}

/// Linear system `diag(d)·U` with zero constant term.
pub fn diagonal_linear(d: &[f64]) -> PolySystem {
    PolySystem::linear(DenseMatrix::diag(d), Vector::zeros(d.len())).expect("square diagonal")
}

/// Uniform samples in `[lo, hi)`.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_fn(n, |_| rng.gen_range(lo..hi))
}

/// Dense random system with coefficients in `[-1, 1)`; each quadratic and
/// cubic monomial is present with probability `density`.
pub fn random_poly<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> PolySystem {
    let linear = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut quad = Vec::new();
    let mut cub = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                if rng.gen_bool(density) {
                    quad.push((i, [j, k], rng.gen_range(-1.0..1.0)));
                }
                for l in k..n {
                    if rng.gen_bool(density) {
                        cub.push((i, [j, k, l], rng.gen_range(-1.0..1.0)));
                    }
                }
            }
        }
    }
    let quadratic = HomogeneousForm::from_entries(n, 2, quad.iter().map(|(i, idx, v)| (*i, &idx[..], *v)))
        .expect("in-range indices");
    let cubic =
        HomogeneousForm::from_entries(n, 3, cub.iter().map(|(i, idx, v)| (*i, &idx[..], *v))).expect("in-range indices");
    let constant = random_vector(rng, n, -1.0, 1.0);
    PolySystem::new(linear, quadratic, cubic, constant).expect("consistent shapes")
}

/// Quadratic system with a known root `U*` in `[0.5, 1.5)ⁿ` at which
/// `|a_ii(U*)| ≥ 2·Σ_{j≠i} |a_ij(U*)|` for the linearized matrix.
///
/// Returns the system and its root.
pub fn dominant_quadratic<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (PolySystem, Vector) {
    let root = random_vector(rng, n, 0.5, 1.5);
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(4.0..6.0)).collect();
    let off = DenseMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.gen_range(-0.2..0.2) });
    let mut quad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                quad.push((i, [j, k], rng.gen_range(-0.1..0.1)));
            }
        }
    }
    let mut scale = 1.0;
    loop {
        let linear = DenseMatrix::diag(&diag).axpy(scale, &off).expect("square");
        let quadratic =
            HomogeneousForm::from_entries(n, 2, quad.iter().map(|(i, idx, v)| (*i, &idx[..], scale * v)))
                .expect("in-range indices");
        let s = PolySystem::new(linear, quadratic, HomogeneousForm::zero(n, 3), Vector::zeros(n)).expect("shapes");
        let a = s.linearized_matrix(&root).expect("shapes").a;
        let dominant = (0..n).all(|i| {
            let off_mass: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            a[(i, i)].abs() >= 2.0 * off_mass
        });
        if dominant {
            let f = s.eval(&root).expect("shapes").scale(-1.0);
            return (s.with_constant(f).expect("length n"), root);
        }
        scale *= 0.5;
    }
}
