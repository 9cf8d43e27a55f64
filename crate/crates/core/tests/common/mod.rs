#![allow(dead_code)]

use polysjt::{DenseMatrix, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central differences with step `1e-6·(1 + |U_i|)`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vector, u: &[f64]) -> DenseMatrix {
    let n = u.len();
    let m = f(u).len();
    let mut j = DenseMatrix::zeros(m, n);
    for c in 0..n {
        let h = 1e-6 * (1.0 + u[c].abs());
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[c] += h;
        dn[c] -= h;
        let (fu, fd) = (f(&up), f(&dn));
        for r in 0..m {
            j[(r, c)] = (fu[r] - fd[r]) / (2.0 * h);
        }
    }
    j
}

/// `max|a − b| / max(1, max|b|)` over matrix entries.
pub fn mat_rel(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    polysjt::dense::rel_diff(a.as_slice(), b.as_slice())
}

pub fn vec_rel(a: &[f64], b: &[f64]) -> f64 {
    polysjt::dense::rel_diff(a, b)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
    use rand::Rng;
    DenseMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// `MᵀM + δI`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, delta: f64) -> DenseMatrix {
    let m = random_matrix(rng, n, n);
    m.transpose()
        .matmul(&m)
        .unwrap()
        .add(&DenseMatrix::identity(n).scale(delta))
        .unwrap()
}
