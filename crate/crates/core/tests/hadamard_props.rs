mod common;

use common::{mat_rel, random_matrix, random_spd, rng};
use polysjt::hadamard::{hadamard_function, hadamard_product, kron, selection_matrix, sjt_post, sjt_pre};
use polysjt::linalg::{determinant, symmetric_eigenvalues};
use polysjt::{DenseMatrix, Vector};
use proptest::prelude::*;

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-10.0..10.0f64, r * c).prop_map(move |d| DenseMatrix::from_row_major(r, c, d).unwrap())
}

proptest! {
    #[test]
    fn scalar_factor_moves_through(a in matrix(3, 4), b in matrix(3, 4), k in -5.0..5.0f64) {
        let lhs = hadamard_product(&a, &b).unwrap().scale(k);
        let rhs = hadamard_product(&a.scale(k), &b).unwrap();
        prop_assert!(mat_rel(&lhs, &rhs) <= 1e-13);
    }

    #[test]
    fn distributes_over_sum(a in matrix(3, 3), b in matrix(3, 3), q in matrix(3, 3)) {
        let lhs = hadamard_product(&a.add(&b).unwrap(), &q).unwrap();
        let rhs = hadamard_product(&a, &q).unwrap().add(&hadamard_product(&b, &q).unwrap()).unwrap();
        prop_assert!(mat_rel(&lhs, &rhs) <= 1e-13);
    }

    #[test]
    fn commutes(a in matrix(2, 5), b in matrix(2, 5)) {
        prop_assert_eq!(hadamard_product(&a, &b).unwrap(), hadamard_product(&b, &a).unwrap());
    }

    #[test]
    fn post_product_acts_as_row_scaling(a in matrix(5, 4), u in prop::collection::vec(-3.0..3.0f64, 5), x in prop::collection::vec(-3.0..3.0f64, 4)) {
        let lhs = sjt_post(&a, &u).unwrap().matvec(&x).unwrap();
        let rhs = Vector::new(u.clone()).hadamard(&a.matvec(&x).unwrap());
        prop_assert!(polysjt::dense::rel_diff(&lhs, &rhs) <= 1e-14);
    }
}

#[test]
fn sjt_products_equal_diagonal_products() {
    let mut r = rng(11);
    for _ in 0..20 {
        let a = random_matrix(&mut r, 5, 4);
        let u = polysjt::presets::random_vector(&mut r, 5, -2.0, 2.0);
        let v = polysjt::presets::random_vector(&mut r, 4, -2.0, 2.0);
        let post = DenseMatrix::diag(&u).matmul(&a).unwrap();
        assert!(mat_rel(&sjt_post(&a, &u).unwrap(), &post) <= 1e-15);
        let pre = a.matmul(&DenseMatrix::diag(&v)).unwrap();
        assert!(mat_rel(&sjt_pre(&v, &a).unwrap(), &pre) <= 1e-15);
    }
}

#[test]
fn column_vector_post_product_is_hadamard() {
    let a = DenseMatrix::from_rows(&[vec![1.5], vec![-2.0], vec![0.25]]).unwrap();
    let b = [2.0, 3.0, -4.0];
    let col = Vector::from(b).to_column();
    assert_eq!(sjt_post(&a, &b).unwrap(), hadamard_product(&a, &col).unwrap());
}

#[test]
fn hadamard_is_selected_kronecker_block() {
    let mut r = rng(3);
    let n = 4;
    let e = selection_matrix(n);
    for _ in 0..5 {
        let a = random_matrix(&mut r, n, n);
        let b = random_matrix(&mut r, n, n);
        let via_kron = e.transpose().matmul(&kron(&a, &b)).unwrap().matmul(&e).unwrap();
        assert!(mat_rel(&via_kron, &hadamard_product(&a, &b).unwrap()) <= 1e-15);
    }
}

#[test]
fn kron_matches_index_formula() {
    let mut r = rng(5);
    let a = random_matrix(&mut r, 2, 2);
    let b = random_matrix(&mut r, 2, 2);
    let k = kron(&a, &b);
    for i in 0..2 {
        for j in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    assert_eq!(k[(2 * i + p, 2 * j + q)], a[(i, j)] * b[(p, q)]);
                }
            }
        }
    }
}

#[test]
fn exp_matches_scalar_loop() {
    let mut r = rng(8);
    let a = random_matrix(&mut r, 3, 3);
    let e = hadamard_function(f64::exp, &a).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(e[(i, j)], a[(i, j)].exp());
        }
    }
}

#[test]
fn schur_product_eigenvalue_bounds() {
    let mut r = rng(21);
    for n in 2..=6 {
        for _ in 0..10 {
            let a = random_spd(&mut r, n, 0.1);
            let b = random_spd(&mut r, n, 0.1);
            let ea = symmetric_eigenvalues(&a).unwrap();
            let bd = b.diagonal();
            let bmin = bd.iter().cloned().fold(f64::INFINITY, f64::min);
            let bmax = bd.iter().cloned().fold(0.0, f64::max);
            let lo = ea[0] * bmin;
            let hi = ea[n - 1] * bmax;
            for l in symmetric_eigenvalues(&hadamard_product(&a, &b).unwrap()).unwrap() {
                assert!(l >= lo - 1e-10 * hi && l <= hi * (1.0 + 1e-10), "{l} not in [{lo}, {hi}]");
            }
        }
    }
}

#[test]
fn determinant_inequality() {
    let mut r = rng(22);
    for n in 2..=5 {
        for _ in 0..10 {
            let a = random_spd(&mut r, n, 0.1);
            let b = random_spd(&mut r, n, 0.1);
            let lhs = determinant(&a).unwrap() * determinant(&b).unwrap();
            let rhs = determinant(&hadamard_product(&a, &b).unwrap()).unwrap();
            assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
    }
}
