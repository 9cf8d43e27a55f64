mod common;

use common::{random_matrix, rng, vec_rel};
use polysjt::linalg::inverse;
use polysjt::presets::{dominant_quadratic, circle_cubic, random_poly, random_vector};
use polysjt::quasi_newton::{
    classic_inverse_update, classic_update, deviation_report, modified_inverse_update, modified_update,
};
use polysjt::{
    iterative_solve, qn_solve, sweep_once, DenseMatrix, HomogeneousForm, IterMethod, IterativeOptions, PolySystem,
    QnOptions, QnVariant, Vector,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn pairing(jinv: &DenseMatrix, j: &DenseMatrix) -> f64 {
    jinv.matmul(j).unwrap().sub(&DenseMatrix::identity(j.rows())).unwrap().norm_inf()
}

fn orthogonal_to(r: &mut ChaCha8Rng, q: &Vector) -> Vector {
    let p = random_vector(r, q.len(), -1.0, 1.0);
    p.axpy(-p.dot(q) / q.dot(q), q)
}

struct Instance {
    s: PolySystem,
    u_prev: Vector,
    u_cur: Vector,
    j_prev: DenseMatrix,
}

fn instance(r: &mut ChaCha8Rng) -> Instance {
    let n = r.gen_range(2..=6);
    let (s, _) = dominant_quadratic(r, n);
    let u_prev = random_vector(r, n, 0.5, 1.5);
    let u_cur = u_prev.add(&random_vector(r, n, -0.2, 0.2));
    let j_prev = s.jacobian(&u_prev).unwrap().add(&random_matrix(r, n, n).scale(0.1)).unwrap();
    Instance { s, u_prev, u_cur, j_prev }
}

#[test]
fn classic_update_secant_and_orthogonal_action() {
    let mut r = rng(41);
    for _ in 0..100 {
        let it = instance(&mut r);
        let q = it.u_cur.sub(&it.u_prev);
        let df = it.s.eval(&it.u_cur).unwrap().sub(&it.s.eval(&it.u_prev).unwrap());
        let j = classic_update(&it.j_prev, &q, &df).unwrap();
        assert!(vec_rel(&j.matvec(&q).unwrap(), &df) <= 1e-12);
        for _ in 0..5 {
            let p = orthogonal_to(&mut r, &q);
            assert!(vec_rel(&j.matvec(&p).unwrap(), &it.j_prev.matvec(&p).unwrap()) <= 1e-12);
        }
        let jinv = classic_inverse_update(&inverse(&it.j_prev).unwrap(), &q, &df).unwrap();
        assert!(pairing(&jinv, &j) <= 1e-8);
    }
}

#[test]
fn modified_update_exact_relation_and_orthogonal_action() {
    let mut r = rng(42);
    for _ in 0..100 {
        let it = instance(&mut r);
        let q = it.u_cur.sub(&it.u_prev);
        let y = it.s.fbar(&it.u_cur).unwrap().sub(&it.s.fbar(&it.u_prev).unwrap());
        let j = modified_update(&it.j_prev, &it.u_prev, &it.u_cur, &y).unwrap();
        let lhs = j.matvec(&it.u_cur).unwrap().sub(&it.j_prev.matvec(&it.u_prev).unwrap());
        assert!(vec_rel(&lhs, &y) <= 1e-10);
        for _ in 0..5 {
            let p = orthogonal_to(&mut r, &q);
            assert!(vec_rel(&j.matvec(&p).unwrap(), &it.j_prev.matvec(&p).unwrap()) <= 1e-12);
        }
        let jinv = modified_inverse_update(&inverse(&it.j_prev).unwrap(), &it.j_prev, &it.u_prev, &it.u_cur, &y).unwrap();
        assert!(pairing(&jinv, &j) <= 1e-8);
    }
}

#[test]
fn modified_relation_on_general_random_systems() {
    let mut r = rng(43);
    for _ in 0..100 {
        let n = r.gen_range(2..=6);
        let s = random_poly(&mut r, n, 0.5);
        let u_prev = random_vector(&mut r, n, -1.0, 1.0);
        let u_cur = random_vector(&mut r, n, -1.0, 1.0);
        let j_prev = s.jacobian(&u_prev).unwrap();
        let y = s.fbar(&u_cur).unwrap().sub(&s.fbar(&u_prev).unwrap());
        let Ok(j) = modified_update(&j_prev, &u_prev, &u_cur, &y) else { continue };
        let lhs = j.matvec(&u_cur).unwrap().sub(&j_prev.matvec(&u_prev).unwrap());
        assert!(vec_rel(&lhs, &y) <= 1e-10);
    }
}

#[test]
fn zero_previous_state_reduces_to_classic() {
    let mut r = rng(44);
    for _ in 0..50 {
        let it = instance(&mut r);
        let n = it.u_cur.len();
        let zero = Vector::zeros(n);
        let y = random_vector(&mut r, n, -1.0, 1.0);
        let a = modified_update(&it.j_prev, &zero, &it.u_cur, &y).unwrap();
        let b = classic_update(&it.j_prev, &it.u_cur, &y).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() <= 1e-13);
        let jinv = inverse(&it.j_prev).unwrap();
        let ai = modified_inverse_update(&jinv, &it.j_prev, &zero, &it.u_cur, &y).unwrap();
        let bi = classic_inverse_update(&jinv, &it.u_cur, &y).unwrap();
        assert!(ai.sub(&bi).unwrap().max_abs() <= 1e-10 * (1.0 + bi.max_abs()));
    }
}

fn scalar_cubic(a: f64, b: f64, c: f64, d: f64) -> PolySystem {
    let q = HomogeneousForm::from_entries(1, 2, [(0usize, &[0usize, 0][..], b)]).unwrap();
    let cub = HomogeneousForm::from_entries(1, 3, [(0usize, &[0usize, 0, 0][..], c)]).unwrap();
    PolySystem::new(DenseMatrix::diag(&[a]), q, cub, Vector::from([d])).unwrap()
}

#[test]
fn one_dimensional_modified_steps_are_newton_steps() {
    for (a, b, c, d, x0) in [(1.0, 0.5, 0.2, -2.0, 1.0), (2.0, -0.3, 0.1, 1.0, 0.2), (-1.0, 0.0, 1.0, -0.5, 1.5)] {
        let s = scalar_cubic(a, b, c, d);
        let newton = qn_solve(&s, &[x0], &QnOptions { variant: QnVariant::Newton, ..Default::default() }).unwrap();
        let modified = qn_solve(&s, &[x0], &QnOptions::default()).unwrap();
        assert!(newton.status.is_converged());
        assert_eq!(newton.iterations(), modified.iterations());
        for (x, y) in newton.iterates.iter().zip(&modified.iterates) {
            assert!((x[0] - y[0]).abs() <= 1e-12 * (1.0 + x[0].abs()), "{x:?} vs {y:?}");
        }
    }
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(g(lo).signum() != g(hi).signum());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == g(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn circle_cubic_branch(x: f64) -> f64 {
    x * x + (0.75 * x.powi(3) + 0.9).powi(2) - 1.0
}

#[test]
fn circle_cubic_both_roots() {
    let pos = bisect(circle_cubic_branch, 0.0, 1.0);
    let neg = bisect(circle_cubic_branch, -1.0, -0.9);
    for variant in [QnVariant::Newton, QnVariant::ClassicRank1, QnVariant::ModifiedRank1] {
        let opts = QnOptions { variant, ..Default::default() };
        let a = qn_solve(&circle_cubic(), &[0.5, 1.0], &opts).unwrap();
        assert!(a.status.is_converged() && a.final_residual() <= 1e-10);
        assert!((a.final_state()[0] - pos).abs() <= 1e-8);
        let b = qn_solve(&circle_cubic(), &[-1.0, 0.2], &opts).unwrap();
        assert!(b.status.is_converged(), "{variant:?} {:?}", b.status);
        assert!((b.final_state()[0] - neg).abs() <= 1e-8, "{variant:?} {:?}", b.final_state());
    }
}

#[test]
fn deviation_reports_along_trajectories() {
    let s = circle_cubic();
    let newton = qn_solve(&s, &[0.5, 1.0], &QnOptions { variant: QnVariant::Newton, ..Default::default() }).unwrap();
    for d in deviation_report(&s, &newton).unwrap().into_iter().flatten() {
        assert!(d <= 1e-12);
    }
    let classic = qn_solve(&s, &[0.5, 1.0], &QnOptions { variant: QnVariant::ClassicRank1, ..Default::default() }).unwrap();
    let dev = deviation_report(&s, &classic).unwrap();
    assert_eq!(dev, classic.deviations);
    assert!(dev.iter().skip(1).flatten().any(|&d| d > 0.0));
    let modified = qn_solve(&s, &[0.5, 1.0], &QnOptions::default()).unwrap();
    assert!(deviation_report(&s, &modified).unwrap().iter().flatten().all(|d| d.is_finite()));
}

#[test]
fn newton_solves_linear_systems_in_one_step() {
    let mut r = rng(45);
    for n in 2..=6 {
        let l = DenseMatrix::identity(n).scale(3.0).add(&random_matrix(&mut r, n, n)).unwrap();
        let s = PolySystem::linear(l, random_vector(&mut r, n, -1.0, 1.0)).unwrap();
        let tr = qn_solve(&s, &vec![0.0; n], &QnOptions { variant: QnVariant::Newton, ..Default::default() }).unwrap();
        assert_eq!(tr.status, polysjt::SolverStatus::Converged { iterations: 1 });
    }
}

fn opts(method: IterMethod, omega: f64) -> IterativeOptions {
    IterativeOptions { method, omega, tol: 1e-8, max_iter: 500, pivot_tol: 1e-12 }
}

#[test]
fn dominant_corpus_converges_for_all_sweeps() {
    let mut r = rng(46);
    for _ in 0..20 {
        let (s, root) = dominant_quadratic(&mut r, 6);
        let newton = qn_solve(&s, &[1.0; 6], &QnOptions { variant: QnVariant::Newton, tol: 1e-13, ..Default::default() })
            .unwrap();
        assert!(newton.final_state().sub(&root).norm_inf() <= 1e-10);
        for (m, w) in [(IterMethod::Jacobi, 1.0), (IterMethod::GaussSeidel, 1.0), (IterMethod::Sor, 1.2)] {
            let tr = iterative_solve(&s, &[1.0; 6], &opts(m, w)).unwrap();
            assert!(tr.status.is_converged(), "{m:?}: {:?}", tr.status);
            assert!(tr.final_state().sub(newton.final_state()).norm_inf() <= 1e-8);
        }
    }
}

#[test]
fn sor_at_unit_omega_is_gauss_seidel() {
    let mut r = rng(47);
    for _ in 0..5 {
        let (s, _) = dominant_quadratic(&mut r, 6);
        let gs = iterative_solve(&s, &[0.0; 6], &opts(IterMethod::GaussSeidel, 1.0)).unwrap();
        let sor = iterative_solve(&s, &[0.0; 6], &opts(IterMethod::Sor, 1.0)).unwrap();
        assert_eq!(gs.iterates.len(), sor.iterates.len());
        for (a, b) in gs.iterates.iter().zip(&sor.iterates) {
            assert!(a.sub(b).norm_inf() <= 1e-13);
        }
    }
}

/// Textbook sweeps for `A·x = b`.
fn textbook(a: &DenseMatrix, b: &[f64], x: &[f64], method: IterMethod, omega: f64) -> Vec<f64> {
    let n = b.len();
    let mut out = x.to_vec();
    for i in 0..n {
        let mut sigma = 0.0;
        for j in 0..n {
            if j != i {
                let xj = if method == IterMethod::Jacobi || j > i { x[j] } else { out[j] };
                sigma += a[(i, j)] * xj;
            }
        }
        let gs = (b[i] - sigma) / a[(i, i)];
        out[i] = if method == IterMethod::Sor { (1.0 - omega) * x[i] + omega * gs } else { gs };
    }
    out
}

#[test]
fn linear_case_matches_textbook_iterations() {
    let mut r = rng(48);
    let n = 5;
    let a = DenseMatrix::from_fn(n, n, |i, j| if i == j { 6.0 } else { r.gen_range(-1.0..1.0) });
    let b = random_vector(&mut r, n, -1.0, 1.0);
    let s = PolySystem::linear(a.clone(), b.scale(-1.0)).unwrap();
    for (m, w) in [(IterMethod::Jacobi, 1.0), (IterMethod::GaussSeidel, 1.0), (IterMethod::Sor, 1.3)] {
        let tr = iterative_solve(&s, &vec![0.0; n], &opts(m, w)).unwrap();
        assert!(tr.status.is_converged());
        let mut x = vec![0.0; n];
        for it in &tr.iterates[1..] {
            x = textbook(&a, &b, &x, m, w);
            assert!(vec_rel(it, &x) <= 1e-13);
        }
        let direct = polysjt::linalg::solve(&a, &b).unwrap();
        assert!(tr.final_state().sub(&direct).norm_inf() <= 1e-8);
    }
}

#[test]
fn fixed_points_are_exactly_roots() {
    let mut r = rng(49);
    for _ in 0..10 {
        let (s, root) = dominant_quadratic(&mut r, 5);
        let other = root.add(&random_vector(&mut r, 5, 0.05, 0.2));
        for m in [IterMethod::Jacobi, IterMethod::GaussSeidel, IterMethod::Sor] {
            let x = sweep_once(&s, &root, m, 1.4, 1e-12).unwrap();
            assert!(x.sub(&root).norm_inf() <= 1e-10);
            let y = sweep_once(&s, &other, m, 1.4, 1e-12).unwrap();
            assert!(s.eval(&other).unwrap().norm_inf() > 1e-10);
            assert!(y.sub(&other).norm_inf() > 1e-10);
        }
    }
}
