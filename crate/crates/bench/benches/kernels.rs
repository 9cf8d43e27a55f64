use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polysjt::burgers::sine_initial_state;
use polysjt::presets::{dominant_quadratic, random_poly, random_vector};
use polysjt::quasi_newton::{modified_inverse_update, modified_update};
use polysjt::{
    burgers_discretize, h_jacobian, integrate, lower_to_poly, sweep_once, IterMethod, Ivp, Method,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn poly_kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("poly");
    for n in [8, 32] {
        let mut r = ChaCha8Rng::seed_from_u64(n as u64);
        let s = random_poly(&mut r, n, 0.3);
        let u = random_vector(&mut r, n, -1.0, 1.0);
        g.bench_with_input(BenchmarkId::new("eval", n), &u, |b, u| b.iter(|| s.eval(black_box(u)).unwrap()));
        g.bench_with_input(BenchmarkId::new("jacobian", n), &u, |b, u| {
            b.iter(|| s.jacobian(black_box(u)).unwrap())
        });
    }
    g.finish();
}

fn burgers_kernels(c: &mut Criterion) {
    let n = 32;
    let sd = burgers_discretize(n, 100.0).unwrap();
    let u = sine_initial_state(n);
    c.bench_function("burgers/h_jacobian", |b| b.iter(|| h_jacobian(&sd.rhs, black_box(&u)).unwrap()));
    let lowered = lower_to_poly(&sd.rhs, n).unwrap();
    c.bench_function("burgers/lowered_jacobian", |b| b.iter(|| lowered.jacobian(black_box(&u)).unwrap()));
    let ivp = Ivp::semi_discrete(sd, u).unwrap();
    c.bench_function("burgers/explicit_euler_10_steps", |b| {
        b.iter(|| integrate(&ivp, Method::ExplicitEuler, 0.02, 10, false).unwrap())
    });
    c.bench_function("burgers/implicit_euler_step", |b| {
        b.iter(|| integrate(&ivp, Method::ImplicitEuler, 0.05, 1, false).unwrap())
    });
}

fn solver_kernels(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let n = 16;
    let (s, root) = dominant_quadratic(&mut r, n);
    let u = root.add(&random_vector(&mut r, n, -0.1, 0.1));
    c.bench_function("sweep/gauss_seidel", |b| {
        b.iter(|| sweep_once(&s, black_box(&u), IterMethod::GaussSeidel, 1.0, 1e-12).unwrap())
    });
    let u_prev = root.add(&random_vector(&mut r, n, -0.2, 0.2));
    let j = s.jacobian(&u_prev).unwrap();
    let jinv = polysjt::linalg::inverse(&j).unwrap();
    let y = s.fbar(&u).unwrap().sub(&s.fbar(&u_prev).unwrap());
    c.bench_function("qn/modified_update", |b| {
        b.iter(|| modified_update(&j, &u_prev, black_box(&u), &y).unwrap())
    });
    c.bench_function("qn/modified_inverse_update", |b| {
        b.iter(|| modified_inverse_update(&jinv, &j, &u_prev, black_box(&u), &y).unwrap())
    });
}

criterion_group!(benches, poly_kernels, burgers_kernels, solver_kernels);
criterion_main!(benches);
