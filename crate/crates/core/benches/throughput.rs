//! Throughput benchmarks for the hot paths.
//!
//! The workloads below exercise the data-parallel kernels. Run once with the
//! default features and once with `--no-default-features` to compare the
//! rayon-backed and sequential execution paths:
//!
//!   cargo bench -p frfsense
//!   cargo bench -p frfsense --no-default-features

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use frfsense::experiments::{reconstruction_map, ReconOptions};
use frfsense::frf::{frf_modal, normalize_columns};
use frfsense::lasso::{solve, LassoProblem, SolveOptions};
use frfsense::modal::{build_chain, solve_modes};
use frfsense::placement::greedy_select;
use std::hint::black_box;

fn chain_frf(n: usize, omega_frac: f64) -> frfsense::frf::FrfMatrix {
    let sys = build_chain(n, 2.0, 2e6, 1e-3, 2e-5).unwrap();
    let modal = solve_modes(&sys).unwrap();
    let omega = omega_frac * modal.natural_freqs[4];
    let nodes: Vec<usize> = (0..n).collect();
    frf_modal(&modal, &nodes, &nodes, omega, None).unwrap()
}

fn bench_frf_synthesis(c: &mut Criterion) {
    let sys = build_chain(100, 2.0, 2e6, 1e-3, 2e-5).unwrap();
    let modal = solve_modes(&sys).unwrap();
    let nodes: Vec<usize> = (0..100).collect();
    let omega = 0.95 * modal.natural_freqs[4];
    c.bench_function("frf_modal_100x100", |b| {
        b.iter(|| frf_modal(&modal, &nodes, &nodes, black_box(omega), None).unwrap())
    });
}

fn bench_greedy(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy_select");
    for &n in &[50usize, 100] {
        let nf = normalize_columns(&chain_frf(n, 0.95)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &nf, |b, nf| {
            b.iter(|| greedy_select(black_box(nf), n / 5).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let h = chain_frf(50, 0.95);
    let nf = normalize_columns(&h).unwrap();
    let y = h.values.column(20).clone_owned();
    let problem = LassoProblem::from_measurement(&nf, &y, 0.01).unwrap();
    let opts = SolveOptions { tol: 1e-6, max_iter: 30_000 };
    c.bench_function("lasso_solve_50", |b| {
        b.iter(|| solve(black_box(&problem), &opts).unwrap())
    });
}

fn bench_reconstruction_map(c: &mut Criterion) {
    let h = chain_frf(30, 0.95);
    let opts = ReconOptions {
        snr_db: 20.0,
        mu_fraction: 0.01,
        seed: 7,
        solve: SolveOptions { tol: 1e-6, max_iter: 30_000 },
    };
    c.bench_function("reconstruction_map_30", |b| {
        b.iter(|| reconstruction_map(black_box(&h), &opts).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_frf_synthesis, bench_greedy, bench_solve, bench_reconstruction_map
}
criterion_main!(benches);
