//! Sequential versus data-parallel execution of the hot kernels, and a
//! whole-solve comparison across thread counts. Run with
//! `cargo bench -p smoothprox`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smoothprox::exec;
use smoothprox::problems::{gen_l1_regression, GenOptions};
use smoothprox::solver::{spge_solve, BetaSchedule, SolverConfig};
use smoothprox::SmoothingOracle;
use std::hint::black_box;

fn fill_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("fill");
    for &n in &[1_000usize, 10_000, 100_000] {
        let data: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let kernel = |i: usize| {
            // Enough arithmetic per element to make parallelism plausible.
            let mut acc = data[i];
            for _ in 0..32 {
                acc = acc.mul_add(1.000001, 0.3).sin();
            }
            acc
        };
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, &n| {
            let mut out = vec![0.0; n];
            b.iter(|| {
                exec::fill_with_seq(&mut out, kernel);
                black_box(out[0])
            });
        });
        group.bench_with_input(BenchmarkId::new("par", n), &n, |b, &n| {
            let mut out = vec![0.0; n];
            b.iter(|| {
                exec::fill_with_par(&mut out, kernel);
                black_box(out[0])
            });
        });
    }
    group.finish();
}

fn oracle_value_grad(c: &mut Criterion) {
    let inst = gen_l1_regression(400, 800, 40, 7, &GenOptions::default()).unwrap();
    let oracle = inst.smoother().unwrap();
    let x = vec![0.5; inst.n()];
    let mut grad = vec![0.0; inst.n()];
    let mut group = c.benchmark_group("value_grad");
    for threads in [1usize, rayon::current_num_threads().max(2)] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| pool.install(|| black_box(oracle.value_grad(&x, 0.5, &mut grad))));
        });
    }
    group.finish();
}

fn whole_solve(c: &mut Criterion) {
    let inst = gen_l1_regression(120, 240, 24, 3, &GenOptions::default()).unwrap();
    let cfg = SolverConfig {
        l: 1.05 * inst.smoother().unwrap().ltilde(),
        mu0: 50.0,
        maxiter: 300,
        beta: BetaSchedule::SafeCapMax,
        stall_iters: usize::MAX,
        ..Default::default()
    };
    let mut group = c.benchmark_group("solve_300_iters");
    group.sample_size(10);
    for threads in [1usize, rayon::current_num_threads().max(2)] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| pool.install(|| black_box(spge_solve(&inst, &cfg).unwrap().x[0])));
        });
    }
    group.finish();
}

criterion_group!(benches, fill_kernels, oracle_value_grad, whole_solve);
criterion_main!(benches);
