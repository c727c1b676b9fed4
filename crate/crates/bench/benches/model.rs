use appraisal_bench::fixture;
use appraisal_core::{integrate, solve_equilibrium, stationary_vector, vector_field, IntegratorConfig, SimplexState};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const SIZES: [usize; 3] = [6, 12, 48];

fn field(c: &mut Criterion) {
    let mut g = c.benchmark_group("vector_field");
    for n in SIZES {
        let m = fixture(n, n / 3, 1);
        let x = SimplexState::uniform(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| vector_field(&m, black_box(&x)).unwrap())
        });
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate_t10");
    g.sample_size(20);
    let cfg = IntegratorConfig {
        horizon: 10.0,
        record_every: 100,
        ..IntegratorConfig::default()
    };
    for n in SIZES {
        let m = fixture(n, n / 3, 2);
        let x = SimplexState::uniform(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| integrate(&m, black_box(&x), &cfg).unwrap())
        });
    }
    g.finish();
}

fn equilibrium(c: &mut Criterion) {
    let mut g = c.benchmark_group("equilibrium");
    for n in SIZES {
        let m = fixture(n, n / 3, 3);
        g.bench_with_input(BenchmarkId::new("stationary_vector", n), &n, |b, _| {
            b.iter(|| stationary_vector(black_box(&m)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("solve_equilibrium", n), &n, |b, _| {
            b.iter(|| solve_equilibrium(black_box(&m)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, field, flow, equilibrium);
criterion_main!(benches);
