use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use metastable_core::{
    build_grid_kernel, conductance_mc, conductance_quadrature, hitting_time, simulate,
    spectral_gap, threshold_conductance, Grid, GridOptions, IntervalUnion, RandomStream, RwmKernel,
    StreamId,
};

fn rwm_steps(c: &mut Criterion) {
    let kernel = RwmKernel::mixture(0.3).unwrap();
    c.bench_function("rwm 10k steps", |b| {
        let mut rng = RandomStream::new(StreamId::new(1, 0, 0, 0));
        b.iter(|| simulate(&kernel, black_box(-1.0), 10_000, &mut rng).unwrap())
    });
    let right = IntervalUnion::at_least(0.0);
    c.bench_function("hitting time sigma 0.5", |b| {
        let kernel = RwmKernel::mixture(0.5).unwrap();
        let mut rng = RandomStream::new(StreamId::new(2, 0, 0, 0));
        b.iter(|| hitting_time(&kernel, -1.0, &right, 1_000_000, &mut rng).unwrap())
    });
}

fn conductance(c: &mut Criterion) {
    let left = IntervalUnion::below(0.0);
    let mut g = c.benchmark_group("conductance");
    g.sample_size(10);
    for sigma in [0.5, 0.3] {
        let kernel = RwmKernel::mixture(sigma).unwrap();
        g.bench_with_input(BenchmarkId::new("quadrature", sigma), &kernel, |b, k| {
            b.iter(|| conductance_quadrature(k, &left, 1e-9).unwrap())
        });
    }
    let kernel = RwmKernel::mixture(0.3).unwrap();
    g.bench_function("monte carlo 100k", |b| {
        b.iter(|| conductance_mc(&kernel, &left, 100_000, StreamId::new(3, 1, 0, 0)).unwrap())
    });
    g.finish();
}

fn grid(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid");
    g.sample_size(10);
    for sigma in [0.5, 0.3] {
        let kernel = RwmKernel::mixture(sigma).unwrap();
        let grid = Grid::default_for(sigma, sigma).unwrap();
        let opts = GridOptions::default();
        g.bench_with_input(BenchmarkId::new("build", grid.n()), &grid, |b, grid| {
            b.iter(|| build_grid_kernel(&kernel, grid, &opts).unwrap())
        });
        let dk = build_grid_kernel(&kernel, &grid, &opts).unwrap();
        g.bench_with_input(BenchmarkId::new("spectral gap", grid.n()), &dk, |b, dk| {
            b.iter(|| spectral_gap(dk).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("threshold cut", grid.n()), &dk, |b, dk| {
            b.iter(|| threshold_conductance(dk).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, rwm_steps, conductance, grid);
criterion_main!(benches);
