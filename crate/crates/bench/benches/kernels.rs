use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polaron_bench::{band_point, single_mode};
use polaron_core::gfunc::{g_continuum, g_lattice};
use polaron_core::polaron::solve_polaron;
use polaron_core::stability::{alpha_m, DEFAULT_QUAD_TOL};
use polaron_core::{Kernel, SolverOptions};

fn pair_function(c: &mut Criterion) {
    let mut group = c.benchmark_group("g_lattice");
    for mt in [1e2, 1e4, 1e6] {
        let p = band_point(mt);
        let q = [p.spec.spacing() * 3.0, p.spec.spacing()];
        group.bench_with_input(BenchmarkId::from_parameter(mt), &p, |b, p| {
            b.iter(|| g_lattice(black_box(p), black_box(q), black_box(0.3 * p.mu)).unwrap())
        });
    }
    group.finish();
    let p = band_point(1e4);
    c.bench_function("g_continuum", |b| b.iter(|| g_continuum(black_box(&p), black_box(2.0), black_box(0.3)).unwrap()));
}

fn polaron(c: &mut Criterion) {
    let single = single_mode();
    c.bench_function("solve_polaron/single_mode", |b| {
        b.iter(|| solve_polaron(black_box(&single), &SolverOptions::default()).unwrap())
    });
    let mut group = c.benchmark_group("solve_polaron");
    group.sample_size(10);
    let p = band_point(1e2);
    group.bench_function("lattice/1e2", |b| b.iter(|| solve_polaron(black_box(&p), &SolverOptions::default()).unwrap()));
    let p = band_point(1e5);
    group.bench_function("continuum/1e5", |b| {
        b.iter(|| solve_polaron(black_box(&p), &SolverOptions::with_kernel(Kernel::Continuum)).unwrap())
    });
    group.finish();
}

fn stability(c: &mut Criterion) {
    c.bench_function("alpha_m/2", |b| b.iter(|| alpha_m(black_box(2.0), black_box(0.0), DEFAULT_QUAD_TOL).unwrap()));
}

criterion_group!(benches, pair_function, polaron, stability);
criterion_main!(benches);
