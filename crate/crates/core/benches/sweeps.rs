use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use degor_core::de::{grid_around, residual_sweep, GammaField, Point};
use degor_core::deform::{make_isotropic_d, random_symmetric, DeformationDirection, DeformedField, TripleField};
use degor_core::exec::Exec;
use degor_core::fock::{gamma_fock_with, LoopElement, Truncation};
use degor_core::hurwitz::{Hurwitz0Field, PolyMap};
use degor_core::linalg::{self, re, C64};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn hurwitz(d: usize) -> Hurwitz0Field {
    Hurwitz0Field::new(PolyMap::power_minus_linear(d).unwrap()).unwrap().without_seed_cache()
}

fn residual_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("residual_grid");
    group.sample_size(10);
    for d in [4, 5] {
        let field = hurwitz(d);
        let pts = grid_around(&field.base_point(), 0.05, 3);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, format!("n={}", d - 1)), &pts, |b, pts| {
                b.iter(|| residual_sweep(&field, black_box(pts), 1e-4, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn deformed_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("deformed_grid");
    group.sample_size(10);
    let base = hurwitz(5).base_point();
    let pts = grid_around(&base, 0.05, 3);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                // fresh triple cache each iteration so ω, B are really integrated
                let triples = Arc::new(TripleField::new(hurwitz(5), make_isotropic_d(4, 1, 17).unwrap(), 20).unwrap());
                let field = DeformedField::special(triples, random_symmetric(1, 40, 1.0), re(0.3)).unwrap();
                residual_sweep(&field, black_box(&pts), 1e-4, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn fock_minors(c: &mut Criterion) {
    let mut group = c.benchmark_group("fock_gamma");
    group.sample_size(10);
    let n = 4;
    let r = linalg::identity(n) * C64::new(0.3, 0.1);
    let a = LoopElement::exp_direction(&DeformationDirection::lower(1, r).unwrap(), re(0.2)).unwrap();
    let u = Point::real(&[0.1, -0.05, 0.08, 0.0]);
    for window in [16, 24] {
        let trunc = Truncation::new(window).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, format!("N={window}")), &trunc, |b, &t| {
                b.iter(|| gamma_fock_with(&a, black_box(&u), t, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, residual_grid, deformed_grid, fock_minors);
criterion_main!(benches);
