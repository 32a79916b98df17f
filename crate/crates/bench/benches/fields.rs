use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinwave::correlations::{constant_field, FieldGrid, Observable};
use spinwave::oracle::{evolve_state, StateVector};
use spinwave::protocols::{quench_czz_field, ramp_czz_field, ParameterSchedule};
use spinwave::{block_g, Quadrature, XyParams};

fn params(gamma: f64, lambda: f64) -> XyParams {
    XyParams::new(gamma, lambda).unwrap()
}

fn kernels(c: &mut Criterion) {
    let p = params(1.1, 2.0);
    let mut g = c.benchmark_group("block_g");
    for m in [1024usize, 4096, 16384] {
        let q = Quadrature::new(m).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &q, |b, q| {
            b.iter(|| block_g(black_box(20), black_box(10.0), &p, q).unwrap())
        });
    }
    g.finish();
}

fn fields(c: &mut Criterion) {
    let mut g = c.benchmark_group("fields");
    g.sample_size(10);
    let q = Quadrature::new(2048).unwrap();
    let grid = FieldGrid::new(60, 25.0, 0.25).unwrap();
    g.bench_function("constant_zz_60x25", |b| {
        b.iter(|| constant_field(Observable::Zz, &params(1.1, 2.0), &grid, &q).unwrap())
    });
    let quench = ParameterSchedule::quench(params(0.9, 0.5), params(0.1, 10.0), 20.0, 40.0).unwrap();
    let qgrid = FieldGrid::new(40, 40.0, 0.5).unwrap();
    g.bench_function("quench_zz_40x40", |b| b.iter(|| quench_czz_field(&quench, &qgrid, &q).unwrap()));
    let ramp = ParameterSchedule::linear_ramp(params(1.1, 2.0), params(10.0, 0.9), 2.0, 4.0, 6.0).unwrap();
    let rgrid = FieldGrid::new(40, 6.0, 0.25).unwrap();
    g.bench_function("ramp_zz_40x6", |b| b.iter(|| ramp_czz_field(&ramp, &rgrid, 0.25 / 8.0, &q).unwrap()));
    g.finish();
}

fn state_vector(c: &mut Criterion) {
    let mut g = c.benchmark_group("state_vector");
    g.sample_size(10);
    for n in [8usize, 12] {
        let sched = ParameterSchedule::constant(params(1.1, 2.0), 2.0).unwrap();
        let psi = StateVector::all_down(n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| evolve_state(&psi, &sched, 2.0, 0.01).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, fields, state_vector);
criterion_main!(benches);
