//! Benchmarks for the hot paths: curve fitting, H* assembly and trace,
//! and the F-distribution CDF.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lpanova::data::{Dataset, FitConfig, GridSpec};
use lpanova::*;
use std::hint::black_box;

fn dataset(n: usize) -> Dataset {
    let mut r = Rng::new(7);
    let x: Vec<f64> = (0..n).map(|_| r.next_f64()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| (2.0 * std::f64::consts::PI * v).sin() + 0.3 * r.next_normal())
        .collect();
    Dataset::new(x, y).unwrap()
}

fn bench_curve(c: &mut Criterion) {
    let mut group = c.benchmark_group("curve");
    for n in [100usize, 400] {
        let d = dataset(n);
        let grid = GridSpec::data_range(&d, 200).unwrap();
        let config = FitConfig::new(1, 0.2, Kernel::Epanechnikov, grid).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| curve(black_box(&d), black_box(&config)))
        });
    }
    group.finish();
}

fn bench_hstar(c: &mut Criterion) {
    let mut group = c.benchmark_group("hstar");
    group.sample_size(20);
    for n in [100usize, 300] {
        let d = dataset(n);
        let grid = GridSpec::padded(&d, Kernel::Epanechnikov, 0.2, 500).unwrap();
        let config = FitConfig::new(1, 0.2, Kernel::Epanechnikov, grid).unwrap();
        group.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, _| {
            b.iter(|| hstar(black_box(&d), black_box(&config)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("trace", n), &n, |b, _| {
            b.iter(|| hstar_trace(black_box(&d), black_box(&config)).unwrap())
        });
    }
    group.finish();
}

fn bench_f_cdf(c: &mut Criterion) {
    c.bench_function("f_cdf", |b| {
        b.iter(|| f_cdf(black_box(2.5), black_box(6.5509), black_box(44.4491)).unwrap())
    });
}

criterion_group!(benches, bench_curve, bench_hstar, bench_f_cdf);
criterion_main!(benches);
