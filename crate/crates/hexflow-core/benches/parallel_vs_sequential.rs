//! Compares the data-parallel one-step search against its sequential
//! fallback, on symmetric instances (cubic candidate space) and an
//! asymmetric instance (full six-dimensional candidate space), with the
//! closed-form stepper as a baseline.
//!
//! Build with default features to exercise the parallel path; with
//! `--no-default-features` both entry points run the sequential search.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hexflow_core::cells::DiscreteHexagon;
use hexflow_core::lattice::ALPHA_HEX;
use hexflow_core::step::{brute_force_step, brute_force_step_sequential, optimal_layers};

const EPS: f64 = 1.0 / 16.0;

/// γ placing the per-side optimum near two layers, safely inside the search
/// box.
fn gamma_for(e: &DiscreteHexagon) -> f64 {
    let l_min = e
        .side_lengths()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    2.0 * l_min / ALPHA_HEX
}

fn bench_symmetric(c: &mut Criterion) {
    let mut group = c.benchmark_group("search_symmetric");
    group
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(3))
        .sample_size(20);
    for &t in &[8i64, 16, 24] {
        let e = DiscreteHexagon::from_offsets(EPS, [t; 6]).unwrap();
        let gamma = gamma_for(&e);
        let max_layers = t + 1;
        group.bench_with_input(BenchmarkId::new("parallel", t), &e, |b, e| {
            b.iter(|| brute_force_step(black_box(e), gamma, max_layers).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", t), &e, |b, e| {
            b.iter(|| brute_force_step_sequential(black_box(e), gamma, max_layers).unwrap())
        });
    }
    group.finish();
}

fn bench_asymmetric(c: &mut Criterion) {
    let mut group = c.benchmark_group("search_asymmetric");
    group
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(5))
        .sample_size(10);
    // Not origin-symmetric: the search runs over the full 6-cube.
    let e = DiscreteHexagon::from_offsets(EPS, [7, 8, 7, 7, 7, 7]).unwrap();
    let gamma = gamma_for(&e);
    let max_layers = 7;
    group.bench_function("parallel", |b| {
        b.iter(|| brute_force_step(black_box(&e), gamma, max_layers).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| brute_force_step_sequential(black_box(&e), gamma, max_layers).unwrap())
    });
    group.finish();
}

fn bench_closed_form(c: &mut Criterion) {
    let e = DiscreteHexagon::from_offsets(EPS, [16; 6]).unwrap();
    let l = e.side_lengths();
    let gamma = gamma_for(&e);
    c.bench_function("closed_form_step", |b| {
        b.iter(|| optimal_layers(black_box(&l), gamma, EPS))
    });
}

criterion_group!(benches, bench_symmetric, bench_asymmetric, bench_closed_form);
criterion_main!(benches);
