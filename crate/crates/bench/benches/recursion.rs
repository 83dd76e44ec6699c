use ancestrec::caustic::{compare_extended, ExtendedOptions};
use ancestrec::recursion::{build_table, TableOptions};
use ancestrec::{AnModel, ModelOptions, RMatrix, C64};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn a2(t0: f64) -> AnModel {
    AnModel::build(2, &[C64::new(t0, 0.2), C64::new(0.15, -0.1)], &ModelOptions::default()).unwrap()
}

fn rmatrix(c: &mut Criterion) {
    let m = a2(-0.6);
    let f = m.canonical_frame().unwrap();
    c.bench_function("rmatrix_a2_k8", |b| b.iter(|| RMatrix::compute(black_box(&m), &f, 8).unwrap()));
}

fn table(c: &mut Criterion) {
    let m = a2(-0.6);
    let f = m.canonical_frame().unwrap();
    let mut group = c.benchmark_group("table_a2");
    group.sample_size(10);
    for (g_max, n_max) in [(1, 2), (2, 2), (2, 3)] {
        let opts = TableOptions { g_max, n_max, ..Default::default() };
        group.bench_function(format!("g{g_max}_n{n_max}"), |b| b.iter(|| build_table(black_box(&m), &f, &opts).unwrap()));
    }
    group.finish();
}

fn extended(c: &mut Criterion) {
    let m = AnModel::build(2, &[C64::new(-0.1, 0.0), C64::new(0.0, 0.0)], &ModelOptions::default()).unwrap();
    let mut group = c.benchmark_group("extended_a2");
    group.sample_size(10);
    group.bench_function("g1_deg1", |b| b.iter(|| compare_extended(black_box(&m), 1, 1, &ExtendedOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, rmatrix, table, extended);
criterion_main!(benches);
