//! Parallel versus sequential conformance sweeps. Without the `parallel`
//! feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rtm_core::sweep::{
    dsl_fuzz_trial, fixture_engine, incremental_vs_batch_trial, run_trials, run_trials_sequential,
};

fn incremental_vs_batch(c: &mut Criterion) {
    let base = fixture_engine();
    let mut group = c.benchmark_group("incremental_vs_batch");
    group.sample_size(10);
    for trials in [8u64, 32] {
        group.bench_with_input(BenchmarkId::new("parallel", trials), &trials, |b, &n| {
            b.iter(|| {
                run_trials(0..n, |s| {
                    incremental_vs_batch_trial(&base, black_box(s), 20)
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("sequential", trials), &trials, |b, &n| {
            b.iter(|| {
                run_trials_sequential(0..n, |s| {
                    incremental_vs_batch_trial(&base, black_box(s), 20)
                })
            })
        });
    }
    group.finish();
}

fn dsl_fuzz(c: &mut Criterion) {
    let mut group = c.benchmark_group("dsl_fuzz");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| run_trials(0..200, |s| dsl_fuzz_trial(black_box(s))))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| run_trials_sequential(0..200, |s| dsl_fuzz_trial(black_box(s))))
    });
    group.finish();
}

criterion_group!(benches, incremental_vs_batch, dsl_fuzz);
criterion_main!(benches);
