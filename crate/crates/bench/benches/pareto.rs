use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use macroflow_bench::large_knob_space;
use macroflow_core::dse::{enumerate_pareto, pruned_pareto};

fn bench_pareto(c: &mut Criterion) {
    let space = large_knob_space();
    c.bench_function("pruned_pareto_262144", |b| {
        b.iter(|| black_box(pruned_pareto(&space, 200.0, 100.0).unwrap()))
    });
    c.bench_function("enumerate_pareto_262144", |b| {
        b.iter(|| black_box(enumerate_pareto(&space, 200.0, 100.0).unwrap()))
    });
}

criterion_group!(benches, bench_pareto);
criterion_main!(benches);
