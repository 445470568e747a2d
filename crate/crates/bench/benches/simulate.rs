use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use macroflow_bench::vacuum_setup;
use macroflow_core::sim::{simulate, LatencyMode, SimConfig};
use macroflow_core::verify::{verify, VerifyOptions};

fn bench_simulate(c: &mut Criterion) {
    let s = vacuum_setup();
    let cfg = SimConfig {
        horizon_ms: 10_000.0,
        mode: LatencyMode::Wcet,
        ..SimConfig::default()
    };
    c.bench_function("simulate_vacuum_10s_wcet", |b| {
        b.iter(|| black_box(simulate(&s.graph, &s.platform, &s.mapping, &s.perf, &cfg).unwrap()))
    });
}

fn bench_verify(c: &mut Criterion) {
    let s = vacuum_setup();
    c.bench_function("verify_vacuum", |b| {
        b.iter(|| {
            black_box(verify(
                &s.graph,
                &s.constraints,
                &s.platform,
                &s.mapping,
                &s.perf,
                VerifyOptions::default(),
            ))
        })
    });
}

criterion_group!(benches, bench_simulate, bench_verify);
criterion_main!(benches);
