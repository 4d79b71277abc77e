use std::hint::black_box;

use bandsim::harness::{run_scenario, testbed_mode, RunOptions, ScenarioTrace, TestbedConfig};
use bandsim_bench::scenario;
use criterion::{criterion_group, criterion_main, Criterion};

fn trace(c: &mut Criterion) {
    let cfg = scenario(200, 1);
    let nets = cfg.build_networks();
    c.bench_function("trace/200-steps", |b| {
        b.iter(|| ScenarioTrace::generate(black_box(&cfg), &nets, 1, 0).unwrap())
    });
}

fn runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    for duts in [1, 3] {
        let cfg = scenario(200, duts);
        let opts = RunOptions {
            iterations: Some(4),
            seed: 1,
            threads: Some(1),
            keep_steps: false,
        };
        group.bench_function(format!("benchmark-set/{duts}-dut/4-iterations"), |b| {
            b.iter(|| run_scenario(&cfg, &cfg.policies, &opts).unwrap())
        });
    }
    let mut tb = TestbedConfig::training_experiment();
    tb.repetitions = 100;
    group.bench_function("testbed/100-repetitions", |b| {
        b.iter(|| testbed_mode(black_box(&tb), 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, trace, runs);
criterion_main!(benches);
