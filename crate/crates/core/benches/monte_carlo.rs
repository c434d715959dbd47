use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flatcurve::exec::Execution;
use flatcurve::network::{erdos_renyi, probability_for_mean_degree};
use flatcurve::scenario::{run_monte_carlo, run_uncontrolled, ScenarioConfig};

fn small_scenario() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::codogno();
    cfg.network.nodes = 4_000;
    cfg.epidemic.initial_infected = 200;
    cfg.horizon_days = 120;
    cfg.runs = 16;
    cfg.master_seed = 1;
    cfg
}

fn ensemble(c: &mut Criterion) {
    let cfg = small_scenario();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::new(name, cfg.runs), &exec, |b, &exec| {
            b.iter(|| run_monte_carlo(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn single_run(c: &mut Criterion) {
    let cfg = ScenarioConfig::codogno();
    let p = probability_for_mean_degree(cfg.network.nodes, cfg.network.mean_degree);
    let mut group = c.benchmark_group("components");
    group.sample_size(20);
    group.bench_function("erdos_renyi_16000", |b| b.iter(|| erdos_renyi(16_000, black_box(p), 7)));
    group.bench_function("uncontrolled_outbreak_16000", |b| {
        b.iter(|| run_uncontrolled(black_box(&cfg), 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, ensemble, single_run);
criterion_main!(benches);
