//! Sequential against rayon execution of the same Monte Carlo workloads.
//! Without the `parallel` feature only the sequential variants are built.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pathdep::experiments::{run_forward, ExperimentConfig, ModelSpec, SweepSpec};
use pathdep::functionals::{CoefSpec, Nonlinearity};
use pathdep::Executor;

fn config() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ModelSpec {
        b: CoefSpec::Zero { rows: 1, cols: 1 },
        sigma: CoefSpec::Pointwise {
            g: Nonlinearity::Tanh,
            scale: vec![vec![0.8]],
        },
        x0: vec![0.3],
    });
    c.master_grid = 256;
    c.sweep = SweepSpec::Dyadic {
        min_cells: 8,
        max_cells: 32,
    };
    c.n_samples = 256;
    c.bias_footnote = false;
    c
}

fn executors() -> Vec<(&'static str, Executor)> {
    #[allow(unused_mut)]
    let mut v = vec![("sequential", Executor::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Executor::Parallel { workers: 0 }));
    v
}

fn forward_table(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("forward_table");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, exec| {
            b.iter(|| black_box(run_forward(&cfg, exec).unwrap()))
        });
    }
    group.finish();
}

fn brownian_draws(c: &mut Criterion) {
    use pathdep::stochastics::{sample_brownian, RngSpec};
    use pathdep::TimeGrid;
    use std::sync::Arc;
    let grid = Arc::new(TimeGrid::uniform(1.0, 0.0, 1024).unwrap());
    let mut group = c.benchmark_group("brownian_sup");
    for (name, exec) in executors() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, exec| {
            b.iter(|| {
                let v = exec.map(512, |i| pathdep::paths::sup_norm(&sample_brownian(&grid, 1, &RngSpec::new(1, i))));
                black_box(v)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, forward_table, brownian_draws);
criterion_main!(benches);
