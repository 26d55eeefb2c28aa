//! Heavy kernels on the reduced car benchmark, on one worker and on the full
//! pool. Build with `--no-default-features` for the plain sequential path.

use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pacimdp::exec;
use pacimdp::imdp::{assemble_imdp, robust_value_iteration, ViSettings};
use pacimdp::pipeline::{Pipeline, RunConfig};
use pacimdp::reachability::build_action_table;
use pacimdp::systems::SamplingGrid;

fn pipeline() -> Pipeline {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/car_reduced.toml");
    let mut cfg = RunConfig::load(&path).unwrap();
    cfg.output.cache = false;
    Pipeline::new(cfg).unwrap()
}

fn worker_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn kernels(c: &mut Criterion) {
    let p = pipeline();
    let cfg = p.config().clone();
    let grid = SamplingGrid {
        states_per_cell: cfg.sampling.states_per_cell.clone(),
        inputs: cfg.sampling.inputs.clone(),
    };
    let table = p.action_table().unwrap();
    let noise = p.noise().unwrap();
    let (imdp, _) = p.abstraction(&table).unwrap();
    let settings = ViSettings {
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
    };

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for threads in worker_counts() {
        group.bench_with_input(BenchmarkId::new("scaling_factors", threads), &threads, |b, &t| {
            b.iter(|| {
                exec::with_threads(t, || {
                    build_action_table(p.model(), p.partition(), &grid, &cfg.sampling.voxels, 1.5).unwrap()
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("intervals", threads), &threads, |b, &t| {
            b.iter(|| {
                exec::with_threads(t, || {
                    assemble_imdp(p.partition(), &table, &noise, 0.05, p.initial_state()).unwrap()
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("value_iteration", threads), &threads, |b, &t| {
            b.iter(|| exec::with_threads(t, || robust_value_iteration(&imdp, p.spec(), settings).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
