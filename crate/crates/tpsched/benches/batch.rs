//! Benchmark batch simulation throughput: the feature-gated parallel path
//! against the sequential reference, over a sweep of independent runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tpsched::{
    generate, heft_schedule, simulate_batch, simulate_batch_sequential, DagShape, GenParams,
    SimConfig, SimJob,
};

fn jobs(n_jobs: usize) -> Vec<SimJob> {
    (0..n_jobs as u64)
        .map(|seed| {
            let params = GenParams {
                heterogeneity: 0.4,
                ..GenParams::new(
                    DagShape::LayeredRandom { layers: 3, width: 3, edge_prob: 0.5 },
                    4,
                    seed,
                )
            };
            let (graph, cluster, exec) = generate(&params).expect("valid generated bundle");
            let schedule = heft_schedule(&graph, &cluster, &exec).expect("schedulable bundle");
            let mut config = SimConfig::new(400, seed);
            config.warmup_instances = Some(40);
            SimJob { graph, cluster, exec, schedule, config }
        })
        .collect()
}

fn bench_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_batch");
    for n_jobs in [4usize, 16, 64] {
        let batch = jobs(n_jobs);
        group.bench_with_input(BenchmarkId::new("parallel", n_jobs), &batch, |b, batch| {
            b.iter(|| simulate_batch(batch))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n_jobs), &batch, |b, batch| {
            b.iter(|| simulate_batch_sequential(batch))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
