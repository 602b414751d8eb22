//! Sequential vs. thread-pool replication throughput.
//!
//! Run with `cargo bench -p simplexq` (and optionally
//! `--no-default-features` to time the build without rayon).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use simplexq::sim::run_sim;
use simplexq::{AccessTopology, ArrivalModel, SchedulingPolicy, ServiceDistribution, SimConfig};

fn replication_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    for &threads in &[1usize, 0] {
        let label = if threads == 1 { "sequential" } else { "pool" };
        group.bench_with_input(BenchmarkId::new(label, 8), &threads, |b, &threads| {
            let mut cfg = SimConfig::new(
                AccessTopology::single_symbol(3).expect("valid availability"),
                SchedulingPolicy::ReplicateToAll,
                ArrivalModel::FixedHot { rate: 1.2 },
                ServiceDistribution::exp(1.0).expect("valid rate"),
            );
            cfg.num_requests = 40_000;
            cfg.replications = 8;
            cfg.threads = threads;
            b.iter(|| run_sim(&cfg).expect("stable configuration"));
        });
    }
    group.finish();
}

criterion_group!(benches, replication_batch);
criterion_main!(benches);
