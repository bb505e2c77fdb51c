use biloc_core::coincidence::{fourfold_filter, twofold_match, Link};
use biloc_core::sim::{simulate_run, Node};
use biloc_core::sync::fine_offset;
use biloc_core::ExperimentConfig;
use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};

const RUN_S: f64 = 2.0;

fn pipeline(c: &mut Criterion) {
    let cfg = ExperimentConfig::calibrated();
    let run = simulate_run(&cfg.network, &cfg.schedule, RUN_S, 1).unwrap();
    let s = &run.streams;
    let clicks: usize = Node::ALL.iter().map(|&n| s.get(n).len()).sum();

    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.throughput(Throughput::Elements(clicks as u64));
    g.bench_function("simulate_2s", |b| {
        b.iter(|| simulate_run(&cfg.network, &cfg.schedule, RUN_S, black_box(1)).unwrap())
    });

    let coarse = run.truth.pair_offset_ticks(Node::A, Node::BArmA).round() as i64;
    g.bench_function("fine_offset_2s", |b| {
        b.iter(|| {
            fine_offset(
                s.get(Node::A),
                s.get(Node::BArmA),
                black_box(coarse),
                2_000,
                1,
            )
            .unwrap()
        })
    });

    let ab = twofold_match(s.get(Node::A), s.get(Node::BArmA), 5_000, Link::AB);
    let bc = twofold_match(s.get(Node::C), s.get(Node::BArmC), 5_000, Link::BC);
    g.bench_function("twofold_match_2s", |b| {
        b.iter(|| {
            twofold_match(
                s.get(Node::A),
                s.get(Node::BArmA),
                black_box(5_000),
                Link::AB,
            )
        })
    });
    g.bench_function("fourfold_filter_2s", |b| {
        b.iter(|| fourfold_filter(&ab, &bc, black_box(20_000)))
    });
    g.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
