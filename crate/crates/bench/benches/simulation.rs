use criterion::{black_box, criterion_group, criterion_main, Criterion};

use consim_core::generate::{generate_scenario, GeneratorConfig};
use consim_core::topology::{is_strongly_connected, laplacian};
use consim_core::world::{raycast_scan, Pose};
use consim_core::{run, AdjacencyMatrix, AgentSpec, Point, Scenario};

fn scan(c: &mut Criterion) {
    let mut config = GeneratorConfig::new(6, 5.0, 3);
    config.obstacles = 6;
    let scenario = generate_scenario(&config).expect("generated scenario");
    let positions: Vec<Point> = scenario.agents.iter().map(|a| a.position).collect();
    let pose = Pose { position: positions[0], heading: 0.7 };
    c.bench_function("raycast_scan", |b| {
        b.iter(|| raycast_scan(black_box(pose), &scenario.arena, &positions[1..]))
    });
}

fn graph(c: &mut Criterion) {
    let a1 = AdjacencyMatrix::reference_a1();
    c.bench_function("laplacian_a1", |b| b.iter(|| laplacian(black_box(&a1))));
    let big = AdjacencyMatrix::complete(64);
    c.bench_function("strongly_connected_k64", |b| b.iter(|| is_strongly_connected(black_box(&big))));
}

fn full_run(c: &mut Criterion) {
    let baseline = Scenario::reference(vec![
        AgentSpec::at(86.0, 244.0),
        AgentSpec::at(117.0, 663.0),
        AgentSpec::at(1225.0, 639.0),
        AgentSpec::at(1084.0, 127.0),
        AgentSpec::at(616.0, 173.0),
        AgentSpec::at(326.0, 80.0),
    ]);
    let blackout = generate_scenario(&GeneratorConfig::new(6, 5.0, 1)).expect("generated scenario");
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    group.bench_function("baseline", |b| b.iter(|| run(black_box(&baseline))));
    group.bench_function("blackout_5pct", |b| b.iter(|| run(black_box(&blackout))));
    group.finish();
}

criterion_group!(benches, scan, graph, full_run);
criterion_main!(benches);
