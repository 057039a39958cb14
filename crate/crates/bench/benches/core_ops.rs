use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sirsn_bench::sized_sample;
use sirsn_core::arrangement::build;
use sirsn_core::comparison::{init, step, ComparisonParams};
use sirsn_core::geodesics::route_between;
use sirsn_core::geometry::{Disk, Point, ORIGIN};
use sirsn_core::line_process::{sample, ProcessParams};
use sirsn_core::rng::labeled_rng;
use std::hint::black_box;

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample");
    for &target in &[30.0, 300.0] {
        let radius = 2.0;
        let floor = (std::f64::consts::PI * radius / target).sqrt();
        group.bench_with_input(BenchmarkId::from_parameter(target as u64), &floor, |b, &f| {
            let params = ProcessParams::new(3.0, 42).unwrap();
            let window = Disk::new(ORIGIN, radius).unwrap();
            b.iter(|| sample(black_box(params), window, f).unwrap());
        });
    }
    group.finish();
}

fn bench_arrangement(c: &mut Criterion) {
    let mut group = c.benchmark_group("arrangement_build");
    for &target in &[30.0, 300.0] {
        let smp = sized_sample(target, 42);
        group.bench_with_input(
            BenchmarkId::from_parameter(target as u64),
            &smp,
            |b, smp| {
                b.iter(|| build(black_box(smp), smp.window).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_routing(c: &mut Criterion) {
    let mut group = c.benchmark_group("route");
    for &target in &[30.0, 300.0] {
        let smp = sized_sample(target, 42);
        let graph = build(&smp, smp.window).unwrap();
        let (graph, src) = graph
            .inject_terminal(Point::new(-0.8, 0.0), 0.02, 64)
            .unwrap();
        let (graph, dst) = graph
            .inject_terminal(Point::new(0.8, 0.0), 0.02, 64)
            .unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(target as u64),
            &graph,
            |b, g| {
                b.iter(|| route_between(black_box(g), &src, &dst, false).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_perpetuity(c: &mut Criterion) {
    c.bench_function("perpetuity_10k_steps", |b| {
        let params = ComparisonParams::new(2, 3.0, 1.0).unwrap();
        b.iter(|| {
            let mut rng = labeled_rng(7, 0);
            let mut state = init(&params, &mut rng);
            for _ in 0..10_000 {
                state = step(&params, &state, &mut rng);
            }
            black_box(state.x)
        });
    });
}

criterion_group!(
    benches,
    bench_sampling,
    bench_arrangement,
    bench_routing,
    bench_perpetuity
);
criterion_main!(benches);
