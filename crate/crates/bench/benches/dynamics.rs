use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fairloop::{
    aggregate_trials, basin_map, simulate, solve, DistributionSpec, Grid, Policy, Scenario,
};
use fairloop_bench::{reference, state};

fn threshold(c: &mut Criterion) {
    let mut g = c.benchmark_group("threshold");
    for (name, dist) in [
        ("exponential", DistributionSpec::Exponential),
        ("pareto", DistributionSpec::Pareto { k: 3.0 }),
        ("gaussian", DistributionSpec::Gaussian { sigma: 1.0 }),
    ] {
        let s = reference(dist, Policy::SharedThreshold);
        let x = state(2.0, 3.0);
        g.bench_function(name, |b| {
            b.iter(|| solve(black_box(&s), black_box(x)).unwrap())
        });
    }
    g.finish();
}

fn trajectory(c: &mut Criterion) {
    let s = reference(DistributionSpec::Exponential, Policy::SharedThreshold);
    c.bench_function("simulate_1000", |b| {
        b.iter(|| simulate(&s, black_box(state(1.0, 2.0)), 1000, 1e-9).unwrap())
    });
}

fn basin(c: &mut Criterion) {
    let s = reference(DistributionSpec::Exponential, Policy::SharedThreshold);
    let grid = Grid::new(5.0, 21).unwrap();
    c.bench_function("basin_21x21", |b| b.iter(|| basin_map(&s, grid, 500, 1e-6)));
}

fn montecarlo(c: &mut Criterion) {
    let s = Scenario::new(
        50,
        100,
        20,
        0.5,
        5.0,
        DistributionSpec::Exponential,
        Policy::SharedThreshold,
    )
    .unwrap();
    let mut g = c.benchmark_group("montecarlo");
    g.sample_size(10);
    g.bench_function("trials_10000", |b| {
        b.iter(|| aggregate_trials(&s, state(2.0, 3.0), 10_000, 1).unwrap())
    });
    g.finish();
}

criterion_group!(benches, threshold, trajectory, basin, montecarlo);
criterion_main!(benches);
