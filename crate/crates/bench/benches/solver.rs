use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nmps_bench::{chi_instance, config_for, timed_problems};
use nmps_core::bench::{run_matrix, DEFAULT_TAUS};
use nmps_core::problem;
use nmps_core::solver::solve;
use nmps_core::stationarity::chi;
use nmps_core::{StrategyKind, StrategyParams};

fn solve_registry(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    for p in timed_problems() {
        for kind in [StrategyKind::MaxMemory, StrategyKind::Armijo] {
            let config = config_for(kind);
            group.bench_with_input(BenchmarkId::new(kind.token(), &p.name), &p, |b, p| {
                b.iter(|| solve(black_box(p), &config).unwrap())
            });
        }
    }
    group.finish();
}

fn stationarity(c: &mut Criterion) {
    let mut group = c.benchmark_group("chi");
    for n in [2, 10, 100] {
        let (g, x, bounds) = chi_instance(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| chi(black_box(&g), black_box(&x), &bounds).unwrap())
        });
    }
    group.finish();
}

fn matrix(c: &mut Criterion) {
    let problems = problem::registry();
    let strategies: Vec<_> = StrategyKind::ALL.iter().map(|&k| StrategyParams::new(k)).collect();
    let config = config_for(StrategyKind::MaxMemory);
    let mut group = c.benchmark_group("matrix");
    group.sample_size(10);
    for threads in [0, 4] {
        group.bench_with_input(BenchmarkId::new("threads", threads), &threads, |b, &t| {
            b.iter(|| run_matrix(&problems, &strategies, &config, &DEFAULT_TAUS, t, false).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solve_registry, stationarity, matrix);
criterion_main!(benches);
