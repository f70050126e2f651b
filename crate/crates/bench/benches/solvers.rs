use std::hint::black_box;

use bertrand::harness::oracle::{oracle_du_allocation, oracle_su_price};
use bertrand::harness::{run_fig4_sweep, FIG4_WORKLOADS};
use bertrand::{select_sus, solve_cig, solve_icig, Scenario, SolverConfig};
use bertrand_bench::{crowded, oversubscribed};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn solvers(c: &mut Criterion) {
    let two = Scenario::two_su_reference();
    let active = two.all_sus();
    c.bench_function("solve_cig/reference", |b| {
        b.iter(|| solve_cig(black_box(&two), &active, &SolverConfig::cig()).unwrap())
    });
    c.bench_function("solve_icig/reference", |b| {
        b.iter(|| solve_icig(black_box(&two), &active, &SolverConfig::icig()).unwrap())
    });
    let mut group = c.benchmark_group("solve_cig/ring");
    for n in [2, 4, 8, 16] {
        let s = crowded(n);
        let active = s.all_sus();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| solve_cig(s, &active, &SolverConfig::cig()).unwrap())
        });
    }
    group.finish();
}

fn selection(c: &mut Criterion) {
    let mut group = c.benchmark_group("select_sus/oversubscribed");
    for n in [4, 8] {
        let s = oversubscribed(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| select_sus(s, &s.all_sus(), &SolverConfig::cig()).unwrap())
        });
    }
    group.finish();
    let base = Scenario::three_su_reference(0.0);
    c.bench_function("workload_sweep", |b| {
        b.iter(|| run_fig4_sweep(&base, &FIG4_WORKLOADS, &SolverConfig::cig()).unwrap())
    });
}

fn oracles(c: &mut Criterion) {
    let two = Scenario::two_su_reference();
    let active = two.all_sus();
    let prices = solve_cig(&two, &active, &SolverConfig::cig())
        .unwrap()
        .prices()
        .to_vec();
    c.bench_function("oracle_du_allocation/1e-3", |b| {
        b.iter(|| oracle_du_allocation(&two, &active, black_box(&prices), 1e-3).unwrap())
    });
    c.bench_function("oracle_su_price/1e-5", |b| {
        b.iter(|| oracle_su_price(&two, &active, 0, black_box(&prices), 1e-5).unwrap())
    });
}

criterion_group!(benches, solvers, selection, oracles);
criterion_main!(benches);
