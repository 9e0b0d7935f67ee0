use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use conelab::oracle::{brute_force_enumerate, dp_survival_prob, BRUTE_FORCE_BUDGET};
use conelab::walk::estimate_survival;
use conelab_bench::fixtures;

fn dp(c: &mut Criterion) {
    let mut g = c.benchmark_group("dp_survival");
    for f in fixtures() {
        g.bench_function(BenchmarkId::new(f.label, 256), |b| {
            b.iter(|| dp_survival_prob(&f.cone, &f.start, &f.dist, &[256]).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_survival");
    g.sample_size(10);
    for f in fixtures() {
        g.bench_function(BenchmarkId::new(f.label, "1e5x64"), |b| {
            b.iter(|| estimate_survival(&f.cone, &f.start, &f.dist, &[64], 100_000, 1, 1).unwrap())
        });
    }
    g.finish();
}

fn brute_force(c: &mut Criterion) {
    let mut g = c.benchmark_group("brute_force");
    g.sample_size(10);
    for f in fixtures() {
        g.bench_function(BenchmarkId::new(f.label, 8), |b| {
            b.iter(|| brute_force_enumerate(&f.cone, &f.start, &f.dist, 8, BRUTE_FORCE_BUDGET).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, dp, monte_carlo, brute_force);
criterion_main!(benches);
