use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use limdep::validation::{check_score_mean, gen_dataset, DgpConfig};
use limdep::{evaluate, fit, Exec, FitOptions, ModelKind, Need};

const EXECS: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn dgp(n: usize) -> DgpConfig {
    DgpConfig::intercept_normal(vec![1.0, 0.5, -0.25], 1.0, 0.0, n, 11)
}

fn sample_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        let data = gen_dataset(kind, &dgp(50_000)).unwrap();
        let p = dgp(50_000).truth();
        for (name, exec) in EXECS {
            group.bench_with_input(BenchmarkId::new(name, kind), &data, |b, d| {
                b.iter(|| evaluate(black_box(d), &p, Need::ALL, exec))
            });
        }
    }
    group.finish();
}

fn full_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        let data = gen_dataset(kind, &dgp(20_000)).unwrap();
        for (name, exec) in EXECS {
            let opts = FitOptions {
                exec,
                ..FitOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(name, kind), &data, |b, d| {
                b.iter(|| fit(black_box(d), &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("score_mean_mc");
    group.sample_size(10);
    let cfg = dgp(1_000);
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        for (name, exec) in EXECS {
            group.bench_function(BenchmarkId::new(name, kind), |b| {
                b.iter(|| check_score_mean(kind, black_box(&cfg), 200_000, None, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sample_evaluation, full_fit, monte_carlo);
criterion_main!(benches);
