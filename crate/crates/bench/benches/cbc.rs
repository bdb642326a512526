use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion as Bench};

use latcosine::{cbc_construct, CbcConfig, Criterion, Engine};
use latcosine_bench::{power_law, SCALING_PRIMES};

fn plain_vs_fast(c: &mut Bench) {
    let params = power_law(1.0, 10);
    let mut group = c.benchmark_group("cbc_d10");
    for n in [251u64, 1009] {
        for engine in [Engine::Plain, Engine::Fast] {
            let cfg = CbcConfig::new(n, params.clone(), Criterion::KorobovIntegration, engine);
            group.bench_with_input(BenchmarkId::new(format!("{engine:?}"), n), &cfg, |b, cfg| {
                b.iter(|| cbc_construct(black_box(cfg)).unwrap())
            });
        }
    }
    group.finish();
}

fn fast_scaling(c: &mut Bench) {
    let params = power_law(1.0, 20);
    let mut group = c.benchmark_group("cbc_fast_scaling_d20");
    group.sample_size(10);
    for n in SCALING_PRIMES {
        let cfg = CbcConfig::new(n, params.clone(), Criterion::KorobovIntegration, Engine::Fast);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| b.iter(|| cbc_construct(black_box(cfg)).unwrap()));
    }
    group.finish();
}

fn approximation_criterion(c: &mut Bench) {
    let params = power_law(2.0, 3);
    let cfg = CbcConfig::new(251, params, Criterion::ApproximationE, Engine::Plain).with_m(16.0);
    c.bench_function("cbc_approximation_n251_d3_m16", |b| b.iter(|| cbc_construct(black_box(&cfg)).unwrap()));
}

criterion_group!(benches, plain_vs_fast, fast_scaling, approximation_criterion);
criterion_main!(benches);
