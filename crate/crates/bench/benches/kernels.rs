use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rlab_bench::disc_fixture;
use rlab_core::convexity::k_constant;
use rlab_core::measure::mu_of;
use rlab_core::sigma_rearrange;
use rlab_core::vlasov::{solve_potential, Polytrope};

fn rearrange(c: &mut Criterion) {
    let mut g = c.benchmark_group("sigma_rearrange");
    for n in [32, 128] {
        let (f, s) = disc_fixture(n, n);
        g.bench_with_input(BenchmarkId::from_parameter(n * n), &(f, s), |b, (f, s)| b.iter(|| sigma_rearrange(f, s).unwrap()));
    }
    g.finish();
}

fn distribution(c: &mut Criterion) {
    let (f, _) = disc_fixture(128, 128);
    c.bench_function("mu_of/16384", |b| b.iter(|| mu_of(&f)));
}

fn constant(c: &mut Criterion) {
    let (f, s) = disc_fixture(64, 64);
    let q = sigma_rearrange(&f, &s).unwrap();
    c.bench_function("k_constant/4096", |b| b.iter(|| k_constant(&q, &s).unwrap()));
}

fn poisson(c: &mut Criterion) {
    let p = Polytrope::new(1.5, 1.0, -1.0).unwrap();
    c.bench_function("solve_potential/2048", |b| b.iter(|| solve_potential(p, 2048, 1.25, 1e-10).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = rearrange, distribution, constant, poisson
}
criterion_main!(benches);
