use amplitude_bench::torus_walk;
use amplitude_core::birth_death::{doubling_schedule, eigen_convergence, entrance_check, PoissonAccelerated};
use amplitude_core::bounds::{path_bound, spectral_bound, PathChoice};
use amplitude_core::reproduce::golden_generator;
use amplitude_core::simulate::{estimate_ratio, sandwich_experiment};
use amplitude_core::spectral::full_spectrum_with_minors;
use amplitude_core::{build_rho_chain, dirichlet_eigenpair};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn eigenpair(c: &mut Criterion) {
    let mut g = c.benchmark_group("dirichlet_eigenpair");
    for n in [100usize, 10_000, 100_000] {
        let chain = build_rho_chain(n, 1.0).unwrap();
        g.bench_with_input(BenchmarkId::new("rho_chain", n), &chain, |b, chain| b.iter(|| dirichlet_eigenpair(black_box(chain)).unwrap()));
    }
    for side in [8usize, 16] {
        let walk = torus_walk(side);
        g.bench_with_input(BenchmarkId::new("torus", side * side), &walk, |b, w| b.iter(|| dirichlet_eigenpair(black_box(w)).unwrap()));
    }
    g.finish();
}

fn bounds(c: &mut Criterion) {
    let walk = torus_walk(8);
    let l0 = dirichlet_eigenpair(&walk).unwrap().lambda0;
    c.bench_function("path_bound/torus64", |b| b.iter(|| path_bound(black_box(&walk), l0, PathChoice::Best).unwrap()));
    let chain = build_rho_chain(200, 1.0).unwrap();
    c.bench_function("spectral_bound/rho200", |b| {
        b.iter(|| spectral_bound(&full_spectrum_with_minors(black_box(&chain)).unwrap()).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let golden = golden_generator();
    let l0 = dirichlet_eigenpair(&golden).unwrap().lambda0;
    c.bench_function("estimate_ratio/golden_10k", |b| b.iter(|| estimate_ratio(&golden, l0, 1, 0, 10_000, 7).unwrap()));
    let chain = build_rho_chain(10, 1.0).unwrap();
    let mut mu0 = vec![0.0; 10];
    mu0[9] = 1.0;
    c.bench_function("sandwich/rho10", |b| b.iter(|| sandwich_experiment(&chain, &mu0, &[0.1, 1.0, 5.0, 20.0]).unwrap()));
}

fn denumerable(c: &mut Criterion) {
    let mut g = c.benchmark_group("birth_death");
    g.sample_size(10);
    g.bench_function("entrance/10k", |b| b.iter(|| entrance_check(&PoissonAccelerated, 10_000).unwrap()));
    g.bench_function("eigen_convergence/2^6..2^12", |b| {
        b.iter(|| eigen_convergence(&PoissonAccelerated, 8, &doubling_schedule(6, 12), 1e-8).unwrap())
    });
    g.finish();
}

criterion_group!(benches, eigenpair, bounds, simulation, denumerable);
criterion_main!(benches);
