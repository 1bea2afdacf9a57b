use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use treewind::exclusion::build_exclusion;
use treewind::simulate::{replicate_rng, StartMode, WindingSimulator};
use treewind::statistics::exact_covariance;
use treewind::tree::PlanarTree;
use treewind_bench::{g2_fixture, star_fixture};

fn bench_build_chain(c: &mut Criterion) {
    let tree = PlanarTree::experiment_g2();
    c.bench_function("build_exclusion_g2_n2", |b| {
        b.iter(|| build_exclusion(black_box(&tree), 2).unwrap())
    });
}

fn bench_green(c: &mut Criterion) {
    c.bench_function("green_star6", |b| {
        b.iter_batched(
            || star_fixture(6),
            |fx| {
                fx.ex.chain.green().unwrap();
                black_box(&fx.ex);
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_exact_covariance(c: &mut Criterion) {
    let fx = g2_fixture();
    c.bench_function("exact_covariance_g2", |b| {
        b.iter(|| exact_covariance(black_box(&fx.ex.chain), &fx.ws).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let fx = star_fixture(3);
    let sim = WindingSimulator::for_exclusion(&fx.tree, &fx.census, &fx.ex, &fx.ws);
    c.bench_function("simulate_star3_100k_steps", |b| {
        b.iter(|| {
            let mut rng = replicate_rng(7, 0);
            black_box(sim.run(100_000, &mut rng, sim.start_state() as u32, None))
        })
    });
    c.bench_function("simulate_star3_8x10k_parallel", |b| {
        b.iter(|| black_box(sim.sample(10_000, 8, 7, StartMode::Lex, 2).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_build_chain,
    bench_green,
    bench_exact_covariance,
    bench_simulate
);
criterion_main!(benches);
