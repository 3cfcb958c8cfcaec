use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mdent_core::witness::psi432_pair_sets;
use mdent_core::zoo::{bell, psi_432, test_state};
use mdent_core::{
    apply_local_basis, optimize_witness, partial_trace, random_local_basis, sweep::sweep,
    witness_value, Budget, NoiseParams, PairSet, WitnessConvention,
};

fn witness(c: &mut Criterion) {
    let rho = test_state(NoiseParams::new(0.5, 0.2).unwrap());
    let sets = psi432_pair_sets();
    c.bench_function("witness_value k=2 on rho_test", |b| {
        b.iter(|| witness_value(black_box(&rho), &sets[1], 2, WitnessConvention::Tight).unwrap())
    });
}

fn marginals(c: &mut Criterion) {
    let rho = psi_432().to_density();
    c.bench_function("partial_trace 64x64 keep [0]", |b| {
        b.iter(|| partial_trace(black_box(&rho), &[0]).unwrap())
    });
}

fn grid(c: &mut Criterion) {
    let sets = psi432_pair_sets().to_vec();
    c.bench_function("sweep 11x11", |b| {
        b.iter(|| sweep(11, 11, &sets, WitnessConvention::Tight).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let psi = bell();
    let rho =
        apply_local_basis(&psi.to_density(), &random_local_basis(psi.structure(), 3)).unwrap();
    let idx = |a, b| vec![a, b].into();
    let pairs = PairSet::new(psi.structure(), [(idx(0, 0), idx(1, 1))]).unwrap();
    let budget = Budget {
        restarts: 2,
        steps: 50,
        ..Budget::default()
    };
    let mut group = c.benchmark_group("optimize");
    group.sample_size(10);
    group.bench_function("bell 2x50", |b| {
        b.iter(|| optimize_witness(&rho, &pairs, 1, WitnessConvention::Tight, &budget, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, witness, marginals, grid, optimizer);
criterion_main!(benches);
