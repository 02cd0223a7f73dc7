use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use resum_core::lattice::{Geometry, LatticeSpec, ModelParams, Sites};
use resum_core::oracle::{dense_steady_state, SteadyOptions};
use resum_core::perturb::{build_expansion, single_constituent, sweep, ExpansionConfig, SweepConfig};
use resum_core::JcSystem;

fn rank2_expansion(c: &mut Criterion) {
    let p = ModelParams::reference().with_qubit_detuning(8.0);
    let cfg = ExpansionConfig { max_rank: 2, loop_order: 2, prune: 1e-14, parallel: false };
    let mut group = c.benchmark_group("rank2_expansion");
    group.sample_size(10);
    for n in [4usize, 8, 16] {
        let sys = JcSystem::new(&p, &LatticeSpec::finite(Geometry::ChainPeriodic, n, 10.0).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &sys, |b, sys| {
            b.iter(|| build_expansion(black_box(sys), &cfg, Some(&single_constituent)).unwrap())
        });
    }
    group.finish();
}

fn infinite_chain_point(c: &mut Criterion) {
    let p = ModelParams::reference();
    let spec = LatticeSpec::new(Geometry::ChainPeriodic, Sites::Infinite, 10.0).unwrap();
    c.bench_function("infinite_chain_point", |b| b.iter(|| sweep(&p, &spec, black_box(&[-7.5]), &SweepConfig::default()).unwrap()));
}

fn dense_dimer(c: &mut Criterion) {
    let p = ModelParams::reference().with_qubit_detuning(-7.5);
    let spec = LatticeSpec::finite(Geometry::ChainPeriodic, 2, 10.0).unwrap();
    let mut group = c.benchmark_group("dense_dimer");
    group.sample_size(10);
    for cutoff in [3usize, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(cutoff), &cutoff, |b, &cutoff| {
            b.iter(|| dense_steady_state(&p, &spec, cutoff, &SteadyOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rank2_expansion, infinite_chain_point, dense_dimer);
criterion_main!(benches);
