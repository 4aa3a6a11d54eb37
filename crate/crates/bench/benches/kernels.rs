use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ppsim_core::{
    closed_evolve, initial_state, open_evolve, run_ensemble, step, AtomicInit, EnsembleConfig, GaugeConfig,
    ModelParams, NoiseScheme, RngStream, StepConfig,
};

fn single_step(c: &mut Criterion) {
    let p = ModelParams::new(10, 0.0, 10.0, AtomicInit::AllGround).unwrap();
    let init = initial_state(&p);
    let mut group = c.benchmark_group("step");
    for (name, noise_scheme, gauge) in [
        ("scheme_b", NoiseScheme::B, GaugeConfig::default()),
        ("scheme_a", NoiseScheme::A, GaugeConfig::default()),
        ("scheme_b_gauged", NoiseScheme::B, GaugeConfig::enabled()),
    ] {
        let cfg = StepConfig {
            noise_scheme,
            ..StepConfig::default()
        };
        let mut stream = RngStream::new(1, 0);
        group.bench_function(name, |b| {
            b.iter(|| step(black_box(&init), &cfg, &p, &gauge, &mut stream).unwrap())
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let p = ModelParams::new(10, 0.0, 10.0, AtomicInit::AllGround).unwrap();
    let cfg = EnsembleConfig {
        n_traj: 256,
        tau_max: 1.0,
        record_every: 100,
        ..EnsembleConfig::default()
    };
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.throughput(Throughput::Elements(cfg.n_traj * cfg.n_steps() as u64));
    group.bench_function("256_traj_1000_steps", |b| b.iter(|| run_ensemble(&p, black_box(&cfg)).unwrap()));
    group.finish();
}

fn exact(c: &mut Criterion) {
    let taus: Vec<f64> = (0..=250).map(|i| i as f64 * 0.1).collect();
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    for (n_atoms, n_ph) in [(10u32, 10.0), (10, 100.0), (100, 1000.0)] {
        let p = ModelParams::new(n_atoms, 0.0, n_ph, AtomicInit::AllGround).unwrap();
        group.bench_with_input(BenchmarkId::new("closed", format!("N{n_atoms}_nph{n_ph}")), &p, |b, p| {
            b.iter(|| closed_evolve(p, &taus).unwrap())
        });
    }
    let p = ModelParams::new(4, 3.0, 0.4, AtomicInit::AllGround).unwrap();
    group.bench_function("open_N4", |b| b.iter(|| open_evolve(&p, &taus).unwrap()));
    group.finish();
}

criterion_group!(benches, single_step, ensemble, exact);
criterion_main!(benches);
