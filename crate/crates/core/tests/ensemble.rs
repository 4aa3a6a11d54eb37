use ppsim_core::{
    closed_evolve, divergence_fraction_series, run_ensemble, AtomicInit, EnsembleConfig, GaugeConfig, ModelParams,
    Observable,
};

fn cfg(n_traj: u64, seed: u64, tau_max: f64, record_every: usize) -> EnsembleConfig {
    EnsembleConfig {
        n_traj,
        seed,
        tau_max,
        record_every,
        ..EnsembleConfig::default()
    }
}

#[test]
fn ground_vacuum_is_a_fixed_point() {
    let p = ModelParams::new(10, 0.5, 0.0, AtomicInit::AllGround).unwrap();
    let c = EnsembleConfig {
        observables: Observable::ALL.to_vec(),
        ..cfg(300, 1, 5.0, 100)
    };
    let r = run_ensemble(&p, &c).unwrap();
    assert!(r.alive_fraction.iter().all(|a| *a == 1.0));
    assert!(r.threshold_time.is_infinite());
    for s in &r.series {
        for e in &s.masked {
            assert_eq!(e.mean.norm(), 0.0, "{:?}", s.observable);
            assert_eq!(e.stderr_re, 0.0);
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = ModelParams::new(10, 0.2, 100.0, AtomicInit::AllGround).unwrap();
    let c = EnsembleConfig {
        gauge: GaugeConfig::enabled(),
        ..cfg(1100, 42, 8.0, 250)
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&p, &c).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.alive_fraction, three.alive_fraction);
    assert_eq!(one.divergence_times, three.divergence_times);
    assert_eq!(one.series, three.series);
}

#[test]
fn standard_error_shrinks_as_inverse_root_of_sample_size() {
    let p = ModelParams::new(100, 0.0, 10.0, AtomicInit::AllGround).unwrap();
    let se = |n| {
        let r = run_ensemble(&p, &cfg(n, 5, 2.0, 500)).unwrap();
        let s = &r.observable(Observable::RhoEe).unwrap().masked;
        s[1..].iter().map(|e| e.stderr_re).sum::<f64>()
    };
    let ratio = se(400) / se(1600);
    assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn divergence_fraction_never_decreases() {
    let p = ModelParams::new(10, 0.0, 100.0, AtomicInit::AllGround).unwrap();
    let r = run_ensemble(&p, &cfg(512, 2, 25.0, 50)).unwrap();
    let frac = divergence_fraction_series(&r);
    assert!(frac.windows(2).all(|w| w[1] >= w[0]));
    assert!(*frac.last().unwrap() > 0.5);
    assert!(r.threshold_time.is_finite() && r.threshold_time < 25.0);
    let recorded = r.divergence_times.iter().filter(|t| t.is_finite()).count();
    assert_eq!(recorded, r.diverged_count());
    assert!(((1.0 - r.alive_fraction.last().unwrap()) * 512.0 - recorded as f64).abs() < 0.5);
}

#[test]
fn larger_systems_diverge_later() {
    let threshold = |n_atoms: u32| {
        let p = ModelParams::new(n_atoms, 0.0, 10.0 * f64::from(n_atoms), AtomicInit::AllGround).unwrap();
        run_ensemble(&p, &cfg(1000, 9, 25.0, 10)).unwrap().threshold_time
    };
    let small = threshold(10);
    let large = threshold(100);
    assert!(small.is_finite());
    assert!(large > small, "N=100 threshold {large} vs N=10 {small}");
}

#[test]
fn large_system_matches_exact_before_divergence() {
    let p = ModelParams::new(100, 0.0, 10.0, AtomicInit::AllGround).unwrap();
    for gauge in [GaugeConfig::default(), GaugeConfig::enabled()] {
        let r = run_ensemble(
            &p,
            &EnsembleConfig {
                gauge,
                ..cfg(1000, 17, 6.0, 250)
            },
        )
        .unwrap();
        let exact = closed_evolve(&p, &r.taus).unwrap();
        let series = r.observable(Observable::RhoEe).unwrap();
        let estimates = if gauge.enabled {
            series.weighted.as_ref().unwrap()
        } else {
            assert!(series.weighted.is_none());
            &series.masked
        };
        for (k, e) in estimates.iter().enumerate() {
            assert!(r.alive_fraction[k] > 0.99);
            let tol = 4.0 * e.stderr_re + 0.01;
            assert!(
                (e.mean.re - exact.p_e[k]).abs() < tol,
                "gauge {} tau {}: {} vs {}",
                gauge.enabled,
                r.taus[k],
                e.mean.re,
                exact.p_e[k]
            );
        }
    }
}
