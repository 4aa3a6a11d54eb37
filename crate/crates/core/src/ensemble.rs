//! Trajectory ensembles and their time-gridded statistics.
//!
//! Trajectory `i` always uses `RngStream::new(seed, i)`. Trajectories are
//! grouped in fixed blocks of [`BLOCK_SIZE`] indices; blocks run in parallel
//! and are merged strictly in index order, so results are bit-identical for
//! any thread count.
//!
//! Diverged trajectories drop out of the averages from their divergence time
//! on (masking). With the drift gauge on, each point also carries the
//! weighted estimate `sum(O exp(C0)) / n_alive`.

use rayon::prelude::*;

use crate::error::EnsembleError;
use crate::gauge::{GaugeConfig, WeightedAccumulator};
use crate::integrator::{propagate_with, StepConfig};
use crate::model::{initial_state, ModelParams, TrajectoryState, C64};
use crate::noise::RngStream;

pub const BLOCK_SIZE: u64 = 256;

/// Alive fraction below which the ensemble is considered unreliable.
pub const THRESHOLD_ALIVE_FRACTION: f64 = 0.995;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    RhoEe,
    RhoEg,
    A,
    /// `A_dag A N`, the stochastic photon number.
    PhotonProxy,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::RhoEe,
        Observable::RhoEg,
        Observable::A,
        Observable::PhotonProxy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::RhoEe => "rho_ee",
            Observable::RhoEg => "rho_eg",
            Observable::A => "a",
            Observable::PhotonProxy => "photon_proxy",
        }
    }

    pub fn from_name(name: &str) -> Option<Observable> {
        Observable::ALL.into_iter().find(|o| o.name() == name)
    }

    #[inline]
    pub fn eval(self, s: &TrajectoryState, params: &ModelParams) -> C64 {
        match self {
            Observable::RhoEe => s.rho_ee,
            Observable::RhoEg => s.rho_eg,
            Observable::A => s.a,
            Observable::PhotonProxy => s.photon_proxy(params),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: u64,
    pub seed: u64,
    pub step: StepConfig,
    pub gauge: GaugeConfig,
    pub tau_max: f64,
    /// Statistics are recorded every `record_every` integration steps.
    pub record_every: usize,
    pub observables: Vec<Observable>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_traj: 100_000,
            seed: 0,
            step: StepConfig::default(),
            gauge: GaugeConfig::default(),
            tau_max: 25.0,
            record_every: 1,
            observables: vec![Observable::RhoEe],
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.n_traj == 0 {
            return Err(EnsembleError::InvalidConfig("n_traj must be at least 1".into()));
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return Err(EnsembleError::InvalidConfig(format!(
                "tau_max must be positive, got {}",
                self.tau_max
            )));
        }
        if self.record_every == 0 {
            return Err(EnsembleError::InvalidConfig("record_every must be at least 1".into()));
        }
        if self.observables.is_empty() {
            return Err(EnsembleError::InvalidConfig("no observables requested".into()));
        }
        self.step.validate()?;
        self.gauge
            .validate()
            .map_err(|e| EnsembleError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        self.step.steps_for(self.tau_max)
    }

    pub fn record_taus(&self) -> Vec<f64> {
        (0..=self.n_steps())
            .step_by(self.record_every)
            .map(|k| k as f64 * self.step.dtau)
            .collect()
    }
}

/// Mean with standard errors of its real and imaginary parts. Undefined
/// estimates (no alive trajectories) are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: C64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

impl Estimate {
    pub const UNDEFINED: Estimate = Estimate {
        mean: C64::new(f64::NAN, f64::NAN),
        stderr_re: f64::NAN,
        stderr_im: f64::NAN,
    };

    pub fn is_defined(&self) -> bool {
        self.mean.re.is_finite() && self.mean.im.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub observable: Observable,
    /// Plain mean over alive trajectories.
    pub masked: Vec<Estimate>,
    /// Weighted mean over alive trajectories; present when the gauge is on.
    pub weighted: Option<Vec<Estimate>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub taus: Vec<f64>,
    pub n_traj: u64,
    pub alive_fraction: Vec<f64>,
    pub series: Vec<ObservableSeries>,
    /// First recorded time with alive fraction below 0.995, or infinity.
    pub threshold_time: f64,
    /// Per-trajectory divergence time, infinity for survivors.
    pub divergence_times: Vec<f64>,
}

impl EnsembleResult {
    pub fn observable(&self, obs: Observable) -> Option<&ObservableSeries> {
        self.series.iter().find(|s| s.observable == obs)
    }

    pub fn diverged_count(&self) -> usize {
        self.divergence_times.iter().filter(|t| t.is_finite()).count()
    }
}

/// Fraction of diverged trajectories per recorded time.
pub fn divergence_fraction_series(result: &EnsembleResult) -> Vec<f64> {
    result.alive_fraction.iter().map(|a| 1.0 - a).collect()
}

/// First time at which `alive_fraction` drops below the 0.5 % threshold.
pub fn threshold_time(taus: &[f64], alive_fraction: &[f64]) -> f64 {
    taus.iter()
        .zip(alive_fraction)
        .find(|(_, &a)| a < THRESHOLD_ALIVE_FRACTION)
        .map_or(f64::INFINITY, |(t, _)| *t)
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: u64,
    mean: C64,
    m2_re: f64,
    m2_im: f64,
}

impl Welford {
    #[inline]
    fn push(&mut self, x: C64) {
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        self.mean += delta / n;
        let delta2 = x - self.mean;
        self.m2_re += delta.re * delta2.re;
        self.m2_im += delta.im * delta2.im;
    }

    fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * (nb / n);
        self.m2_re += other.m2_re + delta.re * delta.re * na * nb / n;
        self.m2_im += other.m2_im + delta.im * delta.im * na * nb / n;
        self.count += other.count;
    }

    fn estimate(&self) -> Estimate {
        match self.count {
            0 => Estimate::UNDEFINED,
            1 => Estimate {
                mean: self.mean,
                stderr_re: f64::NAN,
                stderr_im: f64::NAN,
            },
            c => {
                let n = c as f64;
                Estimate {
                    mean: self.mean,
                    stderr_re: (self.m2_re / (n - 1.0) / n).sqrt(),
                    stderr_im: (self.m2_im / (n - 1.0) / n).sqrt(),
                }
            }
        }
    }
}

/// Statistics accumulated over a contiguous range of trajectories.
#[derive(Debug, Clone)]
struct GridStats {
    alive: Vec<u64>,
    masked: Vec<Vec<Welford>>,
    weighted: Option<Vec<Vec<WeightedAccumulator>>>,
    divergence_times: Vec<f64>,
}

impl GridStats {
    fn new(n_points: usize, n_obs: usize, weighted: bool) -> Self {
        GridStats {
            alive: vec![0; n_points],
            masked: vec![vec![Welford::default(); n_points]; n_obs],
            weighted: weighted.then(|| vec![vec![WeightedAccumulator::default(); n_points]; n_obs]),
            divergence_times: Vec::new(),
        }
    }

    fn merge(&mut self, other: &GridStats) {
        for (a, b) in self.alive.iter_mut().zip(&other.alive) {
            *a += b;
        }
        for (mine, theirs) in self.masked.iter_mut().zip(&other.masked) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                a.merge(b);
            }
        }
        if let (Some(mine), Some(theirs)) = (self.weighted.as_mut(), other.weighted.as_ref()) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                for (a, b) in m.iter_mut().zip(t) {
                    a.merge(b);
                }
            }
        }
        self.divergence_times.extend_from_slice(&other.divergence_times);
    }
}

fn simulate_block(
    params: &ModelParams,
    cfg: &EnsembleConfig,
    init: &TrajectoryState,
    first: u64,
    last: u64,
    n_points: usize,
) -> GridStats {
    let n_steps = cfg.n_steps();
    let mut stats = GridStats::new(n_points, cfg.observables.len(), cfg.gauge.enabled);
    for index in first..last {
        let mut stream = RngStream::new(cfg.seed, index);
        let mut diverged_at = f64::INFINITY;
        propagate_with(init, n_steps, &cfg.step, params, &cfg.gauge, &mut stream, |k, s| {
            if s.diverged {
                if diverged_at.is_infinite() {
                    diverged_at = s.tau;
                }
                return;
            }
            if k % cfg.record_every != 0 {
                return;
            }
            let point = k / cfg.record_every;
            stats.alive[point] += 1;
            for (j, obs) in cfg.observables.iter().enumerate() {
                let v = obs.eval(s, params);
                stats.masked[j][point].push(v);
                if let Some(w) = stats.weighted.as_mut() {
                    w[j][point].push(v, s.c0);
                }
            }
        });
        stats.divergence_times.push(diverged_at);
    }
    stats
}

fn finalize(cfg: &EnsembleConfig, taus: &[f64], stats: &GridStats, n_done: u64) -> EnsembleResult {
    let n = n_done.max(1) as f64;
    let alive_fraction: Vec<f64> = stats.alive.iter().map(|&a| a as f64 / n).collect();
    let series = cfg
        .observables
        .iter()
        .enumerate()
        .map(|(j, &observable)| ObservableSeries {
            observable,
            masked: stats.masked[j].iter().map(Welford::estimate).collect(),
            weighted: stats.weighted.as_ref().map(|w| {
                w[j].iter()
                    .map(|acc| {
                        acc.estimate().map_or(Estimate::UNDEFINED, |m| Estimate {
                            mean: m.mean,
                            stderr_re: m.stderr_re,
                            stderr_im: m.stderr_im,
                        })
                    })
                    .collect()
            }),
        })
        .collect();
    EnsembleResult {
        taus: taus.to_vec(),
        n_traj: n_done,
        threshold_time: threshold_time(taus, &alive_fraction),
        alive_fraction,
        series,
        divergence_times: stats.divergence_times.clone(),
    }
}

pub fn run_ensemble(params: &ModelParams, cfg: &EnsembleConfig) -> Result<EnsembleResult, EnsembleError> {
    run_ensemble_with_progress(params, cfg, |_, _| {})
}

/// Runs the ensemble and hands the statistics of all trajectories finished
/// so far to `progress` after every batch of blocks.
pub fn run_ensemble_with_progress<F>(
    params: &ModelParams,
    cfg: &EnsembleConfig,
    mut progress: F,
) -> Result<EnsembleResult, EnsembleError>
where
    F: FnMut(u64, &EnsembleResult),
{
    params.validate()?;
    cfg.validate()?;
    let init = initial_state(params);
    let taus = cfg.record_taus();
    let n_points = taus.len();
    let n_blocks = cfg.n_traj.div_ceil(BLOCK_SIZE);
    let batch = (rayon::current_num_threads() as u64 * 2).max(1);

    let mut total = GridStats::new(n_points, cfg.observables.len(), cfg.gauge.enabled);
    let mut block = 0;
    while block < n_blocks {
        let end = (block + batch).min(n_blocks);
        let parts: Vec<GridStats> = (block..end)
            .into_par_iter()
            .map(|b| {
                let first = b * BLOCK_SIZE;
                let last = ((b + 1) * BLOCK_SIZE).min(cfg.n_traj);
                simulate_block(params, cfg, &init, first, last, n_points)
            })
            .collect();
        for part in &parts {
            total.merge(part);
        }
        block = end;
        let done = (block * BLOCK_SIZE).min(cfg.n_traj);
        if block < n_blocks {
            progress(done, &finalize(cfg, &taus, &total, done));
        }
    }
    let result = finalize(cfg, &taus, &total, cfg.n_traj);
    progress(cfg.n_traj, &result);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AtomicInit;

    #[test]
    fn welford_merge_matches_sequential() {
        let xs: Vec<C64> = (0..37).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|x| all.push(*x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..10].iter().for_each(|x| a.push(*x));
        xs[10..].iter().for_each(|x| b.push(*x));
        a.merge(&b);
        assert!((a.mean - all.mean).norm() < 1e-14);
        assert!((a.m2_re - all.m2_re).abs() < 1e-12);
        assert!((a.m2_im - all.m2_im).abs() < 1e-12);
    }

    #[test]
    fn threshold_time_definition() {
        let taus = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(threshold_time(&taus, &[1.0, 0.996, 0.995, 0.99]), 3.0);
        assert_eq!(threshold_time(&taus, &[1.0, 1.0, 1.0, 1.0]), f64::INFINITY);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnsembleConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.n_traj = 0;
        assert!(cfg.validate().is_err());
        let cfg = EnsembleConfig {
            tau_max: 0.0,
            ..EnsembleConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn record_grid() {
        let cfg = EnsembleConfig {
            tau_max: 1.0,
            record_every: 100,
            ..EnsembleConfig::default()
        };
        let taus = cfg.record_taus();
        assert_eq!(taus.len(), 11);
        assert!((taus[10] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_ensemble_is_deterministic() {
        let p = ModelParams::new(4, 0.0, 4.0, AtomicInit::AllGround).unwrap();
        let cfg = EnsembleConfig {
            n_traj: 300,
            seed: 9,
            tau_max: 0.5,
            record_every: 50,
            observables: Observable::ALL.to_vec(),
            ..EnsembleConfig::default()
        };
        let a = run_ensemble(&p, &cfg).unwrap();
        let b = run_ensemble(&p, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.divergence_times.len(), 300);
    }
}
