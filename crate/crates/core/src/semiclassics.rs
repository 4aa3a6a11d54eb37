//! Noise-free analysis of the inversion `w = 2 rho_ee - 1`.
//!
//! With energy and Bloch length conserved, the closed semiclassical dynamics
//! reduce to a particle in the cubic potential `U(w) = 2E w^2 - w^3 + w`.
//! Orbits above the local barrier escape to `w -> +inf` in finite time as
//! `w ~ 2 / (tau_S - tau)^2`; [`fit_singularity_exponent`] recovers that
//! exponent from a sampled series.

use crate::error::FitError;
use crate::gauge::{modified_potential, modified_potential_slope};

/// Shared parameters of the effective one-dimensional problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub energy: f64,
    pub kappa: f64,
    pub h_w: f64,
}

impl PotentialParams {
    /// Parameters for a pure initial atomic state (`w(0) = +-1`, `wdot(0) = 0`),
    /// for which `h_w = U(w0)`; with `kappa = 0` that is `2E`.
    pub fn pure_state(energy: f64, kappa: f64, w0: f64) -> Self {
        PotentialParams {
            energy,
            kappa,
            h_w: modified_potential(w0, energy, kappa),
        }
    }
}

pub fn effective_potential(w: f64, energy: f64) -> f64 {
    2.0 * energy * w * w - w * w * w + w
}

pub fn effective_hamiltonian(w: f64, wdot: f64, energy: f64) -> f64 {
    0.5 * wdot * wdot + effective_potential(w, energy)
}

/// Local maximum of the cubic potential, `(w_barrier, U(w_barrier))`.
///
/// `U'(w) = 4E w - 3w^2 + 1` always has two real roots; the larger one is
/// the barrier separating bounded oscillation from escape.
pub fn barrier(energy: f64) -> (f64, f64) {
    let w = (4.0 * energy + (16.0 * energy * energy + 12.0).sqrt()) / 6.0;
    (w, effective_potential(w, energy))
}

/// Sampled solution of the inversion equation.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionSeries {
    pub taus: Vec<f64>,
    pub w: Vec<f64>,
    pub wdot: Vec<f64>,
    /// Time at which `|w|` crossed the blow-up bound, if it did.
    pub blow_up: Option<f64>,
}

fn accel(w: f64, energy: f64, kappa: f64) -> f64 {
    -modified_potential_slope(w, energy, kappa)
}

/// Integrates `w'' = -U'(w)` (cubic potential, or the gauge-modified quartic
/// one for `kappa > 0`) with RK4. Substeps shrink like `1/sqrt(|w|)` so the
/// approach to a singularity stays resolved. Integration stops once
/// `|w| > bound`; the returned series then ends early and `blow_up` is set.
pub fn inversion_ode_evolve(
    w0: f64,
    wdot0: f64,
    energy: f64,
    kappa: f64,
    taus: &[f64],
    bound: f64,
) -> InversionSeries {
    let mut out = InversionSeries {
        taus: Vec::with_capacity(taus.len()),
        w: Vec::with_capacity(taus.len()),
        wdot: Vec::with_capacity(taus.len()),
        blow_up: None,
    };
    let (mut t, mut w, mut v) = (0.0f64, w0, wdot0);
    let base_step = 1e-3;
    for &target in taus {
        while t < target {
            let dt = (base_step / (1.0 + w.abs()).sqrt()).min(target - t);
            let f = |w: f64, v: f64| (v, accel(w, energy, kappa));
            let (k1w, k1v) = f(w, v);
            let (k2w, k2v) = f(w + 0.5 * dt * k1w, v + 0.5 * dt * k1v);
            let (k3w, k3v) = f(w + 0.5 * dt * k2w, v + 0.5 * dt * k2v);
            let (k4w, k4v) = f(w + dt * k3w, v + dt * k3v);
            w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += dt;
            if w.is_nan() || w.abs() > bound {
                out.blow_up = Some(t);
                return out;
            }
        }
        out.taus.push(target);
        out.w.push(w);
        out.wdot.push(v);
    }
    out
}

/// Power-law fit `|w| ~ C / (tau_S - tau)^p` near a movable singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityFit {
    pub exponent: f64,
    pub tau_s: f64,
    pub log_amplitude: f64,
    pub points: usize,
    pub rms_residual: f64,
}

pub const MIN_FIT_POINTS: usize = 10;
/// Lower edge of the asymptotic window.
pub const FIT_WINDOW_LOW: f64 = 1e2;

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    (slope, intercept, ss)
}

/// Fits the blow-up exponent on the points with `|w|` in
/// `[1e2, runaway_bound / 10]`. `tau_S` is co-fitted: for each trial value
/// the log-log relation is a linear least-squares problem, and the trial
/// value is refined by golden-section search on the residual.
pub fn fit_singularity_exponent(
    taus: &[f64],
    magnitudes: &[f64],
    runaway_bound: f64,
) -> Result<SingularityFit, FitError> {
    if taus.len() != magnitudes.len() {
        return Err(FitError::LengthMismatch);
    }
    let upper = runaway_bound / 10.0;
    let (ts, ys): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(magnitudes)
        .filter(|(t, m)| t.is_finite() && m.is_finite() && **m >= FIT_WINDOW_LOW && **m <= upper)
        .map(|(t, m)| (*t, m.ln()))
        .unzip();
    if ts.len() < MIN_FIT_POINTS {
        return Err(FitError::InsufficientPoints {
            found: ts.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let t_last = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t_first = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = (t_last - t_first).max(1e-12);

    let residual = |log_gap: f64| -> f64 {
        let tau_s = t_last + log_gap.exp();
        let xs: Vec<f64> = ts.iter().map(|t| (tau_s - t).ln()).collect();
        linear_fit(&xs, &ys).2
    };

    // Coarse scan of tau_S - t_last over many decades, then golden section.
    let lo = (span * 1e-8).ln();
    let hi = (span * 1e2).ln();
    let n_scan = 400;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=n_scan {
        let g = lo + (hi - lo) * i as f64 / n_scan as f64;
        let r = residual(g);
        if r < best.1 {
            best = (g, r);
        }
    }
    let h = (hi - lo) / n_scan as f64;
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (residual(c), residual(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = residual(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = residual(d);
        }
    }
    let g = 0.5 * (a + b);
    let tau_s = t_last + g.exp();
    let xs: Vec<f64> = ts.iter().map(|t| (tau_s - t).ln()).collect();
    let (slope, intercept, ss) = linear_fit(&xs, &ys);
    Ok(SingularityFit {
        exponent: -slope,
        tau_s,
        log_amplitude: intercept,
        points: ts.len(),
        rms_residual: (ss / ts.len() as f64).sqrt(),
    })
}
