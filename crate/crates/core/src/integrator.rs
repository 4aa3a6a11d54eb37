//! Fixed-step propagation of a single trajectory.
//!
//! Both schemes draw one noise increment per step and evaluate its stochastic
//! contribution at the pre-step state (Ito). SRK2 is a Heun predictor-corrector
//! on the drift only:
//!
//! ```text
//! x_pred = x + a(x) dt + b(x) dW
//! x_next = x + (a(x) + a(x_pred)) dt / 2 + b(x) dW
//! ```

use crate::error::IntegratorError;
use crate::gauge::{self, GaugeConfig};
use crate::model::{drift_unchecked, DriftVector, ModelParams, TrajectoryState};
use crate::noise::{stochastic_terms, NoiseIncrement, NoiseScheme, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    EulerMaruyama,
    #[default]
    Srk2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dtau: f64,
    pub scheme: Scheme,
    pub noise_scheme: NoiseScheme,
    /// A trajectory is flagged diverged once any phase-space variable
    /// exceeds this modulus.
    pub runaway_bound: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dtau: 1e-3,
            scheme: Scheme::Srk2,
            noise_scheme: NoiseScheme::B,
            runaway_bound: 1e6,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(IntegratorError::InvalidConfig(format!(
                "dtau must be positive, got {}",
                self.dtau
            )));
        }
        if self.runaway_bound.is_nan() || self.runaway_bound <= 1.0 {
            return Err(IntegratorError::InvalidConfig(format!(
                "runaway_bound must exceed 1, got {}",
                self.runaway_bound
            )));
        }
        Ok(())
    }

    /// Number of steps that covers `[0, tau_max]`.
    pub fn steps_for(&self, tau_max: f64) -> usize {
        (tau_max / self.dtau).round().max(0.0) as usize
    }
}

#[inline]
fn gauged_drift(state: &TrajectoryState, params: &ModelParams, gauge: &GaugeConfig) -> DriftVector {
    let d = drift_unchecked(state, params);
    let kappa = gauge.kappa(state);
    if kappa == 0.0 {
        d
    } else {
        d + gauge::drift_shift(state, kappa)
    }
}

/// Advances `state` by one step using a caller-supplied noise increment.
///
/// With [`NoiseIncrement::ZERO`] this integrates the noise-free equations.
pub fn step_with_increment(
    state: &TrajectoryState,
    inc: &NoiseIncrement,
    cfg: &StepConfig,
    params: &ModelParams,
    gauge: &GaugeConfig,
) -> Result<TrajectoryState, IntegratorError> {
    if state.diverged {
        return Err(IntegratorError::AlreadyDiverged { tau: state.tau });
    }
    Ok(advance(state, inc, cfg, params, gauge))
}

#[inline]
fn advance(
    state: &TrajectoryState,
    inc: &NoiseIncrement,
    cfg: &StepConfig,
    params: &ModelParams,
    gauge: &GaugeConfig,
) -> TrajectoryState {
    let dt = cfg.dtau;
    let mut noise = stochastic_terms(cfg.noise_scheme, state, inc, params);
    if gauge.enabled {
        let kappa = gauge.kappa(state);
        noise.c0 = gauge::log_weight_increment(state, kappa, inc, params);
    }
    let a0 = gauged_drift(state, params, gauge);
    let mut next = match cfg.scheme {
        Scheme::EulerMaruyama => state.displaced(&(a0 * dt + noise), 1.0),
        Scheme::Srk2 => {
            let predictor = state.displaced(&(a0 * dt + noise), 1.0);
            let a1 = gauged_drift(&predictor, params, gauge);
            state.displaced(&((a0 + a1) * (0.5 * dt) + noise), 1.0)
        }
    };
    next.tau = state.tau + dt;
    if !(next.is_finite() && next.max_magnitude() <= cfg.runaway_bound) {
        next = TrajectoryState {
            tau: next.tau,
            diverged: true,
            ..*state
        };
    }
    next
}

/// Draws the next increment from `stream` and advances one step.
pub fn step(
    state: &TrajectoryState,
    cfg: &StepConfig,
    params: &ModelParams,
    gauge: &GaugeConfig,
    stream: &mut RngStream,
) -> Result<TrajectoryState, IntegratorError> {
    if state.diverged {
        return Err(IntegratorError::AlreadyDiverged { tau: state.tau });
    }
    let inc = stream.sample_increment(cfg.dtau)?;
    Ok(advance(state, &inc, cfg, params, gauge))
}

/// Visits every grid point `k = 0..=n_steps` without storing the series.
///
/// After divergence the frozen state is reported at the remaining grid
/// points with `diverged = true`; no further random numbers are drawn.
pub fn propagate_with<F>(
    init: &TrajectoryState,
    n_steps: usize,
    cfg: &StepConfig,
    params: &ModelParams,
    gauge: &GaugeConfig,
    stream: &mut RngStream,
    mut visit: F,
) where
    F: FnMut(usize, &TrajectoryState),
{
    let scale = (0.5 * cfg.dtau).sqrt();
    let mut state = *init;
    visit(0, &state);
    for k in 1..=n_steps {
        if state.diverged {
            state.tau = k as f64 * cfg.dtau;
        } else {
            let inc = stream.sample_scaled(scale);
            state = advance(&state, &inc, cfg, params, gauge);
            state.tau = k as f64 * cfg.dtau;
        }
        visit(k, &state);
    }
}

/// Full time series on the grid `0, dtau, ..., tau_max`.
pub fn propagate(
    init: &TrajectoryState,
    tau_max: f64,
    cfg: &StepConfig,
    params: &ModelParams,
    gauge: &GaugeConfig,
    stream: &mut RngStream,
) -> Result<Vec<TrajectoryState>, IntegratorError> {
    cfg.validate()?;
    if !(tau_max >= 0.0 && tau_max.is_finite()) {
        return Err(IntegratorError::InvalidConfig(format!(
            "tau_max must be finite and nonnegative, got {tau_max}"
        )));
    }
    if init.diverged {
        return Err(IntegratorError::AlreadyDiverged { tau: init.tau });
    }
    let n_steps = cfg.steps_for(tau_max);
    let mut out = Vec::with_capacity(n_steps + 1);
    propagate_with(init, n_steps, cfg, params, gauge, stream, |_, s| out.push(*s));
    Ok(out)
}

/// Noise-free propagation on the same grid.
pub fn propagate_deterministic(
    init: &TrajectoryState,
    tau_max: f64,
    cfg: &StepConfig,
    params: &ModelParams,
    gauge: &GaugeConfig,
) -> Result<Vec<TrajectoryState>, IntegratorError> {
    cfg.validate()?;
    let n_steps = cfg.steps_for(tau_max);
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut state = *init;
    out.push(state);
    for k in 1..=n_steps {
        if !state.diverged {
            state = advance(&state, &NoiseIncrement::ZERO, cfg, params, gauge);
        }
        state.tau = k as f64 * cfg.dtau;
        out.push(state);
    }
    Ok(out)
}
