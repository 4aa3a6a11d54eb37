//! Drift gauge on the field equations and the matching log-weight process.
//!
//! The field drifts gain `+kappa i rho_eg Re(rho_ee)` (and the conjugate-like
//! shift on `A_dag`), which adds a stabilizing quartic term to the effective
//! potential of the inversion. Expectation values are restored by weighting
//! each trajectory with `exp(C0)`, where `dC0 = kappa sqrt(N) Re(rho_ee) dS*`
//! reuses the trajectory's own `dS`.

use crate::error::GaugeError;
use crate::model::{DriftVector, ModelParams, TrajectoryState, C64, I};
use crate::noise::NoiseIncrement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeConfig {
    pub enabled: bool,
    pub k: f64,
    pub x1: f64,
    pub x2: f64,
    /// Replaces the switch function with a constant when set.
    pub kappa_override: Option<f64>,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
            enabled: false,
            k: 1.0,
            x1: -1.0,
            x2: 2.0,
            kappa_override: None,
        }
    }
}

impl GaugeConfig {
    /// The gauge switched on with the default switch parameters.
    pub fn enabled() -> Self {
        GaugeConfig {
            enabled: true,
            ..GaugeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GaugeError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(GaugeError::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        if !(self.x1.is_finite() && self.x2.is_finite() && self.x1 < self.x2) {
            return Err(GaugeError::InvalidConfig(format!(
                "switch window requires x1 < x2, got x1 = {}, x2 = {}",
                self.x1, self.x2
            )));
        }
        if let Some(kappa) = self.kappa_override {
            if !(kappa >= 0.0 && kappa.is_finite()) {
                return Err(GaugeError::InvalidConfig(format!(
                    "kappa override must be finite and nonnegative, got {kappa}"
                )));
            }
        }
        Ok(())
    }

    /// Gauge strength at the given state; zero when the gauge is off.
    #[inline]
    pub fn kappa(&self, state: &TrajectoryState) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        match self.kappa_override {
            Some(kappa) => kappa,
            None => switch_function(state.rho_ee.re, self),
        }
    }
}

/// `1 + (tanh(k (x1 - x)) + tanh(k (x - x2))) / 2`; close to 0 inside
/// `[x1, x2]` and tends to 1 outside.
pub fn switch_function(x: f64, cfg: &GaugeConfig) -> f64 {
    1.0 + 0.5 * ((cfg.k * (cfg.x1 - x)).tanh() + (cfg.k * (x - cfg.x2)).tanh())
}

/// Field-drift shift for the given `kappa`. Atomic drifts are untouched.
#[inline]
pub fn drift_shift(state: &TrajectoryState, kappa: f64) -> DriftVector {
    let x = state.rho_ee.re;
    DriftVector {
        a: I * state.rho_eg * (kappa * x),
        a_dag: -I * state.rho_ge * (kappa * x),
        ..DriftVector::default()
    }
}

/// Drift correction evaluated with the switch function at `state`.
pub fn gauged_drift_correction(
    state: &TrajectoryState,
    cfg: &GaugeConfig,
    _params: &ModelParams,
) -> DriftVector {
    let kappa = cfg.kappa(state);
    if kappa == 0.0 {
        return DriftVector::default();
    }
    drift_shift(state, kappa)
}

/// Log-weight increment over one step; shares `dS` with the field noise.
#[inline]
pub fn log_weight_increment(
    state: &TrajectoryState,
    kappa: f64,
    inc: &NoiseIncrement,
    params: &ModelParams,
) -> C64 {
    inc.d_s.conj() * (kappa * params.sqrt_n() * state.rho_ee.re)
}

/// Weighted estimate `sum(v_i exp(C0_i)) / n` with the standard error of
/// the real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMean {
    pub mean: C64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

/// Weighted mean over a finished sample. Normalizes by the sample size,
/// not by the total weight.
pub fn weighted_mean(values: &[C64], log_weights: &[C64]) -> Result<WeightedMean, GaugeError> {
    if values.len() != log_weights.len() {
        return Err(GaugeError::LengthMismatch {
            values: values.len(),
            weights: log_weights.len(),
        });
    }
    if values.is_empty() {
        return Err(GaugeError::EmptySample);
    }
    // First pass fixes the offset so no rescaling happens during the sum.
    let mut acc = WeightedAccumulator {
        offset: log_weights.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max),
        ..WeightedAccumulator::default()
    };
    for (v, c) in values.iter().zip(log_weights) {
        acc.push(*v, *c);
    }
    acc.estimate().ok_or(GaugeError::EmptySample)
}

/// Streaming form of [`weighted_mean`].
///
/// Sums are kept relative to a running offset `m = max Re(C0)`; when a larger
/// log-weight arrives the existing sums are rescaled by `exp(m_old - m_new)`.
/// Merging two accumulators rescales to the larger offset. Results depend on
/// the order of pushes and merges only through rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedAccumulator {
    pub count: u64,
    pub offset: f64,
    pub sum: C64,
    pub sum_sq_re: f64,
    pub sum_sq_im: f64,
}

impl Default for WeightedAccumulator {
    fn default() -> Self {
        WeightedAccumulator {
            count: 0,
            offset: f64::NEG_INFINITY,
            sum: C64::new(0.0, 0.0),
            sum_sq_re: 0.0,
            sum_sq_im: 0.0,
        }
    }
}

impl WeightedAccumulator {
    fn rescale_to(&mut self, new_offset: f64) {
        if new_offset > self.offset {
            if self.offset.is_finite() {
                let f = (self.offset - new_offset).exp();
                self.sum *= f;
                self.sum_sq_re *= f * f;
                self.sum_sq_im *= f * f;
            } else {
                self.sum = C64::new(0.0, 0.0);
                self.sum_sq_re = 0.0;
                self.sum_sq_im = 0.0;
            }
            self.offset = new_offset;
        }
    }

    #[inline]
    pub fn push(&mut self, value: C64, log_weight: C64) {
        self.rescale_to(log_weight.re);
        let y = value * (log_weight - self.offset).exp();
        self.count += 1;
        self.sum += y;
        self.sum_sq_re += y.re * y.re;
        self.sum_sq_im += y.im * y.im;
    }

    pub fn merge(&mut self, other: &WeightedAccumulator) {
        if other.count == 0 {
            return;
        }
        let target = self.offset.max(other.offset);
        self.rescale_to(target);
        let mut o = *other;
        o.rescale_to(target);
        self.count += o.count;
        self.sum += o.sum;
        self.sum_sq_re += o.sum_sq_re;
        self.sum_sq_im += o.sum_sq_im;
    }

    /// Mean and standard error, or `None` for an empty sample.
    pub fn estimate(&self) -> Option<WeightedMean> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        let scale = self.offset.exp();
        let mean_scaled = self.sum / n;
        let (se_re, se_im) = if self.count > 1 {
            let var_re = ((self.sum_sq_re - n * mean_scaled.re * mean_scaled.re) / (n - 1.0)).max(0.0);
            let var_im = ((self.sum_sq_im - n * mean_scaled.im * mean_scaled.im) / (n - 1.0)).max(0.0);
            ((var_re / n).sqrt() * scale, (var_im / n).sqrt() * scale)
        } else {
            (f64::NAN, f64::NAN)
        };
        Some(WeightedMean {
            mean: mean_scaled * scale,
            stderr_re: se_re,
            stderr_im: se_im,
        })
    }
}

/// Effective potential of the inversion with the gauge-induced terms.
pub fn modified_potential(w: f64, energy: f64, kappa: f64) -> f64 {
    let q = kappa / 8.0;
    (2.0 * energy - q) * w * w - (1.0 - q) * w * w * w + (1.0 + q) * w + (kappa / 32.0) * w.powi(4)
}

/// `dU/dw` of [`modified_potential`].
pub fn modified_potential_slope(w: f64, energy: f64, kappa: f64) -> f64 {
    let q = kappa / 8.0;
    2.0 * (2.0 * energy - q) * w - 3.0 * (1.0 - q) * w * w + (1.0 + q) + (kappa / 8.0) * w.powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{initial_state, AtomicInit};

    #[test]
    fn switch_asymptotes_and_value() {
        let cfg = GaugeConfig::enabled();
        assert!((switch_function(1e6, &cfg) - 1.0).abs() < 1e-12);
        assert!((switch_function(-1e6, &cfg) - 1.0).abs() < 1e-12);
        // 1 + tanh(-1.5), evaluated independently.
        assert!((switch_function(0.5, &cfg) - 0.094_851_746_355_133_56).abs() < 1e-12);
    }

    #[test]
    fn defaults_match_published_switch() {
        let cfg = GaugeConfig::default();
        assert_eq!((cfg.k, cfg.x1, cfg.x2), (1.0, -1.0, 2.0));
        assert!(!cfg.enabled);
        assert!(cfg.validate().is_ok());
        let bad = GaugeConfig { x1: 2.0, x2: -1.0, ..cfg };
        assert!(bad.validate().is_err());
        let bad = GaugeConfig { k: 0.0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn disabled_gauge_is_zero() {
        let p = ModelParams::new(4, 0.0, 4.0, AtomicInit::AllExcited).unwrap();
        let s = TrajectoryState {
            rho_eg: C64::new(0.3, 0.2),
            ..initial_state(&p)
        };
        let cfg = GaugeConfig::default();
        assert_eq!(gauged_drift_correction(&s, &cfg, &p), DriftVector::default());
        assert_eq!(cfg.kappa(&s), 0.0);
    }

    #[test]
    fn correction_vanishes_without_coherence_but_weight_accumulates() {
        let p = ModelParams::new(4, 0.0, 0.0, AtomicInit::AllExcited).unwrap();
        let s = initial_state(&p);
        let cfg = GaugeConfig {
            kappa_override: Some(1.0),
            ..GaugeConfig::enabled()
        };
        assert_eq!(gauged_drift_correction(&s, &cfg, &p), DriftVector::default());
        let inc = NoiseIncrement {
            d_s: C64::new(0.1, 0.0),
            ..NoiseIncrement::ZERO
        };
        let dc0 = log_weight_increment(&s, cfg.kappa(&s), &inc, &p);
        assert!((dc0 - C64::new(0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn weighted_mean_examples() {
        let ones = [C64::new(1.0, 0.0), C64::new(3.0, 0.0)];
        let m = weighted_mean(&ones, &[C64::new(0.0, 0.0); 2]).unwrap();
        assert!((m.mean - C64::new(2.0, 0.0)).norm() < 1e-15);

        let m = weighted_mean(
            &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            &[C64::new(2f64.ln(), 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!((m.mean - C64::new(1.5, 0.0)).norm() < 1e-14);

        let v = C64::new(0.25, -1.5);
        let m = weighted_mean(&[v], &[C64::new(0.0, std::f64::consts::PI)]).unwrap();
        assert!((m.mean + v).norm() < 1e-14);

        assert_eq!(weighted_mean(&[], &[]), Err(GaugeError::EmptySample));
        assert!(matches!(
            weighted_mean(&[v], &[]),
            Err(GaugeError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn weighted_mean_survives_huge_log_weights() {
        let values = [C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let logs = [C64::new(800.0, 0.0), C64::new(800.0, 0.0)];
        let m = weighted_mean(&values, &logs).unwrap();
        // exp(800) overflows; the scaled sum itself must stay finite.
        assert!(m.mean.re.is_infinite());
        let mut acc = WeightedAccumulator::default();
        for (v, c) in values.iter().zip(&logs) {
            acc.push(*v, *c);
        }
        assert!((acc.sum / 2.0 - C64::new(1.5, 0.0)).norm() < 1e-14);
        assert_eq!(acc.offset, 800.0);
    }

    #[test]
    fn streaming_matches_two_pass_and_merge() {
        let values: Vec<C64> = (0..50).map(|i| C64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.03)).collect();
        let logs: Vec<C64> = (0..50).map(|i| C64::new(((i * 7) % 13) as f64 - 6.0, 0.1 * i as f64)).collect();
        let reference = weighted_mean(&values, &logs).unwrap();
        let mut left = WeightedAccumulator::default();
        let mut right = WeightedAccumulator::default();
        for i in 0..50 {
            if i < 20 {
                left.push(values[i], logs[i]);
            } else {
                right.push(values[i], logs[i]);
            }
        }
        left.merge(&right);
        let merged = left.estimate().unwrap();
        assert!((merged.mean - reference.mean).norm() < 1e-12);
        assert!((merged.stderr_re - reference.stderr_re).abs() < 1e-12);
        assert!((merged.stderr_im - reference.stderr_im).abs() < 1e-12);
    }

    #[test]
    fn modified_potential_examples() {
        for &(w, e) in &[(0.3, 1.0), (-2.0, 0.5), (4.0, 10.0)] {
            let plain: f64 = 2.0 * e * w * w - w * w * w + w;
            assert!((modified_potential(w, e, 0.0) - plain).abs() < 1e-12);
            assert_eq!(modified_potential(0.0, e, 0.7), 0.0);
        }
        assert!(modified_potential(1e3, 1.0, 0.5) > 1e9);
        assert!(modified_potential(-1e3, 1.0, 0.5) > 1e9);
    }

    #[test]
    fn slope_matches_finite_difference() {
        for &(w, e, k) in &[(0.4, 0.7, 0.0), (-1.3, 2.0, 0.5), (2.5, -0.5, 1.0)] {
            let h = 1e-5;
            let fd = (modified_potential(w + h, e, k) - modified_potential(w - h, e, k)) / (2.0 * h);
            assert!((fd - modified_potential_slope(w, e, k)).abs() < 1e-7);
        }
    }
}
