//! Physical parameters, the phase-space trajectory state and the deterministic
//! part of the rotating-frame, dimensionless equations of motion.
//!
//! Units: time is `tau = f t`, the decay rate enters only as `gamma / f`, and
//! the field variables are normalized per atom, `A = alpha / sqrt(N)`. The
//! ground-state population is never stored; `rho_gg = 1 - rho_ee` holds on
//! every trajectory.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::ModelError;

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Initial product state of the atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomicInit {
    AllGround,
    AllExcited,
}

impl AtomicInit {
    /// Initial excited-state population of a single atom.
    pub fn excited_population(self) -> f64 {
        match self {
            AtomicInit::AllGround => 0.0,
            AtomicInit::AllExcited => 1.0,
        }
    }
}

/// Physical configuration of a resonant Tavis-Cummings system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n_atoms: u32,
    pub gamma_over_f: f64,
    /// Mean photon number of the initial coherent field.
    pub n_ph: f64,
    pub atoms_initial: AtomicInit,
    /// Phase of the initial coherent amplitude, radians.
    pub field_phase: f64,
}

impl ModelParams {
    pub fn new(
        n_atoms: u32,
        gamma_over_f: f64,
        n_ph: f64,
        atoms_initial: AtomicInit,
    ) -> Result<Self, ModelError> {
        let params = ModelParams {
            n_atoms,
            gamma_over_f,
            n_ph,
            atoms_initial,
            field_phase: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_field_phase(mut self, phase: f64) -> Result<Self, ModelError> {
        self.field_phase = phase;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_atoms == 0 {
            return Err(ModelError::InvalidParameter {
                name: "n_atoms",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.gamma_over_f.is_finite() && self.gamma_over_f >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "gamma_over_f",
                reason: format!("must be finite and nonnegative, got {}", self.gamma_over_f),
            });
        }
        if !(self.n_ph.is_finite() && self.n_ph >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "n_ph",
                reason: format!("must be finite and nonnegative, got {}", self.n_ph),
            });
        }
        if !self.field_phase.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "field_phase",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn sqrt_n(&self) -> f64 {
        f64::from(self.n_atoms).sqrt()
    }

    /// Initial normalized coherent amplitude `sqrt(n_ph / N) e^{i phi}`.
    pub fn initial_amplitude(&self) -> C64 {
        C64::from_polar((self.n_ph / f64::from(self.n_atoms)).sqrt(), self.field_phase)
    }
}

/// One trajectory's point in the doubled phase space.
///
/// `a_dag` is an independent variable, not the conjugate of `a`; the same
/// holds for `rho_ge` and `rho_eg`. `c0` is the log of the drift-gauge
/// weight and stays zero without a gauge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub tau: f64,
    pub a: C64,
    pub a_dag: C64,
    pub rho_ee: C64,
    pub rho_eg: C64,
    pub rho_ge: C64,
    pub c0: C64,
    pub diverged: bool,
}

impl TrajectoryState {
    /// Largest modulus among the five phase-space variables.
    pub fn max_magnitude(&self) -> f64 {
        [self.a, self.a_dag, self.rho_ee, self.rho_eg, self.rho_ge]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.a_dag, self.rho_ee, self.rho_eg, self.rho_ge, self.c0]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Population inversion `w = 2 rho_ee - 1`.
    pub fn inversion(&self) -> C64 {
        2.0 * self.rho_ee - 1.0
    }

    /// Stochastic photon number estimate `A_dag A N`.
    pub fn photon_proxy(&self, params: &ModelParams) -> C64 {
        self.a_dag * self.a * f64::from(params.n_atoms)
    }

    /// Returns `self + scale * d` for all six variables; `tau` and the
    /// divergence flag are carried over unchanged.
    pub fn displaced(&self, d: &DriftVector, scale: f64) -> TrajectoryState {
        TrajectoryState {
            a: self.a + d.a * scale,
            a_dag: self.a_dag + d.a_dag * scale,
            rho_ee: self.rho_ee + d.rho_ee * scale,
            rho_eg: self.rho_eg + d.rho_eg * scale,
            rho_ge: self.rho_ge + d.rho_ge * scale,
            c0: self.c0 + d.c0 * scale,
            ..*self
        }
    }
}

/// Rates (per unit `tau`) or increments of the six trajectory variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftVector {
    pub a: C64,
    pub a_dag: C64,
    pub rho_ee: C64,
    pub rho_eg: C64,
    pub rho_ge: C64,
    pub c0: C64,
}

impl DriftVector {
    pub fn is_finite(&self) -> bool {
        [self.a, self.a_dag, self.rho_ee, self.rho_eg, self.rho_ge, self.c0]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for DriftVector {
    type Output = DriftVector;

    fn add(self, rhs: DriftVector) -> DriftVector {
        DriftVector {
            a: self.a + rhs.a,
            a_dag: self.a_dag + rhs.a_dag,
            rho_ee: self.rho_ee + rhs.rho_ee,
            rho_eg: self.rho_eg + rhs.rho_eg,
            rho_ge: self.rho_ge + rhs.rho_ge,
            c0: self.c0 + rhs.c0,
        }
    }
}

impl Mul<f64> for DriftVector {
    type Output = DriftVector;

    fn mul(self, s: f64) -> DriftVector {
        DriftVector {
            a: self.a * s,
            a_dag: self.a_dag * s,
            rho_ee: self.rho_ee * s,
            rho_eg: self.rho_eg * s,
            rho_ge: self.rho_ge * s,
            c0: self.c0 * s,
        }
    }
}

/// Semiclassical initial point: coherent field, pure product atomic state.
pub fn initial_state(params: &ModelParams) -> TrajectoryState {
    let a = params.initial_amplitude();
    TrajectoryState {
        tau: 0.0,
        a,
        a_dag: a.conj(),
        rho_ee: C64::new(params.atoms_initial.excited_population(), 0.0),
        rho_eg: C64::new(0.0, 0.0),
        rho_ge: C64::new(0.0, 0.0),
        c0: C64::new(0.0, 0.0),
        diverged: false,
    }
}

/// Deterministic part of the equations of motion. `c0` has no drift; the
/// drift gauge adds its field shifts separately.
pub fn drift(state: &TrajectoryState, params: &ModelParams) -> Result<DriftVector, ModelError> {
    if !state.is_finite() {
        return Err(ModelError::NonFinite { tau: state.tau });
    }
    Ok(drift_unchecked(state, params))
}

#[inline]
pub(crate) fn drift_unchecked(s: &TrajectoryState, params: &ModelParams) -> DriftVector {
    let g = params.gamma_over_f;
    let w = 2.0 * s.rho_ee - 1.0;
    DriftVector {
        a: -I * s.rho_eg,
        a_dag: I * s.rho_ge,
        rho_ee: -g * s.rho_ee + I * (s.rho_eg * s.a_dag - s.rho_ge * s.a),
        rho_eg: -0.5 * g * s.rho_eg + I * w * s.a,
        rho_ge: -0.5 * g * s.rho_ge - I * w * s.a_dag,
        c0: C64::new(0.0, 0.0),
    }
}

/// Energy per atom, `(2 rho_ee - 1)/2 + A_dag A`. Conserved by the closed
/// noise-free dynamics.
pub fn total_energy(state: &TrajectoryState, _params: &ModelParams) -> C64 {
    0.5 * (2.0 * state.rho_ee - 1.0) + state.a_dag * state.a
}

/// Squared length of the stochastic Bloch vector, `w^2 + 4 rho_eg rho_ge`.
pub fn bloch_length(state: &TrajectoryState) -> C64 {
    let w = 2.0 * state.rho_ee - 1.0;
    w * w + 4.0 * state.rho_eg * state.rho_ge
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_state() -> TrajectoryState {
        initial_state(&ModelParams::new(10, 0.0, 0.0, AtomicInit::AllGround).unwrap())
    }

    #[test]
    fn initial_state_examples() {
        let s = zero_state();
        assert_eq!(s.a, C64::new(0.0, 0.0));
        assert_eq!(s.rho_ee, C64::new(0.0, 0.0));

        let p = ModelParams::new(10, 0.0, 100.0, AtomicInit::AllGround).unwrap();
        let s = initial_state(&p);
        assert!((s.a.re - 3.16227766016838).abs() < 1e-12);
        assert_eq!(s.a.im, 0.0);
        assert_eq!(s.a_dag, s.a.conj());
        assert_eq!(s.c0, C64::new(0.0, 0.0));
        assert!(!s.diverged);

        let p = ModelParams::new(4, 0.0, 0.0, AtomicInit::AllExcited).unwrap();
        let s = initial_state(&p);
        assert_eq!(s.rho_ee, C64::new(1.0, 0.0));
        assert_eq!(s.rho_eg, C64::new(0.0, 0.0));
        assert_eq!(s.rho_ge, C64::new(0.0, 0.0));
    }

    #[test]
    fn field_phase_rotates_amplitude() {
        let p = ModelParams::new(1, 0.0, 4.0, AtomicInit::AllGround)
            .unwrap()
            .with_field_phase(std::f64::consts::FRAC_PI_2)
            .unwrap();
        let s = initial_state(&p);
        assert!((s.a - C64::new(0.0, 2.0)).norm() < 1e-12);
        assert!((s.a_dag - C64::new(0.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0, 0.0, 1.0, AtomicInit::AllGround).is_err());
        assert!(ModelParams::new(1, -0.1, 1.0, AtomicInit::AllGround).is_err());
        assert!(ModelParams::new(1, 0.0, -1.0, AtomicInit::AllGround).is_err());
        assert!(ModelParams::new(1, 0.0, f64::NAN, AtomicInit::AllGround).is_err());
    }

    #[test]
    fn drift_at_fixed_point_vanishes() {
        let p = ModelParams::new(10, 0.0, 0.0, AtomicInit::AllGround).unwrap();
        let d = drift(&zero_state(), &p).unwrap();
        assert_eq!(d, DriftVector::default());
    }

    #[test]
    fn drift_substitution() {
        let p = ModelParams::new(1, 0.0, 0.0, AtomicInit::AllGround).unwrap();
        let s = TrajectoryState {
            a: C64::new(1.0, 0.0),
            a_dag: C64::new(1.0, 0.0),
            ..zero_state()
        };
        let d = drift(&s, &p).unwrap();
        assert_eq!(d.a, C64::new(0.0, 0.0));
        assert_eq!(d.rho_eg, C64::new(0.0, -1.0));
        assert_eq!(d.rho_ge, C64::new(0.0, 1.0));
        assert_eq!(d.rho_ee, C64::new(0.0, 0.0));

        let p = ModelParams::new(10, 2.6, 0.0, AtomicInit::AllExcited).unwrap();
        let d = drift(&initial_state(&p), &p).unwrap();
        assert!((d.rho_ee - C64::new(-2.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn drift_rejects_non_finite() {
        let p = ModelParams::new(1, 0.0, 0.0, AtomicInit::AllGround).unwrap();
        let s = TrajectoryState {
            rho_eg: C64::new(f64::INFINITY, 0.0),
            ..zero_state()
        };
        assert!(matches!(drift(&s, &p), Err(ModelError::NonFinite { .. })));
    }

    #[test]
    fn energy_examples() {
        let p = ModelParams::new(4, 0.0, 0.0, AtomicInit::AllExcited).unwrap();
        assert!((total_energy(&initial_state(&p), &p) - C64::new(0.5, 0.0)).norm() < 1e-15);
        let p = ModelParams::new(4, 0.0, 0.0, AtomicInit::AllGround).unwrap();
        assert!((total_energy(&initial_state(&p), &p) - C64::new(-0.5, 0.0)).norm() < 1e-15);
        let p = ModelParams::new(7, 0.0, 70.0, AtomicInit::AllGround).unwrap();
        assert!((total_energy(&initial_state(&p), &p) - C64::new(9.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn bloch_length_examples() {
        for init in [AtomicInit::AllGround, AtomicInit::AllExcited] {
            let p = ModelParams::new(3, 0.0, 1.0, init).unwrap();
            assert_eq!(bloch_length(&initial_state(&p)), C64::new(1.0, 0.0));
        }
        let s = TrajectoryState {
            rho_ee: C64::new(0.5, 0.0),
            rho_eg: C64::new(0.5, 0.0),
            rho_ge: C64::new(0.5, 0.0),
            ..zero_state()
        };
        assert!((bloch_length(&s) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
