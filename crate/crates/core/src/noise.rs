//! Complex Wiener increments and the two diffusion-gauge choices for the
//! stochastic part of the equations.
//!
//! Each of `dF`, `dFdag`, `dS` is `sqrt(dtau / 2) (xi_1 + i xi_2)` with
//! independent standard normals, so `E[|dF|^2] = dtau` and `E[dF dF] = 0`.
//!
//! Scheme B carries the extra noise `S` and is the default. Scheme A uses only
//! `F`, `F_dag` with an additive field noise. Both reproduce the same
//! atom-field correlators, so ensemble means agree; only scheme A keeps the
//! Bloch-vector length fixed on each trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::NoiseError;
use crate::model::{DriftVector, ModelParams, TrajectoryState, C64, I};

/// Which factorization of the noise correlators to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseScheme {
    /// Multiplicative `F`/`F_dag` noise on the atoms, additive on the field.
    A,
    /// `F`, `F_dag` and `S` noises with no additive terms.
    #[default]
    B,
}

/// Integrated white noise over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseIncrement {
    pub d_f: C64,
    pub d_fdag: C64,
    pub d_s: C64,
}

impl NoiseIncrement {
    pub const ZERO: NoiseIncrement = NoiseIncrement {
        d_f: C64::new(0.0, 0.0),
        d_fdag: C64::new(0.0, 0.0),
        d_s: C64::new(0.0, 0.0),
    };
}

/// Per-trajectory random stream keyed by `(seed, trajectory_index)`.
///
/// Backed by a ChaCha8 generator whose 64-bit stream id is the trajectory
/// index, so streams never overlap and do not depend on scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    trajectory_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, trajectory_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory_index);
        RngStream {
            seed,
            trajectory_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn sample_increment(&mut self, dtau: f64) -> Result<NoiseIncrement, NoiseError> {
        if !(dtau > 0.0 && dtau.is_finite()) {
            return Err(NoiseError::InvalidStep(dtau));
        }
        Ok(self.sample_scaled((0.5 * dtau).sqrt()))
    }

    /// Draws an increment with every real/imaginary part scaled by `scale`;
    /// the caller guarantees `scale = sqrt(dtau / 2)`.
    #[inline]
    pub(crate) fn sample_scaled(&mut self, scale: f64) -> NoiseIncrement {
        let mut next = || -> f64 { StandardNormal.sample(&mut self.rng) };
        let d_f = C64::new(next(), next()) * scale;
        let d_fdag = C64::new(next(), next()) * scale;
        let d_s = C64::new(next(), next()) * scale;
        NoiseIncrement { d_f, d_fdag, d_s }
    }
}

/// Stochastic increment of the state under the chosen scheme. `c0` is left
/// at zero; the drift gauge supplies it.
pub fn stochastic_terms(
    scheme: NoiseScheme,
    state: &TrajectoryState,
    inc: &NoiseIncrement,
    params: &ModelParams,
) -> DriftVector {
    match scheme {
        NoiseScheme::A => stochastic_terms_scheme_a(state, inc, params),
        NoiseScheme::B => stochastic_terms_scheme_b(state, inc, params),
    }
}

/// Noise of the main equations: `F`, `F_dag` enter through `sqrt(rho_ee)`
/// (principal branch) and `S` multiplies the coherences.
pub fn stochastic_terms_scheme_b(
    state: &TrajectoryState,
    inc: &NoiseIncrement,
    params: &ModelParams,
) -> DriftVector {
    let s = 1.0 / params.sqrt_n();
    let sq = state.rho_ee.sqrt();
    let ds_conj = inc.d_s.conj();
    DriftVector {
        a: -I * s * (sq * inc.d_f + state.rho_eg * inc.d_s),
        a_dag: I * s * (sq * inc.d_fdag + state.rho_ge * inc.d_s),
        rho_ee: -s * state.rho_ee * ds_conj,
        rho_eg: s * (sq * inc.d_fdag.conj() - state.rho_eg * ds_conj),
        rho_ge: s * (sq * inc.d_f.conj() - state.rho_ge * ds_conj),
        c0: C64::new(0.0, 0.0),
    }
}

/// Noise of the reduced five-variable system with `F`, `F_dag` only.
pub fn stochastic_terms_scheme_a(
    state: &TrajectoryState,
    inc: &NoiseIncrement,
    params: &ModelParams,
) -> DriftVector {
    let s = 1.0 / params.sqrt_n();
    let df_conj = inc.d_f.conj();
    let dfdag_conj = inc.d_fdag.conj();
    let mixed = state.rho_eg * df_conj + state.rho_ge * dfdag_conj;
    DriftVector {
        a: -I * s * inc.d_f,
        a_dag: I * s * inc.d_fdag,
        rho_ee: -s * state.rho_ee * mixed,
        rho_eg: s * (state.rho_ee * dfdag_conj - state.rho_eg * mixed),
        rho_ge: s * (state.rho_ee * df_conj - state.rho_ge * mixed),
        c0: C64::new(0.0, 0.0),
    }
}
