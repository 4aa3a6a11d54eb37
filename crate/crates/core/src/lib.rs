//! Positive-P phase-space simulation of the resonant Tavis-Cummings model.
//!
//! - [`model`]: parameters, trajectory state, drift of the dimensionless equations
//! - [`noise`]: Wiener increments, per-trajectory streams, diffusion-gauge schemes
//! - [`integrator`]: Euler-Maruyama and Heun-type SRK2 stepping with runaway detection
//! - [`gauge`]: drift gauge, switch function, log-weighted averaging
//! - [`ensemble`]: parallel trajectory ensembles and masked statistics
//! - [`exact`]: closed (Dicke-sector) and open (Lindblad) reference solvers
//! - [`semiclassics`]: effective potential, inversion ODE, singularity fits

pub mod ensemble;
pub mod error;
pub mod exact;
pub mod gauge;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod semiclassics;

pub use ensemble::{
    divergence_fraction_series, run_ensemble, run_ensemble_with_progress, EnsembleConfig,
    EnsembleResult, Estimate, Observable, ObservableSeries,
};
pub use error::{EnsembleError, ExactError, FitError, GaugeError, IntegratorError, ModelError, NoiseError};
pub use exact::{closed_evolve, open_evolve, ClosedSeries, OpenSeries};
pub use gauge::{switch_function, weighted_mean, GaugeConfig, WeightedMean};
pub use integrator::{propagate, step, Scheme, StepConfig};
pub use model::{
    bloch_length, drift, initial_state, total_energy, AtomicInit, DriftVector, ModelParams,
    TrajectoryState, C64,
};
pub use noise::{NoiseIncrement, NoiseScheme, RngStream};
pub use semiclassics::{fit_singularity_exponent, SingularityFit};
