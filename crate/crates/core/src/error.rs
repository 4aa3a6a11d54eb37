use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite trajectory state at tau = {tau}")]
    NonFinite { tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("cannot step a trajectory that already diverged (tau = {tau})")]
    AlreadyDiverged { tau: f64 },
    #[error("invalid step configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaugeError {
    #[error("weighted mean of an empty sample")]
    EmptySample,
    #[error("values and log-weights differ in length ({values} vs {weights})")]
    LengthMismatch { values: usize, weights: usize },
    #[error("invalid gauge configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("photon cutoff {required} exceeds the supported maximum {max}")]
    CutoffOverflow { required: usize, max: usize },
    #[error("open-system reference supports at most {max} atoms, got {n_atoms}")]
    UnsupportedSize { n_atoms: u32, max: u32 },
    #[error("time grid must be finite and nondecreasing from 0")]
    InvalidGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("singularity fit unavailable: {found} points in the asymptotic window, need {needed}")]
    InsufficientPoints { found: usize, needed: usize },
    #[error("input series lengths differ")]
    LengthMismatch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
