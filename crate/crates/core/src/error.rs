use thiserror::Error;

use crate::stability::StabilityReport;

/// Errors raised while building or evaluating the optomechanical model.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("squeezed source above threshold: epsilon = {eps} must stay below kappa_p/2 = {half_width} (the linearized parametric-oscillator output is only valid sufficiently below threshold)")]
    AboveThreshold { eps: f64, half_width: f64 },

    #[error("pump power ratio r = {0} is at or above the parametric-oscillator threshold (r < 1 required)")]
    PowerRatioAboveThreshold(f64),

    #[error("no real non-negative root of the steady-state cubic")]
    NoSteadyState,

    #[error("single-photon coupling is zero; coupling threshold undefined")]
    ZeroCoupling,

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("spectrum tables are on different grids")]
    GridMismatch,
}

/// Errors raised while integrating spectra into variances.
#[derive(Debug, Clone, Error)]
pub enum MomentError {
    #[error("system is unstable (max eigenvalue real part {:.6e} rad/s)", .0.max_real_part())]
    Unstable(Box<StabilityReport>),

    #[error("quadrature did not converge: achieved relative error {achieved:.3e}, requested {requested:.3e}")]
    NonConvergence { achieved: f64, requested: f64 },

    #[error(transparent)]
    Model(#[from] ModelError),
}
