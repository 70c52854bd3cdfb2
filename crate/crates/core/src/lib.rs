//! Quantum fluctuation spectra and quadrature variances of the movable
//! mirror of a laser-driven optomechanical cavity, with an ordinary vacuum,
//! finite-bandwidth squeezed vacuum (degenerate or non-degenerate parametric
//! oscillator) or broadband squeezed input.
//!
//! The pipeline is
//! [`SystemParams`] → [`derive`] → [`solve_steady_state`] → [`check_stability`]
//! → [`spectra_at`] / [`spectrum_scan`] → [`detect_features`] or
//! [`squeezing_report`]. [`config`] and [`runner`] wrap it for the command
//! line.

pub mod config;
pub mod constants;
pub mod error;
pub mod features;
pub mod model;
pub mod moments;
pub mod noise;
pub mod output;
pub mod presets;
pub mod quadrature;
pub mod response;
pub mod runner;
pub mod spectra;
pub mod stability;

pub use config::{Command, ConfigError, RunConfig};
pub use error::{ModelError, MomentError};
pub use features::{detect_features, Classification, FeatureOptions, FeatureReport, Quadrature};
pub use model::{
    classify_regime, critical_power, derive, solve_steady_state, solve_steady_state_with, CouplingRegime,
    DerivedParams, Detuning, RootSelection, SteadyState, SystemParams,
};
pub use moments::{squeezing_report, variance, CutoffSpec, MomentReport};
pub use noise::{epsilon_from_power_ratio, pump_rates, squeeze_spectrum, thermal_kernel, SourceKind, SqueezeSource};
pub use response::{denominator, response_set, InputCoupling, ResponseSet};
pub use runner::{run, RunError};
pub use spectra::{spectra_at, spectrum_scan, GridSpec, SpectrumConventions, SpectrumPoint, SpectrumTable};
pub use stability::{check_stability, drift_matrix, DriftMatrix, StabilityReport};
