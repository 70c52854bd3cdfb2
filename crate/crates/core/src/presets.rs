//! The reference parameter set and the named scenarios built on it.
//!
//! Every physical default in the crate lives here. Named presets are stored
//! as configuration text layered over the defaults, so they go through the
//! same parser and validation as user input.

use crate::config::RunConfig;
use crate::model::SystemParams;

pub const LENGTH_M: f64 = 25e-3;
pub const MASS_KG: f64 = 145e-12;
pub const MECH_FREQ_HZ: f64 = 947e3;
pub const MECH_DAMPING_HZ: f64 = 141.0;
pub const CAVITY_DECAY_HZ: f64 = 215e3;
pub const LASER_WAVELENGTH_M: f64 = 1064e-9;
pub const POWER_W: f64 = 5e-3;
pub const DETUNING_OVER_OMEGA_M: f64 = 1.0;
pub const TEMPERATURE_K: f64 = 0.1;

pub const KAPPA_P_OVER_KAPPA: f64 = 0.1;
pub const EPSILON_OVER_KAPPA_P: f64 = 0.0;
pub const PHI0_OVER_PI: f64 = 0.0;
pub const ALPHA_OVER_KAPPA_P: f64 = 0.0;

pub const GRID_MIN_OVER_OMEGA_M: f64 = 0.8;
pub const GRID_MAX_OVER_OMEGA_M: f64 = 1.2;
pub const GRID_POINTS: usize = 4001;

pub const OMEGA_MAX_OVER_OMEGA_M: f64 = 20.0;
pub const REL_TOL: f64 = 1e-6;

pub const PROMINENCE: f64 = 0.02;

/// Named presets as `(name, config text)`. The text is applied on top of the
/// defaults above.
pub const PRESETS: &[(&str, &str)] = &[
    ("paper-default", ""),
    (
        "fig2",
        "run.command = spectrum
source.kind = dpo
source.kappa_p_over_kappa = 0.1
source.epsilon_over_kappa_p = 0.4
source.phi0_over_pi = 0
",
    ),
    (
        "fig3a",
        "run.command = spectrum
source.kind = dpo
source.kappa_p_over_kappa = 0.1
source.epsilon_over_kappa_p = 0.1
source.phi0_over_pi = 1
",
    ),
    (
        "fig3d",
        "run.command = spectrum
source.kind = dpo
source.kappa_p_over_kappa = 0.1
source.epsilon_over_kappa_p = 0.4
source.phi0_over_pi = 1
",
    ),
    (
        "fig5a",
        "run.command = spectrum
source.kind = ndpo
source.kappa_p_over_kappa = 0.1
source.epsilon_over_kappa_p = 0.1
source.phi0_over_pi = 1
source.alpha_over_kappa_p = 5
system.temperature_k = 0.1
",
    ),
    (
        "fig5b",
        "run.command = spectrum
source.kind = ndpo
source.kappa_p_over_kappa = 0.1
source.epsilon_over_kappa_p = 0.1
source.phi0_over_pi = 1
source.alpha_over_kappa_p = 5
system.temperature_k = 0.001
",
    ),
    (
        "fig5c",
        "run.command = spectrum
source.kind = ndpo
source.kappa_p_over_kappa = 0.1
source.epsilon_over_kappa_p = 0.1
source.phi0_over_pi = 1
source.alpha_over_kappa_p = 0.5
system.temperature_k = 0.1
",
    ),
    (
        "fig8a",
        "run.command = sweep
source.kind = dpo
source.kappa_p_over_kappa = 1
source.epsilon_over_kappa_p = 0.3
source.phi0_over_pi = 1
system.temperature_k = 0.001
system.detuning_mode = bare
sweep.detuning_over_omega_m = 0.5:1.5:21
",
    ),
    (
        "fig9a",
        "run.command = sweep
source.kind = dpo
source.kappa_p_over_kappa = 1
source.epsilon_over_kappa_p = 0.3
system.temperature_k = 0.001
sweep.phi0_over_pi = 0:1:21
",
    ),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let text = preset_text(name)?;
    Some(RunConfig::parse(text).expect("built-in presets parse"))
}

/// The reference cavity: 5 mW drive at Δ = ω_m, T = 100 mK.
pub fn paper_system() -> SystemParams {
    RunConfig::default().system_params()
}
