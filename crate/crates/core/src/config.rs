//! Run configuration: a flat `section.key = value` document.
//!
//! ```text
//! # comment
//! system.power_w = 5 mW
//! source.kind = dpo
//! source.epsilon_over_kappa_p = 0.4
//! sweep.phi0_over_pi = 0:1:21
//! ```
//!
//! Numeric values may carry a unit token matching the key's dimension
//! (`mW`, `kHz`, `ng`, `mK`, ...); the key suffix names the stored unit.
//! Frequencies given with `_hz` keys are ordinary frequencies and are
//! converted to rad/s when the model is built. Omitted keys take the
//! reference values from [`crate::presets`].

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::model::{Detuning, RootSelection, SystemParams};
use crate::moments::CutoffSpec;
use crate::noise::{SourceKind, SqueezeSource};
use crate::output::fmt_f64;
use crate::presets as d;
use crate::response::InputCoupling;
use crate::spectra::{GridSpec, SpectrumConventions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given more than once")]
    Duplicate(String),
    #[error("`{key}`: unit `{unit}` does not match the expected {expected}")]
    UnitMismatch {
        key: String,
        unit: String,
        expected: &'static str,
    },
    #[error("`{key}`: invalid value `{value}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("`{key}`: {reason}")]
    Threshold { key: String, reason: String },
    #[error("{0}")]
    Usage(String),
}

impl ConfigError {
    fn invalid(key: &str, value: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Variance,
    Sweep,
    Stability,
    CriticalPower,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Spectrum,
        Command::Variance,
        Command::Sweep,
        Command::Stability,
        Command::CriticalPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Variance => "variance",
            Command::Sweep => "sweep",
            Command::Stability => "stability",
            Command::CriticalPower => "critical-power",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningMode {
    Bare,
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierMode {
    OmegaM,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Quantities a sweep can scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    PowerW,
    TemperatureK,
    DetuningOverOmegaM,
    KappaPOverKappa,
    EpsilonOverKappaP,
    Phi0OverPi,
    AlphaOverKappaP,
}

impl SweepVar {
    pub const ALL: [SweepVar; 7] = [
        SweepVar::PowerW,
        SweepVar::TemperatureK,
        SweepVar::DetuningOverOmegaM,
        SweepVar::KappaPOverKappa,
        SweepVar::EpsilonOverKappaP,
        SweepVar::Phi0OverPi,
        SweepVar::AlphaOverKappaP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PowerW => "power_w",
            SweepVar::TemperatureK => "temperature_k",
            SweepVar::DetuningOverOmegaM => "detuning_over_omega_m",
            SweepVar::KappaPOverKappa => "kappa_p_over_kappa",
            SweepVar::EpsilonOverKappaP => "epsilon_over_kappa_p",
            SweepVar::Phi0OverPi => "phi0_over_pi",
            SweepVar::AlphaOverKappaP => "alpha_over_kappa_p",
        }
    }

    /// The configuration key this axis overrides.
    pub fn target_key(self) -> &'static str {
        match self {
            SweepVar::PowerW => "system.power_w",
            SweepVar::TemperatureK => "system.temperature_k",
            SweepVar::DetuningOverOmegaM => "system.detuning_over_omega_m",
            SweepVar::KappaPOverKappa => "source.kappa_p_over_kappa",
            SweepVar::EpsilonOverKappaP => "source.epsilon_over_kappa_p",
            SweepVar::Phi0OverPi => "source.phi0_over_pi",
            SweepVar::AlphaOverKappaP => "source.alpha_over_kappa_p",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub var: SweepVar,
    pub min: f64,
    pub max: f64,
    /// Number of points, ≥ 1.
    pub steps: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let n = self.steps - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * (i as f64 / n as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSection {
    pub length_m: f64,
    pub mass_kg: f64,
    pub mech_freq_hz: f64,
    pub mech_damping_hz: f64,
    pub cavity_decay_hz: f64,
    pub laser_wavelength_m: f64,
    pub power_w: f64,
    pub detuning_mode: DetuningMode,
    pub detuning_over_omega_m: f64,
    pub temperature_k: f64,
    pub root_selection: RootSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSection {
    pub kind: SourceKind,
    pub kappa_p_over_kappa: f64,
    pub epsilon_over_kappa_p: f64,
    pub phi0_over_pi: f64,
    pub alpha_over_kappa_p: f64,
    pub carrier_offset_mode: CarrierMode,
    pub carrier_offset_over_omega_m: f64,
    pub n_broadband: f64,
    pub m_broadband: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraSection {
    pub input_coupling: InputCoupling,
    pub momentum_photon_weight: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub omega_over_omega_m_min: f64,
    pub omega_over_omega_m_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsSection {
    pub omega_max_over_omega_m: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub system: SystemSection,
    pub source: SourceSection,
    pub spectra: SpectraSection,
    pub grid: GridSection,
    pub moments: MomentsSection,
    /// Up to two axes, in the order given; ignored unless the command is
    /// `sweep`.
    pub sweep: Vec<SweepAxis>,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Spectrum,
            system: SystemSection {
                length_m: d::LENGTH_M,
                mass_kg: d::MASS_KG,
                mech_freq_hz: d::MECH_FREQ_HZ,
                mech_damping_hz: d::MECH_DAMPING_HZ,
                cavity_decay_hz: d::CAVITY_DECAY_HZ,
                laser_wavelength_m: d::LASER_WAVELENGTH_M,
                power_w: d::POWER_W,
                detuning_mode: DetuningMode::Effective,
                detuning_over_omega_m: d::DETUNING_OVER_OMEGA_M,
                temperature_k: d::TEMPERATURE_K,
                root_selection: RootSelection::Lowest,
            },
            source: SourceSection {
                kind: SourceKind::Vacuum,
                kappa_p_over_kappa: d::KAPPA_P_OVER_KAPPA,
                epsilon_over_kappa_p: d::EPSILON_OVER_KAPPA_P,
                phi0_over_pi: d::PHI0_OVER_PI,
                alpha_over_kappa_p: d::ALPHA_OVER_KAPPA_P,
                carrier_offset_mode: CarrierMode::OmegaM,
                carrier_offset_over_omega_m: 1.0,
                n_broadband: 0.0,
                m_broadband: 0.0,
            },
            spectra: SpectraSection {
                input_coupling: InputCoupling::SqrtKappa,
                momentum_photon_weight: 1.0,
                prominence: d::PROMINENCE,
            },
            grid: GridSection {
                omega_over_omega_m_min: d::GRID_MIN_OVER_OMEGA_M,
                omega_over_omega_m_max: d::GRID_MAX_OVER_OMEGA_M,
                points: d::GRID_POINTS,
            },
            moments: MomentsSection {
                omega_max_over_omega_m: d::OMEGA_MAX_OVER_OMEGA_M,
                rel_tol: d::REL_TOL,
            },
            sweep: Vec::new(),
            output: OutputSection {
                path: None,
                format: Format::Csv,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dim {
    Length,
    Mass,
    Frequency,
    Power,
    Temperature,
    Pure,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Length => "length unit (m, mm, um, nm)",
            Dim::Mass => "mass unit (kg, g, mg, ug, ng)",
            Dim::Frequency => "frequency unit (Hz, kHz, MHz, GHz)",
            Dim::Power => "power unit (W, mW, uW)",
            Dim::Temperature => "temperature unit (K, mK, uK)",
            Dim::Pure => "dimensionless number (no unit)",
        }
    }

    /// (token, multiplier, divisor) for the accepted unit tokens.
    fn units(self) -> &'static [(&'static str, f64, f64)] {
        match self {
            Dim::Length => &[("m", 1.0, 1.0), ("mm", 1.0, 1e3), ("um", 1.0, 1e6), ("nm", 1.0, 1e9)],
            Dim::Mass => &[
                ("kg", 1.0, 1.0),
                ("g", 1.0, 1e3),
                ("mg", 1.0, 1e6),
                ("ug", 1.0, 1e9),
                ("ng", 1.0, 1e12),
            ],
            Dim::Frequency => &[("Hz", 1.0, 1.0), ("kHz", 1e3, 1.0), ("MHz", 1e6, 1.0), ("GHz", 1e9, 1.0)],
            Dim::Power => &[("W", 1.0, 1.0), ("mW", 1.0, 1e3), ("uW", 1.0, 1e6)],
            Dim::Temperature => &[("K", 1.0, 1.0), ("mK", 1.0, 1e3), ("uK", 1.0, 1e6)],
            Dim::Pure => &[],
        }
    }
}

fn parse_number(key: &str, raw: &str, dim: Dim) -> Result<f64, ConfigError> {
    let mut parts = raw.split_whitespace();
    let first = parts.next().unwrap_or("");
    let mut unit = parts.next();
    if parts.next().is_some() {
        return Err(ConfigError::invalid(key, raw, "expected a number and at most one unit"));
    }
    // `20mW` is accepted as well as `20 mW`: take the longest numeric prefix.
    let split = (1..=first.len())
        .rev()
        .filter(|&i| first.is_char_boundary(i))
        .find(|&i| first[..i].parse::<f64>().is_ok())
        .ok_or_else(|| ConfigError::invalid(key, raw, "not a number"))?;
    let (num, suffix) = first.split_at(split);
    if !suffix.is_empty() {
        if unit.is_some() {
            return Err(ConfigError::invalid(key, raw, "expected a number and at most one unit"));
        }
        unit = Some(suffix);
    }
    let x: f64 = num
        .parse()
        .map_err(|_| ConfigError::invalid(key, raw, "not a number"))?;
    if !x.is_finite() {
        return Err(ConfigError::invalid(key, raw, "must be finite"));
    }
    match unit {
        None => Ok(x),
        Some(u) => {
            let &(_, mul, div) = dim.units().iter().find(|(t, _, _)| *t == u).ok_or_else(|| {
                ConfigError::UnitMismatch {
                    key: key.to_string(),
                    unit: u.to_string(),
                    expected: dim.name(),
                }
            })?;
            Ok(x * mul / div)
        }
    }
}

fn check(key: &str, raw: &str, ok: bool, reason: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, raw, reason))
    }
}

fn positive(key: &str, raw: &str, dim: Dim) -> Result<f64, ConfigError> {
    let x = parse_number(key, raw, dim)?;
    check(key, raw, x > 0.0, "must be > 0")?;
    Ok(x)
}

fn nonneg(key: &str, raw: &str, dim: Dim) -> Result<f64, ConfigError> {
    let x = parse_number(key, raw, dim)?;
    check(key, raw, x >= 0.0, "must be >= 0")?;
    Ok(x)
}

fn epsilon_ratio(key: &str, raw: &str) -> Result<f64, ConfigError> {
    let x = nonneg(key, raw, Dim::Pure)?;
    if x >= 0.5 {
        return Err(ConfigError::Threshold {
            key: key.to_string(),
            reason: format!(
                "epsilon/kappa_p = {x} is at or above the parametric-oscillator threshold 0.5; \
                 the squeezed-vacuum model is only valid sufficiently below threshold"
            ),
        });
    }
    Ok(x)
}

fn choice<T: Copy>(key: &str, raw: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options
        .iter()
        .find(|(n, _)| *n == raw)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            ConfigError::invalid(key, raw, format!("expected one of {}", names.join(", ")))
        })
}

const KINDS: &[(&str, SourceKind)] = &[
    ("vacuum", SourceKind::Vacuum),
    ("dpo", SourceKind::Dpo),
    ("ndpo", SourceKind::Ndpo),
    ("broadband", SourceKind::Broadband),
];
const DETUNING_MODES: &[(&str, DetuningMode)] =
    &[("bare", DetuningMode::Bare), ("effective", DetuningMode::Effective)];
const CARRIER_MODES: &[(&str, CarrierMode)] =
    &[("omega_m", CarrierMode::OmegaM), ("custom", CarrierMode::Custom)];
const FORMATS: &[(&str, Format)] = &[("csv", Format::Csv), ("json", Format::Json)];
const ROOTS: &[(&str, RootSelection)] =
    &[("lowest", RootSelection::Lowest), ("highest", RootSelection::Highest)];
const COUPLINGS: &[(&str, InputCoupling)] = &[
    ("sqrt_kappa", InputCoupling::SqrtKappa),
    ("extra_sqrt2", InputCoupling::ExtraSqrt2),
];

fn name_of<T: Copy + PartialEq>(options: &[(&'static str, T)], v: T) -> &'static str {
    options.iter().find(|(_, x)| *x == v).map(|(n, _)| *n).unwrap()
}

/// Every scalar key, in canonical order.
pub const KEYS: &[&str] = &[
    "run.command",
    "system.length_m",
    "system.mass_kg",
    "system.mech_freq_hz",
    "system.mech_damping_hz",
    "system.cavity_decay_hz",
    "system.laser_wavelength_m",
    "system.power_w",
    "system.detuning_mode",
    "system.detuning_over_omega_m",
    "system.temperature_k",
    "system.root_selection",
    "source.kind",
    "source.kappa_p_over_kappa",
    "source.epsilon_over_kappa_p",
    "source.phi0_over_pi",
    "source.alpha_over_kappa_p",
    "source.carrier_offset_mode",
    "source.carrier_offset_over_omega_m",
    "source.n_broadband",
    "source.m_broadband",
    "spectra.input_coupling",
    "spectra.momentum_photon_weight",
    "spectra.prominence",
    "grid.omega_over_omega_m_min",
    "grid.omega_over_omega_m_max",
    "grid.points",
    "moments.omega_max_over_omega_m",
    "moments.rel_tol",
    "output.format",
    "output.path",
];

/// Model inputs resolved to SI units and rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: SystemParams,
    pub source: SqueezeSource,
    pub root_selection: RootSelection,
    pub conventions: SpectrumConventions,
    pub grid: GridSpec,
    pub cutoff: CutoffSpec,
    pub prominence: f64,
}

impl RunConfig {
    /// Parses a document on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        c.apply_document(text)?;
        Ok(c)
    }

    /// Applies a document on top of this configuration. Keys may appear at
    /// most once per document.
    pub fn apply_document(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen: Vec<String> = Vec::new();
        let mut sweep_reset = false;
        for (n, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                text: raw_line.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || !key.contains('.') {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    text: raw_line.to_string(),
                });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
            seen.push(key.to_string());
            // A document that declares sweep axes replaces inherited ones.
            if key.starts_with("sweep.") && !sweep_reset {
                self.sweep.clear();
                sweep_reset = true;
            }
            self.set(key, value)?;
        }
        self.validate()
    }

    /// Sets one key. Cross-key consistency is checked by [`Self::validate`].
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        use Dim::*;
        let s = &mut self.system;
        let src = &mut self.source;
        match key {
            "run.command" => {
                self.command = Command::from_name(raw).ok_or_else(|| {
                    let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                    ConfigError::invalid(key, raw, format!("expected one of {}", names.join(", ")))
                })?
            }
            "system.length_m" => s.length_m = positive(key, raw, Length)?,
            "system.mass_kg" => s.mass_kg = positive(key, raw, Mass)?,
            "system.mech_freq_hz" => s.mech_freq_hz = positive(key, raw, Frequency)?,
            "system.mech_damping_hz" => s.mech_damping_hz = nonneg(key, raw, Frequency)?,
            "system.cavity_decay_hz" => s.cavity_decay_hz = positive(key, raw, Frequency)?,
            "system.laser_wavelength_m" => s.laser_wavelength_m = positive(key, raw, Length)?,
            "system.power_w" => s.power_w = nonneg(key, raw, Power)?,
            "system.detuning_mode" => s.detuning_mode = choice(key, raw, DETUNING_MODES)?,
            "system.detuning_over_omega_m" => s.detuning_over_omega_m = parse_number(key, raw, Pure)?,
            "system.temperature_k" => s.temperature_k = nonneg(key, raw, Temperature)?,
            "system.root_selection" => s.root_selection = choice(key, raw, ROOTS)?,
            "source.kind" => src.kind = choice(key, raw, KINDS)?,
            "source.kappa_p_over_kappa" => src.kappa_p_over_kappa = positive(key, raw, Pure)?,
            "source.epsilon_over_kappa_p" => src.epsilon_over_kappa_p = epsilon_ratio(key, raw)?,
            "source.phi0_over_pi" => src.phi0_over_pi = parse_number(key, raw, Pure)?,
            "source.alpha_over_kappa_p" => src.alpha_over_kappa_p = parse_number(key, raw, Pure)?,
            "source.carrier_offset_mode" => src.carrier_offset_mode = choice(key, raw, CARRIER_MODES)?,
            "source.carrier_offset_over_omega_m" => {
                src.carrier_offset_over_omega_m = parse_number(key, raw, Pure)?
            }
            "source.n_broadband" => src.n_broadband = nonneg(key, raw, Pure)?,
            "source.m_broadband" => src.m_broadband = parse_number(key, raw, Pure)?,
            "spectra.input_coupling" => self.spectra.input_coupling = choice(key, raw, COUPLINGS)?,
            "spectra.momentum_photon_weight" => {
                self.spectra.momentum_photon_weight = nonneg(key, raw, Pure)?
            }
            "spectra.prominence" => {
                let x = positive(key, raw, Pure)?;
                check(key, raw, x < 1.0, "must be < 1")?;
                self.spectra.prominence = x;
            }
            "grid.omega_over_omega_m_min" => self.grid.omega_over_omega_m_min = parse_number(key, raw, Pure)?,
            "grid.omega_over_omega_m_max" => self.grid.omega_over_omega_m_max = parse_number(key, raw, Pure)?,
            "grid.points" => {
                let n: usize = raw
                    .parse()
                    .map_err(|_| ConfigError::invalid(key, raw, "not a non-negative integer"))?;
                check(key, raw, n >= 2, "need at least 2 points")?;
                self.grid.points = n;
            }
            "moments.omega_max_over_omega_m" => {
                self.moments.omega_max_over_omega_m = positive(key, raw, Pure)?
            }
            "moments.rel_tol" => {
                let x = positive(key, raw, Pure)?;
                check(key, raw, x < 1.0, "must be < 1")?;
                self.moments.rel_tol = x;
            }
            "output.format" => self.output.format = choice(key, raw, FORMATS)?,
            "output.path" => {
                check(key, raw, !raw.is_empty(), "must not be empty")?;
                self.output.path = Some(raw.to_string());
            }
            _ => {
                if let Some(axis) = key.strip_prefix("sweep.") {
                    let var = SweepVar::from_name(axis)
                        .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
                    let ax = parse_axis(key, raw, var)?;
                    if let Some(slot) = self.sweep.iter_mut().find(|a| a.var == var) {
                        *slot = ax;
                    } else {
                        self.sweep.push(ax);
                    }
                } else {
                    return Err(ConfigError::UnknownKey(key.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Cross-key checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep.len() > 2 {
            return Err(ConfigError::Usage(format!(
                "at most 2 sweep axes allowed, got {}",
                self.sweep.len()
            )));
        }
        if self.grid.omega_over_omega_m_min >= self.grid.omega_over_omega_m_max {
            return Err(ConfigError::invalid(
                "grid.omega_over_omega_m_max",
                &fmt_f64(self.grid.omega_over_omega_m_max),
                "must exceed grid.omega_over_omega_m_min",
            ));
        }
        if self.source.kind == SourceKind::Broadband {
            let n = self.source.n_broadband;
            let bound = (n * (n + 1.0)).sqrt();
            if self.source.m_broadband.abs() > bound * (1.0 + 1e-12) {
                return Err(ConfigError::Threshold {
                    key: "source.m_broadband".into(),
                    reason: format!("|m| must not exceed sqrt(n(n+1)) = {bound}"),
                });
            }
        }
        Ok(())
    }

    pub fn omega_m(&self) -> f64 {
        2.0 * PI * self.system.mech_freq_hz
    }

    pub fn kappa(&self) -> f64 {
        2.0 * PI * self.system.cavity_decay_hz
    }

    pub fn system_params(&self) -> SystemParams {
        let s = &self.system;
        let wm = self.omega_m();
        let det = s.detuning_over_omega_m * wm;
        SystemParams {
            cavity_length: s.length_m,
            mirror_mass: s.mass_kg,
            mech_freq: wm,
            mech_damping: 2.0 * PI * s.mech_damping_hz,
            cavity_decay: self.kappa(),
            laser_wavelength: s.laser_wavelength_m,
            laser_power: s.power_w,
            detuning: match s.detuning_mode {
                DetuningMode::Bare => Detuning::Bare(det),
                DetuningMode::Effective => Detuning::Effective(det),
            },
            temperature: s.temperature_k,
        }
    }

    pub fn squeeze_source(&self) -> Result<SqueezeSource, ConfigError> {
        let s = &self.source;
        let wm = self.omega_m();
        let kp = s.kappa_p_over_kappa * self.kappa();
        let eps = s.epsilon_over_kappa_p * kp;
        let phi0 = s.phi0_over_pi * PI;
        let carrier = match s.carrier_offset_mode {
            CarrierMode::OmegaM => wm,
            CarrierMode::Custom => s.carrier_offset_over_omega_m * wm,
        };
        let r = match s.kind {
            SourceKind::Vacuum => Ok(SqueezeSource::vacuum()),
            SourceKind::Dpo => SqueezeSource::dpo(kp, eps, phi0, carrier),
            SourceKind::Ndpo => SqueezeSource::ndpo(kp, eps, phi0, s.alpha_over_kappa_p * kp, carrier),
            SourceKind::Broadband => SqueezeSource::broadband(s.n_broadband, s.m_broadband, phi0),
        };
        r.map_err(model_error_to_config)
    }

    /// Resolves the configuration into model inputs.
    pub fn build(&self) -> Result<Resolved, ConfigError> {
        self.validate()?;
        let params = self.system_params();
        params.validate().map_err(model_error_to_config)?;
        let wm = params.mech_freq;
        let grid = GridSpec::new(
            self.grid.omega_over_omega_m_min * wm,
            self.grid.omega_over_omega_m_max * wm,
            self.grid.points,
        )
        .map_err(model_error_to_config)?;
        Ok(Resolved {
            params,
            source: self.squeeze_source()?,
            root_selection: self.system.root_selection,
            conventions: SpectrumConventions {
                input_coupling: self.spectra.input_coupling,
                momentum_photon_weight: self.spectra.momentum_photon_weight,
            },
            grid,
            cutoff: CutoffSpec {
                omega_max: self.moments.omega_max_over_omega_m * wm,
                rel_tol: self.moments.rel_tol,
            },
            prominence: self.spectra.prominence,
        })
    }

    /// Copy with one sweep variable set to `value`.
    pub fn with_axis(&self, var: SweepVar, value: f64) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        match var {
            SweepVar::PowerW => c.system.power_w = value,
            SweepVar::TemperatureK => c.system.temperature_k = value,
            SweepVar::DetuningOverOmegaM => c.system.detuning_over_omega_m = value,
            SweepVar::KappaPOverKappa => c.source.kappa_p_over_kappa = value,
            SweepVar::EpsilonOverKappaP => c.source.epsilon_over_kappa_p = value,
            SweepVar::Phi0OverPi => c.source.phi0_over_pi = value,
            SweepVar::AlphaOverKappaP => c.source.alpha_over_kappa_p = value,
        }
        Ok(c)
    }

    fn value_of(&self, key: &str) -> Option<String> {
        let s = &self.system;
        let src = &self.source;
        let f = |x: f64| Some(fmt_f64(x));
        match key {
            "run.command" => Some(self.command.name().into()),
            "system.length_m" => f(s.length_m),
            "system.mass_kg" => f(s.mass_kg),
            "system.mech_freq_hz" => f(s.mech_freq_hz),
            "system.mech_damping_hz" => f(s.mech_damping_hz),
            "system.cavity_decay_hz" => f(s.cavity_decay_hz),
            "system.laser_wavelength_m" => f(s.laser_wavelength_m),
            "system.power_w" => f(s.power_w),
            "system.detuning_mode" => Some(name_of(DETUNING_MODES, s.detuning_mode).into()),
            "system.detuning_over_omega_m" => f(s.detuning_over_omega_m),
            "system.temperature_k" => f(s.temperature_k),
            "system.root_selection" => Some(name_of(ROOTS, s.root_selection).into()),
            "source.kind" => Some(name_of(KINDS, src.kind).into()),
            "source.kappa_p_over_kappa" => f(src.kappa_p_over_kappa),
            "source.epsilon_over_kappa_p" => f(src.epsilon_over_kappa_p),
            "source.phi0_over_pi" => f(src.phi0_over_pi),
            "source.alpha_over_kappa_p" => f(src.alpha_over_kappa_p),
            "source.carrier_offset_mode" => Some(name_of(CARRIER_MODES, src.carrier_offset_mode).into()),
            "source.carrier_offset_over_omega_m" => f(src.carrier_offset_over_omega_m),
            "source.n_broadband" => f(src.n_broadband),
            "source.m_broadband" => f(src.m_broadband),
            "spectra.input_coupling" => Some(name_of(COUPLINGS, self.spectra.input_coupling).into()),
            "spectra.momentum_photon_weight" => f(self.spectra.momentum_photon_weight),
            "spectra.prominence" => f(self.spectra.prominence),
            "grid.omega_over_omega_m_min" => f(self.grid.omega_over_omega_m_min),
            "grid.omega_over_omega_m_max" => f(self.grid.omega_over_omega_m_max),
            "grid.points" => Some(self.grid.points.to_string()),
            "moments.omega_max_over_omega_m" => f(self.moments.omega_max_over_omega_m),
            "moments.rel_tol" => f(self.moments.rel_tol),
            "output.format" => Some(name_of(FORMATS, self.output.format).into()),
            "output.path" => self.output.path.clone(),
            _ => None,
        }
    }

    /// Canonical text: every key in fixed order, then the sweep axes.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = self.value_of(key) {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        for ax in &self.sweep {
            let _ = writeln!(
                out,
                "sweep.{} = {}:{}:{}",
                ax.var.name(),
                fmt_f64(ax.min),
                fmt_f64(ax.max),
                ax.steps
            );
        }
        out
    }
}

fn parse_axis(key: &str, raw: &str, var: SweepVar) -> Result<SweepAxis, ConfigError> {
    let parts: Vec<&str> = raw.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ConfigError::invalid(key, raw, "expected min:max:steps"));
    }
    let dim = match var {
        SweepVar::PowerW => Dim::Power,
        SweepVar::TemperatureK => Dim::Temperature,
        _ => Dim::Pure,
    };
    let min = parse_number(key, parts[0], dim)?;
    let max = parse_number(key, parts[1], dim)?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| ConfigError::invalid(key, raw, "steps must be a non-negative integer"))?;
    if steps == 0 {
        return Err(ConfigError::Usage(format!("`{key}`: a sweep needs at least 1 step")));
    }
    if max < min {
        return Err(ConfigError::invalid(key, raw, "max must not be below min"));
    }
    if steps == 1 && max != min {
        return Err(ConfigError::invalid(key, raw, "a single step needs min = max"));
    }
    // Range checks mirror the scalar keys.
    let target = var.target_key();
    for (x, part) in [(min, parts[0]), (max, parts[1])] {
        match var {
            SweepVar::PowerW | SweepVar::TemperatureK => {
                check(key, part, x >= 0.0, "must be >= 0")?;
            }
            SweepVar::KappaPOverKappa => check(key, part, x > 0.0, "must be > 0")?,
            SweepVar::EpsilonOverKappaP => {
                check(key, part, x >= 0.0, "must be >= 0")?;
                if x >= 0.5 {
                    return Err(ConfigError::Threshold {
                        key: key.to_string(),
                        reason: format!(
                            "sweep of {target} reaches {x}, at or above the parametric-oscillator threshold 0.5"
                        ),
                    });
                }
            }
            _ => {}
        }
    }
    Ok(SweepAxis { var, min, max, steps })
}

fn model_error_to_config(e: ModelError) -> ConfigError {
    let key_for = |field: &str| -> String {
        match field {
            "cavity_length" => "system.length_m",
            "mirror_mass" => "system.mass_kg",
            "mech_freq" => "system.mech_freq_hz",
            "mech_damping" => "system.mech_damping_hz",
            "cavity_decay" => "system.cavity_decay_hz",
            "laser_wavelength" => "system.laser_wavelength_m",
            "laser_power" => "system.power_w",
            "temperature" => "system.temperature_k",
            "detuning" => "system.detuning_over_omega_m",
            "kappa_p" => "source.kappa_p_over_kappa",
            "epsilon" => "source.epsilon_over_kappa_p",
            "phi0" => "source.phi0_over_pi",
            "alpha" => "source.alpha_over_kappa_p",
            "carrier_offset" => "source.carrier_offset_over_omega_m",
            "n_broadband" => "source.n_broadband",
            "m_broadband" => "source.m_broadband",
            other => other,
        }
        .to_string()
    };
    match e {
        ModelError::InvalidParameter { field, reason } => ConfigError::InvalidValue {
            key: key_for(field),
            value: String::new(),
            reason,
        },
        ModelError::AboveThreshold { .. } | ModelError::PowerRatioAboveThreshold(_) => {
            ConfigError::Threshold {
                key: "source.epsilon_over_kappa_p".into(),
                reason: e.to_string(),
            }
        }
        ModelError::InvalidGrid(msg) => ConfigError::invalid("grid.points", "", msg),
        other => ConfigError::Usage(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# only a comment\n\n   \n").unwrap(), RunConfig::default());
    }

    #[test]
    fn units_scale_values() {
        let c = RunConfig::parse(
            "system.power_w = 20 mW\nsystem.mass_kg = 145 ng\nsystem.mech_freq_hz = 947 kHz\nsystem.temperature_k = 1 mK\nsystem.length_m = 25 mm",
        )
        .unwrap();
        assert_eq!(c.system.power_w, 0.02);
        assert_eq!(c.system.mass_kg, 145e-12);
        assert_eq!(c.system.mech_freq_hz, 947e3);
        assert_eq!(c.system.temperature_k, 0.001);
        assert_eq!(c.system.length_m, 0.025);
    }

    #[test]
    fn attached_units_parse() {
        let c = RunConfig::parse("system.power_w = 20mW\nsystem.temperature_k = 1e2mK\nsystem.mass_kg = 1.5e-10").unwrap();
        assert_eq!(c.system.power_w, 0.02);
        assert_eq!(c.system.temperature_k, 0.1);
        assert_eq!(c.system.mass_kg, 1.5e-10);
        assert!(RunConfig::parse("system.power_w = 20mW W").is_err());
        assert!(matches!(
            RunConfig::parse("source.phi0_over_pi = 1x").unwrap_err(),
            ConfigError::UnitMismatch { .. }
        ));
    }

    #[test]
    fn unit_mismatch_is_reported() {
        let e = RunConfig::parse("system.power_w = 5 Hz").unwrap_err();
        assert!(matches!(e, ConfigError::UnitMismatch { ref key, .. } if key == "system.power_w"));
        let e = RunConfig::parse("source.phi0_over_pi = 1 rad").unwrap_err();
        assert!(matches!(e, ConfigError::UnitMismatch { .. }));
    }

    #[test]
    fn above_threshold_names_the_key() {
        let e = RunConfig::parse("source.epsilon_over_kappa_p = 0.6").unwrap_err();
        match e {
            ConfigError::Threshold { key, .. } => assert_eq!(key, "source.epsilon_over_kappa_p"),
            e => panic!("{e:?}"),
        }
        let e = RunConfig::parse("sweep.epsilon_over_kappa_p = 0:0.5:6").unwrap_err();
        assert!(matches!(e, ConfigError::Threshold { .. }));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert_eq!(
            RunConfig::parse("system.colour = red").unwrap_err(),
            ConfigError::UnknownKey("system.colour".into())
        );
        assert_eq!(
            RunConfig::parse("sweep.mass_kg = 1:2:3").unwrap_err(),
            ConfigError::UnknownKey("sweep.mass_kg".into())
        );
        assert!(matches!(
            RunConfig::parse("system.power_w = 1\nsystem.power_w = 2").unwrap_err(),
            ConfigError::Duplicate(_)
        ));
        assert!(matches!(RunConfig::parse("no equals sign").unwrap_err(), ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn sweep_axes() {
        let c = RunConfig::parse("run.command = sweep\nsweep.phi0_over_pi = 0:1:5\nsweep.power_w = 1 mW:5 mW:3").unwrap();
        assert_eq!(c.command, Command::Sweep);
        assert_eq!(c.sweep[0].values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.sweep[1].values(), vec![0.001, 0.003, 0.005]);
        assert!(matches!(
            RunConfig::parse("sweep.phi0_over_pi = 0:1:0").unwrap_err(),
            ConfigError::Usage(_)
        ));
        assert!(RunConfig::parse("sweep.phi0_over_pi = 0:1:2\nsweep.power_w = 0:1:2\nsweep.temperature_k = 0:1:2").is_err());
    }

    #[test]
    fn build_resolves_units() {
        let c = RunConfig::parse("source.kind = ndpo\nsource.epsilon_over_kappa_p = 0.1\nsource.alpha_over_kappa_p = 2").unwrap();
        let r = c.build().unwrap();
        let kappa = 2.0 * PI * 215e3;
        assert_eq!(r.params.cavity_decay, kappa);
        assert!((r.source.kappa_p() - 0.1 * kappa).abs() < 1e-9);
        assert!((r.source.alpha() - 0.2 * kappa).abs() < 1e-9);
        assert_eq!(r.source.carrier_offset(), r.params.mech_freq);
        assert_eq!(r.grid.points, 4001);
        assert_eq!(r.cutoff.omega_max, 20.0 * r.params.mech_freq);
    }

    #[test]
    fn broadband_bound_checked_at_parse() {
        let e = RunConfig::parse("source.kind = broadband\nsource.n_broadband = 1\nsource.m_broadband = 2").unwrap_err();
        assert!(matches!(e, ConfigError::Threshold { ref key, .. } if key == "source.m_broadband"));
    }

    #[test]
    fn canonical_is_a_fixed_point() {
        let c = RunConfig::parse("system.power_w = 20 mW\nsource.kind = dpo\nsweep.phi0_over_pi = 0:1:3").unwrap();
        let text = c.to_canonical();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_canonical(), text);
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (1e-3f64..1.0, 1e-15f64..1e-6, 1e3f64..1e7, 0.0f64..1e4, 1e3f64..1e7),
            (0.0f64..0.1, -3.0f64..3.0, 0.0f64..1.0),
            (0usize..4, 0.01f64..20.0, 0.0f64..0.4999, -2.0f64..2.0, 0.0f64..10.0),
            (0.0f64..1.0, 2usize..10_000, proptest::option::of((0usize..7, 1usize..50))),
        )
            .prop_map(|(sys, sys2, src, rest)| {
                let mut c = RunConfig::default();
                c.system.length_m = sys.0;
                c.system.mass_kg = sys.1;
                c.system.mech_freq_hz = sys.2;
                c.system.mech_damping_hz = sys.3;
                c.system.cavity_decay_hz = sys.4;
                c.system.power_w = sys2.0;
                c.system.detuning_over_omega_m = sys2.1;
                c.system.temperature_k = sys2.2;
                c.source.kind = KINDS[src.0].1;
                if c.source.kind == SourceKind::Broadband {
                    c.source.n_broadband = 1.0;
                    c.source.m_broadband = 1.2;
                }
                c.source.kappa_p_over_kappa = src.1;
                c.source.epsilon_over_kappa_p = src.2;
                c.source.phi0_over_pi = src.3;
                c.source.alpha_over_kappa_p = src.4;
                c.grid.omega_over_omega_m_min = rest.0;
                c.grid.omega_over_omega_m_max = rest.0 + 1.0;
                c.grid.points = rest.1;
                if let Some((axis, steps)) = rest.2 {
                    c.command = Command::Sweep;
                    c.sweep.push(SweepAxis {
                        var: SweepVar::ALL[axis],
                        min: 0.1,
                        max: if steps == 1 { 0.1 } else { 0.25 },
                        steps,
                    });
                }
                c
            })
    }

    proptest! {
        #[test]
        fn round_trip(c in arb_config()) {
            let text = c.to_canonical();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_canonical(), text);
        }
    }
}
