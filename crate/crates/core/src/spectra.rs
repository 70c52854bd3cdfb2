//! Symmetrized displacement and momentum fluctuation spectra of the mirror.
//!
//! Each spectrum is a sum of four parts: thermal forcing filtered through
//! |F₁|², the squeezed-light photon number N, the two-photon correlation M,
//! and the vacuum floor that remains for an ordinary vacuum input. Spectra
//! are dimensionless per rad/s, so that ∫S dω/2π is a quadrature variance.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{SteadyState, SystemParams};
use crate::noise::{thermal_kernel_raw, SqueezeSource};
use crate::response::{InputCoupling, Rates, INPUT_COUPLING};
use crate::stability::{check_stability, drift_matrix, StabilityReport};

/// Weight of the photon-number term in S_p as originally printed.
pub const PRINTED_MOMENTUM_PHOTON_WEIGHT: f64 = 0.5;

/// Choices that fix otherwise ambiguous prefactors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConventions {
    pub input_coupling: InputCoupling,
    /// Factor on the photon-number term of S_p. With 1 the momentum
    /// spectrum is (ω/ω_m)² times the displacement spectrum term by term for
    /// the thermal, N and vacuum parts; the printed 0.5 breaks this and can
    /// drive S_p negative for strongly squeezed inputs.
    pub momentum_photon_weight: f64,
}

impl Default for SpectrumConventions {
    fn default() -> Self {
        SpectrumConventions {
            input_coupling: INPUT_COUPLING,
            momentum_photon_weight: 1.0,
        }
    }
}

impl SpectrumConventions {
    pub fn printed() -> Self {
        SpectrumConventions {
            momentum_photon_weight: PRINTED_MOMENTUM_PHOTON_WEIGHT,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Components {
    pub thermal: f64,
    pub photon_number: f64,
    pub two_photon: f64,
    pub vacuum_floor: f64,
}

impl Components {
    pub fn total(&self) -> f64 {
        self.thermal + self.photon_number + self.two_photon + self.vacuum_floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub s_q: f64,
    pub s_p: f64,
    pub q: Components,
    pub p: Components,
    /// N(ω) of the input at this frequency.
    pub n: f64,
    /// M(ω) of the input at this frequency.
    pub m: Complex64,
}

/// Everything needed to evaluate the spectra at arbitrary frequencies.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumModel {
    rates: Rates,
    temperature: f64,
    source: SqueezeSource,
    conventions: SpectrumConventions,
}

impl SpectrumModel {
    pub fn new(
        ss: &SteadyState,
        params: &SystemParams,
        source: &SqueezeSource,
        conventions: SpectrumConventions,
    ) -> Self {
        SpectrumModel {
            rates: Rates::new(ss, params).with_input_coupling(conventions.input_coupling),
            temperature: params.temperature,
            source: *source,
            conventions,
        }
    }

    pub fn rates(&self) -> &Rates {
        &self.rates
    }

    pub fn source(&self) -> &SqueezeSource {
        &self.source
    }

    pub fn point(&self, omega: f64) -> SpectrumPoint {
        let r = &self.rates;
        let wm = r.omega_m;
        let ws = self.source.carrier_offset();

        let f1 = r.f1(omega);
        let f2 = r.f2(omega);
        let f2m = r.f2(-omega);
        let (n, m) = self.source.spectrum(omega);
        let (nm, mm) = self.source.spectrum(-omega);

        let kernel = thermal_kernel_raw(omega, r.gamma_m, wm, self.temperature);
        let thermal = f1.norm_sqr() * kernel;
        let a2 = f2.norm_sqr();
        let b2 = f2m.norm_sqr();
        let photon_number = a2 * nm + b2 * n;
        let vacuum_floor = 0.5 * (a2 + b2);

        let (two_q, two_p) = if m == Complex64::new(0.0, 0.0) && mm == Complex64::new(0.0, 0.0)
        {
            (0.0, 0.0)
        } else {
            let lower = mm.conj() * f2 * r.f2(-2.0 * ws - omega);
            let upper = m * r.f3(omega) * r.f3(2.0 * ws - omega);
            let wl = omega * (2.0 * ws + omega) / (wm * wm);
            let wu = omega * (omega - 2.0 * ws) / (wm * wm);
            ((lower + upper).re, (lower * wl + upper * wu).re)
        };

        let x2 = (omega / wm) * (omega / wm);
        let q = Components {
            thermal,
            photon_number,
            two_photon: two_q,
            vacuum_floor,
        };
        let p = Components {
            thermal: x2 * thermal,
            photon_number: x2 * self.conventions.momentum_photon_weight * photon_number,
            two_photon: two_p,
            vacuum_floor: x2 * vacuum_floor,
        };
        SpectrumPoint {
            omega,
            s_q: q.total(),
            s_p: p.total(),
            q,
            p,
            n,
            m,
        }
    }
}

/// Spectra at one frequency with the default conventions.
pub fn spectra_at(
    omega: f64,
    ss: &SteadyState,
    params: &SystemParams,
    src: &SqueezeSource,
) -> SpectrumPoint {
    SpectrumModel::new(ss, params, src, SpectrumConventions::default()).point(omega)
}

/// Linear frequency grid (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(omega_min: f64, omega_max: f64, points: usize) -> Result<Self, ModelError> {
        let g = GridSpec {
            omega_min,
            omega_max,
            points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.points < 2 {
            return Err(ModelError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                self.points
            )));
        }
        if !(self.omega_min.is_finite() && self.omega_max.is_finite()) {
            return Err(ModelError::InvalidGrid("bounds must be finite".into()));
        }
        if self.omega_min >= self.omega_max {
            return Err(ModelError::InvalidGrid(format!(
                "omega_min {} must be below omega_max {}",
                self.omega_min, self.omega_max
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points - 1;
        let span = self.omega_max - self.omega_min;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.omega_max
                } else {
                    self.omega_min + span * (i as f64 / n as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMetadata {
    pub params: SystemParams,
    pub steady_state: SteadyState,
    pub source: SqueezeSource,
    pub conventions: SpectrumConventions,
    pub stability: StabilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub grid: Vec<f64>,
    pub points: Vec<SpectrumPoint>,
    pub metadata: TableMetadata,
}

impl SpectrumTable {
    pub fn s_q(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s_q).collect()
    }

    pub fn s_p(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s_p).collect()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

pub fn spectrum_scan(
    grid: &GridSpec,
    ss: &SteadyState,
    params: &SystemParams,
    src: &SqueezeSource,
    conventions: SpectrumConventions,
) -> Result<SpectrumTable, ModelError> {
    grid.validate()?;
    let model = SpectrumModel::new(ss, params, src, conventions);
    let nodes = grid.nodes();
    let points: Vec<SpectrumPoint> = nodes.par_iter().map(|&w| model.point(w)).collect();
    Ok(SpectrumTable {
        grid: nodes,
        points,
        metadata: TableMetadata {
            params: *params,
            steady_state: ss.clone(),
            source: *src,
            conventions,
            stability: check_stability(&drift_matrix(ss, params)),
        },
    })
}
