//! Stationary correlation spectra of the noise inputs: thermal Brownian
//! forcing of the mirror and the (possibly squeezed) optical input field.
//!
//! A squeezed input is described by a photon-number spectrum N(ω) and a
//! two-photon correlation M(ω). Below threshold, a parametric oscillator of
//! cavity decay κ_p pumped with effective amplitude ε has output Lorentzians
//! of widths λ = κ_p/2 + ε and μ = κ_p/2 − ε around its carrier.
//!
//! Frequencies are in the frame rotating at the drive laser, so the squeezing
//! carrier sits at `carrier_offset` (ω_s − ω_c), normally ω_m.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::ModelError;
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Vacuum,
    /// Degenerate parametric oscillator: single-mode squeezed vacuum.
    Dpo,
    /// Non-degenerate parametric oscillator: two-mode squeezed vacuum with
    /// modes at carrier ± α.
    Ndpo,
    /// Frequency-independent N and M.
    Broadband,
}

/// Immutable description of the injected field, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezeSource {
    kind: SourceKind,
    kappa_p: f64,
    eps: f64,
    phi0: f64,
    alpha: f64,
    carrier_offset: f64,
    n_broadband: f64,
    m_broadband: f64,
    #[serde(skip)]
    lambda: f64,
    #[serde(skip)]
    mu: f64,
}

/// (λ, μ) = (κ_p/2 + ε, κ_p/2 − ε).
pub fn pump_rates(kappa_p: f64, eps: f64) -> Result<(f64, f64), ModelError> {
    if !(kappa_p.is_finite() && kappa_p > 0.0) {
        return Err(ModelError::InvalidParameter {
            field: "kappa_p",
            reason: "must be finite and > 0".into(),
        });
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(ModelError::InvalidParameter {
            field: "epsilon",
            reason: "must be finite and >= 0".into(),
        });
    }
    let half = 0.5 * kappa_p;
    if eps >= half {
        return Err(ModelError::AboveThreshold {
            eps,
            half_width: half,
        });
    }
    Ok((half + eps, half - eps))
}

/// Effective pump amplitude from the pump-to-threshold power ratio r:
/// ε = √r·κ_p/2.
pub fn epsilon_from_power_ratio(r: f64, kappa_p: f64) -> Result<f64, ModelError> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(ModelError::InvalidParameter {
            field: "power_ratio",
            reason: "must be finite and >= 0".into(),
        });
    }
    if r >= 1.0 {
        return Err(ModelError::PowerRatioAboveThreshold(r));
    }
    Ok(r.sqrt() * kappa_p / 2.0)
}

impl SqueezeSource {
    pub fn vacuum() -> Self {
        SqueezeSource {
            kind: SourceKind::Vacuum,
            kappa_p: 0.0,
            eps: 0.0,
            phi0: 0.0,
            alpha: 0.0,
            carrier_offset: 0.0,
            n_broadband: 0.0,
            m_broadband: 0.0,
            lambda: 0.0,
            mu: 0.0,
        }
    }

    pub fn dpo(kappa_p: f64, eps: f64, phi0: f64, carrier_offset: f64) -> Result<Self, ModelError> {
        Self::parametric(SourceKind::Dpo, kappa_p, eps, phi0, 0.0, carrier_offset)
    }

    pub fn ndpo(
        kappa_p: f64,
        eps: f64,
        phi0: f64,
        alpha: f64,
        carrier_offset: f64,
    ) -> Result<Self, ModelError> {
        if !alpha.is_finite() {
            return Err(ModelError::InvalidParameter {
                field: "alpha",
                reason: "must be finite".into(),
            });
        }
        Self::parametric(SourceKind::Ndpo, kappa_p, eps, phi0, alpha, carrier_offset)
    }

    fn parametric(
        kind: SourceKind,
        kappa_p: f64,
        eps: f64,
        phi0: f64,
        alpha: f64,
        carrier_offset: f64,
    ) -> Result<Self, ModelError> {
        let (lambda, mu) = pump_rates(kappa_p, eps)?;
        check_finite(phi0, "phi0")?;
        check_finite(carrier_offset, "carrier_offset")?;
        Ok(SqueezeSource {
            kind,
            kappa_p,
            eps,
            phi0,
            alpha,
            carrier_offset,
            n_broadband: 0.0,
            m_broadband: 0.0,
            lambda,
            mu,
        })
    }

    /// Flat spectrum N(ω) = n, M(ω) = m·e^{iφ₀}; requires |m| ≤ √(n(n+1)).
    pub fn broadband(n: f64, m: f64, phi0: f64) -> Result<Self, ModelError> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(ModelError::InvalidParameter {
                field: "n_broadband",
                reason: "must be finite and >= 0".into(),
            });
        }
        check_finite(m, "m_broadband")?;
        check_finite(phi0, "phi0")?;
        let bound = (n * (n + 1.0)).sqrt();
        if m.abs() > bound * (1.0 + 1e-12) {
            return Err(ModelError::InvalidParameter {
                field: "m_broadband",
                reason: format!("|m| = {} exceeds sqrt(n(n+1)) = {bound}", m.abs()),
            });
        }
        Ok(SqueezeSource {
            kind: SourceKind::Broadband,
            n_broadband: n,
            m_broadband: m,
            phi0,
            ..Self::vacuum()
        })
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }
    pub fn kappa_p(&self) -> f64 {
        self.kappa_p
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn phi0(&self) -> f64 {
        self.phi0
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn carrier_offset(&self) -> f64 {
        self.carrier_offset
    }
    pub fn n_broadband(&self) -> f64 {
        self.n_broadband
    }
    pub fn m_broadband(&self) -> f64 {
        self.m_broadband
    }
    /// (λ, μ); both zero for non-parametric kinds.
    pub fn rates(&self) -> (f64, f64) {
        (self.lambda, self.mu)
    }

    /// Frequencies around which N and M vary on the scale of μ and λ.
    pub fn centers(&self) -> Vec<f64> {
        let c = self.carrier_offset;
        match self.kind {
            SourceKind::Dpo => vec![c],
            SourceKind::Ndpo => vec![c - self.alpha, c, c + self.alpha],
            SourceKind::Vacuum | SourceKind::Broadband => vec![],
        }
    }

    /// True when M vanishes identically.
    pub fn is_phase_insensitive(&self) -> bool {
        match self.kind {
            SourceKind::Vacuum => true,
            SourceKind::Broadband => self.m_broadband == 0.0,
            SourceKind::Dpo | SourceKind::Ndpo => self.eps == 0.0,
        }
    }

    /// N(ω) and M(ω) at rotating-frame frequency ω.
    #[inline]
    pub fn spectrum(&self, omega: f64) -> (f64, Complex64) {
        let phase = || Complex64::from_polar(1.0, self.phi0);
        match self.kind {
            SourceKind::Vacuum => (0.0, Complex64::new(0.0, 0.0)),
            SourceKind::Broadband => (self.n_broadband, phase() * self.m_broadband),
            SourceKind::Dpo => {
                let x = omega - self.carrier_offset;
                let a = 1.0 / (x * x + self.mu * self.mu);
                let b = 1.0 / (x * x + self.lambda * self.lambda);
                let p = 0.25 * (self.lambda * self.lambda - self.mu * self.mu);
                (p * (a - b), phase() * (p * (a + b)))
            }
            SourceKind::Ndpo => {
                let x1 = omega - self.carrier_offset - self.alpha;
                let x2 = omega - self.carrier_offset + self.alpha;
                let (m2, l2) = (self.mu * self.mu, self.lambda * self.lambda);
                let a = 1.0 / (x1 * x1 + m2) + 1.0 / (x2 * x2 + m2);
                let b = 1.0 / (x1 * x1 + l2) + 1.0 / (x2 * x2 + l2);
                let p = 0.125 * (l2 - m2);
                (p * (a - b), phase() * (p * (a + b)))
            }
        }
    }
}

fn check_finite(x: f64, field: &'static str) -> Result<(), ModelError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            reason: "must be finite".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpectrumPoint {
    pub omega: f64,
    pub n: f64,
    pub m: Complex64,
}

pub fn squeeze_spectrum(src: &SqueezeSource, omega: f64) -> SqueezeSpectrumPoint {
    let (n, m) = src.spectrum(omega);
    SqueezeSpectrumPoint { omega, n, m }
}

/// γ_m(ω/ω_m)coth(ħω/2k_BT), the symmetrized Brownian forcing kernel.
pub fn thermal_kernel(omega: f64, params: &SystemParams) -> f64 {
    thermal_kernel_raw(omega, params.mech_damping, params.mech_freq, params.temperature)
}

#[inline]
pub(crate) fn thermal_kernel_raw(omega: f64, gamma_m: f64, omega_m: f64, temperature: f64) -> f64 {
    let scale = gamma_m / omega_m;
    if temperature == 0.0 {
        return scale * omega.abs();
    }
    let x = HBAR * omega / (2.0 * K_B * temperature);
    if x.abs() < 1e-6 {
        // ω·coth(x) = 2k_BT/ħ + ħω²/(6k_BT) + O(x⁴)
        scale * (2.0 * K_B * temperature / HBAR + HBAR * omega * omega / (6.0 * K_B * temperature))
    } else {
        scale * omega / x.tanh()
    }
}
