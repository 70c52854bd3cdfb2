//! Frequency-domain transfer functions from the noise inputs to the mirror
//! quadratures.
//!
//! With `f(t) = (1/2π)∫dω e^{−iωt} f(ω)` the linearized dynamics give
//!
//! ```text
//! δq(ω) = F₁(ω)ξ(ω) + F₂(ω)δa†_in(−ω) + F₃(ω)δa_in(ω)
//! δp(ω) = E₁(ω)ξ(ω) + E₂(ω)δa†_in(−ω) + E₃(ω)δa_in(ω)
//! ```
//!
//! with `E_l(ω) = −i(ω/ω_m)F_l(ω)` and the common denominator
//! `d(ω) = [Δ² + (κ − iω)²](ω_m² − ω² − iωγ_m) − g²ω_mΔ`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{SteadyState, SystemParams};

/// Prefactor convention for the optical input noise in F₂ and F₃.
///
/// The quadrature noise enters the cavity as √(2κ)·a_in, and the √2 cancels
/// against the quadrature normalisation, leaving √κ in F₂. `ExtraSqrt2` keeps
/// the uncancelled factor and doubles every radiation-pressure term in the
/// spectra; it exists only for auditing the convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputCoupling {
    #[default]
    SqrtKappa,
    ExtraSqrt2,
}

impl InputCoupling {
    pub const fn factor(self) -> f64 {
        match self {
            InputCoupling::SqrtKappa => 1.0,
            InputCoupling::ExtraSqrt2 => SQRT_2,
        }
    }
}

/// Convention used by the library unless a caller overrides it.
pub const INPUT_COUPLING: InputCoupling = InputCoupling::SqrtKappa;

/// The real rates that fix the linear response at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub kappa: f64,
    pub delta: f64,
    pub g: f64,
    pub input_coupling: InputCoupling,
}

impl Rates {
    pub fn new(ss: &SteadyState, params: &SystemParams) -> Self {
        Rates {
            omega_m: params.mech_freq,
            gamma_m: params.mech_damping,
            kappa: params.cavity_decay,
            delta: ss.delta_eff,
            g: ss.g_linear,
            input_coupling: INPUT_COUPLING,
        }
    }

    pub fn with_input_coupling(mut self, c: InputCoupling) -> Self {
        self.input_coupling = c;
        self
    }

    /// Δ² + (κ − iω)².
    #[inline]
    fn optical(&self, omega: f64) -> Complex64 {
        let z = Complex64::new(self.kappa, -omega);
        z * z + self.delta * self.delta
    }

    #[inline]
    pub fn denominator(&self, omega: f64) -> Complex64 {
        let mech = Complex64::new(
            self.omega_m * self.omega_m - omega * omega,
            -omega * self.gamma_m,
        );
        self.optical(omega) * mech - self.g * self.g * self.omega_m * self.delta
    }

    #[inline]
    pub fn f1(&self, omega: f64) -> Complex64 {
        self.optical(omega) * self.omega_m / self.denominator(omega)
    }

    #[inline]
    pub fn f2(&self, omega: f64) -> Complex64 {
        let pref = self.g * self.omega_m * self.kappa.sqrt() * self.input_coupling.factor();
        Complex64::new(self.kappa, self.delta - omega) * pref / self.denominator(omega)
    }

    #[inline]
    pub fn f3(&self, omega: f64) -> Complex64 {
        self.f2(-omega).conj()
    }

    pub fn response_set(&self, omega: f64) -> ResponseSet {
        let d = self.denominator(omega);
        let f1 = self.f1(omega);
        let f2 = self.f2(omega);
        let f3 = self.f3(omega);
        let e = Complex64::new(0.0, -omega / self.omega_m);
        ResponseSet {
            omega,
            f1,
            f2,
            f3,
            e1: e * f1,
            e2: e * f2,
            e3: e * f3,
            d,
        }
    }
}

/// All transfer functions at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseSet {
    pub omega: f64,
    pub f1: Complex64,
    pub f2: Complex64,
    pub f3: Complex64,
    pub e1: Complex64,
    pub e2: Complex64,
    pub e3: Complex64,
    pub d: Complex64,
}

pub fn denominator(omega: f64, ss: &SteadyState, params: &SystemParams) -> Complex64 {
    Rates::new(ss, params).denominator(omega)
}

pub fn response_set(omega: f64, ss: &SteadyState, params: &SystemParams) -> ResponseSet {
    Rates::new(ss, params).response_set(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive, solve_steady_state};
    use crate::presets::paper_system;
    use proptest::prelude::*;

    fn paper_rates() -> Rates {
        let p = paper_system();
        let ss = solve_steady_state(&p, &derive(&p).unwrap()).unwrap();
        Rates::new(&ss, &p)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn denominator_at_dc() {
        let r = paper_rates();
        let want = (r.delta.powi(2) + r.kappa.powi(2)) * r.omega_m.powi(2)
            - r.g * r.g * r.omega_m * r.delta;
        assert!(rel(r.denominator(0.0), Complex64::new(want, 0.0)) < 1e-14);
    }

    #[test]
    fn decoupled_denominator_on_resonance() {
        let r = Rates { g: 0.0, ..paper_rates() };
        let w = r.omega_m;
        let want = (Complex64::new(r.kappa, -w).powi(2) + r.delta * r.delta)
            * Complex64::new(0.0, -w * r.gamma_m);
        assert!(rel(r.denominator(w), want) < 1e-14);
    }

    #[test]
    fn denominator_on_resonance_at_paper_point() {
        // Hand substitution with Δ = ω_m, ω = ω_m:
        // Δ² + (κ − iω_m)² = κ² − 2iκω_m, times (−iω_mγ_m), minus g²ω_m².
        let r = paper_rates();
        let (k, w, gm, g) = (r.kappa, r.omega_m, r.gamma_m, r.g);
        let want = Complex64::new(k * k, -2.0 * k * w) * Complex64::new(0.0, -w * gm) - g * g * w * w;
        let got = r.denominator(w);
        assert!(got.norm() > 0.0);
        assert!(rel(got, want) < 1e-12);
    }

    #[test]
    fn decoupled_limit_is_bare_susceptibility() {
        let r = Rates { g: 0.0, ..paper_rates() };
        for w in [0.3, 0.99, 1.0, 1.7].map(|x| x * r.omega_m) {
            let s = r.response_set(w);
            assert_eq!(s.f2, Complex64::new(0.0, 0.0));
            assert_eq!(s.f3, Complex64::new(0.0, 0.0));
            let bare = r.omega_m / Complex64::new(r.omega_m.powi(2) - w * w, -w * r.gamma_m);
            assert!(rel(s.f1, bare) < 1e-13);
        }
    }

    #[test]
    fn momentum_response_vanishes_at_dc() {
        let s = paper_rates().response_set(0.0);
        assert_eq!(s.e1.norm(), 0.0);
        assert_eq!(s.e2.norm(), 0.0);
        assert_eq!(s.e3.norm(), 0.0);
    }

    #[test]
    fn extra_sqrt2_doubles_radiation_pressure_power() {
        let r = paper_rates();
        let alt = r.with_input_coupling(InputCoupling::ExtraSqrt2);
        let w = 1.02 * r.omega_m;
        assert!((alt.f2(w).norm_sqr() / r.f2(w).norm_sqr() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn high_frequency_decay() {
        let r = paper_rates();
        let scale = 10.0 * r.omega_m.max(r.kappa).max(r.delta.abs());
        // |F₁| → ω_m/ω² far above every rate.
        let c = r.f1(scale).norm() * scale * scale;
        assert!((c / r.omega_m - 1.0).abs() < 0.05);
        for x in [1.0, 2.0, 5.0, 20.0, 100.0] {
            let w = x * scale;
            assert!(r.f1(w).norm() <= 1.05 * c / (w * w));
        }
    }

    #[test]
    fn denominator_has_no_real_zero_when_stable() {
        let r = paper_rates();
        let min = (0..200_001)
            .map(|i| (i as f64 / 50_000.0 - 2.0) * r.omega_m)
            .map(|w| r.denominator(w).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn transfer_identities(x in -5.0f64..5.0) {
            let r = paper_rates();
            let w = x * r.omega_m;
            let s = r.response_set(w);
            prop_assert!(rel(s.f3, r.f2(-w).conj()) <= 1e-12);
            let e = Complex64::new(0.0, -w / r.omega_m);
            prop_assert!(rel(s.e1, e * s.f1) <= 1e-12);
            prop_assert!(rel(s.e2, e * s.f2) <= 1e-12);
            prop_assert!(rel(s.e3, e * s.f3) <= 1e-12);
            prop_assert!(rel(r.f1(-w), s.f1.conj()) <= 1e-12);
            prop_assert!(rel(r.denominator(-w), s.d.conj()) <= 1e-12);
        }
    }
}
