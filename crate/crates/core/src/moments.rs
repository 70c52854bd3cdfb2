//! Mean-square quadrature fluctuations ⟨δq²⟩ = ∫ S_q dω/2π, ⟨δp²⟩ likewise.
//!
//! The thermal part of S_p falls off only as 1/ω, so ⟨δp²⟩ grows
//! logarithmically with the cutoff. Integrals therefore run over a declared
//! window [−Ω, Ω], and every report carries Ω together with the change a
//! doubling to 2Ω would make.

use serde::{Deserialize, Serialize};

use crate::error::MomentError;
use crate::features::Quadrature;
use crate::model::{SteadyState, SystemParams};
use crate::noise::SqueezeSource;
use crate::presets;
use crate::quadrature::{integrate, seeded_edges, QuadResult};
use crate::spectra::{SpectrumConventions, SpectrumModel};
use crate::stability::{check_stability, drift_matrix, StabilityReport};

const MAX_PANELS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    /// Integration half-window Ω (rad/s).
    pub omega_max: f64,
    pub rel_tol: f64,
}

impl CutoffSpec {
    /// Ω = 20·ω_m, relative tolerance 1e-6.
    pub fn default_for(params: &SystemParams) -> Self {
        CutoffSpec {
            omega_max: presets::OMEGA_MAX_OVER_OMEGA_M * params.mech_freq,
            rel_tol: presets::REL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceDiagnostics {
    /// Relative error estimate of the quadrature.
    pub quad_error: f64,
    pub evaluations: usize,
    /// Relative change of the variance when Ω is doubled.
    pub doubling_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub last_doubling_delta_q: f64,
    pub last_doubling_delta_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub var_q: f64,
    pub var_p: f64,
    pub uncertainty_product: f64,
    pub squeezed_q: bool,
    pub squeezed_p: bool,
    /// Ω (rad/s).
    pub omega_max: f64,
    pub convergence: Convergence,
    /// Larger of the two relative quadrature error estimates.
    pub quadrature_error_estimate: f64,
    pub stability: StabilityReport,
}

/// Frequencies (≥ 0) and widths of every resonance the integrand can have.
fn resonances(model: &SpectrumModel, ss: &SteadyState, params: &SystemParams) -> Vec<(f64, f64)> {
    let r = model.rates();
    let src = model.source();
    let ws = src.carrier_offset();
    let mut poles: Vec<(f64, f64)> = drift_matrix(ss, params)
        .eigenvalues()
        .iter()
        .map(|z| (z.im.abs(), z.re.abs()))
        .collect();
    poles.push((r.omega_m, r.gamma_m));
    poles.push((r.delta.abs(), r.kappa));
    let mut out = poles.clone();
    // Two-photon terms evaluate F₂, F₃ at 2ω̃_s ± ω.
    for &(c, w) in &poles {
        out.push(((2.0 * ws - c).abs(), w));
        out.push(((2.0 * ws + c).abs(), w));
    }
    let (lambda, mu) = src.rates();
    for c in src.centers() {
        out.push((c.abs(), mu));
        out.push((c.abs(), lambda));
    }
    out
}

fn integrate_half(
    f: &(impl Fn(f64) -> f64 + Sync),
    lo: f64,
    hi: f64,
    features: &[(f64, f64)],
    rel_tol: f64,
) -> QuadResult {
    let edges = seeded_edges(lo, hi, features);
    integrate(f, &edges, rel_tol, 0.0, MAX_PANELS)
}

/// ⟨δq²⟩ or ⟨δp²⟩ over [−Ω, Ω].
pub fn variance(
    which: Quadrature,
    ss: &SteadyState,
    params: &SystemParams,
    src: &SqueezeSource,
    cutoff: &CutoffSpec,
    conventions: SpectrumConventions,
) -> Result<(f64, VarianceDiagnostics), MomentError> {
    let stability = check_stability(&drift_matrix(ss, params));
    if !stability.stable {
        return Err(MomentError::Unstable(Box::new(stability)));
    }
    variance_unchecked(which, ss, params, src, cutoff, conventions)
}

fn variance_unchecked(
    which: Quadrature,
    ss: &SteadyState,
    params: &SystemParams,
    src: &SqueezeSource,
    cutoff: &CutoffSpec,
    conventions: SpectrumConventions,
) -> Result<(f64, VarianceDiagnostics), MomentError> {
    if !(cutoff.omega_max.is_finite() && cutoff.omega_max > 0.0) {
        return Err(crate::error::ModelError::InvalidParameter {
            field: "omega_max",
            reason: "must be finite and > 0".into(),
        }
        .into());
    }
    if !(cutoff.rel_tol.is_finite() && cutoff.rel_tol > 0.0) {
        return Err(crate::error::ModelError::InvalidParameter {
            field: "rel_tol",
            reason: "must be finite and > 0".into(),
        }
        .into());
    }
    let model = SpectrumModel::new(ss, params, src, conventions);
    let features = resonances(&model, ss, params);
    let f = |w: f64| match which {
        Quadrature::SQ => model.point(w).s_q,
        Quadrature::SP => model.point(w).s_p,
    };
    // The spectra are even in ω, so ∫_{−Ω}^{Ω} = 2∫_0^Ω.
    let omega = cutoff.omega_max;
    let main = integrate_half(&f, 0.0, omega, &features, cutoff.rel_tol);
    if !main.converged {
        return Err(MomentError::NonConvergence {
            achieved: main.rel_error(),
            requested: cutoff.rel_tol,
        });
    }
    let tail = integrate_half(&f, omega, 2.0 * omega, &features, cutoff.rel_tol);
    let value = main.value / std::f64::consts::PI;
    let extra = tail.value / std::f64::consts::PI;
    Ok((
        value,
        VarianceDiagnostics {
            quad_error: main.rel_error(),
            evaluations: main.evaluations + tail.evaluations,
            doubling_delta: extra / value,
        },
    ))
}

pub fn squeezing_report(
    ss: &SteadyState,
    params: &SystemParams,
    src: &SqueezeSource,
    cutoff: &CutoffSpec,
    conventions: SpectrumConventions,
) -> Result<MomentReport, MomentError> {
    let stability = check_stability(&drift_matrix(ss, params));
    if !stability.stable {
        return Err(MomentError::Unstable(Box::new(stability)));
    }
    let (var_q, dq) = variance_unchecked(Quadrature::SQ, ss, params, src, cutoff, conventions)?;
    let (var_p, dp) = variance_unchecked(Quadrature::SP, ss, params, src, cutoff, conventions)?;
    Ok(MomentReport {
        var_q,
        var_p,
        uncertainty_product: var_q * var_p,
        squeezed_q: var_q < 0.5,
        squeezed_p: var_p < 0.5,
        omega_max: cutoff.omega_max,
        convergence: Convergence {
            last_doubling_delta_q: dq.doubling_delta,
            last_doubling_delta_p: dp.doubling_delta,
        },
        quadrature_error_estimate: dq.quad_error.max(dp.quad_error),
        stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive, solve_steady_state};
    use crate::presets::paper_system;
    use crate::spectra::spectra_at;
    use crate::constants::{HBAR, K_B};

    fn setup(p: &SystemParams) -> SteadyState {
        solve_steady_state(p, &derive(p).unwrap()).unwrap()
    }

    #[test]
    fn ground_state_limit() {
        let mut p = paper_system().with_temperature(0.0);
        p.mech_damping = 1e-4 * p.mech_freq;
        let ss = setup(&p).with_coupling(0.0);
        // A wider window so the 1/ω tail of S_p is small at γ_m/ω_m = 1e-4.
        let cut = CutoffSpec {
            omega_max: 20.0 * p.mech_freq,
            rel_tol: 1e-8,
        };
        let r = squeezing_report(&ss, &p, &SqueezeSource::vacuum(), &cut, Default::default()).unwrap();
        assert!((r.var_q - 0.5).abs() < 0.005, "{}", r.var_q);
        assert!((r.var_p - 0.5).abs() < 0.005, "{}", r.var_p);
    }

    #[test]
    fn thermal_state_is_not_squeezed() {
        let p = paper_system();
        let ss = setup(&p);
        let r = squeezing_report(&ss, &p, &SqueezeSource::vacuum(), &CutoffSpec::default_for(&p), Default::default())
            .unwrap();
        assert!(!r.squeezed_q && !r.squeezed_p);
        // Red-detuned drive cools the mirror well below the bath occupation
        // (~2.2e3 quanta at 100 mK) but never below the vacuum.
        let n_th = 1.0 / ((HBAR * p.mech_freq / (K_B * p.temperature)).exp() - 1.0);
        assert!(r.var_q > 1.0 && r.var_q < n_th + 0.5, "{}", r.var_q);
        assert!(r.uncertainty_product >= 0.25);
        assert!(r.quadrature_error_estimate <= 1e-6);
        assert_eq!(r.omega_max, 20.0 * p.mech_freq);
    }

    #[test]
    fn displacement_converges_under_doubling() {
        let p = paper_system();
        let ss = setup(&p);
        let (v, d) = variance(
            Quadrature::SQ,
            &ss,
            &p,
            &SqueezeSource::vacuum(),
            &CutoffSpec::default_for(&p),
            Default::default(),
        )
        .unwrap();
        assert!(v > 0.0);
        assert!(d.doubling_delta >= 0.0 && d.doubling_delta < 1e-3, "{}", d.doubling_delta);
    }

    #[test]
    fn trapezoid_oracle_agrees() {
        let p = paper_system();
        let ss = setup(&p);
        let src = SqueezeSource::dpo(0.1 * p.cavity_decay, 0.04 * p.cavity_decay, 0.0, p.mech_freq).unwrap();
        let cut = CutoffSpec::default_for(&p);
        let (v, _) = variance(Quadrature::SQ, &ss, &p, &src, &cut, Default::default()).unwrap();
        let n = 100_000;
        let h = 2.0 * cut.omega_max / (n - 1) as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let w = -cut.omega_max + h * i as f64;
            let s = spectra_at(w, &ss, &p, &src).s_q;
            sum += if i == 0 || i == n - 1 { 0.5 * s } else { s };
        }
        let trap = sum * h / (2.0 * std::f64::consts::PI);
        assert!((trap / v - 1.0).abs() < 0.005, "trap {trap} adaptive {v}");
    }

    #[test]
    fn variance_grows_with_cutoff() {
        let p = paper_system();
        let ss = setup(&p);
        let mut last = (0.0, 0.0);
        for x in [2.0, 5.0, 10.0, 20.0, 40.0] {
            let cut = CutoffSpec {
                omega_max: x * p.mech_freq,
                rel_tol: 1e-8,
            };
            let r = squeezing_report(&ss, &p, &SqueezeSource::vacuum(), &cut, Default::default()).unwrap();
            assert!(r.var_q >= last.0 && r.var_p >= last.1);
            last = (r.var_q, r.var_p);
        }
    }

    #[test]
    fn unstable_system_is_refused() {
        let p = paper_system().with_detuning(crate::model::Detuning::Effective(-paper_system().mech_freq));
        let ss = setup(&p);
        let err = squeezing_report(&ss, &p, &SqueezeSource::vacuum(), &CutoffSpec::default_for(&p), Default::default())
            .unwrap_err();
        match err {
            MomentError::Unstable(r) => assert!(!r.stable && r.max_real_part() >= 0.0),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_cutoff_is_rejected() {
        let p = paper_system();
        let ss = setup(&p);
        let cut = CutoffSpec {
            omega_max: -1.0,
            rel_tol: 1e-6,
        };
        assert!(variance(Quadrature::SQ, &ss, &p, &SqueezeSource::vacuum(), &cut, Default::default()).is_err());
    }
}
