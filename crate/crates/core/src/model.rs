//! Physical parameters, derived couplings and the classical steady state of
//! a laser-driven cavity with one movable mirror.
//!
//! Rates and frequencies are angular (rad/s) throughout. The mechanical
//! quadratures `q`, `p` are dimensionless with `[q, p] = i`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR};
use crate::error::ModelError;

/// How the cavity-laser detuning is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Detuning {
    /// Bare detuning Δ₀ = ω₀ − ω_c (rad/s). The steady state then solves a
    /// cubic for the intracavity photon number.
    Bare(f64),
    /// Effective detuning Δ = Δ₀ − g₀q_s (rad/s), already including the
    /// radiation-pressure shift.
    Effective(f64),
}

impl Detuning {
    pub fn value(&self) -> f64 {
        match *self {
            Detuning::Bare(d) | Detuning::Effective(d) => d,
        }
    }
}

/// Raw physical inputs of the optomechanical cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Cavity length L (m).
    pub cavity_length: f64,
    /// Mirror mass m (kg).
    pub mirror_mass: f64,
    /// Mechanical angular frequency ω_m (rad/s).
    pub mech_freq: f64,
    /// Mechanical damping γ_m (rad/s).
    pub mech_damping: f64,
    /// Cavity amplitude decay κ (rad/s).
    pub cavity_decay: f64,
    /// Drive laser wavelength (m).
    pub laser_wavelength: f64,
    /// Drive laser power P (W).
    pub laser_power: f64,
    pub detuning: Detuning,
    /// Mirror bath temperature T (K).
    pub temperature: f64,
}

fn require(cond: bool, field: &'static str, reason: &str) -> Result<(), ModelError> {
    if cond {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            reason: reason.to_string(),
        })
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        require(pos(self.cavity_length), "cavity_length", "must be finite and > 0")?;
        require(pos(self.mirror_mass), "mirror_mass", "must be finite and > 0")?;
        require(pos(self.mech_freq), "mech_freq", "must be finite and > 0")?;
        require(nonneg(self.mech_damping), "mech_damping", "must be finite and >= 0")?;
        require(pos(self.cavity_decay), "cavity_decay", "must be finite and > 0")?;
        require(pos(self.laser_wavelength), "laser_wavelength", "must be finite and > 0")?;
        require(nonneg(self.laser_power), "laser_power", "must be finite and >= 0")?;
        require(nonneg(self.temperature), "temperature", "must be finite and >= 0")?;
        require(self.detuning.value().is_finite(), "detuning", "must be finite")?;
        Ok(())
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.laser_power = power;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_detuning(mut self, detuning: Detuning) -> Self {
        self.detuning = detuning;
        self
    }
}

/// Constants derived in closed form from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Single-photon coupling g₀ (rad/s).
    pub g0: f64,
    /// Drive amplitude ε_c (s⁻¹).
    pub eps_c: f64,
    /// Laser angular frequency ω_c = 2πc/λ (rad/s). Also stands in for the
    /// cavity resonance ω₀ in g₀; the two differ by Δ₀/ω_c ~ 1e-9.
    pub omega_c: f64,
    /// Mechanical quality factor ω_m/γ_m (infinite for γ_m = 0).
    pub quality: f64,
}

pub fn derive(params: &SystemParams) -> Result<DerivedParams, ModelError> {
    params.validate()?;
    let omega_c = 2.0 * PI * C / params.laser_wavelength;
    let zpf = (HBAR / (2.0 * params.mirror_mass * params.mech_freq)).sqrt();
    let g0 = omega_c / params.cavity_length * zpf;
    let eps_c = (2.0 * params.cavity_decay * params.laser_power / (HBAR * omega_c)).sqrt();
    let quality = if params.mech_damping > 0.0 {
        params.mech_freq / params.mech_damping
    } else {
        f64::INFINITY
    };
    Ok(DerivedParams {
        g0,
        eps_c,
        omega_c,
        quality,
    })
}

/// Which root of the bistability cubic to keep when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootSelection {
    #[default]
    Lowest,
    Highest,
}

/// All steady-state photon numbers found, and which one was kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchInfo {
    /// Intracavity photon numbers |a_s|², ascending.
    pub roots: Vec<f64>,
    pub selected: usize,
    pub selection: RootSelection,
    /// More than one physical root exists; the choice is not unique.
    pub bistable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// |a_s|², intracavity photon number.
    pub photon_number: f64,
    /// Dimensionless mirror displacement q_s = (g₀/ω_m)|a_s|².
    pub q_s: f64,
    /// Always zero.
    pub p_s: f64,
    /// Effective detuning Δ = Δ₀ − g₀q_s (rad/s).
    pub delta_eff: f64,
    /// Bare detuning Δ₀ (rad/s).
    pub delta_bare: f64,
    /// Linearized coupling g = √2·g₀|a_s| (rad/s); a_s is rotated onto the
    /// positive real axis.
    pub g_linear: f64,
    pub branch: BranchInfo,
    eps_c: f64,
    kappa: f64,
}

impl SteadyState {
    /// The un-rotated complex amplitude a_s = ε_c(κ − iΔ)/(Δ² + κ²).
    pub fn complex_amplitude(&self) -> Complex64 {
        let denom = self.delta_eff * self.delta_eff + self.kappa * self.kappa;
        Complex64::new(self.kappa, -self.delta_eff) * (self.eps_c / denom)
    }

    /// Copy of this state with a different linearized coupling; everything
    /// else is left untouched. Useful for decoupled limits.
    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g_linear = g;
        self
    }
}

pub fn solve_steady_state(
    params: &SystemParams,
    derived: &DerivedParams,
) -> Result<SteadyState, ModelError> {
    solve_steady_state_with(params, derived, RootSelection::default())
}

pub fn solve_steady_state_with(
    params: &SystemParams,
    derived: &DerivedParams,
    selection: RootSelection,
) -> Result<SteadyState, ModelError> {
    params.validate()?;
    let kappa = params.cavity_decay;
    let eps2 = derived.eps_c * derived.eps_c;
    // Radiation-pressure frequency shift per photon, g₀²/ω_m.
    let shift = derived.g0 * derived.g0 / params.mech_freq;

    let (roots, delta_bare) = match params.detuning {
        Detuning::Effective(delta) => {
            let u = eps2 / (delta * delta + kappa * kappa);
            (vec![u], delta + shift * u)
        }
        Detuning::Bare(delta0) => {
            // Work in v = shift·u (rad/s) to keep the cubic well scaled.
            let v_roots = cubic_shift_roots(delta0, kappa, shift * eps2);
            if v_roots.is_empty() {
                return Err(ModelError::NoSteadyState);
            }
            let u = if shift > 0.0 {
                v_roots.iter().map(|v| v / shift).collect()
            } else {
                vec![eps2 / (delta0 * delta0 + kappa * kappa)]
            };
            (u, delta0)
        }
    };

    let selected = match selection {
        RootSelection::Lowest => 0,
        RootSelection::Highest => roots.len() - 1,
    };
    let u = roots[selected];
    let q_s = derived.g0 / params.mech_freq * u;
    let delta_eff = delta_bare - derived.g0 * q_s;
    Ok(SteadyState {
        photon_number: u,
        q_s,
        p_s: 0.0,
        delta_eff,
        delta_bare,
        g_linear: SQRT_2 * derived.g0 * u.sqrt(),
        branch: BranchInfo {
            bistable: roots.len() > 1,
            roots,
            selected,
            selection,
        },
        eps_c: derived.eps_c,
        kappa,
    })
}

/// Non-negative real roots of h(v) = v[κ² + (Δ₀ − v)²] − c, ascending.
fn cubic_shift_roots(delta0: f64, kappa: f64, c: f64) -> Vec<f64> {
    let h = |v: f64| v * (kappa * kappa + (delta0 - v) * (delta0 - v)) - c;
    if c <= 0.0 {
        return vec![0.0];
    }
    // h(0) = −c < 0 and h is increasing except between the two critical
    // points of h', which exist only when Δ₀ > √3 κ.
    let disc = 4.0 * delta0 * delta0 - 12.0 * kappa * kappa;
    let mut knots = vec![0.0];
    if disc > 0.0 {
        let s = disc.sqrt();
        for v in [(4.0 * delta0 - s) / 6.0, (4.0 * delta0 + s) / 6.0] {
            if v > 0.0 {
                knots.push(v);
            }
        }
    }
    let mut hi = knots.last().copied().unwrap_or(0.0).max(kappa) + delta0.abs();
    while h(hi) <= 0.0 {
        hi *= 2.0;
    }
    knots.push(hi);

    let mut roots: Vec<f64> = Vec::with_capacity(3);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ha, hb) = (h(a), h(b));
        if ha == 0.0 {
            push_unique(&mut roots, a);
        } else if hb == 0.0 {
            push_unique(&mut roots, b);
        } else if ha.signum() != hb.signum() {
            push_unique(&mut roots, bisect(&h, a, b));
        }
    }
    roots
}

fn push_unique(roots: &mut Vec<f64>, r: f64) {
    if roots
        .last()
        .is_none_or(|&last| (r - last).abs() > 1e-12 * r.abs().max(1.0))
    {
        roots.push(r);
    }
}

fn bisect(h: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ha = h(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let hm = h(m);
        if hm == 0.0 {
            return m;
        }
        if hm.signum() == ha.signum() {
            a = m;
            ha = hm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Power at which the linearized coupling reaches g = κ/√2 at Δ = ω_m:
/// P_c = ħω_c(κ² + ω_m²)κ / (8g₀²).
pub fn critical_power(params: &SystemParams, derived: &DerivedParams) -> Result<f64, ModelError> {
    if derived.g0 == 0.0 {
        return Err(ModelError::ZeroCoupling);
    }
    let kappa = params.cavity_decay;
    let wm = params.mech_freq;
    Ok(HBAR * derived.omega_c * (kappa * kappa + wm * wm) * kappa / (8.0 * derived.g0 * derived.g0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRegime {
    /// Weak coupling, optomechanically induced transparency (P < P_c).
    OitWeak,
    /// Strong coupling, normal-mode splitting (P ≥ P_c).
    NmsStrong,
}

pub fn classify_regime(power: f64, critical: f64) -> CouplingRegime {
    if power < critical {
        CouplingRegime::OitWeak
    } else {
        CouplingRegime::NmsStrong
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::paper_system;

    #[test]
    fn paper_quality_factor() {
        let d = derive(&paper_system()).unwrap();
        assert!((d.quality - 6716.3).abs() < 0.5, "Q = {}", d.quality);
    }

    #[test]
    fn single_photon_coupling_matches_hand_value() {
        // ω_c = 2πc/1064 nm = 1.770 35e15 rad/s, sqrt(ħ/(2mω_m)) = 2.4723e-16 m,
        // g0 = ω_c/L · 2.4723e-16 = 17.5062 rad/s (evaluated by hand).
        let d = derive(&paper_system()).unwrap();
        assert!((d.g0 - 17.5062).abs() < 1e-3, "g0 = {}", d.g0);
    }

    #[test]
    fn zero_power_gives_zero_drive() {
        let d = derive(&paper_system().with_power(0.0)).unwrap();
        assert_eq!(d.eps_c, 0.0);
    }

    #[test]
    fn rejects_non_positive_fields() {
        let mut p = paper_system();
        p.mirror_mass = 0.0;
        match derive(&p) {
            Err(ModelError::InvalidParameter { field, .. }) => assert_eq!(field, "mirror_mass"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = paper_system();
        p.cavity_decay = -1.0;
        assert!(matches!(
            derive(&p),
            Err(ModelError::InvalidParameter { field: "cavity_decay", .. })
        ));
    }

    #[test]
    fn undriven_cavity_steady_state() {
        let p = paper_system().with_power(0.0).with_detuning(Detuning::Bare(1.0e6));
        let d = derive(&p).unwrap();
        let ss = solve_steady_state(&p, &d).unwrap();
        assert_eq!(ss.photon_number, 0.0);
        assert_eq!(ss.q_s, 0.0);
        assert_eq!(ss.p_s, 0.0);
        assert_eq!(ss.delta_eff, 1.0e6);
        assert_eq!(ss.g_linear, 0.0);
    }

    #[test]
    fn five_milliwatt_resonant_state() {
        let p = paper_system();
        let d = derive(&p).unwrap();
        let ss = solve_steady_state(&p, &d).unwrap();
        // Independent substitution: ε_c² = 2κP/(ħω_c), |a_s|² = ε_c²/(κ² + ω_m²).
        assert!((ss.photon_number / 1.9436e9 - 1.0).abs() < 1e-3, "{}", ss.photon_number);
        assert!((ss.g_linear / 1.0915e6 - 1.0).abs() < 1e-3, "{}", ss.g_linear);
        assert!(ss.g_linear > p.cavity_decay / SQRT_2);
    }

    #[test]
    fn effective_to_bare_round_trip() {
        let p = paper_system();
        let d = derive(&p).unwrap();
        let eff = solve_steady_state(&p, &d).unwrap();
        let bare_params = p.with_detuning(Detuning::Bare(eff.delta_bare));
        let bare = solve_steady_state(&bare_params, &d).unwrap();
        assert!((bare.photon_number / eff.photon_number - 1.0).abs() < 1e-10);
        assert!((bare.delta_eff / eff.delta_eff - 1.0).abs() < 1e-10);
        assert!((bare.g_linear / eff.g_linear - 1.0).abs() < 1e-10);
    }

    #[test]
    fn steady_state_satisfies_langevin_equations() {
        for (power, delta0) in [(5e-3, 6.0e6), (20e-3, 5.0e6), (1e-4, -3.0e6), (50e-3, 7.0e6)] {
            let p = paper_system().with_power(power).with_detuning(Detuning::Bare(delta0));
            let d = derive(&p).unwrap();
            let ss = solve_steady_state(&p, &d).unwrap();
            let a = ss.complex_amplitude();
            let wm = p.mech_freq;
            // q̇ = ω_m p, ṗ = −ω_m q + g₀|a|² − γ_m p, ȧ = −iΔ₀a + ig₀qa + ε_c − κa
            let r_p = -wm * ss.q_s + d.g0 * a.norm_sqr() - p.mech_damping * ss.p_s;
            let i = Complex64::i();
            let r_a = -i * delta0 * a + i * d.g0 * ss.q_s * a + d.eps_c - p.cavity_decay * a;
            assert!(r_p.abs() <= 1e-9 * (wm * ss.q_s).abs().max(1e-300));
            assert!(r_a.norm() <= 1e-9 * d.eps_c);
            assert!((a.norm_sqr() / ss.photon_number - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bistable_region_reports_all_roots() {
        // Δ₀ = 8κ: the local extrema of v[κ² + (Δ₀ − v)²] sit at ≈7.97κ³ and
        // ≈78.6κ³ (v = shift·|a_s|²); 70 mW puts g₀²ε_c²/ω_m ≈ 20κ³ between them.
        let p = paper_system()
            .with_power(0.07)
            .with_detuning(Detuning::Bare(8.0 * 2.0 * PI * 215e3));
        let d = derive(&p).unwrap();
        let lo = solve_steady_state_with(&p, &d, RootSelection::Lowest).unwrap();
        let hi = solve_steady_state_with(&p, &d, RootSelection::Highest).unwrap();
        assert!(lo.branch.bistable);
        assert_eq!(lo.branch.roots.len(), 3);
        assert!(lo.branch.roots.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lo.photon_number, lo.branch.roots[0]);
        assert_eq!(hi.photon_number, hi.branch.roots[2]);
    }

    #[test]
    fn critical_power_scaling() {
        let p = paper_system();
        let d = derive(&p).unwrap();
        let pc = critical_power(&p, &d).unwrap();
        let mut d2 = d;
        d2.g0 *= 2.0;
        let pc2 = critical_power(&p, &d2).unwrap();
        assert!((pc / pc2 - 4.0).abs() < 1e-12);
        d2.g0 = 0.0;
        assert_eq!(critical_power(&p, &d2), Err(ModelError::ZeroCoupling));
    }

    #[test]
    fn coupling_at_critical_power_is_threshold() {
        let p = paper_system();
        let d = derive(&p).unwrap();
        let pc = critical_power(&p, &d).unwrap();
        let at = p.with_power(pc).with_detuning(Detuning::Effective(p.mech_freq));
        let ss = solve_steady_state(&at, &derive(&at).unwrap()).unwrap();
        assert!((ss.g_linear / p.cavity_decay - 1.0 / SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn regime_classification() {
        assert_eq!(classify_regime(1e-3, 3.83e-3), CouplingRegime::OitWeak);
        assert_eq!(classify_regime(5e-3, 3.83e-3), CouplingRegime::NmsStrong);
        assert_eq!(classify_regime(3.83e-3, 3.83e-3), CouplingRegime::NmsStrong);
    }

    proptest::proptest! {
        #[test]
        fn regime_is_scale_invariant(p in 1e-6f64..1.0, pc in 1e-6f64..1.0, c in 1e-3f64..1e3) {
            proptest::prop_assert_eq!(classify_regime(c * p, c * pc), classify_regime(p, pc));
        }

        #[test]
        fn displacement_is_non_negative(power in 0.0f64..0.1, delta0 in -2e7f64..2e7) {
            let p = paper_system().with_power(power).with_detuning(Detuning::Bare(delta0));
            let d = derive(&p).unwrap();
            let ss = solve_steady_state(&p, &d).unwrap();
            proptest::prop_assert!(ss.q_s >= 0.0);
            for &u in &ss.branch.roots {
                let dd = delta0 - d.g0 * d.g0 / p.mech_freq * u;
                let lhs = u * (p.cavity_decay.powi(2) + dd * dd);
                let rhs = d.eps_c * d.eps_c;
                proptest::prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300));
            }
        }
    }
}
