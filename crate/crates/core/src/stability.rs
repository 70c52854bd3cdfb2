//! Drift matrix of the linearized fluctuation dynamics and its stability.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{SteadyState, SystemParams};

/// 4×4 drift matrix over (δq, δp, δx, δy), entries in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Matrix4<f64>);

impl DriftMatrix {
    pub fn from_rates(omega_m: f64, gamma_m: f64, kappa: f64, delta: f64, g: f64) -> Self {
        #[rustfmt::skip]
        let m = Matrix4::new(
            0.0,      omega_m,  0.0,    0.0,
            -omega_m, -gamma_m, g,      0.0,
            0.0,      0.0,      -kappa, delta,
            g,        0.0,      -delta, -kappa,
        );
        DriftMatrix(m)
    }

    pub fn entries(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> [Complex64; 4] {
        let ev = self.0.complex_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        out
    }

    /// Coefficients of det(sI − M), highest power first (leading 1).
    pub fn characteristic_polynomial(&self) -> [f64; 5] {
        // Faddeev-LeVerrier.
        let a = self.0;
        let mut coeffs = [0.0; 5];
        coeffs[0] = 1.0;
        let mut mk = Matrix4::<f64>::zeros();
        for k in 1..=4 {
            mk = a * mk + Matrix4::identity() * coeffs[k - 1];
            coeffs[k] = -(a * mk).trace() / k as f64;
        }
        coeffs
    }
}

pub fn drift_matrix(ss: &SteadyState, params: &SystemParams) -> DriftMatrix {
    DriftMatrix::from_rates(
        params.mech_freq,
        params.mech_damping,
        params.cavity_decay,
        ss.delta_eff,
        ss.g_linear,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// All eigenvalues have strictly negative real part.
    pub stable: bool,
    /// Real parts of the eigenvalues, ascending (rad/s).
    pub eigen_real_parts: [f64; 4],
    /// Imaginary parts, paired with `eigen_real_parts` (rad/s).
    pub eigen_imag_parts: [f64; 4],
    /// Verdict of the Routh-Hurwitz test on the characteristic polynomial.
    pub routh_hurwitz_stable: bool,
}

impl StabilityReport {
    pub fn max_real_part(&self) -> f64 {
        self.eigen_real_parts
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn check_stability(dm: &DriftMatrix) -> StabilityReport {
    let ev = dm.eigenvalues();
    let re = ev.map(|z| z.re);
    let im = ev.map(|z| z.im);
    StabilityReport {
        stable: re.iter().all(|&r| r < 0.0),
        eigen_real_parts: re,
        eigen_imag_parts: im,
        routh_hurwitz_stable: routh_hurwitz(&dm.characteristic_polynomial()),
    }
}

/// Strict Hurwitz test: true iff every root of the polynomial (coefficients
/// highest power first, leading coefficient positive) has negative real part.
pub fn routh_hurwitz(coeffs: &[f64]) -> bool {
    let n = coeffs.len();
    if n == 0 || coeffs[0] <= 0.0 {
        return false;
    }
    if coeffs.iter().any(|&c| c <= 0.0) {
        return false;
    }
    if n <= 2 {
        return true;
    }
    let mut upper: Vec<f64> = coeffs.iter().step_by(2).copied().collect();
    let mut lower: Vec<f64> = coeffs.iter().skip(1).step_by(2).copied().collect();
    // Each row of the Routh array is produced from the two above it; the
    // first column must stay strictly positive.
    for _ in 0..n - 2 {
        let pivot = lower[0];
        if pivot <= 0.0 {
            return false;
        }
        let next: Vec<f64> = (0..upper.len().saturating_sub(1))
            .map(|j| {
                let b = lower.get(j + 1).copied().unwrap_or(0.0);
                (pivot * upper[j + 1] - upper[0] * b) / pivot
            })
            .collect();
        if next.is_empty() {
            break;
        }
        upper = std::mem::replace(&mut lower, next);
    }
    lower.first().is_some_and(|&v| v > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive, solve_steady_state};
    use crate::presets::paper_system;
    use rand::{Rng, SeedableRng};

    #[test]
    fn decoupled_matrix_is_block_diagonal() {
        let dm = DriftMatrix::from_rates(5.0, 0.1, 2.0, 3.0, 0.0);
        let m = dm.entries();
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (2, 1), (3, 0), (3, 1)] {
            assert_eq!(m[(i, j)], 0.0);
        }
    }

    #[test]
    fn mechanical_entries_fixed() {
        let p = paper_system();
        let ss = solve_steady_state(&p, &derive(&p).unwrap()).unwrap();
        let m = drift_matrix(&ss, &p);
        assert_eq!(m.0[(0, 1)], p.mech_freq);
        assert_eq!(m.0[(1, 0)], -p.mech_freq);
        assert_eq!(m.0[(1, 2)], ss.g_linear);
        assert_eq!(m.0[(3, 0)], ss.g_linear);
        assert_eq!(m.0[(2, 3)], ss.delta_eff);
        assert_eq!(m.0[(3, 2)], -ss.delta_eff);
    }

    #[test]
    fn decoupled_damped_oscillators_are_stable() {
        let (wm, gm, k) = (2.0, 0.2, 0.7);
        let r = check_stability(&DriftMatrix::from_rates(wm, gm, k, 1.3, 0.0));
        assert!(r.stable && r.routh_hurwitz_stable);
        let mut re = r.eigen_real_parts;
        re.sort_by(f64::total_cmp);
        for (got, want) in re.iter().zip([-k, -k, -gm / 2.0, -gm / 2.0]) {
            assert!((got - want).abs() < 1e-12, "{re:?}");
        }
    }

    #[test]
    fn paper_point_is_stable() {
        let p = paper_system();
        let ss = solve_steady_state(&p, &derive(&p).unwrap()).unwrap();
        let r = check_stability(&drift_matrix(&ss, &p));
        assert!(r.stable);
        assert!(r.routh_hurwitz_stable);
        assert!(r.max_real_part() < 0.0);
    }

    #[test]
    fn undamped_limit_is_not_stable() {
        let r = check_stability(&DriftMatrix::from_rates(1.0, 0.0, 0.0, 0.5, 0.0));
        assert!(!r.stable);
        assert!(!r.routh_hurwitz_stable);
    }

    #[test]
    fn characteristic_polynomial_of_diagonal_blocks() {
        // (s² + γs + ω²)((s + κ)² + Δ²) with ω=2, γ=0.5, κ=1, Δ=3
        let c = DriftMatrix::from_rates(2.0, 0.5, 1.0, 3.0, 0.0).characteristic_polynomial();
        let want = [1.0, 2.5, 15.0, 13.0, 40.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn routh_hurwitz_small_cases() {
        assert!(routh_hurwitz(&[1.0, 3.0, 3.0, 1.0])); // (s+1)³
        assert!(!routh_hurwitz(&[1.0, 1.0, 1.0, 1.0])); // roots ±i
        assert!(!routh_hurwitz(&[1.0, -1.0, 2.0]));
        assert!(routh_hurwitz(&[1.0, 2.0])); // s + 2
    }

    #[test]
    fn routh_hurwitz_agrees_with_eigenvalues_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut disagreements = 0;
        let mut unstable = 0;
        for _ in 0..2000 {
            let wm = rng.gen_range(0.1..10.0);
            let gm = rng.gen_range(0.0..1.0);
            let k = rng.gen_range(0.01..5.0);
            let d = rng.gen_range(-5.0..5.0);
            let g = rng.gen_range(0.0..5.0);
            let r = check_stability(&DriftMatrix::from_rates(wm, gm, k, d, g));
            if !r.stable {
                unstable += 1;
            }
            // Skip draws sitting on the boundary to within roundoff.
            if r.max_real_part().abs() < 1e-9 {
                continue;
            }
            if r.stable != r.routh_hurwitz_stable {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
        assert!(unstable > 100, "draws should cover both verdicts");
    }
}
