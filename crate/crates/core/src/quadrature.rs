//! Globally adaptive Gauss-Kronrod (7/15) quadrature over a set of initial
//! panels.
//!
//! The integrands here carry resonances far narrower than the integration
//! range, so callers seed the panel edges near every known pole; the
//! adaptive loop then bisects whichever panel has the largest error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights on XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub panels: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            self.abs_error
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[edges[0], edges.last()]`, starting from the panels
/// between consecutive `edges` (which must be sorted).
///
/// Stops once the summed error estimate is within `rel_tol·|I| + abs_tol`,
/// or reports `converged = false` after `max_panels` panels.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    edges: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        if w[1] > w[0] {
            let p = gk15(&f, w[0], w[1]);
            evaluations += 15;
            value += p.value;
            error += p.error;
            heap.push(p);
        }
    }
    loop {
        if error <= rel_tol * value.abs() + abs_tol {
            break;
        }
        if heap.len() >= max_panels {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            heap.push(worst);
            break;
        }
        let l = gk15(&f, worst.a, mid);
        let r = gk15(&f, mid, worst.b);
        evaluations += 30;
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
    // Re-sum to shed the drift of the running totals.
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    QuadResult {
        value,
        abs_error,
        evaluations,
        panels: heap.len(),
        converged: abs_error <= rel_tol * value.abs() + abs_tol,
    }
}

/// Panel edges `c ± w·2^k` for every `(c, w)` pair, clipped to `(lo, hi)`,
/// together with `lo`, `hi` and the centers themselves; sorted and deduplicated.
pub fn seeded_edges(lo: f64, hi: f64, features: &[(f64, f64)]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for &(c, w) in features {
        if !(c.is_finite() && w.is_finite()) {
            continue;
        }
        if c > lo && c < hi {
            pts.push(c);
        }
        if w <= 0.0 {
            continue;
        }
        let span = hi - lo;
        let mut step = 0.25 * w;
        while step < span {
            for p in [c - step, c + step] {
                if p > lo && p < hi {
                    pts.push(p);
                }
            }
            step *= 2.0;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        let g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| 7.0 * x.powi(6) - 3.0 * x * x + 1.0, &[0.0, 2.0], 1e-14, 0.0, 10);
        assert!((r.value - (128.0 - 8.0 + 2.0)).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn narrow_lorentzian_with_seeds() {
        let w = 1e-6;
        let f = |x: f64| w / PI / ((x - 0.3).powi(2) + w * w);
        let edges = seeded_edges(-1.0, 1.0, &[(0.3, w)]);
        let r = integrate(f, &edges, 1e-10, 0.0, 10_000);
        let exact = ((1.0 - 0.3) / w).atan() / PI + ((1.0 + 0.3) / w).atan() / PI;
        assert!(r.converged);
        assert!((r.value / exact - 1.0).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate(|x: f64| 1.0 / x.abs().sqrt(), &[-1.0, 1.0], 1e-14, 0.0, 8);
        assert!(!r.converged);
        assert!(r.panels <= 9);
    }

    #[test]
    fn seeds_are_sorted_and_bounded() {
        let e = seeded_edges(0.0, 10.0, &[(5.0, 0.1), (9.9, 1.0), (20.0, 1.0)]);
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), 10.0);
        assert!(e.windows(2).all(|p| p[0] < p[1]));
        assert!(e.contains(&5.0) && e.contains(&5.025));
    }
}
