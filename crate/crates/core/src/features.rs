//! Peak, dip and pimple detection on scanned spectra.
//!
//! Peaks are local maxima of the spectrum itself, kept when their
//! topographic prominence exceeds a fraction of the scan maximum. Dips and
//! pimples are local extrema of the ratio to a baseline scan (normally the
//! vacuum-input spectrum) that deviate from 1 by more than the same fraction
//! and are narrow: their full width at half deviation must stay below
//! `max_width`, so a broadband rescaling of the spectrum is not reported as
//! a pimple or dip.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::SystemParams;
use crate::noise::SqueezeSource;
use crate::spectra::SpectrumTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    SQ,
    SP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    SinglePeak,
    TwoPeakNms,
    ThreePeak,
    FourPeak,
    HoleBurning,
    Pimple,
    Dispersive,
    /// No peak above threshold.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    pub prominence: f64,
}

/// A local extremum of S/S_baseline − 1; `deviation` is negative for dips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub omega: f64,
    pub deviation: f64,
    /// Full width at half deviation; a lower bound when the excursion runs
    /// off the scan.
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureOptions {
    /// Relative threshold for prominence and baseline deviations.
    pub threshold: f64,
    /// Frequency of the squeezing carrier (rad/s).
    pub carrier: f64,
    /// Widest excursion still counted as a pimple or dip (rad/s).
    pub max_width: f64,
}

impl FeatureOptions {
    /// Carrier at the source's offset (ω_m when the source has none) and a
    /// width limit of one cavity linewidth κ.
    pub fn for_system(params: &SystemParams, source: &SqueezeSource, threshold: f64) -> Self {
        let carrier = if source.carrier_offset() != 0.0 {
            source.carrier_offset()
        } else {
            params.mech_freq
        };
        FeatureOptions {
            threshold,
            carrier,
            max_width: params.cavity_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub peaks: Vec<Peak>,
    pub dips: Vec<Deviation>,
    pub pimples: Vec<Deviation>,
    /// S/S_baseline − 1 at the grid node nearest the carrier.
    pub carrier_deviation: f64,
    /// max |S/S_baseline − 1| over the scan.
    pub max_abs_deviation: f64,
    pub classification: Classification,
}

/// Indices and prominences of local maxima, in grid order.
pub fn find_peaks(y: &[f64]) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            // Walk across a flat top.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let top = (i + j) / 2;
                out.push((top, prominence(y, i, j)));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn prominence(y: &[f64], lo: usize, hi: usize) -> f64 {
    let h = y[lo];
    let mut left_min = h;
    for k in (0..lo).rev() {
        if y[k] > h {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = h;
    for &v in &y[hi + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn nearest(grid: &[f64], x: f64) -> usize {
    let i = grid.partition_point(|&g| g < x);
    if i == 0 {
        0
    } else if i == grid.len() {
        grid.len() - 1
    } else if x - grid[i - 1] <= grid[i] - x {
        i - 1
    } else {
        i
    }
}

fn column(t: &SpectrumTable, which: Quadrature) -> Vec<f64> {
    match which {
        Quadrature::SQ => t.s_q(),
        Quadrature::SP => t.s_p(),
    }
}

pub fn detect_features(
    table: &SpectrumTable,
    which: Quadrature,
    baseline: &SpectrumTable,
    opts: &FeatureOptions,
) -> Result<FeatureReport, ModelError> {
    if table.grid != baseline.grid {
        return Err(ModelError::GridMismatch);
    }
    let y = column(table, which);
    let b = column(baseline, which);
    Ok(analyze(&table.grid, &y, &b, opts))
}

/// Feature analysis on raw columns sharing `grid`.
pub fn analyze(grid: &[f64], y: &[f64], baseline: &[f64], opts: &FeatureOptions) -> FeatureReport {
    let thr = opts.threshold;
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let peaks: Vec<Peak> = find_peaks(y)
        .into_iter()
        .filter(|&(_, p)| p >= thr * ymax)
        .map(|(i, p)| Peak {
            omega: grid[i],
            height: y[i],
            prominence: p,
        })
        .collect();

    let r: Vec<f64> = y.iter().zip(baseline).map(|(a, b)| a / b - 1.0).collect();
    let max_abs_deviation = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let excursion = |i: usize| Deviation {
        omega: grid[i],
        deviation: r[i],
        width: half_width(grid, &r, i),
    };
    let pimples: Vec<Deviation> = local_extrema(&r, false)
        .into_iter()
        .filter(|&i| r[i] > thr)
        .map(excursion)
        .filter(|d| d.width < opts.max_width)
        .collect();
    let dips: Vec<Deviation> = local_extrema(&r, true)
        .into_iter()
        .filter(|&i| r[i] < -thr)
        .map(excursion)
        .filter(|d| d.width < opts.max_width)
        .collect();

    let ic = nearest(grid, opts.carrier);
    let carrier_deviation = r[ic];
    let classification = classify(grid, y, &peaks, &pimples, &dips, carrier_deviation, ic, opts);

    FeatureReport {
        peaks,
        dips,
        pimples,
        carrier_deviation,
        max_abs_deviation,
        classification,
    }
}

/// Full width of the excursion of `r` around node `i` at half its value,
/// with linear interpolation between nodes.
fn half_width(grid: &[f64], r: &[f64], i: usize) -> f64 {
    let half = 0.5 * r[i];
    let inside = |k: usize| (r[k] - half) * half.signum() > 0.0;
    let cross = |a: usize, b: usize| {
        let t = (half - r[a]) / (r[b] - r[a]);
        grid[a] + t * (grid[b] - grid[a])
    };
    let mut lo = i;
    while lo > 0 && inside(lo - 1) {
        lo -= 1;
    }
    let left = if lo == 0 { grid[0] } else { cross(lo - 1, lo) };
    let mut hi = i;
    while hi + 1 < r.len() && inside(hi + 1) {
        hi += 1;
    }
    let right = if hi + 1 == r.len() { grid[hi] } else { cross(hi, hi + 1) };
    right - left
}

fn local_extrema(r: &[f64], minima: bool) -> Vec<usize> {
    if minima {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        find_peaks(&neg).into_iter().map(|(i, _)| i).collect()
    } else {
        find_peaks(r).into_iter().map(|(i, _)| i).collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn classify(
    grid: &[f64],
    y: &[f64],
    peaks: &[Peak],
    pimples: &[Deviation],
    dips: &[Deviation],
    carrier_deviation: f64,
    ic: usize,
    opts: &FeatureOptions,
) -> Classification {
    let thr = opts.threshold;
    let c = opts.carrier;
    if carrier_deviation < -thr {
        return Classification::HoleBurning;
    }
    // An up-down excursion straddling the carrier with a crossing near it.
    if carrier_deviation.abs() <= thr {
        let left_up = pimples.iter().rev().find(|d| d.omega < c);
        let right_up = pimples.iter().find(|d| d.omega > c);
        let left_dn = dips.iter().rev().find(|d| d.omega < c);
        let right_dn = dips.iter().find(|d| d.omega > c);
        let pair = |a: Option<&Deviation>, b: Option<&Deviation>| match (a, b) {
            (Some(a), Some(b)) => {
                let (da, db) = (c - a.omega, b.omega - c);
                (da - db).abs() <= 0.5 * da.max(db)
            }
            _ => false,
        };
        if pair(left_up, right_dn) || pair(left_dn, right_up) {
            return Classification::Dispersive;
        }
    }
    // A bump above baseline at the carrier that is not the dominant peak.
    if carrier_deviation > thr {
        let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spacing = grid.get(1).map_or(0.0, |g| g - grid[0]);
        let bump = pimples
            .iter()
            .any(|d| (d.omega - c).abs() <= 2.0 * spacing.max((grid[ic] - c).abs()));
        if bump && y[ic] < ymax && peaks.len() >= 2 {
            return Classification::Pimple;
        }
    }
    match peaks.len() {
        0 => Classification::Flat,
        1 => Classification::SinglePeak,
        2 => Classification::TwoPeakNms,
        3 => Classification::ThreePeak,
        _ => Classification::FourPeak,
    }
}
