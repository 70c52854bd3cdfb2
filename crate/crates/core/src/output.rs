//! Deterministic CSV and JSON encodings of spectra, variance reports and
//! sweeps.
//!
//! Numbers are written as the shortest decimal that parses back to the same
//! `f64`, independent of locale. Every CSV starts with a `#` line stating
//! the units.

use std::fmt::Write as _;

use serde::Serialize;

use crate::moments::MomentReport;
use crate::spectra::SpectrumTable;
use crate::stability::StabilityReport;

/// Shortest round-trip decimal; scientific notation outside [1e-4, 1e16).
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub const SPECTRUM_COLUMNS: [&str; 14] = [
    "omega_over_omega_m",
    "s_q_total",
    "s_q_thermal",
    "s_q_photon_number",
    "s_q_two_photon",
    "s_q_vacuum_floor",
    "s_p_total",
    "s_p_thermal",
    "s_p_photon_number",
    "s_p_two_photon",
    "s_p_vacuum_floor",
    "n_omega",
    "m_re",
    "m_im",
];

pub const MOMENT_COLUMNS: [&str; 6] = [
    "var_q",
    "var_p",
    "uncertainty_product",
    "squeezed_q",
    "squeezed_p",
    "omega_max_over_omega_m",
];

pub const SPECTRUM_UNITS: &str = "frequencies as omega/omega_m with omega in rad/s; \
     spectra of the dimensionless quadratures q, p in 1/(rad/s); n_omega, m_re, m_im dimensionless";

pub const MOMENT_UNITS: &str =
    "variances of the dimensionless quadratures q, p ([q,p]=i); cutoff as omega_max/omega_m";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub omega_over_omega_m: f64,
    pub s_q_total: f64,
    pub s_q_thermal: f64,
    pub s_q_photon_number: f64,
    pub s_q_two_photon: f64,
    pub s_q_vacuum_floor: f64,
    pub s_p_total: f64,
    pub s_p_thermal: f64,
    pub s_p_photon_number: f64,
    pub s_p_two_photon: f64,
    pub s_p_vacuum_floor: f64,
    pub n_omega: f64,
    pub m_re: f64,
    pub m_im: f64,
}

impl SpectrumRow {
    fn values(&self) -> [f64; 14] {
        [
            self.omega_over_omega_m,
            self.s_q_total,
            self.s_q_thermal,
            self.s_q_photon_number,
            self.s_q_two_photon,
            self.s_q_vacuum_floor,
            self.s_p_total,
            self.s_p_thermal,
            self.s_p_photon_number,
            self.s_p_two_photon,
            self.s_p_vacuum_floor,
            self.n_omega,
            self.m_re,
            self.m_im,
        ]
    }
}

pub fn spectrum_rows(t: &SpectrumTable) -> Vec<SpectrumRow> {
    let wm = t.metadata.params.mech_freq;
    t.points
        .iter()
        .map(|p| SpectrumRow {
            omega_over_omega_m: p.omega / wm,
            s_q_total: p.s_q,
            s_q_thermal: p.q.thermal,
            s_q_photon_number: p.q.photon_number,
            s_q_two_photon: p.q.two_photon,
            s_q_vacuum_floor: p.q.vacuum_floor,
            s_p_total: p.s_p,
            s_p_thermal: p.p.thermal,
            s_p_photon_number: p.p.photon_number,
            s_p_two_photon: p.p.two_photon,
            s_p_vacuum_floor: p.p.vacuum_floor,
            n_omega: p.n,
            m_re: p.m.re,
            m_im: p.m.im,
        })
        .collect()
}

fn join_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        out.push_str(&c);
        first = false;
    }
    out.push('\n');
}

pub fn spectrum_csv(t: &SpectrumTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# units: {SPECTRUM_UNITS}; omega_m = {} rad/s",
        fmt_f64(t.metadata.params.mech_freq)
    );
    join_row(&mut out, SPECTRUM_COLUMNS.iter().map(|s| s.to_string()));
    for r in spectrum_rows(t) {
        join_row(&mut out, r.values().iter().map(|&v| fmt_f64(v)));
    }
    out
}

#[derive(Serialize)]
struct SpectrumDoc<'a> {
    kind: &'static str,
    units: &'static str,
    omega_m: f64,
    columns: [&'static str; 14],
    rows: &'a [SpectrumRow],
}

pub fn spectrum_json(t: &SpectrumTable) -> String {
    let rows = spectrum_rows(t);
    let doc = SpectrumDoc {
        kind: "spectrum",
        units: SPECTRUM_UNITS,
        omega_m: t.metadata.params.mech_freq,
        columns: SPECTRUM_COLUMNS,
        rows: &rows,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// One variance evaluation; `None` marks an unstable operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub axes: Vec<(String, f64)>,
    pub report: Option<MomentReport>,
    pub omega_max_over_omega_m: f64,
}

fn moment_cells(r: &MomentRow) -> Vec<String> {
    let mut cells: Vec<String> = r.axes.iter().map(|(_, v)| fmt_f64(*v)).collect();
    match &r.report {
        Some(m) => cells.extend([
            fmt_f64(m.var_q),
            fmt_f64(m.var_p),
            fmt_f64(m.uncertainty_product),
            m.squeezed_q.to_string(),
            m.squeezed_p.to_string(),
        ]),
        None => {
            cells.extend(["NaN", "NaN", "NaN", "false", "false"].map(String::from));
        }
    }
    cells.push(fmt_f64(r.omega_max_over_omega_m));
    cells
}

pub fn moments_csv(axis_names: &[&str], rows: &[MomentRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# units: {MOMENT_UNITS}; NaN rows are unstable operating points");
    join_row(
        &mut out,
        axis_names
            .iter()
            .chain(MOMENT_COLUMNS.iter())
            .map(|s| s.to_string()),
    );
    for r in rows {
        join_row(&mut out, moment_cells(r));
    }
    out
}

#[derive(Serialize)]
struct MomentJsonRow {
    axes: serde_json::Map<String, serde_json::Value>,
    stable: bool,
    var_q: Option<f64>,
    var_p: Option<f64>,
    uncertainty_product: Option<f64>,
    squeezed_q: bool,
    squeezed_p: bool,
    omega_max_over_omega_m: f64,
    last_doubling_delta_q: Option<f64>,
    last_doubling_delta_p: Option<f64>,
    quadrature_error_estimate: Option<f64>,
}

#[derive(Serialize)]
struct MomentDoc<'a> {
    kind: &'static str,
    units: &'static str,
    axes: &'a [&'a str],
    rows: Vec<MomentJsonRow>,
}

pub fn moments_json(kind: &'static str, axis_names: &[&str], rows: &[MomentRow]) -> String {
    let rows = rows
        .iter()
        .map(|r| {
            let axes = r
                .axes
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                .collect();
            let m = r.report.as_ref();
            MomentJsonRow {
                axes,
                stable: m.is_some(),
                var_q: m.map(|m| m.var_q),
                var_p: m.map(|m| m.var_p),
                uncertainty_product: m.map(|m| m.uncertainty_product),
                squeezed_q: m.is_some_and(|m| m.squeezed_q),
                squeezed_p: m.is_some_and(|m| m.squeezed_p),
                omega_max_over_omega_m: r.omega_max_over_omega_m,
                last_doubling_delta_q: m.map(|m| m.convergence.last_doubling_delta_q),
                last_doubling_delta_p: m.map(|m| m.convergence.last_doubling_delta_p),
                quadrature_error_estimate: m.map(|m| m.quadrature_error_estimate),
            }
        })
        .collect();
    let doc = MomentDoc {
        kind,
        units: MOMENT_UNITS,
        axes: axis_names,
        rows,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

pub fn stability_csv(r: &StabilityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# units: eigenvalues of the drift matrix in rad/s; stable = {}; routh_hurwitz_stable = {}",
        r.stable, r.routh_hurwitz_stable
    );
    out.push_str("index,real_part,imag_part\n");
    for (i, (re, im)) in r.eigen_real_parts.iter().zip(&r.eigen_imag_parts).enumerate() {
        join_row(&mut out, [i.to_string(), fmt_f64(*re), fmt_f64(*im)]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 1.0, 0.005, 145e-12, 3.829_7e-3, 5.95e6, 1e300, -2.5e-20, 0.1 + 0.2] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.005), "0.005");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(2.5e-20), "2.5e-20");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn moment_csv_layout() {
        let rows = vec![MomentRow {
            axes: vec![("phi0_over_pi".into(), 0.5)],
            report: None,
            omega_max_over_omega_m: 20.0,
        }];
        let csv = moments_csv(&["phi0_over_pi"], &rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# units"));
        assert_eq!(
            lines[1],
            "phi0_over_pi,var_q,var_p,uncertainty_product,squeezed_q,squeezed_p,omega_max_over_omega_m"
        );
        assert_eq!(lines[2], "0.5,NaN,NaN,NaN,false,false,20");
    }
}
