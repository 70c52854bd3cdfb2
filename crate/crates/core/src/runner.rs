//! Command execution: resolve a [`RunConfig`], compute, and write the
//! artifact plus a JSON metadata sidecar.
//!
//! Artifacts are written to a temporary file in the target directory and
//! renamed into place. The sidecar `<path>.meta.json` echoes the full
//! configuration and records version, timings and a timestamp; the artifact
//! itself depends only on the configuration.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{Command, ConfigError, Format, Resolved, RunConfig};
use crate::error::{ModelError, MomentError};
use crate::features::{detect_features, FeatureOptions, Quadrature};
use crate::model::{classify_regime, critical_power, derive, solve_steady_state_with, SteadyState};
use crate::moments::squeezing_report;
use crate::noise::SqueezeSource;
use crate::output::{self, fmt_f64, MomentRow};
use crate::spectra::spectrum_scan;
use crate::stability::{check_stability, drift_matrix, StabilityReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("model error: {0}")]
    Model(ModelError),
    #[error("system is unstable (max eigenvalue real part {:.6e} rad/s)", .0.max_real_part())]
    Unstable(Box<StabilityReport>),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Model(_) => 2,
            RunError::Unstable(_) => 3,
            RunError::NonConvergence(_) => 4,
            RunError::Io { .. } => 5,
        }
    }

    /// Machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            RunError::Config(_) | RunError::Model(_) => "config",
            RunError::Unstable(_) => "instability",
            RunError::NonConvergence(_) => "non_convergence",
            RunError::Io { .. } => "io",
        }
    }
}

impl From<MomentError> for RunError {
    fn from(e: MomentError) -> Self {
        match e {
            MomentError::Unstable(r) => RunError::Unstable(r),
            MomentError::NonConvergence { .. } => RunError::NonConvergence(e.to_string()),
            MomentError::Model(m) => RunError::Model(m),
        }
    }
}

/// Result of a successful run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// The artifact bytes (also written to `path` when one is configured).
    pub artifact: String,
    /// Short human-readable summary.
    pub summary: String,
    pub path: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
}

struct Computed {
    artifact: String,
    summary: String,
    meta: Value,
}

fn steady_state(r: &Resolved) -> Result<SteadyState, RunError> {
    let d = derive(&r.params).map_err(RunError::Model)?;
    solve_steady_state_with(&r.params, &d, r.root_selection).map_err(RunError::Model)
}

fn require_stable(ss: &SteadyState, r: &Resolved) -> Result<StabilityReport, RunError> {
    let rep = check_stability(&drift_matrix(ss, &r.params));
    if rep.stable {
        Ok(rep)
    } else {
        Err(RunError::Unstable(Box::new(rep)))
    }
}

fn run_spectrum(cfg: &RunConfig, r: &Resolved) -> Result<Computed, RunError> {
    let ss = steady_state(r)?;
    let stability = require_stable(&ss, r)?;
    let table = spectrum_scan(&r.grid, &ss, &r.params, &r.source, r.conventions).map_err(RunError::Model)?;
    let base = spectrum_scan(&r.grid, &ss, &r.params, &SqueezeSource::vacuum(), r.conventions)
        .map_err(RunError::Model)?;
    let opts = FeatureOptions::for_system(&r.params, &r.source, r.prominence);
    let fq = detect_features(&table, Quadrature::SQ, &base, &opts).map_err(RunError::Model)?;
    let fp = detect_features(&table, Quadrature::SP, &base, &opts).map_err(RunError::Model)?;
    let artifact = match cfg.output.format {
        Format::Csv => output::spectrum_csv(&table),
        Format::Json => output::spectrum_json(&table),
    };
    let summary = format!(
        "spectrum: {} points, S_q {:?}, S_p {:?}",
        table.len(),
        fq.classification,
        fp.classification
    );
    Ok(Computed {
        artifact,
        summary,
        meta: json!({
            "steady_state": ss,
            "stability": stability,
            "features": { "s_q": fq, "s_p": fp, "baseline": "vacuum" },
        }),
    })
}

fn moment_row(cfg: &RunConfig, axes: Vec<(String, f64)>) -> Result<(MomentRow, Option<StabilityReport>), RunError> {
    let r = cfg.build()?;
    let ss = steady_state(&r)?;
    let ratio = cfg.moments.omega_max_over_omega_m;
    match squeezing_report(&ss, &r.params, &r.source, &r.cutoff, r.conventions) {
        Ok(rep) => Ok((
            MomentRow {
                axes,
                report: Some(rep),
                omega_max_over_omega_m: ratio,
            },
            None,
        )),
        Err(MomentError::Unstable(s)) => Ok((
            MomentRow {
                axes,
                report: None,
                omega_max_over_omega_m: ratio,
            },
            Some(*s),
        )),
        Err(e) => Err(e.into()),
    }
}

fn run_variance(cfg: &RunConfig, r: &Resolved) -> Result<Computed, RunError> {
    let ss = steady_state(r)?;
    let stability = require_stable(&ss, r)?;
    let (row, _) = moment_row(cfg, vec![])?;
    let rows = [row];
    let artifact = match cfg.output.format {
        Format::Csv => output::moments_csv(&[], &rows),
        Format::Json => output::moments_json("variance", &[], &rows),
    };
    let m = rows[0].report.as_ref().expect("stable point has a report");
    let summary = format!(
        "variance: <dq^2> = {}, <dp^2> = {}, product = {}, squeezed_q = {}, squeezed_p = {}",
        fmt_f64(m.var_q),
        fmt_f64(m.var_p),
        fmt_f64(m.uncertainty_product),
        m.squeezed_q,
        m.squeezed_p
    );
    Ok(Computed {
        artifact,
        summary,
        meta: json!({ "steady_state": ss, "stability": stability, "report": m }),
    })
}

fn run_sweep(cfg: &RunConfig) -> Result<Computed, RunError> {
    if cfg.sweep.is_empty() {
        return Err(ConfigError::Usage("command `sweep` needs at least one `sweep.<axis> = min:max:steps` line".into()).into());
    }
    let names: Vec<&str> = cfg.sweep.iter().map(|a| a.var.name()).collect();
    let mut points: Vec<Vec<(usize, f64)>> = vec![vec![]];
    for (k, ax) in cfg.sweep.iter().enumerate() {
        points = points
            .into_iter()
            .flat_map(|p| {
                ax.values().into_iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((k, v));
                    q
                })
            })
            .collect();
    }
    let results: Vec<Result<(MomentRow, Option<StabilityReport>), RunError>> = points
        .par_iter()
        .map(|p| {
            let mut c = cfg.clone();
            let mut axes = Vec::new();
            for &(k, v) in p {
                let var = cfg.sweep[k].var;
                c = c.with_axis(var, v)?;
                axes.push((var.name().to_string(), v));
            }
            moment_row(&c, axes)
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut unstable = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        let (row, st) = res?;
        if let Some(s) = st {
            unstable.push(json!({ "row": i, "axes": row.axes, "stability": s }));
        }
        rows.push(row);
    }
    let artifact = match cfg.output.format {
        Format::Csv => output::moments_csv(&names, &rows),
        Format::Json => output::moments_json("sweep", &names, &rows),
    };
    let n_sq_p = rows.iter().filter(|r| r.report.as_ref().is_some_and(|m| m.squeezed_p)).count();
    let n_sq_q = rows.iter().filter(|r| r.report.as_ref().is_some_and(|m| m.squeezed_q)).count();
    let summary = format!(
        "sweep: {} points over {}, {} unstable, squeezed_q at {}, squeezed_p at {}",
        rows.len(),
        names.join(" x "),
        unstable.len(),
        n_sq_q,
        n_sq_p
    );
    Ok(Computed {
        artifact,
        summary,
        meta: json!({ "unstable_points": unstable }),
    })
}

fn run_stability(cfg: &RunConfig, r: &Resolved) -> Result<Computed, RunError> {
    let ss = steady_state(r)?;
    let rep = check_stability(&drift_matrix(&ss, &r.params));
    let artifact = match cfg.output.format {
        Format::Csv => output::stability_csv(&rep),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({
                "kind": "stability",
                "units": "rad/s",
                "stable": rep.stable,
                "routh_hurwitz_stable": rep.routh_hurwitz_stable,
                "eigen_real_parts": rep.eigen_real_parts,
                "eigen_imag_parts": rep.eigen_imag_parts,
                "steady_state": ss,
            }))
            .expect("serializable");
            s.push('\n');
            s
        }
    };
    let summary = format!(
        "stability: stable = {}, max Re(eigenvalue) = {} rad/s, bistable = {}",
        rep.stable,
        fmt_f64(rep.max_real_part()),
        ss.branch.bistable
    );
    Ok(Computed {
        artifact,
        summary,
        meta: json!({ "steady_state": ss, "stability": rep }),
    })
}

fn run_critical_power(cfg: &RunConfig, r: &Resolved) -> Result<Computed, RunError> {
    let d = derive(&r.params).map_err(RunError::Model)?;
    let pc = critical_power(&r.params, &d).map_err(RunError::Model)?;
    let regime = classify_regime(r.params.laser_power, pc);
    let regime_name = serde_json::to_value(regime).expect("serializable");
    let regime_name = regime_name.as_str().unwrap_or_default().to_string();
    let artifact = match cfg.output.format {
        Format::Csv => format!(
            "# units: powers in W\ncritical_power_w,power_w,regime\n{},{},{}\n",
            fmt_f64(pc),
            fmt_f64(r.params.laser_power),
            regime_name
        ),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({
                "kind": "critical_power",
                "units": "W",
                "critical_power_w": pc,
                "power_w": r.params.laser_power,
                "regime": regime,
            }))
            .expect("serializable");
            s.push('\n');
            s
        }
    };
    let summary = format!(
        "critical power P_c = {} W ({} mW); P = {} W is {}",
        fmt_f64(pc),
        fmt_f64(pc * 1e3),
        fmt_f64(r.params.laser_power),
        regime_name
    );
    Ok(Computed {
        artifact,
        summary,
        meta: json!({ "derived": d, "critical_power_w": pc, "regime": regime }),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let io = |source| RunError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp.{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn sidecar(cfg: &RunConfig, started: SystemTime, elapsed: f64, body: Value) -> Value {
    let ts = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let resolved = cfg.build().ok().map(|r| {
        json!({ "params": r.params, "source": r.source, "conventions": r.conventions,
                "grid": r.grid, "cutoff": r.cutoff })
    });
    json!({
        "tool": "optomech",
        "version": VERSION,
        "command": cfg.command.name(),
        "config": cfg.to_canonical(),
        "config_structured": cfg,
        "resolved": resolved,
        "timings": { "elapsed_s": elapsed },
        "timestamp_unix_s": ts,
        "result": body,
    })
}

fn write_sidecar(path: &Path, v: &Value) -> Result<PathBuf, RunError> {
    let sc = sidecar_path(path);
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    write_atomic(&sc, s.as_bytes())?;
    Ok(sc)
}

/// Runs the configured command. On failure with an output path configured,
/// the sidecar still records the error (and the stability report for
/// unstable systems).
pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let computed = compute(cfg);
    let elapsed = clock.elapsed().as_secs_f64();
    let path = cfg.output.path.as_ref().map(PathBuf::from);
    match computed {
        Ok(c) => {
            let mut out = RunOutput {
                artifact: c.artifact,
                summary: c.summary,
                path: None,
                sidecar: None,
            };
            if let Some(p) = path {
                write_atomic(&p, out.artifact.as_bytes())?;
                let meta = sidecar(cfg, started, elapsed, c.meta);
                out.sidecar = Some(write_sidecar(&p, &meta)?);
                out.path = Some(p);
            }
            Ok(out)
        }
        Err(e) => {
            if let Some(p) = path {
                let mut body = json!({ "error": { "category": e.category(), "message": e.to_string(),
                                                  "exit_code": e.exit_code() } });
                if let RunError::Unstable(rep) = &e {
                    body["stability"] = json!(rep);
                }
                let meta = sidecar(cfg, started, elapsed, body);
                write_sidecar(&p, &meta)?;
            }
            Err(e)
        }
    }
}

fn compute(cfg: &RunConfig) -> Result<Computed, RunError> {
    let r = cfg.build()?;
    match cfg.command {
        Command::Spectrum => run_spectrum(cfg, &r),
        Command::Variance => run_variance(cfg, &r),
        Command::Sweep => run_sweep(cfg),
        Command::Stability => run_stability(cfg, &r),
        Command::CriticalPower => run_critical_power(cfg, &r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_power_command() {
        let c = RunConfig::parse("run.command = critical-power").unwrap();
        let out = run(&c).unwrap();
        assert!(out.summary.contains("mW"));
        let line = out.artifact.lines().nth(2).unwrap();
        let pc: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!((pc / 3.83e-3 - 1.0).abs() < 0.02);
        assert!(line.ends_with("nms_strong"));
    }

    #[test]
    fn sweep_without_axes_is_usage_error() {
        let c = RunConfig::parse("run.command = sweep").unwrap();
        let e = run(&c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unstable_spectrum_exits_3_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let text = format!(
            "system.detuning_over_omega_m = -1\noutput.path = {}",
            path.display()
        );
        let c = RunConfig::parse(&text).unwrap();
        let e = run(&c).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(!path.exists());
        let meta: Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(meta["result"]["error"]["category"], "instability");
        assert_eq!(meta["result"]["stability"]["stable"], false);
    }

    #[test]
    fn spectrum_file_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let text = format!("grid.points = 11\noutput.path = {}", path.display());
        let out = run(&RunConfig::parse(&text).unwrap()).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(body, out.artifact);
        assert_eq!(body.lines().count(), 13);
        let meta: Value = serde_json::from_str(&fs::read_to_string(out.sidecar.unwrap()).unwrap()).unwrap();
        assert_eq!(meta["version"], VERSION);
        assert!(meta["timestamp_unix_s"].as_f64().unwrap() > 0.0);
        assert!(meta["config"].as_str().unwrap().contains("grid.points = 11"));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let c = RunConfig::parse("run.command = critical-power\noutput.path = /nonexistent-dir/x/y.csv").unwrap();
        assert_eq!(run(&c).unwrap_err().exit_code(), 5);
    }
}
