use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use optomech_core::config::{Command, ConfigError, RunConfig};
use optomech_core::presets;
use optomech_core::runner::{run, RunError};

/// Fluctuation spectra and variances of an optomechanical mirror driven by
/// squeezed vacuum.
#[derive(Parser, Debug)]
#[command(name = "optomech", version)]
struct Cli {
    /// spectrum | variance | sweep | stability | critical-power
    /// (overrides `run.command`)
    command: Option<String>,

    /// Start from a named preset (paper-default, fig2, fig3a, fig3d, fig5a,
    /// fig5b, fig5c, fig8a, fig9a).
    #[arg(long)]
    preset: Option<String>,

    /// Configuration file of `section.key = value` lines, applied after the
    /// preset.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override one key, e.g. `--set system.power_w=20mW`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Output path (same as `output.path`). Without one the artifact goes to
    /// stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Print the resolved configuration in canonical form and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match &cli.preset {
        Some(name) => presets::preset(name).ok_or_else(|| {
            let names: Vec<&str> = presets::preset_names().collect();
            ConfigError::Usage(format!("unknown preset `{name}`; expected one of {}", names.join(", ")))
        })?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        })?;
        cfg.apply_document(&text)?;
    }
    for s in &cli.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.starts_with("sweep.") {
            // A command-line axis replaces the preset's axes of other kinds.
            cfg.sweep.retain(|a| format!("sweep.{}", a.var.name()) == k);
        }
        cfg.set(k, v)?;
    }
    if let Some(c) = &cli.command {
        cfg.command = Command::from_name(c)
            .ok_or_else(|| ConfigError::Usage(format!("unknown command `{c}`")))?;
    }
    if let Some(out) = &cli.out {
        cfg.set("output.path", &out.display().to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if cli.print_config {
        print!("{}", cfg.to_canonical());
        return ExitCode::SUCCESS;
    }
    match run(&cfg) {
        Ok(out) => {
            match &out.path {
                Some(p) => {
                    println!("{}", out.summary);
                    println!("wrote {}", p.display());
                    if let Some(s) = &out.sidecar {
                        println!("wrote {}", s.display());
                    }
                }
                None => {
                    print!("{}", out.artifact);
                    eprintln!("{}", out.summary);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
