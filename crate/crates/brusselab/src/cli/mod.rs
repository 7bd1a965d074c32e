//! Command-line surface.
//!
//! ```text
//! brusselab <preset|run> [--config FILE] [--out DIR] [--seed N] [--set key=value]...
//! ```
//!
//! Exit codes are a stable contract for harnesses: 0 success, 2 configuration
//! error, 3 integration fault, 4 I/O error. `BRUSSELAB_THREADS` caps ensemble
//! parallelism; unset means machine default.

pub mod config;
pub mod presets;
pub mod table;

use std::path::PathBuf;

pub use config::{parse_config, ExperimentConfig, Origin, SystemKind};
pub use presets::{preset_config, run_preset, PRESET_DOCS, PRESET_NAMES};
pub use table::{fmt_g17, Cell, ResultTable};

use crate::analysis::AnalysisError;
use crate::sde::SdeError;
use crate::spectral::SpectralError;

/// Environment variable capping the rayon pool size.
pub const THREADS_ENV: &str = "BRUSSELAB_THREADS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown preset `{name}` (see --help for the list)")]
    UnknownPreset { name: String },
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: String },
}

impl CliError {
    /// Stable exit-code contract: 2 config, 3 integration fault, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::UnknownPreset { .. } | CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Sde(_) | CliError::Spectral(_) => 3,
            CliError::Analysis(e) => match e {
                AnalysisError::Member { .. } | AnalysisError::DegenerateTrajectory { .. } => 3,
                _ => 2,
            },
            CliError::Verify(e) => match e {
                crate::verify::VerifyError::Sde(_)
                | crate::verify::VerifyError::Spectral(_) => 3,
                crate::verify::VerifyError::Analysis(_)
                | crate::verify::VerifyError::IncompatibleSteps(_)
                | crate::verify::VerifyError::TooFewLevels => 2,
            },
        }
    }
}

/// Full `--help` text: usage, presets, every config key with default and
/// unit, and the exit-code table.
pub fn help_text() -> String {
    let mut out = String::from(
        "brusselab - stochastic Brusselator laboratory\n\
         \n\
         USAGE:\n\
         \x20 brusselab <preset|run> [--config FILE] [--out DIR] [--seed N] [--set key=value]...\n\
         \x20 brusselab --help\n\
         \n\
         `run` starts from the built-in defaults; a preset starts from its frozen\n\
         parameter block. Precedence: --set/--seed/--out > --config file > preset.\n\
         Default output directory: out/<preset>/ (overridden wholesale by --out).\n\
         \n\
         PRESETS:\n",
    );
    for (name, doc) in PRESET_DOCS {
        out.push_str(&format!("  {name:<20} {doc}\n"));
    }
    out.push_str("\nCONFIG KEYS (key = value lines; `#` comments; also accepted by --set):\n");
    for (key, default, doc) in config::KEY_DOCS {
        out.push_str(&format!("  {key:<17} default {default:<18} {doc}\n"));
    }
    out.push_str(
        "\nEXIT CODES:\n\
         \x20 0  success\n\
         \x20 2  configuration error (unknown key/preset, bad value, CFL violation, unresolvable mode table)\n\
         \x20 3  integration fault (non-finite state, degenerate trajectory, inconsistent certificate)\n\
         \x20 4  I/O error\n\
         \nENVIRONMENT:\n\
         \x20 BRUSSELAB_THREADS  cap ensemble parallelism (default: machine)\n",
    );
    out
}

fn parse_args(args: &[String]) -> Result<Option<(ExperimentConfig, Option<PathBuf>)>, CliError> {
    if args.is_empty() {
        return Err(CliError::Usage(
            "missing command: expected a preset name or `run` (see --help)".into(),
        ));
    }
    if args.iter().any(|a| a == "--help" || a == "-h") {
        return Ok(None);
    }
    let command = args[0].as_str();
    let mut cfg = if command == "run" {
        ExperimentConfig::default()
    } else {
        preset_config(command).ok_or_else(|| CliError::UnknownPreset {
            name: command.to_string(),
        })?
    };
    if command == "run" {
        cfg.preset = Some("run".to_string());
    }

    // First pass: the config file (middle precedence).
    let mut iter = args[1..].iter();
    let mut sets: Vec<(String, String)> = Vec::new();
    let mut out_dir: Option<PathBuf> = None;
    while let Some(arg) = iter.next() {
        match arg.as_str() {
            "--config" => {
                let path = iter
                    .next()
                    .ok_or_else(|| CliError::Usage("--config needs a file path".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: PathBuf::from(path),
                    source: e.to_string(),
                })?;
                cfg.apply_text(&text, true)?;
            }
            "--out" => {
                let dir = iter
                    .next()
                    .ok_or_else(|| CliError::Usage("--out needs a directory".into()))?;
                out_dir = Some(PathBuf::from(dir));
            }
            "--seed" => {
                let value = iter
                    .next()
                    .ok_or_else(|| CliError::Usage("--seed needs a value".into()))?;
                sets.push(("seed".to_string(), value.clone()));
            }
            "--set" => {
                let pair = iter
                    .next()
                    .ok_or_else(|| CliError::Usage("--set needs key=value".into()))?;
                let (key, value) = pair.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!("--set expects key=value, got `{pair}`"))
                })?;
                sets.push((key.trim().to_string(), value.trim().to_string()));
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unrecognized argument `{other}` (see --help)"
                )));
            }
        }
    }
    // Second pass: command-line overrides win.
    for (key, value) in sets {
        cfg.set(&key, &value, Origin::CommandLine)?;
    }
    cfg.validate()?;
    Ok(Some((cfg, out_dir)))
}

fn run_inner(args: &[String]) -> Result<Vec<PathBuf>, CliError> {
    let Some((cfg, out_override)) = parse_args(args)? else {
        print!("{}", help_text());
        return Ok(Vec::new());
    };
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw.trim().parse().map_err(|_| {
            CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))
        })?;
        if n == 0 {
            return Err(CliError::Usage(format!("{THREADS_ENV} must be >= 1")));
        }
        crate::exec::limit_threads(n);
    }
    let name = cfg.preset.clone().unwrap_or_else(|| "run".into());
    let out = out_override.unwrap_or_else(|| cfg.out_dir.join(&name));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io {
        path: out.clone(),
        source: e.to_string(),
    })?;
    run_preset(&cfg, &out)
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    match run_inner(args) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
