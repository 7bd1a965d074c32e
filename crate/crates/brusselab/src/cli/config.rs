//! Experiment configuration: flat `key = value` text with `#` comments,
//! case-sensitive keys, hard errors on unknown keys, and validation of the
//! assembled run (positivity, CFL bound, resolvable mode tables).
//!
//! Precedence when assembling a run: command line (`--set`) over config file
//! over preset defaults. Every error cites where the offending value came
//! from.

use std::collections::BTreeMap;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::model::{BrusselatorParams, NoiseIntensities};
use crate::sde::{SpatialGrid, TimeGrid};

/// Where a configuration value was set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    Preset,
    File { line: usize },
    CommandLine,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Default => write!(f, "built-in default"),
            Origin::Preset => write!(f, "preset"),
            Origin::File { line } => write!(f, "line {line}"),
            Origin::CommandLine => write!(f, "command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown key `{key}` ({origin})")]
    UnknownKey { key: String, origin: Origin },
    #[error("cannot parse value `{value}` for key `{key}` ({origin})")]
    BadValue {
        key: String,
        value: String,
        origin: Origin,
    },
    #[error("malformed line ({origin}): expected `key = value`, got `{text}`")]
    Malformed { text: String, origin: Origin },
    #[error("{key} must satisfy {requirement}, got {value} ({origin})")]
    OutOfRange {
        key: &'static str,
        requirement: &'static str,
        value: f64,
        origin: Origin,
    },
    #[error(
        "explicit diffusion step unstable: max(d_u, d_v) * dt / dx^2 = {ratio:.6} exceeds 0.5 (dt set at {origin})"
    )]
    Cfl { ratio: f64, origin: Origin },
    #[error(
        "modes_table = {modes} exceeds the {cells} grid cells: per-mode tables must be grid-resolvable (set at {origin})"
    )]
    TooManyModes {
        modes: usize,
        cells: usize,
        origin: Origin,
    },
}

/// Fully assembled experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub a: f64,
    pub b: f64,
    pub d_u: f64,
    pub d_v: f64,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub length: f64,
    pub dx: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub system: SystemKind,
    pub record_stride: usize,
    pub snapshot_stride: usize,
    pub n_realizations: usize,
    pub mode_count: usize,
    pub modes_table: usize,
    pub fit_start_frac: f64,
    pub renorm_threshold: f64,
    pub amplitude: f64,
    pub sweep: Option<Vec<f64>>,
    pub out_dir: PathBuf,
    origins: BTreeMap<&'static str, Origin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Linear,
    Nonlinear,
}

/// Key name, default, and unit/description for `--help` and docs.
pub const KEY_DOCS: &[(&str, &str, &str)] = &[
    ("A", "1", "feed concentration A (dimensionless, > 0)"),
    ("B", "1.8", "feed concentration B (dimensionless, > 0)"),
    ("d_u", "5e-5", "activator diffusion (length^2/time, > 0)"),
    ("d_v", "2e-3", "inhibitor diffusion (length^2/time, > 0)"),
    ("sigma_u", "0", "noise intensity on u (1/sqrt(time))"),
    ("sigma_v", "0", "noise intensity on v (1/sqrt(time))"),
    ("L", "1", "domain length (length, > 0)"),
    ("dx", "0.02", "grid spacing; cells = round(L/dx) >= 3 (length)"),
    ("T", "50", "time horizon (time, > 0)"),
    ("dt", "0.005", "time step; must satisfy max(d)*dt/dx^2 <= 0.5 (time)"),
    ("seed", "42", "base RNG seed (unsigned integer)"),
    ("system", "nonlinear", "field equations: `linear` or `nonlinear`"),
    ("record_stride", "10", "record norms every this many steps (steps)"),
    ("snapshot_stride", "0", "store full profiles every this many steps; 0 = off (steps)"),
    ("n_realizations", "100", "ensemble size for sweeps and mode tables (count)"),
    ("mode_count", "200", "eigenmodes scanned for dispersion/certificates (count)"),
    ("modes_table", "35", "rows of per-mode tables; must be <= grid cells (count)"),
    ("fit_start_frac", "0.3", "Lyapunov fit window starts at this fraction of T (0..1)"),
    ("renorm_threshold", "1e6", "log-amplitude renormalization bound (> 1)"),
    ("amplitude", "0.1", "initial perturbation amplitude (concentration)"),
    ("sweep", "preset-dependent", "comma-separated noise intensities for sweeps"),
    ("out_dir", "out", "output directory (path)"),
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: None,
            a: 1.0,
            b: 1.8,
            d_u: 5e-5,
            d_v: 2e-3,
            sigma_u: 0.0,
            sigma_v: 0.0,
            length: 1.0,
            dx: 0.02,
            horizon: 50.0,
            dt: 0.005,
            seed: 42,
            system: SystemKind::Nonlinear,
            record_stride: 10,
            snapshot_stride: 0,
            n_realizations: 100,
            mode_count: 200,
            modes_table: 35,
            fit_start_frac: 0.3,
            renorm_threshold: 1e6,
            amplitude: 0.1,
            sweep: None,
            out_dir: PathBuf::from("out"),
            origins: BTreeMap::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(
    key: &str,
    value: &str,
    origin: Origin,
) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        origin,
    })
}

impl ExperimentConfig {
    /// Set one key from its textual value, recording provenance.
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let canonical: &'static str = match key {
            "A" => {
                self.a = parse_num(key, value, origin)?;
                "A"
            }
            "B" => {
                self.b = parse_num(key, value, origin)?;
                "B"
            }
            "d_u" => {
                self.d_u = parse_num(key, value, origin)?;
                "d_u"
            }
            "d_v" => {
                self.d_v = parse_num(key, value, origin)?;
                "d_v"
            }
            "sigma_u" => {
                self.sigma_u = parse_num(key, value, origin)?;
                "sigma_u"
            }
            "sigma_v" => {
                self.sigma_v = parse_num(key, value, origin)?;
                "sigma_v"
            }
            "L" => {
                self.length = parse_num(key, value, origin)?;
                "L"
            }
            "dx" => {
                self.dx = parse_num(key, value, origin)?;
                "dx"
            }
            "T" => {
                self.horizon = parse_num(key, value, origin)?;
                "T"
            }
            "dt" => {
                self.dt = parse_num(key, value, origin)?;
                "dt"
            }
            "seed" => {
                self.seed = parse_num(key, value, origin)?;
                "seed"
            }
            "system" => {
                self.system = match value.trim() {
                    "linear" => SystemKind::Linear,
                    "nonlinear" => SystemKind::Nonlinear,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            value: value.to_string(),
                            origin,
                        })
                    }
                };
                "system"
            }
            "record_stride" => {
                self.record_stride = parse_num(key, value, origin)?;
                "record_stride"
            }
            "snapshot_stride" => {
                self.snapshot_stride = parse_num(key, value, origin)?;
                "snapshot_stride"
            }
            "n_realizations" => {
                self.n_realizations = parse_num(key, value, origin)?;
                "n_realizations"
            }
            "mode_count" => {
                self.mode_count = parse_num(key, value, origin)?;
                "mode_count"
            }
            "modes_table" => {
                self.modes_table = parse_num(key, value, origin)?;
                "modes_table"
            }
            "fit_start_frac" => {
                self.fit_start_frac = parse_num(key, value, origin)?;
                "fit_start_frac"
            }
            "renorm_threshold" => {
                self.renorm_threshold = parse_num(key, value, origin)?;
                "renorm_threshold"
            }
            "amplitude" => {
                self.amplitude = parse_num(key, value, origin)?;
                "amplitude"
            }
            "sweep" => {
                let values = value
                    .split(',')
                    .map(|v| parse_num::<f64>(key, v, origin))
                    .collect::<Result<Vec<f64>, _>>()?;
                self.sweep = Some(values);
                "sweep"
            }
            "out_dir" => {
                self.out_dir = PathBuf::from(value.trim());
                "out_dir"
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    origin,
                })
            }
        };
        self.origins.insert(canonical, origin);
        Ok(())
    }

    /// Apply a whole `key = value` text (file or inline).
    pub fn apply_text(&mut self, text: &str, from_file: bool) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let origin = if from_file {
                Origin::File { line: idx + 1 }
            } else {
                Origin::CommandLine
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    text: raw.to_string(),
                    origin,
                });
            };
            self.set(key.trim(), value.trim(), origin)?;
        }
        Ok(())
    }

    fn origin_of(&self, key: &'static str) -> Origin {
        self.origins.get(key).copied().unwrap_or(Origin::Default)
    }

    /// Validate the assembled configuration.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive: [(&'static str, f64); 8] = [
            ("A", self.a),
            ("B", self.b),
            ("d_u", self.d_u),
            ("d_v", self.d_v),
            ("L", self.length),
            ("dx", self.dx),
            ("T", self.horizon),
            ("dt", self.dt),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::OutOfRange {
                    key,
                    requirement: "> 0 and finite",
                    value,
                    origin: self.origin_of(key),
                });
            }
        }
        if !(self.fit_start_frac >= 0.0 && self.fit_start_frac < 1.0) {
            return Err(ConfigError::OutOfRange {
                key: "fit_start_frac",
                requirement: "in [0, 1)",
                value: self.fit_start_frac,
                origin: self.origin_of("fit_start_frac"),
            });
        }
        if !(self.renorm_threshold > 1.0) {
            return Err(ConfigError::OutOfRange {
                key: "renorm_threshold",
                requirement: "> 1",
                value: self.renorm_threshold,
                origin: self.origin_of("renorm_threshold"),
            });
        }
        let counts: [(&'static str, usize); 4] = [
            ("record_stride", self.record_stride),
            ("n_realizations", self.n_realizations),
            ("mode_count", self.mode_count),
            ("modes_table", self.modes_table),
        ];
        for (key, value) in counts {
            if value == 0 {
                return Err(ConfigError::OutOfRange {
                    key,
                    requirement: ">= 1",
                    value: 0.0,
                    origin: self.origin_of(key),
                });
            }
        }
        let cells = (self.length / self.dx).round() as usize;
        if cells < 3 {
            return Err(ConfigError::OutOfRange {
                key: "dx",
                requirement: "coarse enough for >= 3 cells",
                value: self.dx,
                origin: self.origin_of("dx"),
            });
        }
        let dx = self.length / cells as f64;
        let ratio = self.d_u.max(self.d_v) * self.dt / (dx * dx);
        if ratio > 0.5 {
            return Err(ConfigError::Cfl {
                ratio,
                origin: self.origin_of("dt"),
            });
        }
        if self.modes_table > cells {
            return Err(ConfigError::TooManyModes {
                modes: self.modes_table,
                cells,
                origin: self.origin_of("modes_table"),
            });
        }
        Ok(())
    }

    pub fn params(&self) -> BrusselatorParams {
        // validate() guarantees positivity.
        BrusselatorParams::new(self.a, self.b, self.d_u, self.d_v)
            .expect("validated configuration")
    }

    pub fn noise(&self) -> NoiseIntensities {
        NoiseIntensities::new(self.sigma_u, self.sigma_v)
    }

    pub fn grid(&self) -> SpatialGrid {
        SpatialGrid::from_spacing(self.length, self.dx).expect("validated configuration")
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::new(self.horizon, self.dt).expect("validated configuration")
    }

    /// Canonical `key = value` listing: the reproducibility record written at
    /// the top of every CSV and the input of the config hash.
    pub fn canonical_pairs(&self) -> Vec<(String, String)> {
        let sweep = match &self.sweep {
            None => "none".to_string(),
            Some(values) => values
                .iter()
                .map(|v| super::table::fmt_g17(*v))
                .collect::<Vec<_>>()
                .join(","),
        };
        let g17 = super::table::fmt_g17;
        vec![
            (
                "preset".into(),
                self.preset.clone().unwrap_or_else(|| "none".into()),
            ),
            ("A".into(), g17(self.a)),
            ("B".into(), g17(self.b)),
            ("d_u".into(), g17(self.d_u)),
            ("d_v".into(), g17(self.d_v)),
            ("sigma_u".into(), g17(self.sigma_u)),
            ("sigma_v".into(), g17(self.sigma_v)),
            ("L".into(), g17(self.length)),
            ("dx".into(), g17(self.dx)),
            ("T".into(), g17(self.horizon)),
            ("dt".into(), g17(self.dt)),
            ("seed".into(), self.seed.to_string()),
            (
                "system".into(),
                match self.system {
                    SystemKind::Linear => "linear".into(),
                    SystemKind::Nonlinear => "nonlinear".into(),
                },
            ),
            ("record_stride".into(), self.record_stride.to_string()),
            ("snapshot_stride".into(), self.snapshot_stride.to_string()),
            ("n_realizations".into(), self.n_realizations.to_string()),
            ("mode_count".into(), self.mode_count.to_string()),
            ("modes_table".into(), self.modes_table.to_string()),
            ("fit_start_frac".into(), g17(self.fit_start_frac)),
            ("renorm_threshold".into(), g17(self.renorm_threshold)),
            ("amplitude".into(), g17(self.amplitude)),
            ("sweep".into(), sweep),
            ("out_dir".into(), self.out_dir.display().to_string()),
        ]
    }

    /// SHA-256 of the canonical listing, hex-encoded.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.canonical_pairs() {
            hasher.update(k.as_bytes());
            hasher.update(b" = ");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Metadata preamble for one emitted table.
    pub fn metadata(&self, table: &str) -> Vec<(String, String)> {
        let mut meta = vec![
            ("table".to_string(), table.to_string()),
            ("build".to_string(), format!("brusselab {}", env!("CARGO_PKG_VERSION"))),
            ("config_sha256".to_string(), self.config_hash()),
        ];
        meta.extend(self.canonical_pairs());
        meta
    }
}

/// Parse a complete config text into a validated configuration with defaults
/// applied (defaults are documented in `--help`).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(text, true)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_parameter_block() {
        let cfg = parse_config("A = 1\nB = 1.8\nd_u = 5e-5\nd_v = 2e-3").unwrap();
        assert_eq!(cfg.a, 1.0);
        assert_eq!(cfg.b, 1.8);
        assert_eq!(cfg.d_u, 5e-5);
        assert_eq!(cfg.d_v, 2e-3);
        assert_eq!(cfg.params(), BrusselatorParams::TURING);
    }

    #[test]
    fn empty_input_gives_documented_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.grid().cells, 50);
        assert_eq!(cfg.time_grid().n_steps, 10_000);
        // Every key in the docs table parses.
        let mut probe = ExperimentConfig::default();
        for (key, default, _) in KEY_DOCS {
            if *default != "preset-dependent" {
                probe.set(key, default, Origin::Default).unwrap();
            }
        }
    }

    #[test]
    fn bad_value_names_line() {
        let err = parse_config("A = abc").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::BadValue { ref key, origin: Origin::File { line: 1 }, .. } if key == "A"
        ));
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse_config("# comment\nAA = 1").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::UnknownKey { ref key, origin: Origin::File { line: 2 } } if key == "AA"
        ));
    }

    #[test]
    fn cfl_violation_cites_dt() {
        let err = parse_config("dt = 1.0").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::Cfl { origin: Origin::File { line: 1 }, .. }
        ));
    }

    #[test]
    fn unresolvable_mode_table_is_rejected() {
        let err = parse_config("modes_table = 60").unwrap_err();
        assert!(matches!(err, ConfigError::TooManyModes { modes: 60, cells: 50, .. }));
        // mode_count (spectral scan) is grid-independent and may exceed N.
        assert!(parse_config("mode_count = 400").is_ok());
    }

    #[test]
    fn sweep_lists_parse() {
        let cfg = parse_config("sweep = 0, 0.5, 1.0, 5").unwrap();
        assert_eq!(cfg.sweep.unwrap(), vec![0.0, 0.5, 1.0, 5.0]);
        assert!(parse_config("sweep = 1, two").is_err());
    }

    #[test]
    fn later_assignments_win_and_comments_are_ignored() {
        let cfg = parse_config("T = 10 # short run\nT = 20\n\n# standalone comment\n").unwrap();
        assert_eq!(cfg.horizon, 20.0);
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_config("").unwrap();
        let mut b = parse_config("").unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        b.set("seed", "43", Origin::CommandLine).unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
