//! Experiment presets: frozen parameter sets and the tables each one emits.
//!
//! Every preset is an ordinary configuration delta on top of the defaults,
//! so any value can still be overridden with `--set key=value` (command line
//! beats config file beats preset). Output tables and their columns:
//!
//! * norm series: `t,l2_u,l2_v,log_norm_sum`
//! * profiles:    `x,u,v`
//! * sweeps:      `sigma,lyap_mean,lyap_ci95,bound_negomega,n_real`
//! * mode tables: `k,mu,lambda_re_max_det,lyap_mean,lyap_ci95`
//! * dispersion:  `k,mu,w,z,discriminant,lambda_re_max,lambda1_re,lambda1_im,lambda2_re,lambda2_im,unstable`
//! * derived:     `name,value`

use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Origin, SystemKind};
use super::table::{fmt_g17, Cell, ResultTable};
use super::CliError;
use crate::analysis::{
    log_norm_series, per_mode_lyapunov, sigma_sweep, EnsembleOpts, ModeExponentRow, SweepAxis,
    SweepOpts, SweepRow,
};
use crate::sde::{
    initial_condition, simulate_field, FieldKind, FieldProblem, FieldState, FieldTrajectory,
    InitialKind,
};
use crate::spectral::{deterministic_unstable_band, dispersion, neumann_eigenpairs};
use crate::verify::derived_values;

/// All preset names, in documentation order.
pub const PRESET_NAMES: [&str; 11] = [
    "lin-turing",
    "lin-suppress-sweep",
    "lin-global",
    "lin-destab-sweep",
    "lin-destab-modes",
    "nl-turing",
    "nl-suppress",
    "nl-small-noise",
    "nl-big-noise",
    "dispersion",
    "derived-values",
];

/// One-line description per preset for `--help`.
pub const PRESET_DOCS: &[(&str, &str)] = &[
    ("lin-turing", "linearized field, no noise: diffusion-driven instability (norms, final profile, mode table, dispersion)"),
    ("lin-suppress-sweep", "equal-intensity sweep sigma = 0..2 with certified bound, plus per-sigma norm series"),
    ("lin-global", "linearized field at sigma_u = sigma_v = 2 from far initial data: global decay"),
    ("lin-destab-sweep", "sigma_u = 0 sweep over sigma_v on the diffusion-stable set, plus per-sigma norm series"),
    ("lin-destab-modes", "per-mode exponents at sigma_u = 0, sigma_v = 5, plus field norms and final profile"),
    ("nl-turing", "nonlinear field, no noise: pattern formation (norms, final profile)"),
    ("nl-suppress", "nonlinear field at sigma_u = sigma_v = 1.25: decay to equilibrium"),
    ("nl-small-noise", "nonlinear field, sigma_u = 0, sigma_v = 0.2: stability preserved"),
    ("nl-big-noise", "nonlinear field, sigma_u = 0, sigma_v = 3: noise-induced instability (snapshot at t = 20)"),
    ("dispersion", "per-mode characteristic table for the configured parameters and noise"),
    ("derived-values", "recompute the derived reference quantities as name,value rows"),
];

/// Configuration deltas of a named preset on top of the global defaults.
pub fn preset_config(name: &str) -> Option<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut set = |pairs: &[(&str, &str)], cfg: &mut ExperimentConfig| {
        for (k, v) in pairs {
            cfg.set(k, v, Origin::Preset).expect("preset keys are valid");
        }
    };
    match name {
        "lin-turing" => set(
            &[("system", "linear"), ("n_realizations", "1")],
            &mut cfg,
        ),
        "lin-suppress-sweep" => set(
            &[
                ("system", "linear"),
                ("sweep", "0,0.2,0.4,0.6,0.8,1.0,1.2,1.4,1.6,1.8,2.0"),
            ],
            &mut cfg,
        ),
        "lin-global" => set(
            &[
                ("system", "linear"),
                ("sigma_u", "2"),
                ("sigma_v", "2"),
                ("amplitude", "10"),
            ],
            &mut cfg,
        ),
        "lin-destab-sweep" => set(
            &[
                ("system", "linear"),
                ("d_u", "2e-3"),
                ("d_v", "1e-3"),
                ("T", "60"),
                ("sweep", "0,0.5,1,1.5,2,3,5"),
            ],
            &mut cfg,
        ),
        "lin-destab-modes" => set(
            &[
                ("system", "linear"),
                ("d_u", "2e-3"),
                ("d_v", "1e-3"),
                ("T", "60"),
                ("sigma_u", "0"),
                ("sigma_v", "5"),
            ],
            &mut cfg,
        ),
        "nl-turing" => set(&[("system", "nonlinear")], &mut cfg),
        "nl-suppress" => set(
            &[
                ("system", "nonlinear"),
                ("sigma_u", "1.25"),
                ("sigma_v", "1.25"),
            ],
            &mut cfg,
        ),
        "nl-small-noise" => set(
            &[
                ("system", "nonlinear"),
                ("B", "1.95"),
                ("d_u", "0.001"),
                ("d_v", "0.002"),
                ("T", "60"),
                ("sigma_u", "0"),
                ("sigma_v", "0.2"),
            ],
            &mut cfg,
        ),
        "nl-big-noise" => set(
            &[
                ("system", "nonlinear"),
                ("B", "1.95"),
                ("d_u", "0.001"),
                ("d_v", "0.002"),
                ("T", "60"),
                ("sigma_u", "0"),
                ("sigma_v", "3.0"),
                ("snapshot_stride", "4000"),
            ],
            &mut cfg,
        ),
        "dispersion" => {}
        "derived-values" => {}
        _ => return None,
    }
    cfg.preset = Some(name.to_string());
    Some(cfg)
}

fn norms_table(cfg: &ExperimentConfig, traj: &FieldTrajectory, name: &str) -> Result<ResultTable, CliError> {
    let mut table = ResultTable::new(
        vec!["t", "l2_u", "l2_v", "log_norm_sum"],
        cfg.metadata(name),
    );
    let series = log_norm_series(traj)?;
    for (i, (t, log_sum)) in series.into_iter().enumerate() {
        table.push_row(vec![
            Cell::Float(t),
            Cell::Float(traj.l2_u[i]),
            Cell::Float(traj.l2_v[i]),
            Cell::Float(log_sum),
        ]);
    }
    Ok(table)
}

fn profile_table(cfg: &ExperimentConfig, state: &FieldState, name: &str) -> ResultTable {
    let grid = cfg.grid();
    let mut table = ResultTable::new(vec!["x", "u", "v"], cfg.metadata(name));
    for (i, x) in grid.nodes().enumerate() {
        table.push_row(vec![
            Cell::Float(x),
            Cell::Float(state.u[i]),
            Cell::Float(state.v[i]),
        ]);
    }
    table
}

fn sweep_table(cfg: &ExperimentConfig, rows: &[SweepRow], name: &str) -> ResultTable {
    let mut table = ResultTable::new(
        vec!["sigma", "lyap_mean", "lyap_ci95", "bound_negomega", "n_real"],
        cfg.metadata(name),
    );
    for row in rows {
        table.push_row(vec![
            Cell::Float(row.sigma),
            Cell::Float(row.lyap_mean),
            Cell::Float(row.ci95_halfwidth),
            Cell::Float(row.theoretical_bound.unwrap_or(f64::NAN)),
            Cell::Int(row.n_realizations as i64),
        ]);
    }
    table
}

fn modes_table(cfg: &ExperimentConfig, rows: &[ModeExponentRow], name: &str) -> ResultTable {
    let mut table = ResultTable::new(
        vec!["k", "mu", "lambda_re_max_det", "lyap_mean", "lyap_ci95"],
        cfg.metadata(name),
    );
    for row in rows {
        table.push_row(vec![
            Cell::Int(row.k as i64),
            Cell::Float(row.mu),
            Cell::Float(row.lambda_re_max_det),
            Cell::Float(row.lyap_mean),
            Cell::Float(row.lyap_ci95),
        ]);
    }
    table
}

fn field_problem(cfg: &ExperimentConfig) -> FieldProblem {
    FieldProblem {
        kind: match cfg.system {
            SystemKind::Linear => FieldKind::Linear,
            SystemKind::Nonlinear => FieldKind::Nonlinear,
        },
        params: cfg.params(),
        noise: cfg.noise(),
        grid: cfg.grid(),
        time: cfg.time_grid(),
        record_stride: cfg.record_stride,
        snapshot_stride: (cfg.snapshot_stride > 0).then_some(cfg.snapshot_stride),
    }
}

fn initial_kind(cfg: &ExperimentConfig) -> InitialKind {
    match cfg.system {
        SystemKind::Linear => InitialKind::Deviation {
            amplitude: cfg.amplitude,
        },
        SystemKind::Nonlinear => InitialKind::AboutEquilibrium {
            amplitude: cfg.amplitude,
        },
    }
}

/// Run one field experiment per the configuration and write its norm series,
/// final profile, and any snapshots.
fn run_field(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let problem = field_problem(cfg);
    let ic = initial_condition(initial_kind(cfg), &problem.params, &problem.grid, cfg.seed);
    let traj = simulate_field(&problem, &ic, cfg.seed)?;
    let mut written = Vec::new();
    written.push(norms_table(cfg, &traj, "norms")?.write_csv(&out.join("norms.csv"))?);
    written.push(
        profile_table(cfg, &traj.final_state, "profile_final")
            .write_csv(&out.join("profile_final.csv"))?,
    );
    for snapshot in &traj.snapshots {
        let label = format!("profile_t{:.0}", snapshot.t);
        written.push(
            profile_table(cfg, snapshot, &label).write_csv(&out.join(format!("{label}.csv")))?,
        );
    }
    Ok(written)
}

fn ensemble_opts(cfg: &ExperimentConfig) -> EnsembleOpts {
    EnsembleOpts {
        n_realizations: cfg.n_realizations,
        base_seed: cfg.seed,
        fit_start_frac: cfg.fit_start_frac,
        renorm_threshold: cfg.renorm_threshold,
    }
}

/// Run a sweep preset: ensemble sweep table plus one single-seed field norm
/// series per intensity value (the curves the sweep summarizes).
fn run_sweep(cfg: &ExperimentConfig, axis: SweepAxis, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let values = cfg.sweep.clone().unwrap_or_else(|| vec![0.0]);
    let params = cfg.params();
    let grid = cfg.grid();
    let tg = cfg.time_grid();
    let modes = neumann_eigenpairs(cfg.length, cfg.mode_count)?;
    let opts = SweepOpts {
        ensemble: ensemble_opts(cfg),
        use_field: false,
        field_amplitude: cfg.amplitude,
    };
    let rows = sigma_sweep(&params, axis, &values, &grid, &tg, &modes, &opts)?;
    let mut written = vec![sweep_table(cfg, &rows, "sweep").write_csv(&out.join("sweep.csv"))?];

    for &sigma in &values {
        let mut run_cfg = cfg.clone();
        let (su, sv) = match axis {
            SweepAxis::SameIntensity => (sigma, sigma),
            SweepAxis::VOnly => (0.0, sigma),
        };
        run_cfg.sigma_u = su;
        run_cfg.sigma_v = sv;
        let problem = field_problem(&run_cfg);
        let ic = initial_condition(initial_kind(&run_cfg), &problem.params, &problem.grid, cfg.seed);
        let traj = simulate_field(&problem, &ic, cfg.seed)?;
        let label = match axis {
            SweepAxis::SameIntensity => format!("norms_sigma_{sigma}"),
            SweepAxis::VOnly => format!("norms_sigma_v_{sigma}"),
        };
        written.push(
            norms_table(&run_cfg, &traj, &label)?.write_csv(&out.join(format!("{label}.csv")))?,
        );
    }
    Ok(written)
}

fn run_mode_table(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let params = cfg.params();
    let tg = cfg.time_grid();
    let modes = neumann_eigenpairs(cfg.length, cfg.modes_table)?;
    let rows = per_mode_lyapunov(&params, cfg.noise(), &modes, &tg, &ensemble_opts(cfg))?;
    Ok(vec![
        modes_table(cfg, &rows, "modes").write_csv(&out.join("modes.csv"))?
    ])
}

fn run_dispersion(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let params = cfg.params();
    let modes = neumann_eigenpairs(cfg.length, cfg.mode_count)?;
    let points = dispersion(&params, cfg.noise(), &modes);
    let band = deterministic_unstable_band(&params, &modes);
    let mut meta = cfg.metadata("dispersion");
    meta.push((
        "deterministic_unstable_band".to_string(),
        if band.is_empty() {
            "empty".to_string()
        } else {
            format!("{}..{}", band[0], band[band.len() - 1])
        },
    ));
    let mut table = ResultTable::new(
        vec![
            "k",
            "mu",
            "w",
            "z",
            "discriminant",
            "lambda_re_max",
            "lambda1_re",
            "lambda1_im",
            "lambda2_re",
            "lambda2_im",
            "unstable",
        ],
        meta,
    );
    for p in &points {
        table.push_row(vec![
            Cell::Int(p.k as i64),
            Cell::Float(p.mu),
            Cell::Float(p.w),
            Cell::Float(p.z),
            Cell::Float(p.discriminant),
            Cell::Float(p.lambda_re_max),
            Cell::Float(p.lambda_pair.0.re),
            Cell::Float(p.lambda_pair.0.im),
            Cell::Float(p.lambda_pair.1.re),
            Cell::Float(p.lambda_pair.1.im),
            Cell::Int((p.lambda_re_max > 0.0) as i64),
        ]);
    }
    Ok(vec![table.write_csv(&out.join("dispersion.csv"))?])
}

fn run_derived_values(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = derived_values()?;
    let mut meta = cfg.metadata("derived-values");
    meta.push((
        "note".to_string(),
        "values recomputed from the canonical parameter sets, not the active config".to_string(),
    ));
    // name,value with names in the free-text column; names contain no commas.
    let mut out_text = String::new();
    for (k, v) in &meta {
        out_text.push_str(&format!("# {k} = {v}\n"));
    }
    out_text.push_str("name,value\n");
    for (name, value) in rows {
        out_text.push_str(&format!("{name},{}\n", fmt_g17(value)));
    }
    let path = out.join("derived.csv");
    let io_err = |source: std::io::Error| CliError::Io {
        path: path.clone(),
        source: source.to_string(),
    };
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, out_text).map_err(io_err)?;
    std::fs::rename(&tmp, &path).map_err(io_err)?;
    Ok(vec![path])
}

/// Execute the configured preset, writing every table under `out`.
pub fn run_preset(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let name = cfg.preset.as_deref().unwrap_or("run");
    match name {
        "run" | "lin-global" | "nl-turing" | "nl-suppress" | "nl-small-noise" | "nl-big-noise" => {
            run_field(cfg, out)
        }
        "lin-turing" => {
            let mut written = run_field(cfg, out)?;
            written.extend(run_mode_table(cfg, out)?);
            written.extend(run_dispersion(cfg, out)?);
            Ok(written)
        }
        "lin-suppress-sweep" => run_sweep(cfg, SweepAxis::SameIntensity, out),
        "lin-destab-sweep" => run_sweep(cfg, SweepAxis::VOnly, out),
        "lin-destab-modes" => {
            let mut written = run_field(cfg, out)?;
            written.extend(run_mode_table(cfg, out)?);
            Ok(written)
        }
        "dispersion" => run_dispersion(cfg, out),
        "derived-values" => run_derived_values(cfg, out),
        other => Err(CliError::UnknownPreset {
            name: other.to_string(),
        }),
    }
}
