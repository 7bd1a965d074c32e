//! Lyapunov-exponent estimation and the experiment-level statistics built
//! from it: per-mode exponent tables, noise-intensity sweeps with ensemble
//! confidence intervals, and the certified decay-rate bound curve.
//!
//! The estimator is deliberately plain: the pathwise exponent is read off as
//! the least-squares slope of `ln(norm)` against time over a fit window that
//! skips the transient (default `[0.3 T, T]`), and ensembles report the mean
//! slope with a 95% normal-approximation confidence interval. Per-mode
//! exponents are computed from the 2x2 mode SDE directly; sweeps can use
//! either the dominant mode (the deterministic dispersion maximizer) or full
//! field runs.

use crate::exec::try_ensemble_map;
use crate::model::{BrusselatorParams, NoiseIntensities};
use crate::sde::{
    initial_condition_from_rng, simulate_field_with_path, simulate_mode_with_path, stream_rng,
    FieldKind, FieldProblem, FieldState, FieldTrajectory, InitialKind, NoisePath, SdeError,
    SpatialGrid, TimeGrid,
};
use crate::spectral::{decay_rate_bound, dispersion, EigenMode, ModeMatrices};

/// Initial vector for mode-level ensembles; any generic direction works
/// because the pathwise exponent does not depend on it.
const MODE_V0: [f64; 2] = [1.0, 1.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("trajectory norm vanished at t = {t}; log-norm undefined")]
    DegenerateTrajectory { t: f64 },
    #[error("need at least {min} samples in the fit window, found {found}")]
    TooFewSamples { found: usize, min: usize },
    #[error("fit window start {start} must precede end {end}")]
    BadWindow { start: f64, end: f64 },
    #[error("cannot project {modes} modes onto a grid with {cells} cells")]
    TooManyModes { modes: usize, cells: usize },
    #[error("sweep needs at least one intensity value")]
    EmptySweep,
    #[error("mode k = {k}, realization {realization}: {source}")]
    Member {
        k: usize,
        realization: usize,
        source: SdeError,
    },
}

/// Fitted log-norm slope over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    /// Least-squares slope of ln(norm) vs t: the exponent estimate.
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from residual variance.
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

/// `(t, ln(||u|| + ||v||))` per recorded instant.
pub fn log_norm_series(traj: &FieldTrajectory) -> Result<Vec<(f64, f64)>, AnalysisError> {
    traj.times
        .iter()
        .zip(traj.l2_u.iter().zip(&traj.l2_v))
        .map(|(&t, (&a, &b))| {
            let total = a + b;
            if total <= 0.0 {
                Err(AnalysisError::DegenerateTrajectory { t })
            } else {
                Ok((t, total.ln()))
            }
        })
        .collect()
}

/// Ordinary least squares of `y` on `t` restricted to `window` (inclusive).
pub fn fit_lyapunov(
    series: &[(f64, f64)],
    window: (f64, f64),
) -> Result<LyapunovEstimate, AnalysisError> {
    let (start, end) = window;
    if !(start < end) {
        return Err(AnalysisError::BadWindow { start, end });
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= start && *t <= end)
        .collect();
    let n = pts.len();
    if n < 10 {
        return Err(AnalysisError::TooFewSamples { found: n, min: 10 });
    }
    let nf = n as f64;
    let t_mean = pts.iter().map(|(t, _)| t).sum::<f64>() / nf;
    let y_mean = pts.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (t, y) in &pts {
        stt += (t - t_mean) * (t - t_mean);
        sty += (t - t_mean) * (y - y_mean);
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let ss_res: f64 = pts
        .iter()
        .map(|(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum();
    let stderr = if n > 2 {
        (ss_res / ((nf - 2.0) * stt)).sqrt()
    } else {
        0.0
    };
    Ok(LyapunovEstimate {
        slope,
        intercept,
        stderr,
        window,
        n_points: n,
    })
}

/// Projection coefficients `(g_k, h_k)` of `(u, v)` onto the first modes by
/// midpoint quadrature, exact for the sampled cosine basis.
pub fn project_modes(
    state: &FieldState,
    modes: &[EigenMode],
    grid: &SpatialGrid,
) -> Result<Vec<[f64; 2]>, AnalysisError> {
    if modes.len() > grid.cells {
        return Err(AnalysisError::TooManyModes {
            modes: modes.len(),
            cells: grid.cells,
        });
    }
    Ok(modes
        .iter()
        .map(|mode| {
            let mut g = 0.0;
            let mut h = 0.0;
            for (i, x) in grid.nodes().enumerate() {
                let phi = mode.eval(x);
                g += state.u[i] * phi;
                h += state.v[i] * phi;
            }
            [g * grid.dx, h * grid.dx]
        })
        .collect())
}

/// Rebuild `(u, v)` from projection coefficients; with all `N` modes this is
/// the inverse of [`project_modes`] up to roundoff.
pub fn reconstruct_from_modes(
    coefficients: &[[f64; 2]],
    modes: &[EigenMode],
    grid: &SpatialGrid,
) -> FieldState {
    assert_eq!(coefficients.len(), modes.len());
    let mut u = vec![0.0; grid.cells];
    let mut v = vec![0.0; grid.cells];
    for (c, mode) in coefficients.iter().zip(modes) {
        for (i, x) in grid.nodes().enumerate() {
            let phi = mode.eval(x);
            u[i] += c[0] * phi;
            v[i] += c[1] * phi;
        }
    }
    FieldState { u, v, t: 0.0 }
}

/// Ensemble controls shared by the estimation drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOpts {
    pub n_realizations: usize,
    pub base_seed: u64,
    /// Fit window is `[fit_start_frac * T, T]`.
    pub fit_start_frac: f64,
    pub renorm_threshold: f64,
}

impl Default for EnsembleOpts {
    fn default() -> Self {
        EnsembleOpts {
            n_realizations: 100,
            base_seed: 42,
            fit_start_frac: 0.3,
            renorm_threshold: 1e6,
        }
    }
}

/// Per-mode exponent statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeExponentRow {
    pub k: usize,
    pub mu: f64,
    /// Deterministic dispersion value `Re lambda_max(A_k)` for reference.
    pub lambda_re_max_det: f64,
    pub lyap_mean: f64,
    pub lyap_ci95: f64,
    pub n_realizations: usize,
}

fn mean_and_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Derived stream id for `(row, realization)` pairs; keeps every ensemble
/// member on its own ChaCha stream no matter how work is scheduled.
fn member_stream(row: usize, realization: usize) -> u64 {
    ((row as u64) << 32) | realization as u64
}

fn mode_slope(
    mm: &ModeMatrices,
    tg: &TimeGrid,
    opts: &EnsembleOpts,
    row: usize,
    realization: usize,
) -> Result<f64, AnalysisError> {
    let path = NoisePath::sample_stream(tg, opts.base_seed, member_stream(row, realization));
    let traj = simulate_mode_with_path(mm, MODE_V0, tg, &path, opts.renorm_threshold).map_err(
        |source| AnalysisError::Member {
            k: mm.k,
            realization,
            source,
        },
    )?;
    let window = (opts.fit_start_frac * tg.horizon, tg.horizon);
    Ok(fit_lyapunov(&traj.series(), window)?.slope)
}

/// Ensemble-mean pathwise exponent of each mode SDE.
pub fn per_mode_lyapunov(
    params: &BrusselatorParams,
    noise: NoiseIntensities,
    modes: &[EigenMode],
    tg: &TimeGrid,
    opts: &EnsembleOpts,
) -> Result<Vec<ModeExponentRow>, AnalysisError> {
    let coeffs = params.linearize();
    let deterministic = dispersion(params, NoiseIntensities::OFF, modes);
    try_ensemble_map(modes.len(), |idx| {
        let mode = &modes[idx];
        let mm = ModeMatrices::new(&coeffs, params.d_u, params.d_v, noise, mode);
        let slopes = (0..opts.n_realizations)
            .map(|r| mode_slope(&mm, tg, opts, mode.k, r))
            .collect::<Result<Vec<_>, _>>()?;
        let (lyap_mean, lyap_ci95) = mean_and_ci(&slopes);
        Ok(ModeExponentRow {
            k: mode.k,
            mu: mode.mu,
            lambda_re_max_det: deterministic[idx].lambda_re_max,
            lyap_mean,
            lyap_ci95,
            n_realizations: opts.n_realizations,
        })
    })
}

/// Which intensity the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// `sigma_u = sigma_v = sigma`.
    SameIntensity,
    /// `sigma_u = 0`, `sigma_v = sigma`.
    VOnly,
}

impl SweepAxis {
    pub fn noise(&self, sigma: f64) -> NoiseIntensities {
        match self {
            SweepAxis::SameIntensity => NoiseIntensities::same(sigma),
            SweepAxis::VOnly => NoiseIntensities::v_only(sigma),
        }
    }
}

/// One row of an intensity sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub lyap_mean: f64,
    pub ci95_halfwidth: f64,
    pub n_realizations: usize,
    /// `-omega(sigma)` where the same-intensity certificate applies.
    pub theoretical_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOpts {
    pub ensemble: EnsembleOpts,
    /// Estimate from full linearized-field runs instead of the dominant mode.
    pub use_field: bool,
    /// Initial deviation amplitude for field runs.
    pub field_amplitude: f64,
}

impl Default for SweepOpts {
    fn default() -> Self {
        SweepOpts {
            ensemble: EnsembleOpts::default(),
            use_field: false,
            field_amplitude: 0.1,
        }
    }
}

/// Sweep the noise intensity, estimating the exponent per value over an
/// ensemble of realizations, alongside the certified bound where it applies.
pub fn sigma_sweep(
    params: &BrusselatorParams,
    axis: SweepAxis,
    values: &[f64],
    grid: &SpatialGrid,
    tg: &TimeGrid,
    modes: &[EigenMode],
    opts: &SweepOpts,
) -> Result<Vec<SweepRow>, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptySweep);
    }
    let coeffs = params.linearize();
    let ens = &opts.ensemble;
    // Dominant mode: deterministic dispersion maximizer over the scanned set.
    let dominant = dispersion(params, NoiseIntensities::OFF, modes)
        .into_iter()
        .max_by(|p, q| p.lambda_re_max.total_cmp(&q.lambda_re_max))
        .ok_or(AnalysisError::EmptySweep)?;
    let dominant_mode = modes[dominant.k - 1];
    let window = (ens.fit_start_frac * tg.horizon, tg.horizon);

    values
        .iter()
        .enumerate()
        .map(|(row, &sigma)| {
            let noise = axis.noise(sigma);
            let slopes: Vec<f64> = if opts.use_field {
                let problem = FieldProblem {
                    kind: FieldKind::Linear,
                    params: *params,
                    noise,
                    grid: *grid,
                    time: *tg,
                    record_stride: 10,
                    snapshot_stride: None,
                };
                try_ensemble_map(ens.n_realizations, |r| {
                    // Stream pairs: even for the driving path, odd for the
                    // initial-data draw.
                    let path = NoisePath::sample_stream(
                        tg,
                        ens.base_seed,
                        member_stream(row, 2 * r),
                    );
                    let mut rng = stream_rng(ens.base_seed, member_stream(row, 2 * r + 1));
                    let ic = initial_condition_from_rng(
                        InitialKind::Deviation {
                            amplitude: opts.field_amplitude,
                        },
                        params,
                        grid,
                        &mut rng,
                    );
                    let traj = simulate_field_with_path(&problem, &ic, &path).map_err(|source| {
                        AnalysisError::Member {
                            k: 0,
                            realization: r,
                            source,
                        }
                    })?;
                    Ok(fit_lyapunov(&log_norm_series(&traj)?, window)?.slope)
                })?
            } else {
                let mm = ModeMatrices::new(&coeffs, params.d_u, params.d_v, noise, &dominant_mode);
                try_ensemble_map(ens.n_realizations, |r| mode_slope(&mm, tg, ens, row, r))?
            };
            let (lyap_mean, ci95_halfwidth) = mean_and_ci(&slopes);
            let theoretical_bound = match axis {
                SweepAxis::SameIntensity => decay_rate_bound(params, sigma).map(|w| -w),
                SweepAxis::VOnly => None,
            };
            Ok(SweepRow {
                sigma,
                lyap_mean,
                ci95_halfwidth,
                n_realizations: ens.n_realizations,
                theoretical_bound,
            })
        })
        .collect()
}

/// `(sigma, -omega(sigma))` per requested intensity; `None` marks values
/// where the certificate does not apply.
pub fn theoretical_bound_curve(
    params: &BrusselatorParams,
    sigmas: &[f64],
) -> Vec<(f64, Option<f64>)> {
    sigmas
        .iter()
        .map(|&s| (s, decay_rate_bound(params, s).map(|w| -w)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{simulate_field, FieldState};
    use crate::spectral::neumann_eigenpairs;
    use approx::assert_relative_eq;

    fn fake_traj(times: Vec<f64>, norms: Vec<f64>) -> FieldTrajectory {
        let cells = 3;
        FieldTrajectory {
            l2_u: norms.clone(),
            l2_v: vec![0.0; norms.len()],
            times,
            snapshots: vec![],
            final_state: FieldState::zeros(cells),
        }
    }

    #[test]
    fn log_norm_examples() {
        // Constant norm 1 -> all zeros.
        let traj = fake_traj(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]);
        let series = log_norm_series(&traj).unwrap();
        assert!(series.iter().all(|(_, y)| *y == 0.0));

        // norm = e^{-t} at integer times -> -0, -1, -2, ...
        let times: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let norms: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let series = log_norm_series(&fake_traj(times, norms)).unwrap();
        for (i, (_, y)) in series.iter().enumerate() {
            assert_relative_eq!(*y, -(i as f64), max_relative = 1e-12);
        }

        // Zero norm is a degenerate trajectory, not -inf.
        let traj = fake_traj(vec![0.0, 1.0], vec![1.0, 0.0]);
        assert!(matches!(
            log_norm_series(&traj),
            Err(AnalysisError::DegenerateTrajectory { .. })
        ));
    }

    #[test]
    fn fit_recovers_exact_line() {
        let series: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, 3.0 - 1.2 * t)
            })
            .collect();
        let est = fit_lyapunov(&series, (0.0, 5.0)).unwrap();
        assert_relative_eq!(est.slope, -1.2, max_relative = 1e-12);
        assert_relative_eq!(est.intercept, 3.0, max_relative = 1e-12);
        assert!(est.stderr <= 1e-10);
        assert_eq!(est.n_points, 50);
    }

    #[test]
    fn fit_rejects_thin_windows() {
        let series: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 0.0)).collect();
        assert!(matches!(
            fit_lyapunov(&series, (0.0, 10.0)),
            Err(AnalysisError::TooFewSamples { found: 5, min: 10 })
        ));
        assert!(matches!(
            fit_lyapunov(&series, (3.0, 1.0)),
            Err(AnalysisError::BadWindow { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();
        let modes = neumann_eigenpairs(1.0, grid.cells).unwrap();

        // Constant field: all mass on the first (constant) mode.
        let c = 0.7;
        let state = FieldState::new(vec![c; grid.cells], vec![0.0; grid.cells], 0.0);
        let coeffs = project_modes(&state, &modes, &grid).unwrap();
        assert_relative_eq!(coeffs[0][0], c * grid.length.sqrt(), max_relative = 1e-12);
        for row in &coeffs[1..] {
            assert!(row[0].abs() <= 1e-12);
        }

        // Sampled mode 3 projects to the unit coefficient.
        let phi3: Vec<f64> = grid.nodes().map(|x| modes[2].eval(x)).collect();
        let state = FieldState::new(phi3, vec![0.0; grid.cells], 0.0);
        let coeffs = project_modes(&state, &modes, &grid).unwrap();
        assert_relative_eq!(coeffs[2][0], 1.0, max_relative = 1e-10);
        for (j, row) in coeffs.iter().enumerate() {
            if j != 2 {
                assert!(row[0].abs() <= 1e-10, "leak into mode {}", j + 1);
            }
        }

        // More modes than cells is unresolvable.
        let too_many = neumann_eigenpairs(1.0, grid.cells + 1).unwrap();
        assert!(matches!(
            project_modes(&state, &too_many, &grid),
            Err(AnalysisError::TooManyModes { .. })
        ));
    }

    #[test]
    fn parseval_and_round_trip() {
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();
        let modes = neumann_eigenpairs(1.0, grid.cells).unwrap();
        let u: Vec<f64> = grid.nodes().map(|x| (5.0 * x).sin() + 0.3).collect();
        let v: Vec<f64> = grid.nodes().map(|x| (x * x) - 0.5 * x).collect();
        let state = FieldState::new(u, v, 0.0);
        let coeffs = project_modes(&state, &modes, &grid).unwrap();

        let sum_sq: f64 = coeffs.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum();
        let norm_sq = grid.l2_norm(&state.u).powi(2) + grid.l2_norm(&state.v).powi(2);
        assert_relative_eq!(sum_sq, norm_sq, max_relative = 1e-8);

        let rebuilt = reconstruct_from_modes(&coeffs, &modes, &grid);
        for i in 0..grid.cells {
            assert_relative_eq!(rebuilt.u[i], state.u[i], max_relative = 1e-8, epsilon = 1e-10);
            assert_relative_eq!(rebuilt.v[i], state.v[i], max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn estimator_is_unbiased_on_geometric_brownian_motion() {
        // ln S_t = (mu - sigma^2/2) t + sigma W_t has a.s. exponent
        // lambda = mu - sigma^2/2; the ensemble mean over 100 members must
        // sit within 2 standard errors of it.
        let (mu, sigma) = (0.5, 1.0);
        let lambda = mu - 0.5 * sigma * sigma;
        let tg = TimeGrid::new(50.0, 0.01).unwrap();
        let slopes: Vec<f64> = (0..100)
            .map(|r| {
                let path = NoisePath::sample_stream(&tg, 777, r);
                let mut w = 0.0;
                let series: Vec<(f64, f64)> = std::iter::once((0.0, 0.0))
                    .chain(path.increments.iter().enumerate().map(|(j, dw)| {
                        w += dw;
                        let t = (j + 1) as f64 * tg.dt;
                        (t, lambda * t + sigma * w)
                    }))
                    .collect();
                fit_lyapunov(&series, (15.0, 50.0)).unwrap().slope
            })
            .collect();
        let (mean, ci) = mean_and_ci(&slopes);
        let stderr = ci / 1.96;
        assert!(
            (mean - lambda).abs() <= 2.0 * stderr,
            "mean {mean} vs lambda {lambda} (stderr {stderr})"
        );
    }

    #[test]
    fn bound_curve_examples() {
        let p = BrusselatorParams::TURING;
        let curve = theoretical_bound_curve(&p, &[1.2, 2.0, 10.0]);
        // Below threshold: not applicable.
        assert_eq!(curve[0].1, None);
        // omega(2) = 1.2.
        assert_relative_eq!(curve[1].1.unwrap(), -1.2, max_relative = 1e-14);
        // Large sigma: bound behaves like -(sigma^2/2) + (B - 1).
        assert_relative_eq!(curve[2].1.unwrap(), -(50.0 - 0.8), max_relative = 1e-14);
    }

    #[test]
    fn zero_noise_sweep_row_matches_deterministic_exponent() {
        let p = BrusselatorParams::TURING;
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();
        let tg = TimeGrid::new(30.0, 0.005).unwrap();
        let modes = neumann_eigenpairs(1.0, 100).unwrap();
        let opts = SweepOpts {
            ensemble: EnsembleOpts {
                n_realizations: 1,
                ..EnsembleOpts::default()
            },
            ..SweepOpts::default()
        };
        let rows = sigma_sweep(&p, SweepAxis::SameIntensity, &[0.0], &grid, &tg, &modes, &opts)
            .unwrap();
        let lambda_star = dispersion(&p, NoiseIntensities::OFF, &modes)
            .iter()
            .map(|pt| pt.lambda_re_max)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (rows[0].lyap_mean - lambda_star).abs() <= 0.05,
            "row {} vs lambda* {}",
            rows[0].lyap_mean,
            lambda_star
        );
        assert_eq!(rows[0].theoretical_bound, None);
    }

    #[test]
    fn field_level_zero_noise_exponent_matches_dispersion() {
        // sigma = 0 field estimate vs the discrete dispersion maximum.
        let p = BrusselatorParams::TURING;
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();
        let tg = TimeGrid::new(40.0, 0.005).unwrap();
        let problem = FieldProblem {
            kind: FieldKind::Linear,
            params: p,
            noise: NoiseIntensities::OFF,
            grid,
            time: tg,
            record_stride: 10,
            snapshot_stride: None,
        };
        let ic = crate::sde::initial_condition(
            InitialKind::Deviation { amplitude: 0.1 },
            &p,
            &grid,
            5,
        );
        let traj = simulate_field(&problem, &ic, 5).unwrap();
        let est = fit_lyapunov(&log_norm_series(&traj).unwrap(), (20.0, 40.0)).unwrap();
        // Discrete-eigenvalue dispersion maximum.
        let coeffs = p.linearize();
        let lambda_h = (1..=grid.cells)
            .map(|k| {
                let mm = ModeMatrices::with_mu(
                    &coeffs,
                    p.d_u,
                    p.d_v,
                    NoiseIntensities::OFF,
                    k,
                    grid.discrete_eigenvalue(k),
                );
                crate::linalg::eig2(&mm.drift).unwrap().0.re
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (est.slope - lambda_h).abs() <= 0.1,
            "slope {} vs lambda_h {}",
            est.slope,
            lambda_h
        );
    }
}
