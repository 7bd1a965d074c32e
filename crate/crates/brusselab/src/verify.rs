//! Independent brute-force oracles: series matrix exponential, strong
//! convergence of the stochastic integrator against the closed-form mode
//! solution, mode-vs-field consistency of the spatial discretization, and
//! the discrete/continuous eigenvalue gap.
//!
//! These ship in the artifact (not only in tests) so that derived reference
//! values can be recomputed and emitted as a CSV report (`derived-values`
//! preset) instead of living as unexplained constants.

use crate::analysis::{fit_lyapunov, project_modes, AnalysisError};
use crate::exec::try_ensemble_map;
use crate::linalg::{expm2, Mat2};
use crate::model::{BrusselatorParams, NoiseIntensities};
use crate::sde::{
    em_step_mode, laplacian_neumann, FieldState, NoisePath, SdeError, SpatialGrid, TimeGrid,
};
use crate::spectral::{
    critical_sigma_same, decay_rate_bound, deterministic_unstable_band, dispersion,
    exact_mode_solution, neumann_eigenpairs, ModeMatrices, SpectralError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("step sizes must be strictly decreasing integer multiples of the finest (got {0:?})")]
    IncompatibleSteps(Vec<f64>),
    #[error("need at least two step sizes and one path")]
    TooFewLevels,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Taylor-series matrix exponential with scaling and squaring; the oracle
/// against which the closed-form [`expm2`] is checked.
///
/// Terms are added until the next term's norm drops below `tol` times the
/// partial sum's norm; the scaling is undone by exact repeated squaring.
pub fn expm_series(m: &Mat2, tol: f64) -> Mat2 {
    let norm = m.norm_fro();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.scale(0.5f64.powi(squarings as i32));
    let mut sum = Mat2::IDENTITY;
    let mut term = Mat2::IDENTITY;
    let mut k = 1.0;
    loop {
        term = (term * scaled).scale(1.0 / k);
        sum = sum + term;
        if term.norm_fro() <= tol * sum.norm_fro() || k > 60.0 {
            break;
        }
        k += 1.0;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Strong-convergence study of the Euler-Maruyama mode integrator against
/// the exact commuting-case solution, coupled path-by-path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub dts: Vec<f64>,
    pub mean_errors: Vec<f64>,
    /// Log-log slope of mean error vs dt.
    pub slope: f64,
}

/// Couple the integrator and the exact solution on the same Brownian paths
/// (coarse increments are sums over the finest path) and fit the strong
/// order from the mean terminal error.
#[allow(clippy::too_many_arguments)]
pub fn strong_error_em_vs_exact(
    params: &BrusselatorParams,
    sigma_same: f64,
    mode_k: usize,
    length: f64,
    horizon: f64,
    dts: &[f64],
    n_paths: usize,
    base_seed: u64,
) -> Result<ConvergenceStudy, VerifyError> {
    if dts.len() < 2 || n_paths == 0 {
        return Err(VerifyError::TooFewLevels);
    }
    let fine_dt = dts[dts.len() - 1];
    let mut factors = Vec::with_capacity(dts.len());
    for pair in dts.windows(2) {
        if pair[1] >= pair[0] {
            return Err(VerifyError::IncompatibleSteps(dts.to_vec()));
        }
    }
    for &dt in dts {
        let f = dt / fine_dt;
        if (f - f.round()).abs() > 1e-9 || f < 1.0 {
            return Err(VerifyError::IncompatibleSteps(dts.to_vec()));
        }
        factors.push(f.round() as usize);
    }
    let modes = neumann_eigenpairs(length, mode_k)?;
    let coeffs = params.linearize();
    let mm = ModeMatrices::new(
        &coeffs,
        params.d_u,
        params.d_v,
        NoiseIntensities::same(sigma_same),
        &modes[mode_k - 1],
    );
    let fine_tg = TimeGrid::new(horizon, fine_dt)?;
    let v0 = [1.0, 1.0];

    let per_path: Vec<Vec<f64>> = try_ensemble_map(n_paths, |p| {
        let fine = NoisePath::sample_stream(&fine_tg, base_seed, p as u64);
        let w_t: f64 = fine.increments.iter().sum();
        let exact = exact_mode_solution(&mm, v0, horizon, w_t)?;
        let mut errors = Vec::with_capacity(dts.len());
        for (&dt, &factor) in dts.iter().zip(&factors) {
            let coarse = fine.coarsen(factor);
            let mut v = v0;
            for &dw in &coarse.increments {
                v = em_step_mode(v, &mm, dw, dt);
            }
            let err = ((v[0] - exact[0]).powi(2) + (v[1] - exact[1]).powi(2)).sqrt();
            errors.push(err);
        }
        Ok::<_, VerifyError>(errors)
    })?;

    let mean_errors: Vec<f64> = (0..dts.len())
        .map(|l| per_path.iter().map(|e| e[l]).sum::<f64>() / n_paths as f64)
        .collect();
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .zip(&mean_errors)
        .map(|(&dt, &e)| (dt.ln(), e.ln()))
        .collect();
    // Two-point slope when the window is too thin for the regression helper.
    let slope = if pts.len() >= 10 {
        fit_lyapunov(&pts, (f64::NEG_INFINITY, f64::INFINITY))?.slope
    } else {
        ols_slope(&pts)
    };
    Ok(ConvergenceStudy {
        dts: dts.to_vec(),
        mean_errors,
        slope,
    })
}

fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let xm = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let ym = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|(x, _)| (x - xm) * (x - xm)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - xm) * (y - ym)).sum();
    sxy / sxx
}

/// Outcome of evolving the linear field from a pure sampled eigenmode and
/// comparing its projection against the 2-vector recursion with the discrete
/// eigenvalue `mu_k^h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFieldDeviation {
    /// Max relative deviation of `(g_k, h_k)` from the reference 2-vector.
    pub max_rel_deviation: f64,
    /// Max absolute coefficient leaked into any other mode.
    pub max_cross_leakage: f64,
}

/// Deterministic cross-check that the field integrator diagonalizes on the
/// discrete cosine basis: both sides run the identical explicit recursion,
/// so any deviation beyond roundoff exposes a stencil or projection bug.
pub fn mode_vs_field_consistency(
    params: &BrusselatorParams,
    mode_k: usize,
    tg: &TimeGrid,
    grid: &SpatialGrid,
) -> Result<ModeFieldDeviation, VerifyError> {
    let modes = neumann_eigenpairs(grid.length, grid.cells)?;
    if mode_k > grid.cells {
        return Err(AnalysisError::TooManyModes {
            modes: mode_k,
            cells: grid.cells,
        }
        .into());
    }
    let coeffs = params.linearize();
    let mu_h = grid.discrete_eigenvalue(mode_k);
    let drift_h = ModeMatrices::with_mu(
        &coeffs,
        params.d_u,
        params.d_v,
        NoiseIntensities::OFF,
        mode_k,
        mu_h,
    )
    .drift;

    let mode = modes[mode_k - 1];
    let mut state = FieldState::new(
        grid.nodes().map(|x| mode.eval(x)).collect(),
        vec![0.0; grid.cells],
        0.0,
    );
    let mut reference = [1.0, 0.0];
    let mut max_rel_deviation: f64 = 0.0;
    let mut max_cross_leakage: f64 = 0.0;
    let dt = tg.dt;

    let mut compare = |state: &FieldState, reference: [f64; 2]| -> Result<(), VerifyError> {
        let proj = project_modes(state, &modes, grid)?;
        let got = proj[mode_k - 1];
        let scale = (reference[0] * reference[0] + reference[1] * reference[1])
            .sqrt()
            .max(1e-300);
        let dev = ((got[0] - reference[0]).powi(2) + (got[1] - reference[1]).powi(2)).sqrt() / scale;
        max_rel_deviation = max_rel_deviation.max(dev);
        for (j, c) in proj.iter().enumerate() {
            if j != mode_k - 1 {
                max_cross_leakage = max_cross_leakage.max(c[0].abs()).max(c[1].abs());
            }
        }
        Ok(())
    };

    compare(&state, reference)?;
    let mut lap_u = vec![0.0; grid.cells];
    let mut lap_v = vec![0.0; grid.cells];
    let record_stride = (tg.n_steps / 64).max(1);
    for j in 0..tg.n_steps {
        laplacian_neumann_step(
            &mut state,
            &coeffs,
            params.d_u,
            params.d_v,
            dt,
            grid.dx,
            &mut lap_u,
            &mut lap_v,
        );
        let step = j + 1;
        state.t = step as f64 * dt;
        let drift = drift_h.mul_vec(reference);
        reference = [
            reference[0] + dt * drift[0],
            reference[1] + dt * drift[1],
        ];
        if step % record_stride == 0 || step == tg.n_steps {
            compare(&state, reference)?;
        }
    }
    Ok(ModeFieldDeviation {
        max_rel_deviation,
        max_cross_leakage,
    })
}

#[allow(clippy::too_many_arguments)]
fn laplacian_neumann_step(
    state: &mut FieldState,
    coeffs: &crate::model::LinearCoefficients,
    d_u: f64,
    d_v: f64,
    dt: f64,
    dx: f64,
    lap_u: &mut [f64],
    lap_v: &mut [f64],
) {
    lap_u.copy_from_slice(&laplacian_neumann(&state.u, dx));
    lap_v.copy_from_slice(&laplacian_neumann(&state.v, dx));
    for i in 0..state.u.len() {
        let (ui, vi) = (state.u[i], state.v[i]);
        state.u[i] = ui + (d_u * lap_u[i] + coeffs.a * ui + coeffs.b * vi) * dt;
        state.v[i] = vi + (d_v * lap_v[i] + coeffs.c * ui + coeffs.d * vi) * dt;
    }
}

/// Discretization gap of the Laplacian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGapRow {
    pub k: usize,
    pub mu_continuous: f64,
    pub mu_discrete: f64,
    /// `(mu - mu^h) / mu`, zero for the constant mode.
    pub rel_gap: f64,
}

/// Continuous vs stencil eigenvalues for the first `mode_count` modes.
pub fn discrete_vs_continuous_mu(
    grid: &SpatialGrid,
    mode_count: usize,
) -> Result<Vec<ModeGapRow>, VerifyError> {
    if mode_count > grid.cells {
        return Err(AnalysisError::TooManyModes {
            modes: mode_count,
            cells: grid.cells,
        }
        .into());
    }
    let modes = neumann_eigenpairs(grid.length, mode_count)?;
    Ok(modes
        .iter()
        .map(|m| {
            let mu_h = grid.discrete_eigenvalue(m.k);
            let rel_gap = if m.mu > 0.0 { (m.mu - mu_h) / m.mu } else { 0.0 };
            ModeGapRow {
                k: m.k,
                mu_continuous: m.mu,
                mu_discrete: mu_h,
                rel_gap,
            }
        })
        .collect())
}

/// Recompute the reference quantities quoted throughout the docs and tests:
/// band edges, spectral abscissa, stabilization threshold, certificate
/// values, strong order, discretization gaps. Emitted as the
/// `derived-values` CSV report.
pub fn derived_values() -> Result<Vec<(&'static str, f64)>, VerifyError> {
    let mut rows = Vec::new();
    let turing = BrusselatorParams::TURING;
    let coeffs = turing.linearize();

    // Roots of z(mu, 0) = d_u d_v mu^2 - (a d_v + d d_u) mu + D.
    let dudv = turing.d_u * turing.d_v;
    let lin = coeffs.a * turing.d_v + coeffs.d * turing.d_u;
    let (hi, lo) = crate::linalg::roots_from_trace_det(lin / dudv, coeffs.det / dudv);
    rows.push(("turing_band_mu_lower", lo.re));
    rows.push(("turing_band_mu_upper", hi.re));

    let modes = neumann_eigenpairs(1.0, 200)?;
    let band = deterministic_unstable_band(&turing, &modes);
    rows.push(("turing_band_k_min", band.first().copied().unwrap_or(0) as f64));
    rows.push(("turing_band_k_max", band.last().copied().unwrap_or(0) as f64));
    rows.push(("turing_band_size", band.len() as f64));

    let cs = critical_sigma_same(&turing, 1.0, 300)?;
    rows.push(("turing_lambda_star", cs.lambda_star));
    rows.push(("turing_lambda_star_mode_k", cs.argmax_mode as f64));
    rows.push((
        "turing_lambda_star_mu",
        neumann_eigenpairs(1.0, cs.argmax_mode)?[cs.argmax_mode - 1].mu,
    ));
    rows.push(("turing_sigma_crit", cs.sigma_crit));
    rows.push(("turing_sigma0_certificate", (2.0 * (turing.b - 1.0)).sqrt()));
    rows.push((
        "turing_omega_at_sigma_2",
        decay_rate_bound(&turing, 2.0).unwrap_or(f64::NAN),
    ));

    let stable = BrusselatorParams::STABLE;
    rows.push((
        "stable_band_size",
        deterministic_unstable_band(&stable, &modes).len() as f64,
    ));
    rows.push((
        "stable_sigma_crit",
        critical_sigma_same(&stable, 1.0, 200)?.sigma_crit,
    ));
    let near = BrusselatorParams::NEAR_CRITICAL;
    rows.push((
        "near_critical_band_size",
        deterministic_unstable_band(&near, &modes).len() as f64,
    ));
    rows.push((
        "near_critical_ode_decay_rate",
        near.linearize().classify().decay_rate,
    ));

    // Deterministic dispersion maximum on the discrete (N = 50) grid.
    let grid = SpatialGrid::from_spacing(1.0, 0.02)?;
    let lambda_h = (1..=grid.cells)
        .map(|k| {
            let mm = ModeMatrices::with_mu(
                &coeffs,
                turing.d_u,
                turing.d_v,
                NoiseIntensities::OFF,
                k,
                grid.discrete_eigenvalue(k),
            );
            crate::linalg::eig2(&mm.drift).unwrap().0.re
        })
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(("turing_lambda_star_discrete_n50", lambda_h));

    let study = strong_error_em_vs_exact(
        &turing,
        1.0,
        20,
        1.0,
        1.0,
        &[1e-2, 5e-3, 2.5e-3, 1.25e-3],
        200,
        2024,
    )?;
    rows.push(("em_strong_order_slope", study.slope));

    let gaps = discrete_vs_continuous_mu(&grid, 12)?;
    rows.push(("mu_rel_gap_k10_dx0.02", gaps[9].rel_gap));

    let sigma_sweep_example = dispersion(&turing, NoiseIntensities::same(2.0), &modes)
        .iter()
        .map(|p| p.lambda_re_max)
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(("turing_max_re_lambda_at_sigma_2", sigma_sweep_example));
    Ok(rows)
}
