//! Time integration: Brownian paths, Euler-Maruyama stepping for the 2x2
//! mode systems, and the finite-difference field integrators for the
//! linearized and the full nonlinear system.
//!
//! One scalar Wiener process drives everything: within a step, the same
//! increment `dW ~ N(0, dt)` multiplies the noise term of both species at
//! every grid point. Space is a cell-centered grid on `(0, L)` with
//! reflecting ghost cells, which enforces the zero-flux condition to second
//! order and makes the sampled Neumann cosines exact eigenvectors of the
//! stencil with discrete eigenvalues
//!
//! ```text
//! mu_k^h = (4 / dx^2) sin^2((k-1) pi / (2 N)).
//! ```
//!
//! The explicit diffusion step is guarded by `max(d_u, d_v) dt / dx^2 <= 1/2`;
//! a run that violates it is refused rather than silently unstable. Non-finite
//! values abort integration with the offending step, time, and location.
//!
//! Long mode trajectories are integrated in log-amplitude form: whenever the
//! state norm leaves `[1/threshold, threshold]` the vector is rescaled to unit
//! norm and the discarded magnitude accumulated, so growth rates remain
//! computable over horizons where the raw solution would overflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{BrusselatorParams, LinearCoefficients, NoiseIntensities};
use crate::spectral::ModeMatrices;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdeError {
    #[error("spatial grid needs at least 3 cells, got {0}")]
    GridTooSmall(usize),
    #[error("grid length must be positive and finite, got {0}")]
    BadGridLength(f64),
    #[error("time step and horizon must be positive and finite (T = {horizon}, dt = {dt})")]
    BadTimeGrid { horizon: f64, dt: f64 },
    #[error("horizon {horizon} is not an integer number of steps of dt = {dt}")]
    HorizonNotMultiple { horizon: f64, dt: f64 },
    #[error(
        "explicit diffusion step unstable: max(d_u, d_v) * dt / dx^2 = {ratio:.6} exceeds 0.5"
    )]
    CflViolation { ratio: f64 },
    #[error("initial mode vector must be nonzero")]
    ZeroInitialVector,
    #[error("field state has {got} cells, grid expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("non-finite value in {location} after step {step} (t = {t})")]
    IntegrationFault {
        step: usize,
        t: f64,
        location: FaultSite,
    },
    #[error("mode trajectory hit the origin at step {step} (t = {t}); growth rate undefined")]
    OriginHit { step: usize, t: f64 },
}

/// Where a non-finite value first appeared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultSite {
    /// Component 0 or 1 of a 2-vector mode state.
    ModeComponent(usize),
    /// Grid cell of one species field.
    FieldCell { species: Species, cell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    U,
    V,
}

impl std::fmt::Display for FaultSite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FaultSite::ModeComponent(i) => write!(f, "mode component {i}"),
            FaultSite::FieldCell { species, cell } => {
                let s = match species {
                    Species::U => "u",
                    Species::V => "v",
                };
                write!(f, "{s}[{cell}]")
            }
        }
    }
}

/// Cell-centered grid on `(0, length)` with `cells` cells of width `dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub length: f64,
    pub cells: usize,
    pub dx: f64,
}

impl SpatialGrid {
    pub fn new(length: f64, cells: usize) -> Result<Self, SdeError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(SdeError::BadGridLength(length));
        }
        if cells < 3 {
            return Err(SdeError::GridTooSmall(cells));
        }
        Ok(SpatialGrid {
            length,
            cells,
            dx: length / cells as f64,
        })
    }

    /// Grid with spacing as close as possible to `dx`.
    pub fn from_spacing(length: f64, dx: f64) -> Result<Self, SdeError> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(SdeError::BadGridLength(dx));
        }
        Self::new(length, (length / dx).round() as usize)
    }

    /// Center of cell `i` (0-based).
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(|i| self.node(i))
    }

    /// Discrete L2 norm `sqrt(dx * sum w_i^2)`.
    pub fn l2_norm(&self, w: &[f64]) -> f64 {
        (self.dx * w.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    /// Eigenvalue of the reflecting-ghost stencil on the sampled cosine of
    /// mode `k`: `(4 / dx^2) sin^2((k-1) pi / (2 N))`.
    pub fn discrete_eigenvalue(&self, k: usize) -> f64 {
        let s = ((k - 1) as f64 * std::f64::consts::PI / (2.0 * self.cells as f64)).sin();
        4.0 / (self.dx * self.dx) * s * s
    }
}

/// Uniform time grid covering `[0, horizon]` in `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Result<Self, SdeError> {
        if !(horizon.is_finite() && horizon > 0.0 && dt.is_finite() && dt > 0.0) {
            return Err(SdeError::BadTimeGrid { horizon, dt });
        }
        let n = (horizon / dt).round();
        if n < 1.0 || (n * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(SdeError::HorizonNotMultiple { horizon, dt });
        }
        Ok(TimeGrid {
            horizon,
            dt,
            n_steps: n as usize,
        })
    }
}

/// RNG stream for ensemble member `stream` of a base seed. ChaCha streams
/// are independent, so members can be integrated in any order (or in
/// parallel) with identical results.
pub fn stream_rng(base_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(stream);
    rng
}

/// A sampled Brownian increment sequence `dW_j ~ N(0, dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub seed: u64,
    pub stream: u64,
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl NoisePath {
    /// Stream 0 of the given seed.
    pub fn sample(tg: &TimeGrid, seed: u64) -> Self {
        Self::sample_stream(tg, seed, 0)
    }

    /// Deterministic for fixed `(seed, stream, n_steps)`.
    pub fn sample_stream(tg: &TimeGrid, seed: u64, stream: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        let scale = tg.dt.sqrt();
        let increments = (0..tg.n_steps)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        NoisePath {
            seed,
            stream,
            dt: tg.dt,
            increments,
        }
    }

    /// Sum consecutive groups of `factor` increments, producing the same
    /// Brownian path on a grid coarsened by `factor`.
    pub fn coarsen(&self, factor: usize) -> NoisePath {
        assert!(factor >= 1 && self.increments.len() % factor == 0);
        let increments = self
            .increments
            .chunks(factor)
            .map(|c| c.iter().sum())
            .collect();
        NoisePath {
            seed: self.seed,
            stream: self.stream,
            dt: self.dt * factor as f64,
            increments,
        }
    }
}

/// One Euler-Maruyama step of the 2x2 mode SDE:
/// `V' = V + A_k V dt + B V dW`.
pub fn em_step_mode(v: [f64; 2], mm: &ModeMatrices, dw: f64, dt: f64) -> [f64; 2] {
    let drift = mm.drift.mul_vec(v);
    [
        v[0] + drift[0] * dt + mm.sigma_u * v[0] * dw,
        v[1] + drift[1] * dt + mm.sigma_v * v[1] * dw,
    ]
}

/// Log-amplitude record of one mode trajectory: `log_norms[j] = ln |V(t_j)|`
/// including everything absorbed by renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLogTrajectory {
    pub times: Vec<f64>,
    pub log_norms: Vec<f64>,
}

impl ModeLogTrajectory {
    pub fn series(&self) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .copied()
            .zip(self.log_norms.iter().copied())
            .collect()
    }
}

/// Integrate one mode SDE from `v0`, recording the accumulated log-amplitude
/// at every step, with multiplicative renormalization at `renorm_threshold`.
pub fn simulate_mode(
    mm: &ModeMatrices,
    v0: [f64; 2],
    tg: &TimeGrid,
    seed: u64,
    renorm_threshold: f64,
) -> Result<ModeLogTrajectory, SdeError> {
    let path = NoisePath::sample(tg, seed);
    simulate_mode_with_path(mm, v0, tg, &path, renorm_threshold)
}

/// Same as [`simulate_mode`], on a caller-supplied Brownian path (used to
/// couple integrators path-by-path).
pub fn simulate_mode_with_path(
    mm: &ModeMatrices,
    v0: [f64; 2],
    tg: &TimeGrid,
    path: &NoisePath,
    renorm_threshold: f64,
) -> Result<ModeLogTrajectory, SdeError> {
    assert!(renorm_threshold > 1.0, "renormalization threshold must exceed 1");
    assert_eq!(path.increments.len(), tg.n_steps, "path/time-grid mismatch");
    let norm0 = (v0[0] * v0[0] + v0[1] * v0[1]).sqrt();
    if norm0 == 0.0 {
        return Err(SdeError::ZeroInitialVector);
    }
    let mut v = v0;
    let mut banked = 0.0; // log-magnitude absorbed by renormalization
    let mut times = Vec::with_capacity(tg.n_steps + 1);
    let mut log_norms = Vec::with_capacity(tg.n_steps + 1);
    times.push(0.0);
    log_norms.push(norm0.ln());
    for (j, &dw) in path.increments.iter().enumerate() {
        v = em_step_mode(v, mm, dw, tg.dt);
        let t = (j + 1) as f64 * tg.dt;
        for (i, x) in v.iter().enumerate() {
            if !x.is_finite() {
                return Err(SdeError::IntegrationFault {
                    step: j + 1,
                    t,
                    location: FaultSite::ModeComponent(i),
                });
            }
        }
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if norm == 0.0 {
            return Err(SdeError::OriginHit { step: j + 1, t });
        }
        if norm > renorm_threshold || norm < 1.0 / renorm_threshold {
            banked += norm.ln();
            v = [v[0] / norm, v[1] / norm];
            times.push(t);
            log_norms.push(banked);
        } else {
            times.push(t);
            log_norms.push(banked + norm.ln());
        }
    }
    Ok(ModeLogTrajectory { times, log_norms })
}

/// Second-order central Laplacian with reflecting ghost cells
/// (`w[-1] = w[0]`, `w[N] = w[N-1]`), the discrete zero-flux condition.
pub fn laplacian_neumann(w: &[f64], dx: f64) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    laplacian_into(w, dx, &mut out);
    out
}

pub(crate) fn laplacian_into(w: &[f64], dx: f64, out: &mut [f64]) {
    let n = w.len();
    debug_assert!(n >= 3);
    let inv = 1.0 / (dx * dx);
    out[0] = (w[1] - w[0]) * inv;
    for i in 1..n - 1 {
        out[i] = (w[i - 1] - 2.0 * w[i] + w[i + 1]) * inv;
    }
    out[n - 1] = (w[n - 2] - w[n - 1]) * inv;
}

/// Discretized concentrations at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn new(u: Vec<f64>, v: Vec<f64>, t: f64) -> Self {
        assert_eq!(u.len(), v.len());
        FieldState { u, v, t }
    }

    pub fn zeros(cells: usize) -> Self {
        FieldState {
            u: vec![0.0; cells],
            v: vec![0.0; cells],
            t: 0.0,
        }
    }

    pub fn equilibrium(params: &BrusselatorParams, grid: &SpatialGrid) -> Self {
        let (u_inf, v_inf) = params.equilibrium();
        FieldState {
            u: vec![u_inf; grid.cells],
            v: vec![v_inf; grid.cells],
            t: 0.0,
        }
    }
}

/// Recorded norms (and optional snapshots) of one field run.
///
/// `l2_u[i]`/`l2_v[i]` are deviations from the run's reference state in the
/// discrete L2 norm: zero for linearized runs (whose unknowns are already
/// deviations), the equilibrium for nonlinear runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    pub times: Vec<f64>,
    pub l2_u: Vec<f64>,
    pub l2_v: Vec<f64>,
    pub snapshots: Vec<FieldState>,
    pub final_state: FieldState,
}

impl FieldTrajectory {
    /// `||u - u_ref|| + ||v - v_ref||` per recorded instant.
    pub fn norm_sums(&self) -> Vec<f64> {
        self.l2_u
            .iter()
            .zip(&self.l2_v)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn final_norm_sum(&self) -> f64 {
        self.l2_u.last().unwrap() + self.l2_v.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Deviation equations linearized at the equilibrium.
    Linear,
    /// Full Brusselator kinetics.
    Nonlinear,
}

/// A fully specified field experiment (everything but initial data and seed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldProblem {
    pub kind: FieldKind,
    pub params: BrusselatorParams,
    pub noise: NoiseIntensities,
    pub grid: SpatialGrid,
    pub time: TimeGrid,
    /// Norms are recorded every `record_stride` steps (plus step 0 and the
    /// final step).
    pub record_stride: usize,
    /// Full states stored every `snapshot_stride` steps when set (final state
    /// is always kept separately).
    pub snapshot_stride: Option<usize>,
}

impl FieldProblem {
    pub fn cfl_ratio(&self) -> f64 {
        self.params.d_u.max(self.params.d_v) * self.time.dt / (self.grid.dx * self.grid.dx)
    }
}

/// One explicit Euler-Maruyama step of the linearized field. The same scalar
/// `dw` multiplies both species at every grid point.
pub fn step_linear_field(
    state: &FieldState,
    coeffs: &LinearCoefficients,
    d_u: f64,
    d_v: f64,
    noise: NoiseIntensities,
    dw: f64,
    dt: f64,
    grid: &SpatialGrid,
) -> Result<FieldState, SdeError> {
    check_dims(state, grid)?;
    let mut next = state.clone();
    let mut lap_u = vec![0.0; grid.cells];
    let mut lap_v = vec![0.0; grid.cells];
    linear_step_in_place(
        &mut next.u,
        &mut next.v,
        &mut lap_u,
        &mut lap_v,
        coeffs,
        d_u,
        d_v,
        noise,
        dw,
        dt,
        grid.dx,
    );
    next.t = state.t + dt;
    check_finite(&next, 1, next.t)?;
    Ok(next)
}

/// One explicit Euler-Maruyama step of the nonlinear field; the noise is
/// multiplicative in the deviation from equilibrium, so the equilibrium is a
/// steady state of the stochastic dynamics.
pub fn step_nonlinear_field(
    state: &FieldState,
    params: &BrusselatorParams,
    noise: NoiseIntensities,
    dw: f64,
    dt: f64,
    grid: &SpatialGrid,
) -> Result<FieldState, SdeError> {
    check_dims(state, grid)?;
    let mut next = state.clone();
    let mut lap_u = vec![0.0; grid.cells];
    let mut lap_v = vec![0.0; grid.cells];
    nonlinear_step_in_place(
        &mut next.u,
        &mut next.v,
        &mut lap_u,
        &mut lap_v,
        params,
        noise,
        dw,
        dt,
        grid.dx,
    );
    next.t = state.t + dt;
    check_finite(&next, 1, next.t)?;
    Ok(next)
}

fn check_dims(state: &FieldState, grid: &SpatialGrid) -> Result<(), SdeError> {
    if state.u.len() != grid.cells || state.v.len() != grid.cells {
        return Err(SdeError::DimensionMismatch {
            got: state.u.len(),
            expected: grid.cells,
        });
    }
    Ok(())
}

fn check_finite(state: &FieldState, step: usize, t: f64) -> Result<(), SdeError> {
    for (species, field) in [(Species::U, &state.u), (Species::V, &state.v)] {
        if let Some(cell) = field.iter().position(|x| !x.is_finite()) {
            return Err(SdeError::IntegrationFault {
                step,
                t,
                location: FaultSite::FieldCell { species, cell },
            });
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn linear_step_in_place(
    u: &mut [f64],
    v: &mut [f64],
    lap_u: &mut [f64],
    lap_v: &mut [f64],
    coeffs: &LinearCoefficients,
    d_u: f64,
    d_v: f64,
    noise: NoiseIntensities,
    dw: f64,
    dt: f64,
    dx: f64,
) {
    laplacian_into(u, dx, lap_u);
    laplacian_into(v, dx, lap_v);
    for i in 0..u.len() {
        let (ui, vi) = (u[i], v[i]);
        u[i] = ui
            + (d_u * lap_u[i] + coeffs.a * ui + coeffs.b * vi) * dt
            + noise.sigma_u * ui * dw;
        v[i] = vi
            + (d_v * lap_v[i] + coeffs.c * ui + coeffs.d * vi) * dt
            + noise.sigma_v * vi * dw;
    }
}

#[allow(clippy::too_many_arguments)]
fn nonlinear_step_in_place(
    u: &mut [f64],
    v: &mut [f64],
    lap_u: &mut [f64],
    lap_v: &mut [f64],
    params: &BrusselatorParams,
    noise: NoiseIntensities,
    dw: f64,
    dt: f64,
    dx: f64,
) {
    let (u_inf, v_inf) = params.equilibrium();
    laplacian_into(u, dx, lap_u);
    laplacian_into(v, dx, lap_v);
    for i in 0..u.len() {
        let (ui, vi) = (u[i], v[i]);
        let (f, g) = params.reaction_terms(ui, vi);
        u[i] = ui
            + (params.d_u * lap_u[i] + f) * dt
            + noise.sigma_u * (ui - u_inf) * dw;
        v[i] = vi
            + (params.d_v * lap_v[i] + g) * dt
            + noise.sigma_v * (vi - v_inf) * dw;
    }
}

/// Integrate a field run, recording deviation norms at the configured stride.
pub fn simulate_field(
    problem: &FieldProblem,
    initial: &FieldState,
    seed: u64,
) -> Result<FieldTrajectory, SdeError> {
    let path = NoisePath::sample(&problem.time, seed);
    simulate_field_with_path(problem, initial, &path)
}

/// Same as [`simulate_field`] on a caller-supplied Brownian path.
pub fn simulate_field_with_path(
    problem: &FieldProblem,
    initial: &FieldState,
    path: &NoisePath,
) -> Result<FieldTrajectory, SdeError> {
    check_dims(initial, &problem.grid)?;
    assert!(problem.record_stride >= 1);
    assert_eq!(path.increments.len(), problem.time.n_steps, "path/time-grid mismatch");
    let ratio = problem.cfl_ratio();
    if ratio > 0.5 {
        return Err(SdeError::CflViolation { ratio });
    }
    let (ref_u, ref_v) = match problem.kind {
        FieldKind::Linear => (0.0, 0.0),
        FieldKind::Nonlinear => problem.params.equilibrium(),
    };
    let coeffs = problem.params.linearize();
    let grid = problem.grid;
    let dt = problem.time.dt;
    let n = problem.time.n_steps;

    let mut state = initial.clone();
    state.t = 0.0;
    let mut lap_u = vec![0.0; grid.cells];
    let mut lap_v = vec![0.0; grid.cells];
    let mut dev = vec![0.0; grid.cells];

    let mut times = Vec::new();
    let mut l2_u = Vec::new();
    let mut l2_v = Vec::new();
    let mut snapshots = Vec::new();

    let mut record = |state: &FieldState, t: f64, l2_u: &mut Vec<f64>, l2_v: &mut Vec<f64>, times: &mut Vec<f64>, dev: &mut Vec<f64>| {
        for (d, x) in dev.iter_mut().zip(&state.u) {
            *d = x - ref_u;
        }
        l2_u.push(grid.l2_norm(dev));
        for (d, x) in dev.iter_mut().zip(&state.v) {
            *d = x - ref_v;
        }
        l2_v.push(grid.l2_norm(dev));
        times.push(t);
    };

    record(&state, 0.0, &mut l2_u, &mut l2_v, &mut times, &mut dev);
    for (j, &dw) in path.increments.iter().enumerate() {
        match problem.kind {
            FieldKind::Linear => linear_step_in_place(
                &mut state.u,
                &mut state.v,
                &mut lap_u,
                &mut lap_v,
                &coeffs,
                problem.params.d_u,
                problem.params.d_v,
                problem.noise,
                dw,
                dt,
                grid.dx,
            ),
            FieldKind::Nonlinear => nonlinear_step_in_place(
                &mut state.u,
                &mut state.v,
                &mut lap_u,
                &mut lap_v,
                &problem.params,
                problem.noise,
                dw,
                dt,
                grid.dx,
            ),
        }
        let step = j + 1;
        let t = step as f64 * dt;
        state.t = t;
        check_finite(&state, step, t)?;
        if step % problem.record_stride == 0 || step == n {
            record(&state, t, &mut l2_u, &mut l2_v, &mut times, &mut dev);
        }
        if let Some(stride) = problem.snapshot_stride {
            if step % stride == 0 && step < n {
                snapshots.push(state.clone());
            }
        }
    }
    Ok(FieldTrajectory {
        times,
        l2_u,
        l2_v,
        snapshots,
        final_state: state,
    })
}

/// Initial-data families used across the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialKind {
    /// `u = u_inf + amp * xi_1 (1 + cos 3x)`, `v = v_inf + amp * xi_2 (1 + sin 3x)`
    /// with `xi_1, xi_2 ~ U(0, 1)`: absolute concentrations for nonlinear runs.
    AboutEquilibrium { amplitude: f64 },
    /// The same shape without the equilibrium offset: deviation variables for
    /// linearized runs.
    Deviation { amplitude: f64 },
}

/// Seeded random initial data.
pub fn initial_condition(
    kind: InitialKind,
    params: &BrusselatorParams,
    grid: &SpatialGrid,
    seed: u64,
) -> FieldState {
    let mut rng = stream_rng(seed, 0);
    initial_condition_from_rng(kind, params, grid, &mut rng)
}

/// Initial data with the perturbation factors drawn from the given RNG.
pub fn initial_condition_from_rng(
    kind: InitialKind,
    params: &BrusselatorParams,
    grid: &SpatialGrid,
    rng: &mut impl Rng,
) -> FieldState {
    let xi1: f64 = rng.random();
    let xi2: f64 = rng.random();
    initial_condition_with_xi(kind, params, grid, xi1, xi2)
}

/// Deterministic worker behind [`initial_condition`], with the perturbation
/// factors made explicit for tests and reproduction.
pub fn initial_condition_with_xi(
    kind: InitialKind,
    params: &BrusselatorParams,
    grid: &SpatialGrid,
    xi1: f64,
    xi2: f64,
) -> FieldState {
    let (base_u, base_v, amp) = match kind {
        InitialKind::AboutEquilibrium { amplitude } => {
            let (u_inf, v_inf) = params.equilibrium();
            (u_inf, v_inf, amplitude)
        }
        InitialKind::Deviation { amplitude } => (0.0, 0.0, amplitude),
    };
    let u = grid
        .nodes()
        .map(|x| base_u + amp * xi1 * (1.0 + (3.0 * x).cos()))
        .collect();
    let v = grid
        .nodes()
        .map(|x| base_v + amp * xi2 * (1.0 + (3.0 * x).sin()))
        .collect();
    FieldState { u, v, t: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BrusselatorParams;
    use crate::spectral::neumann_eigenpairs;
    use approx::assert_relative_eq;

    fn turing_problem(kind: FieldKind, noise: NoiseIntensities, horizon: f64) -> FieldProblem {
        FieldProblem {
            kind,
            params: BrusselatorParams::TURING,
            noise,
            grid: SpatialGrid::from_spacing(1.0, 0.02).unwrap(),
            time: TimeGrid::new(horizon, 0.005).unwrap(),
            record_stride: 10,
            snapshot_stride: None,
        }
    }

    #[test]
    fn time_grid_counts_steps() {
        let tg = TimeGrid::new(1.0, 0.5).unwrap();
        assert_eq!(tg.n_steps, 2);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn noise_path_examples() {
        let tg = TimeGrid::new(1.0, 0.5).unwrap();
        let path = NoisePath::sample(&tg, 7);
        assert_eq!(path.increments.len(), 2);

        // Determinism contract.
        assert_eq!(path, NoisePath::sample(&tg, 7));
        assert_ne!(path, NoisePath::sample(&tg, 8));
        assert_ne!(path.increments, NoisePath::sample_stream(&tg, 7, 1).increments);
    }

    #[test]
    fn noise_path_moments() {
        // 1e6 increments at dt = 0.005: variance within the 3-sigma
        // chi-square band 0.005 +/- 3e-5, mean within 3 sigma of zero.
        let tg = TimeGrid::new(5000.0, 0.005).unwrap();
        let path = NoisePath::sample(&tg, 12345);
        let n = path.increments.len() as f64;
        let mean = path.increments.iter().sum::<f64>() / n;
        let var = path.increments.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((var - 0.005).abs() < 3e-5, "var = {var}");
        assert!(mean.abs() < 3.0 * (0.005f64 / n).sqrt(), "mean = {mean}");
    }

    #[test]
    fn em_step_examples() {
        let coeffs = crate::model::LinearCoefficients {
            a: -1.0,
            b: 0.0,
            c: 0.0,
            d: -1.0,
            trace: -2.0,
            det: 1.0,
        };
        let mm = ModeMatrices::with_mu(&coeffs, 0.0, 0.0, NoiseIntensities::same(1.0), 1, 0.0);

        // Origin is invariant.
        assert_eq!(em_step_mode([0.0, 0.0], &mm, 0.3, 0.01), [0.0, 0.0]);

        // Hand evaluation: (1 - 0.01 + 0.1, 0) = (1.09, 0).
        let v = em_step_mode([1.0, 0.0], &mm, 0.1, 0.01);
        assert_relative_eq!(v[0], 1.09, max_relative = 1e-15);
        assert_eq!(v[1], 0.0);

        // dW = 0 reduces to deterministic Euler.
        let v = em_step_mode([1.0, 2.0], &mm, 0.0, 0.01);
        assert_relative_eq!(v[0], 0.99, max_relative = 1e-15);
        assert_relative_eq!(v[1], 1.98, max_relative = 1e-15);
    }

    #[test]
    fn simulate_mode_scalar_exponential() {
        // Noise off, diagonal drift diag(l, l): s_j = ln|V0| + j ln(1 + l dt),
        // within O(dt) of ln|V0| + l t_j.
        let lambda = -1.0;
        let coeffs = crate::model::LinearCoefficients {
            a: lambda,
            b: 0.0,
            c: 0.0,
            d: lambda,
            trace: 2.0 * lambda,
            det: lambda * lambda,
        };
        let mm = ModeMatrices::with_mu(&coeffs, 0.0, 0.0, NoiseIntensities::OFF, 1, 0.0);
        let tg = TimeGrid::new(1.0, 1e-3).unwrap();
        let traj = simulate_mode(&mm, [2.0, 0.0], &tg, 1, 1e6).unwrap();
        for (t, s) in traj.series() {
            let expected = 2.0f64.ln() + lambda * t;
            assert!((s - expected).abs() < 1e-3, "t = {t}: {s} vs {expected}");
        }
    }

    #[test]
    fn renormalization_is_neutral_bookkeeping() {
        let p = BrusselatorParams::TURING;
        let coeffs = p.linearize();
        let modes = neumann_eigenpairs(1.0, 20).unwrap();
        let mm = ModeMatrices::new(&coeffs, p.d_u, p.d_v, NoiseIntensities::same(1.5), &modes[19]);
        let tg = TimeGrid::new(20.0, 0.005).unwrap();
        let paths = NoisePath::sample(&tg, 99);
        let runs: Vec<_> = [1e3, 1e6, 1e9]
            .iter()
            .map(|&thr| simulate_mode_with_path(&mm, [1.0, 1.0], &tg, &paths, thr).unwrap())
            .collect();
        for pair in runs.windows(2) {
            let max_diff = pair[0]
                .log_norms
                .iter()
                .zip(&pair[1].log_norms)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(max_diff <= 1e-9, "max diff {max_diff}");
        }
    }

    #[test]
    fn simulate_mode_rejects_zero_start() {
        let coeffs = BrusselatorParams::TURING.linearize();
        let mm = ModeMatrices::with_mu(&coeffs, 0.0, 0.0, NoiseIntensities::OFF, 1, 0.0);
        let tg = TimeGrid::new(1.0, 0.1).unwrap();
        assert!(matches!(
            simulate_mode(&mm, [0.0, 0.0], &tg, 1, 1e6),
            Err(SdeError::ZeroInitialVector)
        ));
    }

    #[test]
    fn laplacian_examples() {
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();

        // Constant field: identically zero.
        let lap = laplacian_neumann(&vec![3.7; grid.cells], grid.dx);
        assert!(lap.iter().all(|&x| x == 0.0));

        // Sampled Neumann cosines are exact eigenvectors with -mu_k^h.
        for k in 1..=10 {
            let freq = (k - 1) as f64 * std::f64::consts::PI / grid.length;
            let w: Vec<f64> = grid.nodes().map(|x| (freq * x).cos()).collect();
            let lap = laplacian_neumann(&w, grid.dx);
            let mu_h = grid.discrete_eigenvalue(k);
            for (i, (&l, &wi)) in lap.iter().zip(&w).enumerate() {
                assert!(
                    (l + mu_h * wi).abs() <= 1e-8 * mu_h.max(1.0),
                    "k = {k}, cell {i}: {l} vs {}",
                    -mu_h * wi
                );
            }
        }

        // Zero-flux conservation: the stencil sums to zero.
        let w: Vec<f64> = grid.nodes().map(|x| (x * 7.3).sin() + 0.2 * x * x).collect();
        let lap = laplacian_neumann(&w, grid.dx);
        let total: f64 = lap.iter().sum();
        assert!(total.abs() <= 1e-9, "sum = {total}");
    }

    #[test]
    fn linear_step_preserves_zero_and_constant_modes() {
        let p = BrusselatorParams::TURING;
        let coeffs = p.linearize();
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();

        let zero = FieldState::zeros(grid.cells);
        let next = step_linear_field(&zero, &coeffs, p.d_u, p.d_v, NoiseIntensities::same(1.0), 0.3, 0.005, &grid).unwrap();
        assert_eq!(next.u, zero.u);
        assert_eq!(next.v, zero.v);

        // Spatially constant state evolves exactly as the mu = 0 mode ODE.
        let state = FieldState::new(vec![0.4; grid.cells], vec![-0.3; grid.cells], 0.0);
        let dt = 0.005;
        let next = step_linear_field(&state, &coeffs, p.d_u, p.d_v, NoiseIntensities::OFF, 0.0, dt, &grid).unwrap();
        let eu = 0.4 + (coeffs.a * 0.4 + coeffs.b * (-0.3)) * dt;
        let ev = -0.3 + (coeffs.c * 0.4 + coeffs.d * (-0.3)) * dt;
        for i in 0..grid.cells {
            assert_relative_eq!(next.u[i], eu, max_relative = 1e-14);
            assert_relative_eq!(next.v[i], ev, max_relative = 1e-14);
        }
    }

    #[test]
    fn spatial_mean_follows_constant_mode_ode() {
        // Per-step identity: the mean of the linear field obeys the same
        // Euler-Maruyama recursion as the mu = 0 mode.
        let p = BrusselatorParams::TURING;
        let coeffs = p.linearize();
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();
        let noise = NoiseIntensities::new(0.7, 1.1);
        let mut state = initial_condition_with_xi(
            InitialKind::Deviation { amplitude: 0.5 },
            &p,
            &grid,
            0.83,
            0.41,
        );
        let tg = TimeGrid::new(0.5, 0.005).unwrap();
        let path = NoisePath::sample(&tg, 5);
        let mean = |w: &[f64]| w.iter().sum::<f64>() / w.len() as f64;
        let (mut mu, mut mv) = (mean(&state.u), mean(&state.v));
        for &dw in &path.increments {
            state = step_linear_field(&state, &coeffs, p.d_u, p.d_v, noise, dw, tg.dt, &grid).unwrap();
            let expected_u = mu + (coeffs.a * mu + coeffs.b * mv) * tg.dt + noise.sigma_u * mu * dw;
            let expected_v = mv + (coeffs.c * mu + coeffs.d * mv) * tg.dt + noise.sigma_v * mv * dw;
            let (got_u, got_v) = (mean(&state.u), mean(&state.v));
            assert_relative_eq!(got_u, expected_u, max_relative = 1e-10);
            assert_relative_eq!(got_v, expected_v, max_relative = 1e-10);
            (mu, mv) = (got_u, got_v);
        }
    }

    #[test]
    fn equilibrium_is_a_steady_state() {
        // Noise increments vanish identically (they multiply u - u_inf); the
        // reaction residual at the equilibrium is pure roundoff of the
        // algebraic identity, and feeding it through a whole run stays tiny.
        let p = BrusselatorParams::NEAR_CRITICAL;
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();
        let (u_inf, v_inf) = p.equilibrium();
        let (f, g) = p.reaction_terms(u_inf, v_inf);
        assert!(f.abs() <= 4.0 * f64::EPSILON * (p.b + 1.0));
        assert!(g.abs() <= 4.0 * f64::EPSILON * (p.b + 1.0));

        let eq = FieldState::equilibrium(&p, &grid);
        let stepped = step_nonlinear_field(&eq, &p, NoiseIntensities::same(2.0), 0.5, 0.005, &grid).unwrap();
        // The noise contribution is exactly zero; only the reaction roundoff moves the state.
        for i in 0..grid.cells {
            assert!((stepped.u[i] - u_inf).abs() <= 1e-17);
            assert!((stepped.v[i] - v_inf).abs() <= 1e-17);
        }

        let problem = FieldProblem {
            kind: FieldKind::Nonlinear,
            params: p,
            noise: NoiseIntensities::same(1.25),
            grid,
            time: TimeGrid::new(10.0, 0.005).unwrap(),
            record_stride: 100,
            snapshot_stride: None,
        };
        let traj = simulate_field(&problem, &eq, 3).unwrap();
        assert!(traj.final_norm_sum() <= 1e-10, "drift off equilibrium: {}", traj.final_norm_sum());
    }

    #[test]
    fn cfl_guard_refuses_unstable_steps() {
        let mut problem = turing_problem(FieldKind::Nonlinear, NoiseIntensities::OFF, 1.0);
        problem.time = TimeGrid::new(1.0, 0.2).unwrap(); // ratio 2e-3*0.2/4e-4 = 1.0
        let ic = FieldState::equilibrium(&problem.params, &problem.grid);
        assert!(matches!(
            simulate_field(&problem, &ic, 1),
            Err(SdeError::CflViolation { .. })
        ));

        // The preset discretization passes with a large margin (0.025).
        let problem = turing_problem(FieldKind::Nonlinear, NoiseIntensities::OFF, 1.0);
        assert!(problem.cfl_ratio() <= 0.5);
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let problem = turing_problem(FieldKind::Linear, NoiseIntensities::same(1.5), 2.0);
        let traj = simulate_field(&problem, &FieldState::zeros(problem.grid.cells), 11).unwrap();
        assert!(traj.l2_u.iter().all(|&x| x == 0.0));
        assert!(traj.l2_v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn same_seed_same_bits() {
        let problem = turing_problem(FieldKind::Nonlinear, NoiseIntensities::same(1.25), 5.0);
        let ic = initial_condition(
            InitialKind::AboutEquilibrium { amplitude: 0.1 },
            &problem.params,
            &problem.grid,
            42,
        );
        let a = simulate_field(&problem, &ic, 42).unwrap();
        let b = simulate_field(&problem, &ic, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initial_condition_examples() {
        let p = BrusselatorParams::TURING;
        let grid = SpatialGrid::from_spacing(1.0, 0.02).unwrap();
        let (u_inf, v_inf) = p.equilibrium();

        // xi = 0 collapses to the exact equilibrium.
        let ic = initial_condition_with_xi(InitialKind::AboutEquilibrium { amplitude: 0.1 }, &p, &grid, 0.0, 0.0);
        assert!(ic.u.iter().all(|&x| x == u_inf));
        assert!(ic.v.iter().all(|&x| x == v_inf));

        // xi1 = 1: first cell center sits at dx/2.
        let ic = initial_condition_with_xi(InitialKind::AboutEquilibrium { amplitude: 0.1 }, &p, &grid, 1.0, 0.0);
        let expected = u_inf + 0.1 * (1.0 + (3.0 * grid.node(0)).cos());
        assert_relative_eq!(ic.u[0], expected, max_relative = 1e-15);

        // Deviation form with xi = 0 is the zero field.
        let ic = initial_condition_with_xi(InitialKind::Deviation { amplitude: 0.1 }, &p, &grid, 0.0, 0.0);
        assert!(ic.u.iter().all(|&x| x == 0.0));
        assert!(ic.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coarsened_paths_sum_exactly() {
        let tg = TimeGrid::new(1.0, 1.25e-3).unwrap();
        let fine = NoisePath::sample(&tg, 31);
        for factor in [2usize, 4, 8] {
            let coarse = fine.coarsen(factor);
            assert_eq!(coarse.increments.len(), fine.increments.len() / factor);
            for (i, c) in coarse.increments.iter().enumerate() {
                let s: f64 = fine.increments[i * factor..(i + 1) * factor].iter().sum();
                assert_eq!(*c, s);
            }
        }
    }

    #[test]
    fn integration_fault_reports_location() {
        // sigma_v = 80 at dt = 0.005 blows the nonlinear system up within a
        // few steps; the fault must carry a step index and location.
        let mut problem = turing_problem(FieldKind::Nonlinear, NoiseIntensities::v_only(80.0), 5.0);
        problem.record_stride = 1;
        let ic = initial_condition(
            InitialKind::AboutEquilibrium { amplitude: 0.1 },
            &problem.params,
            &problem.grid,
            4,
        );
        match simulate_field(&problem, &ic, 4) {
            Err(SdeError::IntegrationFault { step, t, .. }) => {
                assert!(step >= 1);
                assert!(t > 0.0);
            }
            other => panic!("expected integration fault, got {other:?}"),
        }
    }
}
