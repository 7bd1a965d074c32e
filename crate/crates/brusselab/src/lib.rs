//! brusselab: a numerical laboratory for the Brusselator reaction-diffusion
//! system driven by multiplicative scalar noise.
//!
//! The system under study is the two-species Brusselator on an interval with
//! zero-flux boundaries, perturbed multiplicatively in the deviation from its
//! homogeneous equilibrium by a single scalar Wiener process shared across
//! space and species. The crate answers three questions about it, each with
//! both a spectral route and a simulation route:
//!
//! 1. **When is the noiseless system unstable?** The dispersion relation over
//!    the Neumann eigenmodes yields the exact band of unstable modes
//!    ([`spectral::deterministic_unstable_band`]).
//! 2. **How much equal-intensity noise certifiably suppresses the
//!    instability?** Equal intensities commute with the drift, shift every
//!    mode eigenvalue left by `sigma^2/2`, and give a closed-form pathwise
//!    decay certificate ([`spectral::suppression_certificate`]) together with
//!    the sharp threshold ([`spectral::critical_sigma_same`]).
//! 3. **What does one-sided noise do?** No closed form exists there; seeded
//!    Euler-Maruyama ensembles estimate pathwise Lyapunov exponents per mode
//!    and per intensity ([`analysis::per_mode_lyapunov`],
//!    [`analysis::sigma_sweep`]), which is where the destabilization shows up.
//!
//! Module map: [`model`] (kinetics, equilibrium, reaction Jacobian),
//! [`spectral`] (eigenmodes, dispersion, certificates, closed-form mode
//! solution), [`sde`] (Brownian paths, mode and field integrators),
//! [`analysis`] (exponent estimation, sweeps, bound curves), [`verify`]
//! (independent brute-force oracles), [`cli`] (config, presets, CSV), and
//! [`exec`] (deterministic ensemble fan-out, parallel by default via the
//! `parallel` feature).
//!
//! Everything is reproducible by construction: all randomness flows from a
//! base seed through per-member ChaCha streams, so identical configurations
//! produce bitwise-identical outputs regardless of thread count.

pub mod analysis;
pub mod cli;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod sde;
pub mod spectral;
pub mod verify;

pub use analysis::{
    fit_lyapunov, log_norm_series, per_mode_lyapunov, project_modes, sigma_sweep,
    theoretical_bound_curve, AnalysisError, EnsembleOpts, LyapunovEstimate, ModeExponentRow,
    SweepAxis, SweepOpts, SweepRow,
};
pub use linalg::{eig2, expm2, Mat2};
pub use model::{
    BrusselatorParams, LinearCoefficients, ModelError, NoiseIntensities, OdeStabilityReport,
};
pub use sde::{
    em_step_mode, initial_condition, laplacian_neumann, simulate_field, simulate_mode,
    step_linear_field, step_nonlinear_field, FieldKind, FieldProblem, FieldState, FieldTrajectory,
    InitialKind, ModeLogTrajectory, NoisePath, SdeError, SpatialGrid, TimeGrid,
};
pub use spectral::{
    characteristic_coeffs, critical_sigma_same, decay_rate_bound, deterministic_unstable_band,
    dispersion, exact_mode_solution, neumann_eigenpairs, suppression_certificate, CriticalSigma,
    DispersionPoint, EigenMode, ModeMatrices, SpectralError, StabilityCertificate, Verdict,
};
pub use verify::{
    discrete_vs_continuous_mu, expm_series, mode_vs_field_consistency, strong_error_em_vs_exact,
    ConvergenceStudy, VerifyError,
};
