//! Brusselator reaction kinetics and the ODE-level stability picture.
//!
//! The reaction network keeps two feed concentrations `A`, `B` constant and
//! evolves the species concentrations `u`, `v` under
//!
//! ```text
//! f(u, v) = A - (B + 1) u + u^2 v
//! g(u, v) = B u - u^2 v
//! ```
//!
//! with the unique spatially homogeneous steady state `(A, B/A)`. Linearizing
//! about it yields the reaction Jacobian
//!
//! ```text
//! M = [ a  b ]   with  a = B - 1,  b = A^2,  c = -B,  d = -A^2,
//!     [ c  d ]
//! ```
//!
//! whose trace `B - 1 - A^2` and determinant `A^2` decide the well-mixed
//! (diffusion-free) stability: the equilibrium of the reaction ODE is
//! exponentially stable exactly when the trace is negative and the
//! determinant positive, i.e. when `B < 1 + A^2`.

use num_complex::Complex64;

use crate::linalg::roots_from_trace_det;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
}

/// Chemistry and diffusion constants. All quantities are dimensionless
/// double precision; no unit system is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrusselatorParams {
    /// Feed concentration `A` (> 0).
    pub a: f64,
    /// Feed concentration `B` (> 0).
    pub b: f64,
    /// Diffusion coefficient of the activator `u` (> 0).
    pub d_u: f64,
    /// Diffusion coefficient of the inhibitor `v` (> 0).
    pub d_v: f64,
}

impl BrusselatorParams {
    /// Classic diffusion-driven-instability set: the reaction ODE is stable
    /// but `d_u/d_v` is small enough for a band of unstable eigenmodes.
    pub const TURING: BrusselatorParams = BrusselatorParams {
        a: 1.0,
        b: 1.8,
        d_u: 5e-5,
        d_v: 2e-3,
    };

    /// Same chemistry with `d_u > d_v`: no unstable band, the PDE is stable.
    pub const STABLE: BrusselatorParams = BrusselatorParams {
        a: 1.0,
        b: 1.8,
        d_u: 2e-3,
        d_v: 1e-3,
    };

    /// Weakly damped set (trace -0.05): stable without noise, prone to
    /// destabilization by one-sided noise.
    pub const NEAR_CRITICAL: BrusselatorParams = BrusselatorParams {
        a: 1.0,
        b: 1.95,
        d_u: 1e-3,
        d_v: 2e-3,
    };

    pub fn new(a: f64, b: f64, d_u: f64, d_v: f64) -> Result<Self, ModelError> {
        for (name, value) in [("A", a), ("B", b), ("d_u", d_u), ("d_v", d_v)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositiveParameter { name, value });
            }
        }
        Ok(BrusselatorParams { a, b, d_u, d_v })
    }

    /// Whether `1 < B < 1 + A^2`, the regime in which the same-intensity
    /// noise-suppression certificate applies. Parameters outside it are
    /// storable and simulable; only the certificate refuses them.
    pub fn in_certificate_regime(&self) -> bool {
        1.0 < self.b && self.b < 1.0 + self.a * self.a
    }

    /// The unique spatially homogeneous steady state `(A, B/A)`.
    pub fn equilibrium(&self) -> (f64, f64) {
        (self.a, self.b / self.a)
    }

    /// Reaction rates `(f, g)` at concentrations `(u, v)`.
    pub fn reaction_terms(&self, u: f64, v: f64) -> (f64, f64) {
        let f = self.a - (self.b + 1.0) * u + u * u * v;
        let g = self.b * u - u * u * v;
        (f, g)
    }

    /// Reaction Jacobian at the equilibrium.
    pub fn linearize(&self) -> LinearCoefficients {
        let a = self.b - 1.0;
        let b = self.a * self.a;
        let c = -self.b;
        let d = -self.a * self.a;
        LinearCoefficients {
            a,
            b,
            c,
            d,
            trace: a + d,
            det: a * d - b * c,
        }
    }
}

/// Multiplicative noise intensities for the two species. A single scalar
/// Wiener process drives both, so only the per-species gains differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseIntensities {
    pub sigma_u: f64,
    pub sigma_v: f64,
}

impl NoiseIntensities {
    pub const OFF: NoiseIntensities = NoiseIntensities {
        sigma_u: 0.0,
        sigma_v: 0.0,
    };

    pub fn new(sigma_u: f64, sigma_v: f64) -> Self {
        NoiseIntensities { sigma_u, sigma_v }
    }

    pub fn same(sigma: f64) -> Self {
        NoiseIntensities {
            sigma_u: sigma,
            sigma_v: sigma,
        }
    }

    pub fn v_only(sigma_v: f64) -> Self {
        NoiseIntensities {
            sigma_u: 0.0,
            sigma_v,
        }
    }

    /// `Some(sigma)` when both intensities are the (bitwise) same value,
    /// which is the commuting case with a closed-form mode solution.
    pub fn common(&self) -> Option<f64> {
        (self.sigma_u == self.sigma_v).then_some(self.sigma_u)
    }
}

/// Entries of the reaction Jacobian `[[a, b], [c, d]]` together with its
/// trace and determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub trace: f64,
    pub det: f64,
}

impl LinearCoefficients {
    /// Eigenvalues and stability verdict of the reaction ODE `x' = M x`.
    pub fn classify(&self) -> OdeStabilityReport {
        let eigenvalues = roots_from_trace_det(self.trace, self.det);
        OdeStabilityReport {
            eigenvalues,
            decay_rate: -eigenvalues.0.re,
            stable: self.trace < 0.0 && self.det > 0.0,
        }
    }
}

/// Stability classification of the diffusion-free linearized system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeStabilityReport {
    /// Both eigenvalues of the Jacobian, descending real part.
    pub eigenvalues: (Complex64, Complex64),
    /// `-max Re(eig)`: positive means exponential decay at this rate.
    pub decay_rate: f64,
    /// Trace negative and determinant positive.
    pub stable: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn equilibrium_examples() {
        assert_eq!(BrusselatorParams::TURING.equilibrium(), (1.0, 1.8));
        let symmetric = BrusselatorParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(symmetric.equilibrium(), (1.0, 1.0));
        let p = BrusselatorParams::new(2.0, 3.0, 1.0, 1.0).unwrap();
        assert_eq!(p.equilibrium(), (2.0, 1.5));
    }

    #[test]
    fn reaction_vanishes_at_equilibrium() {
        for p in [
            BrusselatorParams::TURING,
            BrusselatorParams::STABLE,
            BrusselatorParams::NEAR_CRITICAL,
        ] {
            let (u, v) = p.equilibrium();
            let (f, g) = p.reaction_terms(u, v);
            assert_relative_eq!(f, 0.0, epsilon = 1e-15);
            assert_relative_eq!(g, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn reaction_at_origin() {
        let (f, g) = BrusselatorParams::TURING.reaction_terms(0.0, 0.0);
        assert_eq!((f, g), (1.0, 0.0));
    }

    #[test]
    fn linearize_examples() {
        let c = BrusselatorParams::TURING.linearize();
        assert_relative_eq!(c.a, 0.8);
        assert_relative_eq!(c.b, 1.0);
        assert_relative_eq!(c.c, -1.8);
        assert_relative_eq!(c.d, -1.0);
        assert_relative_eq!(c.trace, -0.2);
        assert_relative_eq!(c.det, 1.0);

        let c = BrusselatorParams::NEAR_CRITICAL.linearize();
        assert_relative_eq!(c.a, 0.95);
        assert_relative_eq!(c.trace, -0.05);

        // Boundary of the stability condition B < 1 + A^2.
        let c = BrusselatorParams::new(1.0, 2.0, 1.0, 1.0).unwrap().linearize();
        assert_relative_eq!(c.trace, 0.0);
    }

    #[test]
    fn classify_examples() {
        let report = BrusselatorParams::TURING.linearize().classify();
        assert!(report.stable);
        assert_relative_eq!(report.eigenvalues.0.re, -0.1, max_relative = 1e-12);

        // Diagonal Jacobian with a = d = -1, b = c = 0.
        let diag = LinearCoefficients {
            a: -1.0,
            b: 0.0,
            c: 0.0,
            d: -1.0,
            trace: -2.0,
            det: 1.0,
        };
        let report = diag.classify();
        assert_eq!(report.eigenvalues.0, Complex64::new(-1.0, 0.0));
        assert_eq!(report.eigenvalues.1, Complex64::new(-1.0, 0.0));
        assert_relative_eq!(report.decay_rate, 1.0);

        let report = BrusselatorParams::NEAR_CRITICAL.linearize().classify();
        assert!(report.stable);
        assert!(report.decay_rate > 0.0);
        assert_relative_eq!(report.decay_rate, 0.025, max_relative = 1e-12);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(BrusselatorParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(BrusselatorParams::new(1.0, -2.0, 1.0, 1.0).is_err());
        assert!(BrusselatorParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn certificate_regime_flag() {
        assert!(BrusselatorParams::TURING.in_certificate_regime());
        assert!(!BrusselatorParams::new(1.0, 0.9, 1.0, 1.0).unwrap().in_certificate_regime());
        assert!(!BrusselatorParams::new(1.0, 2.5, 1.0, 1.0).unwrap().in_certificate_regime());
    }

    proptest! {
        // f + g = A - u, independent of v.
        #[test]
        fn reaction_sum_identity(u in -10.0f64..10.0, v in -10.0f64..10.0) {
            let p = BrusselatorParams::TURING;
            let (f, g) = p.reaction_terms(u, v);
            prop_assert!((f + g - (p.a - u)).abs() <= 1e-12 * (1.0 + u.abs() + v.abs() * u * u));
        }

        // Inside the certificate regime the ODE is always stable.
        #[test]
        fn regime_implies_ode_stability(a in 0.2f64..3.0, frac in 0.01f64..0.99) {
            let b = 1.0 + frac * a * a;
            let p = BrusselatorParams::new(a, b, 1.0, 1.0).unwrap();
            prop_assume!(p.in_certificate_regime());
            let coeffs = p.linearize();
            prop_assert!(coeffs.trace < 0.0);
            prop_assert!(coeffs.det > 0.0);
            prop_assert!(coeffs.classify().stable);
        }

        // Vieta: eigenvalue sum and product reproduce trace and determinant.
        #[test]
        fn classify_satisfies_vieta(a in 0.2f64..3.0, b in 1.01f64..5.0) {
            let p = BrusselatorParams::new(a, b, 1.0, 1.0).unwrap();
            let coeffs = p.linearize();
            let (l1, l2) = coeffs.classify().eigenvalues;
            let sum = l1 + l2;
            let prod = l1 * l2;
            prop_assert!((sum.re - coeffs.trace).abs() <= 1e-12 * coeffs.trace.abs().max(1.0));
            prop_assert!(sum.im.abs() <= 1e-12 * coeffs.trace.abs().max(1.0));
            prop_assert!((prod.re - coeffs.det).abs() <= 1e-12 * coeffs.det.abs().max(1.0));
        }
    }
}
