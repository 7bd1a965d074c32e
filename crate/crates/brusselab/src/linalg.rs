//! Dense 2x2 linear algebra in closed form.
//!
//! The per-eigenmode dynamics of the linearized system are 2x2, so every
//! spectral quantity the rest of the crate needs is available without
//! iteration: eigenvalues come from the trace/determinant quadratic and the
//! matrix exponential from a cosh/sinh split of the trace-free part.
//!
//! For a real 2x2 matrix `M` with `h = tr(M)/2` and trace-free part
//! `D = M - h I`, the Cayley-Hamilton identity gives `D^2 = q I` with
//! `q = h^2 - det(M)`, hence
//!
//! ```text
//! exp(M) = e^h ( cosh(s) I + sinh(s)/s * D ),   s = sqrt(q),
//! ```
//!
//! where `q < 0` turns the hyperbolics into `cos`/`sin(x)/x` and the `q -> 0`
//! limit `e^h (I + D)` covers repeated (possibly defective) eigenvalues.

use num_complex::Complex64;

/// Relative size of the discriminant below which the repeated-eigenvalue
/// series is used in [`expm2`]. The full discriminant is `4 q`, so this is
/// the `|disc| < 1e-12 * max(1, ||M||^2)` rule expressed in terms of `q`.
const REPEATED_ROOT_TOL: f64 = 2.5e-13;

/// Row-major real 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Mat2([[m00, m01], [m10, m11]])
    }

    pub fn diag(d0: f64, d1: f64) -> Self {
        Mat2([[d0, 0.0], [0.0, d1]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Frobenius norm; an upper bound on the spectral norm for 2x2.
    pub fn norm_fro(&self) -> f64 {
        let m = &self.0;
        (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]).sqrt()
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl std::ops::Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] + rhs.0[0][0], self.0[0][1] + rhs.0[0][1]],
            [self.0[1][0] + rhs.0[1][0], self.0[1][1] + rhs.0[1][1]],
        ])
    }
}

impl std::ops::Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] - rhs.0[0][0], self.0[0][1] - rhs.0[0][1]],
            [self.0[1][0] - rhs.0[1][0], self.0[1][1] - rhs.0[1][1]],
        ])
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Input matrix contained NaN or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("matrix has non-finite entries")]
pub struct NonFiniteMatrix;

/// Both roots of `x^2 - s x + p`, i.e. the eigenvalues of any 2x2 matrix with
/// trace `s` and determinant `p`. Ordered by descending real part, ties by
/// descending imaginary part.
///
/// Real roots avoid cancellation: the larger-magnitude root is formed first
/// and the other recovered as `p / big`, so the product matches `p` to
/// roundoff even when the roots differ by many orders of magnitude.
pub fn roots_from_trace_det(s: f64, p: f64) -> (Complex64, Complex64) {
    let half = 0.5 * s;
    let q = half * half - p;
    if q >= 0.0 {
        let r = q.sqrt();
        let big = if half >= 0.0 { half + r } else { half - r };
        if big == 0.0 {
            // s = p = 0: double root at the origin.
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let other = p / big;
        let (hi, lo) = if big >= other { (big, other) } else { (other, big) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let im = (-q).sqrt();
        (Complex64::new(half, im), Complex64::new(half, -im))
    }
}

/// Eigenvalues of `m`, ordered by descending real part.
pub fn eig2(m: &Mat2) -> Result<(Complex64, Complex64), NonFiniteMatrix> {
    if !m.is_finite() {
        return Err(NonFiniteMatrix);
    }
    Ok(roots_from_trace_det(m.trace(), m.det()))
}

/// Matrix exponential of a real 2x2 matrix, exact up to roundoff.
pub fn expm2(m: &Mat2) -> Mat2 {
    debug_assert!(m.is_finite(), "expm2 requires finite entries");
    let half_tr = 0.5 * m.trace();
    let dev = *m - Mat2::IDENTITY.scale(half_tr);
    let q = half_tr * half_tr - m.det();
    let norm = m.norm_fro();
    let (cosh_s, sinhc_s) = if q.abs() < REPEATED_ROOT_TOL * (norm * norm).max(1.0) {
        // Repeated (or near-repeated, possibly defective) eigenvalue: series
        // in q, valid for either sign.
        let c = 1.0 + q * (0.5 + q * (1.0 / 24.0 + q / 720.0));
        let sc = 1.0 + q * (1.0 / 6.0 + q * (1.0 / 120.0 + q / 5040.0));
        (c, sc)
    } else if q > 0.0 {
        let s = q.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let s = (-q).sqrt();
        (s.cos(), s.sin() / s)
    };
    let gain = half_tr.exp();
    (Mat2::IDENTITY.scale(cosh_s) + dev.scale(sinhc_s)).scale(gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eig2_identity() {
        let (l1, l2) = eig2(&Mat2::IDENTITY).unwrap();
        assert_eq!(l1, Complex64::new(1.0, 0.0));
        assert_eq!(l2, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn eig2_rotation_generator() {
        let (l1, l2) = eig2(&Mat2::new(0.0, 1.0, -1.0, 0.0)).unwrap();
        assert_relative_eq!(l1.re, 0.0);
        assert_relative_eq!(l1.im, 1.0);
        assert_relative_eq!(l2.im, -1.0);
    }

    #[test]
    fn eig2_rejects_nan() {
        assert!(eig2(&Mat2::new(f64::NAN, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn roots_are_cancellation_safe() {
        // Roots 1e8 and 1e-8: naive quadratic loses the small root entirely.
        let (l1, l2) = roots_from_trace_det(1e8 + 1e-8, 1.0);
        assert_relative_eq!(l1.re, 1e8, max_relative = 1e-14);
        assert_relative_eq!(l2.re, 1e-8, max_relative = 1e-14);
    }

    #[test]
    fn expm2_zero_is_identity() {
        assert_eq!(expm2(&Mat2::ZERO), Mat2::IDENTITY);
    }

    #[test]
    fn expm2_diagonal() {
        let e = expm2(&Mat2::diag(-1.0, -2.0));
        assert_relative_eq!(e.0[0][0], (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(e.0[1][1], (-2.0f64).exp(), max_relative = 1e-14);
        assert_eq!(e.0[0][1], 0.0);
        assert_eq!(e.0[1][0], 0.0);
    }

    #[test]
    fn expm2_nilpotent_terminates() {
        // [[0,1],[0,0]] is nilpotent: exp = I + M exactly.
        let e = expm2(&Mat2::new(0.0, 1.0, 0.0, 0.0));
        assert_eq!(e, Mat2::new(1.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn expm2_rotation() {
        let t = 0.7;
        let e = expm2(&Mat2::new(0.0, t, -t, 0.0));
        assert_relative_eq!(e.0[0][0], t.cos(), max_relative = 1e-14);
        assert_relative_eq!(e.0[0][1], t.sin(), max_relative = 1e-14);
    }

    #[test]
    fn mat2_ops() {
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let b = Mat2::new(0.0, 1.0, 1.0, 0.0);
        assert_eq!(a * b, Mat2::new(2.0, 1.0, 4.0, 3.0));
        assert_eq!(a.mul_vec([1.0, -1.0]), [-1.0, -1.0]);
        assert_relative_eq!(a.trace(), 5.0);
        assert_relative_eq!(a.det(), -2.0);
        // diag matrices commute, generic pairs do not
        assert_eq!(Mat2::diag(1.0, 2.0).commutator(&Mat2::diag(3.0, 4.0)), Mat2::ZERO);
        assert!(a.commutator(&b).norm_fro() > 0.0);
    }
}
