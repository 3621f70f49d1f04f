//! Scalar symbols of the mode-wise Stokes resolvent, the resolvent contour
//! and multiplier-class audits.

mod contour;
mod multiplier;

pub use contour::{contour_nodes, Contour, ContourNode, Sector};
pub use multiplier::{lopatinskii_audit, multiplier_bound_estimate, LopatinskiiAudit, MultiplierEstimate, MultiplierType, Symbol};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// `A = |xi'|` and `B = sqrt(lambda/mu + A^2)` on the principal branch.
pub fn eval_ab(xi: [f64; 2], lambda: Complex64, mu: f64) -> Result<(f64, Complex64)> {
    if !(mu.is_finite() && mu > 0.0) {
        return invalid(format!("viscosity must be positive, got {mu}"));
    }
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return invalid("lambda must be finite");
    }
    let a = xi[0].hypot(xi[1]);
    if lambda.im == 0.0 && lambda.re <= -mu * a * a {
        return Err(Error::BranchCut {
            lambda: crate::error::Complex(lambda),
        });
    }
    Ok((a, b_of(a, lambda, mu)))
}

/// `B` without validation, for callers that have already excluded the cut.
pub(crate) fn b_of(a: f64, lambda: Complex64, mu: f64) -> Complex64 {
    (lambda / mu + a * a).sqrt()
}

/// Lopatinskii determinant `B^3 + A B^2 + 3 A^2 B - A^3`.
pub fn lopatinskii_d(a: f64, b: Complex64) -> Complex64 {
    b * b * b + a * b * b + 3.0 * a * a * b - a * a * a
}

/// `(e^{B z} - e^{A z}) / (B - A)`, switching to the integral form
/// `z * e^{A z} * int_0^1 e^{(B - A) z theta} d theta` when `B` is close to `A`.
pub fn cal_m(z: f64, a: f64, b: Complex64) -> Complex64 {
    let d = b - a;
    let scale = 1.0 + a.abs() + b.norm();
    if d.norm() < 1e-6 * scale {
        cal_m_integral(z, a, b)
    } else {
        cal_m_quotient(z, a, b)
    }
}

pub(crate) fn cal_m_quotient(z: f64, a: f64, b: Complex64) -> Complex64 {
    let d = b - a;
    (a * z).exp() * expm1(d * z) / d
}

pub(crate) fn cal_m_integral(z: f64, a: f64, b: Complex64) -> Complex64 {
    let x = (b - a) * z;
    // int_0^1 e^{x theta} d theta as a power series
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..40 {
        term *= x / (k as f64 + 1.0);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    z * (a * z).exp() * sum
}

/// `d/dz cal_m(z) = B cal_m(z) + e^{A z}`.
pub fn cal_m_dz(z: f64, a: f64, b: Complex64) -> Complex64 {
    b * cal_m(z, a, b) + (a * z).exp()
}

/// `e^x - 1` without cancellation for small `|x|`.
pub fn expm1(x: Complex64) -> Complex64 {
    let (s, c) = x.im.sin_cos();
    let half = (0.5 * x.im).sin();
    let em1 = x.re.exp_m1();
    Complex64::new(em1 * c - 2.0 * half * half, x.re.exp() * s)
}
