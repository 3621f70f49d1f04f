//! Long-time decay of the linear flow: localized data, sampled norms and
//! their power-law targets.

use std::sync::Arc;

use num_complex::Complex64;

use super::config::rate_exponents;
use super::fit::{fit_decay, DecayReport};
use crate::error::{invalid, Result};
use crate::linear::LinearSolution;
use crate::spectral::{HalfSpaceField, HorizontalGrid, SurfaceField};

/// Zero-mean height with spectrum `|xi'|^{2/s - 2} e^{-|xi'|^2}`.
///
/// Near the origin this is the transform of `|x'|^{-2/s}`, the slowest
/// spatial fall-off that still sits (borderline) in `L_s`, so heat-type
/// evolution of it decays at exactly the `L_s -> L_r` rates.
pub fn localized_height(hgrid: &Arc<HorizontalGrid>, s: f64) -> Result<SurfaceField> {
    if !(1.0..2.0).contains(&s) {
        return invalid(format!("localization exponent must lie in [1, 2), got {s}"));
    }
    let spectrum = (0..hgrid.len())
        .map(|p| {
            let a = hgrid.abs_xi(p);
            if a == 0.0 || hgrid.is_nyquist(p) {
                Complex64::default()
            } else {
                Complex64::new(a.powf(2.0 / s - 2.0) * (-a * a).exp(), 0.0)
            }
        })
        .collect();
    SurfaceField::from_spectrum(hgrid, spectrum)
}

/// Norms of one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub t: f64,
    /// `||u||_{L_q}`.
    pub u: f64,
    /// `||grad u||_{L_q}`.
    pub grad_u: f64,
    /// `||h||_{L_r}`.
    pub h: f64,
}

impl DecaySample {
    pub const CSV_HEADER: &'static str = "t,u_lq,grad_u_lq,h_lr";

    pub fn csv_row(&self) -> String {
        format!("{},{:.10e},{:.10e},{:.10e}", self.t, self.u, self.grad_u, self.h)
    }
}

fn gradient_lp(u: &HalfSpaceField, q: f64) -> Result<f64> {
    let s = u.spectral();
    let mut parts = Vec::with_capacity(9);
    for c in 0..3 {
        let sc = s.component(c);
        parts.push(sc.derivative(0, 0));
        parts.push(sc.derivative(0, 1));
        parts.push(sc.vertical(u.vgrid().d1()));
    }
    Ok(HalfSpaceField::stack(&parts)?.lp_norm(q))
}

/// `L_q` norms of `u` and `grad u` and the `L_r` norm of `h` at every
/// positive time of the solution.
pub fn decay_samples(sol: &LinearSolution, q: f64, r: f64) -> Result<Vec<DecaySample>> {
    if !(q >= 1.0 && r >= 1.0) {
        return invalid(format!("norm exponents must be >= 1, got q = {q}, r = {r}"));
    }
    sol.times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t > 0.0)
        .map(|(n, &t)| {
            Ok(DecaySample {
                t,
                u: sol.u[n].lp_norm(q),
                grad_u: gradient_lp(&sol.u[n], q)?,
                h: sol.h[n].lp_norm(r),
            })
        })
        .collect()
}

/// Expected exponents for data localized in `L_{q_bar}`:
/// `m(q_bar, q)`, `n(q_bar, q) + 1/8` and `1/q_bar - 1/r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayTargets {
    pub u: f64,
    pub grad_u: f64,
    pub h: f64,
}

pub fn decay_targets(q_bar: f64, q: f64, r: f64) -> Result<DecayTargets> {
    let d = rate_exponents(q_bar, q)?;
    if !(r >= 2.0) {
        return invalid(format!("height exponent must be >= 2, got {r}"));
    }
    Ok(DecayTargets {
        u: d.m,
        grad_u: d.n + 0.125,
        h: 1.0 / q_bar - 1.0 / r,
    })
}

/// Fits the three norms over `window` against the targets.
pub fn decay_reports(samples: &[DecaySample], targets: &DecayTargets, window: (f64, f64), tolerance: f64) -> Result<[DecayReport; 3]> {
    let series = |f: fn(&DecaySample) -> f64| samples.iter().map(|s| (s.t, f(s))).collect::<Vec<_>>();
    Ok([
        DecayReport::new("u", fit_decay(&series(|s| s.u), window)?, targets.u, tolerance),
        DecayReport::new("grad_u", fit_decay(&series(|s| s.grad_u), window)?, targets.grad_u, tolerance),
        DecayReport::new("h", fit_decay(&series(|s| s.h), window)?, targets.h, tolerance),
    ])
}
