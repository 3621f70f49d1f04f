use super::terms::{divergence_terms, stress_term};
use super::{divergence, viscous_traction};
use crate::error::{invalid, Result};
use crate::geometry::{HeightState, DEFAULT_C0};
use crate::linear::PhysicalParams;
use crate::spectral::{HalfSpaceField, SurfaceField};

/// Residuals of the two compatibility conditions on the initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityReport {
    /// `||div v0 - G(v0, E(h0))||_{L2}` over the column.
    pub divergence: f64,
    /// `||[mu D(v0) e3 - H(v0, E(h0))]_tangential||_{L2}` on the surface.
    pub tangential: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evaluates `div v0 = G(v0, E(h0))` and the tangential part of
/// `mu D(v0) e3 = H(v0, E(h0))`.
pub fn check_compatibility(v0: &HalfSpaceField, h0: &SurfaceField, params: &PhysicalParams, tol: f64) -> Result<CompatibilityReport> {
    if v0.comps() != 3 {
        return invalid("initial velocity must be a vector field");
    }
    if !(tol >= 0.0) {
        return invalid(format!("tolerance must be non-negative, got {tol}"));
    }
    let height = HeightState::new(h0, None, v0.vgrid(), DEFAULT_C0)?;
    let (_, g) = divergence_terms(v0, &height)?;
    let mut d = divergence(v0);
    d.axpy(-1.0, &g.spectral());
    let h = stress_term(v0, &height, params)?;
    let t = viscous_traction(v0, params.mu);
    let mut tangential: f64 = 0.0;
    for j in 0..2 {
        let mut r = t[j].clone();
        r.axpy(-1.0, &h[j].spectral());
        tangential += r.lp_norm(2.0).powi(2);
    }
    let divergence = d.lp_norm(2.0);
    let tangential = tangential.sqrt();
    Ok(CompatibilityReport {
        divergence,
        tangential,
        tol,
        pass: divergence <= tol && tangential <= tol,
    })
}
