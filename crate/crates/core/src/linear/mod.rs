//! Linearised free-surface Stokes problem: per-mode resolvent solves,
//! closed-form stress-driven solutions, pressure, semigroup, Duhamel
//! convolution and the divergence corrector.

mod boundary;
mod divergence;
pub(crate) mod duhamel;
#[cfg(test)]
mod manufactured;
mod mode;
mod pressure;
mod residual;
mod semigroup;

pub use boundary::{boundary_forced_mode, boundary_kernel_norms, dispersion, dispersion_poles, BoundaryProfiles};
pub use divergence::{solve_divergence, solve_divergence_mode};
pub use duhamel::{duhamel_solve, BoundaryData, DuhamelData, DuhamelOptions, DuhamelReport};
pub use mode::{assemble, assemble_rhs, solve_resolvent_mode, ModeData, ModeOperator, ModeProfile, RadialOperator};
pub use pressure::{reconstruct_pressure, reconstruct_pressure_mode};
pub use residual::{residual, LinearData, ResidualReport};
pub use semigroup::{evolve_semigroup, BoundaryFormulaPropagator, RadiusProfiles, ResolventBackend, SemigroupOptions};

use crate::error::{invalid, Result};
use crate::spectral::{HalfSpaceField, SurfaceField};

/// Viscosity, surface tension and gravity, with unit density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mu: f64,
    pub c_sigma: f64,
    pub c_g: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { mu: 1.0, c_sigma: 1.0, c_g: 1.0 }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return invalid(format!("viscosity must be positive, got {}", self.mu));
        }
        if !(self.c_sigma.is_finite() && self.c_sigma >= 0.0 && self.c_g.is_finite() && self.c_g >= 0.0) {
            return invalid("surface tension and gravity must be non-negative");
        }
        Ok(())
    }

    /// Per-mode surface operator `c_g + c_sigma |xi'|^2`.
    pub fn gamma(&self, a: f64) -> f64 {
        self.c_g + self.c_sigma * a * a
    }
}

/// Which route produced a [`LinearSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Resolvent,
    BoundaryForced,
    Semigroup,
    Duhamel,
}

/// Velocity, pressure and height on a time grid, plus time derivatives of
/// velocity and height where the route provides them exactly.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub times: Vec<f64>,
    pub u: Vec<HalfSpaceField>,
    pub p: Vec<HalfSpaceField>,
    pub h: Vec<SurfaceField>,
    pub dt_u: Option<Vec<HalfSpaceField>>,
    pub dt_h: Option<Vec<SurfaceField>>,
    pub provenance: Provenance,
}
