//! Transformed nonlinear problem: term assembly, compatibility of the
//! initial data, the initial flow and the Picard iteration.

mod compat;
mod initial;
mod picard;
mod terms;

use std::sync::Arc;

pub use compat::{check_compatibility, CompatibilityReport};
pub use initial::{damped_heat, initial_flow, InitialFlow};
pub use picard::{picard_solve, PicardIterate, PicardOptions, PicardReport};
pub use terms::{assemble_nonlinear, divergence_terms, kinematic_term, stress_term, NonlinearTerms};

use crate::error::{invalid, Result};
use crate::geometry::harmonic_extension;
use crate::linear::LinearSolution;
use crate::spectral::{HalfSpaceField, HorizontalGrid, Repr, SurfaceField, VerticalGrid};

/// Trajectory `z = (v, q, h, eta)` with `eta = E(h)` at every sample.
#[derive(Debug, Clone)]
pub struct StateZ {
    pub times: Vec<f64>,
    pub v: Vec<HalfSpaceField>,
    pub q: Vec<HalfSpaceField>,
    pub h: Vec<SurfaceField>,
    pub eta: Vec<HalfSpaceField>,
    pub dt_v: Option<Vec<HalfSpaceField>>,
    pub dt_h: Option<Vec<SurfaceField>>,
}

impl StateZ {
    pub fn new(
        times: Vec<f64>,
        v: Vec<HalfSpaceField>,
        q: Vec<HalfSpaceField>,
        h: Vec<SurfaceField>,
        dt_v: Option<Vec<HalfSpaceField>>,
        dt_h: Option<Vec<SurfaceField>>,
    ) -> Result<Self> {
        let nt = times.len();
        if nt == 0 || v.len() != nt || q.len() != nt || h.len() != nt {
            return invalid("trajectory fields must have one sample per time");
        }
        if dt_v.as_ref().is_some_and(|d| d.len() != nt) || dt_h.as_ref().is_some_and(|d| d.len() != nt) {
            return invalid("trajectory derivatives must have one sample per time");
        }
        if v.iter().any(|f| f.comps() != 3) || q.iter().any(|f| f.comps() != 1) {
            return invalid("velocity must be a vector and pressure a scalar field");
        }
        let vg = v[0].vgrid().clone();
        let eta = h.iter().map(|h| harmonic_extension(h, &vg)).collect();
        Ok(Self { times, v, q, h, eta, dt_v, dt_h })
    }

    pub fn zeros(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>, times: &[f64]) -> Self {
        let nt = times.len();
        let v = HalfSpaceField::zeros(hg, vg, 3, Repr::Spectral);
        let h = SurfaceField::zeros(hg, Repr::Spectral);
        Self {
            times: times.to_vec(),
            v: vec![v.clone(); nt],
            q: vec![HalfSpaceField::zeros(hg, vg, 1, Repr::Spectral); nt],
            eta: vec![HalfSpaceField::zeros(hg, vg, 1, Repr::Spectral); nt],
            h: vec![h.clone(); nt],
            dt_v: Some(vec![v; nt]),
            dt_h: Some(vec![h; nt]),
        }
    }

    pub fn from_linear(sol: &LinearSolution) -> Result<Self> {
        Self::new(sol.times.clone(), sol.u.clone(), sol.p.clone(), sol.h.clone(), sol.dt_u.clone(), sol.dt_h.clone())
    }

    /// `d_t eta = E(d_t h)` at sample `n`.
    pub fn dt_eta(&self, n: usize) -> Option<HalfSpaceField> {
        self.dt_h.as_ref().map(|d| harmonic_extension(&d[n], self.v[n].vgrid()))
    }

    /// Sum of two trajectories on the same samples.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return invalid("trajectories are sampled at different times");
        }
        let sum_h = |a: &[HalfSpaceField], b: &[HalfSpaceField]| -> Vec<HalfSpaceField> {
            a.iter()
                .zip(b)
                .map(|(x, y)| {
                    let mut s = x.spectral();
                    s.axpy(1.0, &y.spectral());
                    s
                })
                .collect()
        };
        let sum_s = |a: &[SurfaceField], b: &[SurfaceField]| -> Vec<SurfaceField> {
            a.iter()
                .zip(b)
                .map(|(x, y)| {
                    let mut s = x.spectral();
                    s.axpy(1.0, &y.spectral());
                    s
                })
                .collect()
        };
        Ok(Self {
            times: self.times.clone(),
            v: sum_h(&self.v, &other.v),
            q: sum_h(&self.q, &other.q),
            h: sum_s(&self.h, &other.h),
            eta: sum_h(&self.eta, &other.eta),
            dt_v: match (&self.dt_v, &other.dt_v) {
                (Some(a), Some(b)) => Some(sum_h(a, b)),
                _ => None,
            },
            dt_h: match (&self.dt_h, &other.dt_h) {
                (Some(a), Some(b)) => Some(sum_s(a, b)),
                _ => None,
            },
        })
    }
}

/// `div v` of a vector field, spectral.
pub(crate) fn divergence(v: &HalfSpaceField) -> HalfSpaceField {
    let s = v.spectral();
    let mut d = s.derivative(0, 0);
    d.axpy(1.0, &s.derivative(1, 1));
    d.axpy(1.0, &s.derivative(2, 2));
    d
}

/// `mu D(v) e3` on the surface, spectral.
pub(crate) fn viscous_traction(v: &HalfSpaceField, mu: f64) -> [SurfaceField; 3] {
    let s = v.spectral();
    let d3: [HalfSpaceField; 3] = std::array::from_fn(|c| s.derivative(c, 2));
    std::array::from_fn(|j| {
        let mut t = d3[j].trace(0).scaled(mu);
        let other = if j < 2 { s.derivative(2, j).trace(0) } else { d3[2].trace(0) };
        t.axpy(mu, &other);
        t
    })
}

