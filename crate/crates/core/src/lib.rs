//! Numerical building blocks for viscous, capillary-gravity free-surface
//! flow in a horizontally periodic lower half-space.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod linear;
pub mod nonlinear;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};
