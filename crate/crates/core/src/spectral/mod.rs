//! Periodic horizontal grids, vertical collocation, spectral fields and
//! the transforms between their representations.

mod field;
mod grid;
pub mod io;
mod ops;

pub use field::{Derivatives, HalfSpaceField, Repr, SurfaceField};
pub use grid::{HorizontalGrid, VerticalGrid, VerticalScheme};
pub use ops::{cutoff, cutoff_split, cutoff_split_surface, divergence, extend_odd_even, ExtendedField, Parity, VECTOR_PARITY};
