use nalgebra::DMatrix;
use num_complex::Complex64;

use super::field::{HalfSpaceField, Repr, SurfaceField};
use crate::error::{invalid, Result};

/// Smooth radial cutoff: `1` for `|xi'| <= delta/2`, `0` for `|xi'| >= delta`.
pub fn cutoff(a: f64, delta: f64) -> f64 {
    let s = (2.0 * a / delta - 1.0).clamp(0.0, 1.0);
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let bump = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    bump(1.0 - s) / (bump(1.0 - s) + bump(s))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return invalid(format!("cutoff radius must be positive, got {delta}"));
    }
    Ok(())
}

/// Splits `f` into low and high horizontal frequency parts; both are
/// returned spectral and sum back to `f`.
pub fn cutoff_split(f: &HalfSpaceField, delta: f64) -> Result<(HalfSpaceField, HalfSpaceField)> {
    check_delta(delta)?;
    let mut low = f.spectral();
    let mut high = low.clone();
    let g = f.hgrid().clone();
    let np = g.len();
    for (lo, hi) in low.data_mut().chunks_mut(np).zip(high.data_mut().chunks_mut(np)) {
        for p in 0..np {
            let phi = cutoff(g.abs_xi(p), delta);
            let v = lo[p];
            lo[p] = v * phi;
            hi[p] = v - lo[p];
        }
    }
    Ok((low, high))
}

pub fn cutoff_split_surface(f: &SurfaceField, delta: f64) -> Result<(SurfaceField, SurfaceField)> {
    check_delta(delta)?;
    let mut low = f.spectral();
    let mut high = low.clone();
    let g = f.grid().clone();
    for p in 0..g.len() {
        let v = low.data()[p];
        let l = v * cutoff(g.abs_xi(p), delta);
        low.data_mut()[p] = l;
        high.data_mut()[p] = v - l;
    }
    Ok((low, high))
}

/// Parity of a component under `x3 -> -x3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

/// The parity pattern used for vector fields: odd tangential components,
/// even normal component.
pub const VECTOR_PARITY: [Parity; 3] = [Parity::Odd, Parity::Odd, Parity::Even];

/// Field extended by reflection to `[-depth, depth]`.
///
/// Nodes are the lower grid followed by its mirror image (the shared node at
/// `0` is stored once). Vertical derivatives are taken panel by panel.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    pub nodes: Vec<f64>,
    pub comps: usize,
    pub np: usize,
    /// Layout: component, node, horizontal index (spectral).
    pub data: Vec<Complex64>,
    d1: DMatrix<f64>,
    ixi: Vec<[Complex64; 2]>,
}

pub fn extend_odd_even(f: &HalfSpaceField, parity: &[Parity]) -> Result<ExtendedField> {
    if parity.len() != f.comps() {
        return invalid("one parity per component is required");
    }
    let s = f.spectral();
    let v = f.vgrid();
    let nz = v.len();
    let ne = 2 * nz - 1;
    let np = f.hgrid().len();
    let mut nodes: Vec<f64> = v.nodes().to_vec();
    nodes.extend(v.nodes().iter().rev().skip(1).map(|z| -z));
    let mut data = vec![Complex64::new(0.0, 0.0); f.comps() * ne * np];
    for (c, par) in parity.iter().enumerate() {
        for i in 0..ne {
            let (src, sign) = if i < nz { (i, 1.0) } else { (2 * nz - 2 - i, if *par == Parity::Odd { -1.0 } else { 1.0 }) };
            for p in 0..np {
                data[(c * ne + i) * np + p] = s.get(c, src, p) * sign;
            }
        }
    }
    let ixi = (0..np).map(|p| [f.hgrid().ixi(p, 0), f.hgrid().ixi(p, 1)]).collect();
    Ok(ExtendedField {
        nodes,
        comps: f.comps(),
        np,
        data,
        d1: v.d1().clone(),
        ixi,
    })
}

impl ExtendedField {
    fn n_lower(&self) -> usize {
        self.d1.nrows()
    }

    pub fn get(&self, c: usize, i: usize, p: usize) -> Complex64 {
        self.data[(c * self.nodes.len() + i) * self.np + p]
    }

    /// Vertical derivative of component `c` at node `i`, mode `p`. The upper
    /// panel uses the mirrored lower operator; the shared node at `0` takes
    /// the lower-panel value.
    pub fn dz(&self, c: usize, i: usize, p: usize) -> Complex64 {
        let nz = self.n_lower();
        let mut s = Complex64::new(0.0, 0.0);
        if i < nz {
            for j in 0..nz {
                s += self.get(c, j, p) * self.d1[(i, j)];
            }
        } else {
            // node i mirrors lower node m; the mirrored column reverses the
            // orientation of the derivative
            let m = 2 * nz - 2 - i;
            for j in 0..nz {
                let jj = 2 * nz - 2 - j;
                s -= self.get(c, jj, p) * self.d1[(m, j)];
            }
        }
        s
    }

    /// Spectral divergence of a three-component extended field.
    pub fn divergence(&self) -> Result<Vec<Complex64>> {
        if self.comps != 3 {
            return invalid("divergence needs three components");
        }
        let ne = self.nodes.len();
        let mut out = vec![Complex64::new(0.0, 0.0); ne * self.np];
        for i in 0..ne {
            for p in 0..self.np {
                out[i * self.np + p] =
                    self.ixi[p][0] * self.get(0, i, p) + self.ixi[p][1] * self.get(1, i, p) + self.dz(2, i, p);
            }
        }
        Ok(out)
    }
}

/// Discrete spectral divergence of a three-component field; the result is
/// spectral.
pub fn divergence(f: &HalfSpaceField) -> Result<HalfSpaceField> {
    if f.comps() != 3 {
        return invalid("divergence needs three components");
    }
    let mut out = f.derivative(0, 0);
    out.axpy(1.0, &f.derivative(1, 1));
    let mut dz = f.derivative(2, 2);
    dz.to_spectral();
    out.axpy(1.0, &dz);
    debug_assert_eq!(out.repr(), Repr::Spectral);
    Ok(out)
}
