use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spectral::{HalfSpaceField, Repr, VerticalGrid};

/// Corrector `d = -grad Phi` with `(A^2 - d3^2) Phi = g`, `Phi(0) = 0`.
///
/// `Phi` is the restriction of the whole-space solution for the odd
/// extension of `g`, so `div d = g` and `d` decays with depth; at the
/// truncation depth `d3 Phi = 0`. Returns the three components of `d` for
/// one mode.
pub fn solve_divergence_mode(xi: [f64; 2], g: &[Complex64], vgrid: &Arc<VerticalGrid>) -> Result<[Vec<Complex64>; 3]> {
    let n = vgrid.len();
    if g.len() != n {
        return invalid("divergence data does not match the vertical grid");
    }
    let top = n - 1;
    let a2 = xi[0] * xi[0] + xi[1] * xi[1];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut b = DVector::from_element(n, Complex64::default());
    for i in 1..top {
        for c in 0..n {
            m[(i, c)] = Complex64::new(-vgrid.d2()[(i, c)], 0.0);
        }
        m[(i, i)] += a2;
        b[i] = g[i];
    }
    for c in 0..n {
        m[(0, c)] = Complex64::new(vgrid.d1()[(0, c)], 0.0);
    }
    m[(top, top)] = Complex64::new(1.0, 0.0);
    let phi = m.lu().solve(&b).ok_or_else(|| Error::Numerical {
        msg: "divergence corrector is singular".into(),
        condition: None,
    })?;
    let phi = phi.as_slice();
    let dphi = vgrid.apply(vgrid.d1(), phi);
    let i = Complex64::new(0.0, 1.0);
    Ok([
        phi.iter().map(|v| -i * xi[0] * v).collect(),
        phi.iter().map(|v| -i * xi[1] * v).collect(),
        dphi.iter().map(|v| -v).collect(),
    ])
}

/// Field version of [`solve_divergence_mode`]; the result is spectral.
/// Nyquist modes are left at zero.
pub fn solve_divergence(g: &HalfSpaceField) -> Result<HalfSpaceField> {
    if g.comps() != 1 {
        return invalid("divergence data must be scalar");
    }
    let gs = g.spectral();
    let hg = g.hgrid();
    let mut d = HalfSpaceField::zeros(hg, g.vgrid(), 3, Repr::Spectral);
    for p in 0..hg.len() {
        let col = gs.column(0, p);
        if hg.is_nyquist(p) || col.iter().all(|v| v.norm() == 0.0) {
            continue;
        }
        let comps = solve_divergence_mode(hg.xi(p), &col, g.vgrid())?;
        for (c, v) in comps.iter().enumerate() {
            d.set_column(c, p, v);
        }
    }
    Ok(d)
}
