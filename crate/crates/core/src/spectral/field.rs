use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::grid::{HorizontalGrid, VerticalGrid};
use crate::error::{invalid, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Whether stored samples are grid values or Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Physical,
    Spectral,
}

/// Scalar field on the periodic surface.
#[derive(Debug, Clone)]
pub struct SurfaceField {
    grid: Arc<HorizontalGrid>,
    repr: Repr,
    data: Vec<Complex64>,
}

impl SurfaceField {
    pub fn zeros(grid: &Arc<HorizontalGrid>, repr: Repr) -> Self {
        Self {
            data: vec![ZERO; grid.len()],
            grid: grid.clone(),
            repr,
        }
    }

    pub fn from_fn(grid: &Arc<HorizontalGrid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let data = (0..grid.len()).map(|p| Complex64::new(f(grid.point(p)), 0.0)).collect();
        Self {
            grid: grid.clone(),
            repr: Repr::Physical,
            data,
        }
    }

    /// Field with prescribed Fourier coefficients.
    pub fn from_spectrum(grid: &Arc<HorizontalGrid>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return invalid("spectrum length does not match the grid");
        }
        Ok(Self {
            grid: grid.clone(),
            repr: Repr::Spectral,
            data,
        })
    }

    pub fn grid(&self) -> &Arc<HorizontalGrid> {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn to_spectral(&mut self) {
        if self.repr == Repr::Physical {
            self.grid.forward(&mut self.data);
            self.repr = Repr::Spectral;
        }
    }

    pub fn to_physical(&mut self) {
        if self.repr == Repr::Spectral {
            self.grid.inverse(&mut self.data);
            self.repr = Repr::Physical;
        }
    }

    pub fn spectral(&self) -> Self {
        let mut s = self.clone();
        s.to_spectral();
        s
    }

    pub fn physical(&self) -> Self {
        let mut s = self.clone();
        s.to_physical();
        s
    }

    /// `D_j` for `j` in `{0, 1}`, returned in spectral form.
    pub fn derivative(&self, j: usize) -> Self {
        let mut s = self.spectral();
        for (p, v) in s.data.iter_mut().enumerate() {
            *v *= self.grid.ixi(p, j);
        }
        s
    }

    /// Applies a real radial multiplier `m(|xi'|)`, returned in spectral form.
    pub fn multiply_radial(&self, m: impl Fn(f64) -> f64) -> Self {
        let mut s = self.spectral();
        for (p, v) in s.data.iter_mut().enumerate() {
            *v *= m(self.grid.abs_xi(p));
        }
        s
    }

    pub fn laplacian(&self) -> Self {
        self.multiply_radial(|a| -a * a)
    }

    /// Real parts of the physical samples.
    pub fn real_values(&self) -> Vec<f64> {
        self.physical().data.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.physical().data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `L_r` norm over one period; `r = f64::INFINITY` gives the sup norm.
    pub fn lp_norm(&self, r: f64) -> f64 {
        let ph = self.physical();
        lp_of(ph.data.iter().map(|v| v.norm()), r, self.grid.spacing().powi(2))
    }

    /// `box_len * (sum |c_k|^2)^(1/2)`, equal to the physical `L_2` norm.
    pub fn spectral_l2(&self) -> f64 {
        let s = self.spectral();
        self.grid.box_len() * s.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.repr, other.repr);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut s = self.clone();
        s.data.iter_mut().for_each(|v| *v *= a);
        s
    }

    /// Pointwise map of physical values.
    pub fn map_physical(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut s = self.physical();
        s.data.iter_mut().for_each(|v| *v = f(*v));
        s
    }
}

pub(crate) fn lp_of(vals: impl Iterator<Item = f64>, r: f64, cell: f64) -> f64 {
    if r.is_infinite() {
        vals.fold(0.0, f64::max)
    } else {
        (vals.map(|v| v.powf(r)).sum::<f64>() * cell).powf(1.0 / r)
    }
}

/// Scalar or vector field on the periodic half-space box.
///
/// Layout: component, then vertical node, then horizontal plane.
#[derive(Debug, Clone)]
pub struct HalfSpaceField {
    hgrid: Arc<HorizontalGrid>,
    vgrid: Arc<VerticalGrid>,
    comps: usize,
    repr: Repr,
    data: Vec<Complex64>,
}

impl HalfSpaceField {
    pub fn zeros(hgrid: &Arc<HorizontalGrid>, vgrid: &Arc<VerticalGrid>, comps: usize, repr: Repr) -> Self {
        Self {
            data: vec![ZERO; comps * vgrid.len() * hgrid.len()],
            hgrid: hgrid.clone(),
            vgrid: vgrid.clone(),
            comps,
            repr,
        }
    }

    /// Samples `f(x1, x2, x3)` for every component.
    pub fn from_fn(
        hgrid: &Arc<HorizontalGrid>,
        vgrid: &Arc<VerticalGrid>,
        comps: usize,
        f: impl Fn(usize, [f64; 3]) -> f64,
    ) -> Self {
        let mut s = Self::zeros(hgrid, vgrid, comps, Repr::Physical);
        let np = hgrid.len();
        for c in 0..comps {
            for (iz, z) in vgrid.nodes().iter().enumerate() {
                for p in 0..np {
                    let [x1, x2] = hgrid.point(p);
                    s.data[(c * vgrid.len() + iz) * np + p] = Complex64::new(f(c, [x1, x2, *z]), 0.0);
                }
            }
        }
        s
    }

    pub fn hgrid(&self) -> &Arc<HorizontalGrid> {
        &self.hgrid
    }

    pub fn vgrid(&self) -> &Arc<VerticalGrid> {
        &self.vgrid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn offset(&self, c: usize, iz: usize) -> usize {
        (c * self.vgrid.len() + iz) * self.hgrid.len()
    }

    pub fn plane(&self, c: usize, iz: usize) -> &[Complex64] {
        let o = self.offset(c, iz);
        &self.data[o..o + self.hgrid.len()]
    }

    pub fn plane_mut(&mut self, c: usize, iz: usize) -> &mut [Complex64] {
        let o = self.offset(c, iz);
        let n = self.hgrid.len();
        &mut self.data[o..o + n]
    }

    pub fn get(&self, c: usize, iz: usize, p: usize) -> Complex64 {
        self.data[self.offset(c, iz) + p]
    }

    pub fn set(&mut self, c: usize, iz: usize, p: usize, v: Complex64) {
        let o = self.offset(c, iz);
        self.data[o + p] = v;
    }

    /// Vertical profile of component `c` at horizontal index `p`.
    pub fn column(&self, c: usize, p: usize) -> Vec<Complex64> {
        (0..self.vgrid.len()).map(|iz| self.get(c, iz, p)).collect()
    }

    pub fn set_column(&mut self, c: usize, p: usize, col: &[Complex64]) {
        for (iz, v) in col.iter().enumerate() {
            self.set(c, iz, p, *v);
        }
    }

    pub fn to_spectral(&mut self) {
        if self.repr == Repr::Physical {
            let n = self.hgrid.len();
            let g = self.hgrid.clone();
            self.data.chunks_mut(n).for_each(|pl| g.forward(pl));
            self.repr = Repr::Spectral;
        }
    }

    pub fn to_physical(&mut self) {
        if self.repr == Repr::Spectral {
            let n = self.hgrid.len();
            let g = self.hgrid.clone();
            self.data.chunks_mut(n).for_each(|pl| g.inverse(pl));
            self.repr = Repr::Physical;
        }
    }

    pub fn spectral(&self) -> Self {
        let mut s = self.clone();
        s.to_spectral();
        s
    }

    pub fn physical(&self) -> Self {
        let mut s = self.clone();
        s.to_physical();
        s
    }

    /// Single component as a scalar field.
    pub fn component(&self, c: usize) -> Self {
        let nz = self.vgrid.len();
        let np = self.hgrid.len();
        Self {
            hgrid: self.hgrid.clone(),
            vgrid: self.vgrid.clone(),
            comps: 1,
            repr: self.repr,
            data: self.data[c * nz * np..(c + 1) * nz * np].to_vec(),
        }
    }

    /// Stacks scalar fields into a vector field.
    pub fn stack(parts: &[Self]) -> Result<Self> {
        let first = match parts.first() {
            Some(f) => f,
            None => return invalid("cannot stack zero fields"),
        };
        let mut data = Vec::with_capacity(parts.len() * first.data.len());
        let mut comps = 0;
        for f in parts {
            if f.repr != first.repr || f.data.len() / f.comps != first.data.len() / first.comps {
                return invalid("stacked fields must share grid and representation");
            }
            data.extend_from_slice(&f.data);
            comps += f.comps;
        }
        Ok(Self {
            hgrid: first.hgrid.clone(),
            vgrid: first.vgrid.clone(),
            comps,
            repr: first.repr,
            data,
        })
    }

    /// `D_j` of component `c`; `j = 2` is the vertical derivative.
    /// The result keeps the representation of `self`, except that
    /// horizontal derivatives are always returned spectral.
    pub fn derivative(&self, c: usize, j: usize) -> Self {
        match j {
            0 | 1 => {
                let mut s = self.component(c);
                s.to_spectral();
                let np = self.hgrid.len();
                for pl in s.data.chunks_mut(np) {
                    for (p, v) in pl.iter_mut().enumerate() {
                        *v *= self.hgrid.ixi(p, j);
                    }
                }
                s
            }
            _ => self.component(c).vertical(self.vgrid.d1()),
        }
    }

    /// Applies a vertical operator plane-by-plane to a scalar field.
    pub fn vertical(&self, d: &DMatrix<f64>) -> Self {
        let nz = self.vgrid.len();
        let np = self.hgrid.len();
        let mut out = Self {
            hgrid: self.hgrid.clone(),
            vgrid: self.vgrid.clone(),
            comps: self.comps,
            repr: self.repr,
            data: vec![ZERO; self.data.len()],
        };
        for c in 0..self.comps {
            let base = c * nz * np;
            for i in 0..nz {
                let mut dst = vec![ZERO; np];
                for j in 0..nz {
                    let w = d[(i, j)];
                    if w == 0.0 {
                        continue;
                    }
                    let src = &self.data[base + j * np..base + (j + 1) * np];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += *s * w;
                    }
                }
                out.data[base + i * np..base + (i + 1) * np].copy_from_slice(&dst);
            }
        }
        out
    }

    /// Values of component `c` at the top node as a surface field.
    pub fn trace(&self, c: usize) -> SurfaceField {
        SurfaceField {
            grid: self.hgrid.clone(),
            repr: self.repr,
            data: self.plane(c, self.vgrid.top()).to_vec(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.repr, other.repr);
        assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut s = self.clone();
        s.data.iter_mut().for_each(|v| *v *= a);
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.physical().data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `L_r` norm of component `c` over the box, using the vertical weights.
    pub fn component_lp(&self, c: usize, r: f64) -> f64 {
        self.lp_pointwise(r, &[c])
    }

    /// `L_r` norm of the pointwise Euclidean magnitude over the listed
    /// components.
    pub fn lp_pointwise(&self, r: f64, comps: &[usize]) -> f64 {
        let ph = self.physical();
        let nz = self.vgrid.len();
        let np = self.hgrid.len();
        let cell = self.hgrid.spacing().powi(2);
        let mut acc = 0.0;
        let mut mx: f64 = 0.0;
        for iz in 0..nz {
            let w = self.vgrid.weights()[iz];
            let mut plane = 0.0;
            for p in 0..np {
                let m2: f64 = comps.iter().map(|&c| ph.get(c, iz, p).norm_sqr()).sum();
                if r.is_infinite() {
                    mx = mx.max(m2.sqrt());
                } else {
                    plane += m2.powf(0.5 * r);
                }
            }
            acc += w * plane * cell;
        }
        if r.is_infinite() {
            mx
        } else {
            acc.powf(1.0 / r)
        }
    }

    pub fn lp_norm(&self, r: f64) -> f64 {
        let all: Vec<usize> = (0..self.comps).collect();
        self.lp_pointwise(r, &all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::VerticalScheme;
    use std::f64::consts::PI;

    #[test]
    fn cosine_has_half_coefficients() {
        let g = HorizontalGrid::new(16, 2.0 * PI).unwrap();
        let f = SurfaceField::from_fn(&g, |x| x[0].cos()).spectral();
        for p in 0..g.len() {
            let j = g.int_mode(p);
            let want = if j == [1, 0] || j == [-1, 0] { 0.5 } else { 0.0 };
            assert!((f.data()[p] - Complex64::new(want, 0.0)).norm() < 1e-14, "{j:?}");
        }
    }

    #[test]
    fn parseval() {
        let g = HorizontalGrid::new(16, 3.0).unwrap();
        let f = SurfaceField::from_fn(&g, |x| (x[0] * 2.0).sin() + 0.3 * (x[1] * 4.0).cos() + 1.0);
        assert!((f.lp_norm(2.0) - f.spectral_l2()).abs() < 1e-12);
    }

    #[test]
    fn vertical_derivative_matches_columns() {
        let h = HorizontalGrid::new(8, 2.0 * PI).unwrap();
        let v = VerticalGrid::new(VerticalScheme::Chebyshev, 24, 4.0).unwrap();
        let f = HalfSpaceField::from_fn(&h, &v, 1, |_, x| x[0].sin() * (2.0 * x[2]).exp());
        let d = f.derivative(0, 2);
        let d1 = f.derivative(0, 0).physical();
        for iz in 0..v.len() {
            for p in 0..h.len() {
                let [x1, _] = h.point(p);
                let z = v.nodes()[iz];
                assert!((d.get(0, iz, p).re - 2.0 * x1.sin() * (2.0 * z).exp()).abs() < 1e-9);
                assert!((d1.get(0, iz, p).re - x1.cos() * (2.0 * z).exp()).abs() < 1e-12);
            }
        }
    }
}

/// First and second derivatives of a scalar half-space field, in physical
/// representation. `grad[j]` is `D_j f` and `hess[j][k]` is `D_j D_k f`,
/// with index `2` the vertical direction.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub grad: [HalfSpaceField; 3],
    pub hess: [[HalfSpaceField; 3]; 3],
}

impl HalfSpaceField {
    /// Gradient and Hessian of component `c`.
    pub fn derivatives(&self, c: usize) -> Derivatives {
        let s = self.component(c).spectral();
        let dh = |f: &HalfSpaceField, j: usize| f.derivative(0, j);
        let g0 = dh(&s, 0);
        let g1 = dh(&s, 1);
        let g2 = s.vertical(self.vgrid.d1());
        let h00 = dh(&g0, 0);
        let h01 = dh(&g0, 1);
        let h11 = dh(&g1, 1);
        let h02 = g2.derivative(0, 0);
        let h12 = g2.derivative(0, 1);
        let h22 = s.vertical(self.vgrid.d2());
        let ph = |f: HalfSpaceField| f.physical();
        let (g0, g1, g2) = (ph(g0), ph(g1), ph(g2));
        let (h00, h01, h11, h02, h12, h22) = (ph(h00), ph(h01), ph(h11), ph(h02), ph(h12), ph(h22));
        Derivatives {
            grad: [g0, g1, g2],
            hess: [
                [h00, h01.clone(), h02.clone()],
                [h01, h11, h12.clone()],
                [h02, h12, h22],
            ],
        }
    }
}
