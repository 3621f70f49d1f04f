//! Harmonic extension of the height, the Hanzawa change of variables and
//! the geometry of the free surface.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spectral::{Derivatives, HalfSpaceField, Repr, SurfaceField, VerticalGrid};

/// Default bound on `|grad eta|` under which the transform is invertible.
pub const DEFAULT_C0: f64 = 0.45;

/// `eta = E(h)`: each mode is continued as `e^{|xi'| y3} h_hat(xi')`.
pub fn harmonic_extension(h: &SurfaceField, vgrid: &Arc<VerticalGrid>) -> HalfSpaceField {
    let hs = h.spectral();
    let g = h.grid();
    let mut eta = HalfSpaceField::zeros(g, vgrid, 1, Repr::Spectral);
    for (iz, z) in vgrid.nodes().iter().enumerate() {
        let pl = eta.plane_mut(0, iz);
        for (p, v) in pl.iter_mut().enumerate() {
            *v = hs.data()[p] * (g.abs_xi(p) * z).exp();
        }
    }
    eta
}

/// Height together with its extension and the derivatives used by the
/// transformed operators.
#[derive(Debug, Clone)]
pub struct HeightState {
    pub h: SurfaceField,
    pub eta: HalfSpaceField,
    /// `E(d_t h)` when a time derivative is supplied.
    pub dt_eta: Option<HalfSpaceField>,
    pub derivs: Derivatives,
    pub c0: f64,
    /// `sup |grad eta|` over the grid.
    pub grad_sup: f64,
}

impl HeightState {
    pub fn new(h: &SurfaceField, dt_h: Option<&SurfaceField>, vgrid: &Arc<VerticalGrid>, c0: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0 < 1.0) {
            return invalid(format!("invertibility bound must lie in (0, 1), got {c0}"));
        }
        let eta = harmonic_extension(h, vgrid);
        let derivs = eta.derivatives(0);
        let ph: Vec<HalfSpaceField> = derivs.grad.to_vec();
        let mut grad_sup: f64 = 0.0;
        for i in 0..ph[0].data().len() {
            let m2: f64 = ph.iter().map(|f| f.data()[i].norm_sqr()).sum();
            grad_sup = grad_sup.max(m2.sqrt());
        }
        if grad_sup >= c0 {
            return Err(Error::NearDegenerate(format!(
                "sup |grad eta| = {grad_sup:.4} is not below c0 = {c0}"
            )));
        }
        Ok(Self {
            h: h.spectral(),
            dt_eta: dt_h.map(|d| harmonic_extension(d, vgrid)),
            eta,
            derivs,
            c0,
            grad_sup,
        })
    }

    /// `eta`, `D_1 eta`, `D_2 eta`, `D_3 eta` at an arbitrary point of the
    /// closed lower half-space, by direct Fourier summation.
    pub fn eval(&self, y: [f64; 3]) -> [f64; 4] {
        let g = self.h.grid();
        let mut out = [0.0; 4];
        for (p, c) in self.h.data().iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let [k1, k2] = g.xi(p);
            let a = g.abs_xi(p);
            let w = *c * Complex64::from_polar((a * y[2]).exp(), k1 * y[0] + k2 * y[1]);
            out[0] += w.re;
            out[1] += (w * g.ixi(p, 0)).re;
            out[2] += (w * g.ixi(p, 1)).re;
            out[3] += a * w.re;
        }
        out
    }
}

/// `Theta(y) = (y1, y2, y3 + eta(y))`.
pub fn hanzawa_forward(y: [f64; 3], state: &HeightState) -> Result<[f64; 3]> {
    if y[2] > 0.0 {
        return Err(Error::Domain(format!("y3 = {} lies above the reference boundary", y[2])));
    }
    Ok([y[0], y[1], y[2] + state.eval(y)[0]])
}

/// Inverse of [`hanzawa_forward`] by safeguarded Newton iteration in `y3`.
pub fn hanzawa_inverse(x: [f64; 3], state: &HeightState) -> Result<[f64; 3]> {
    let surf = state.eval([x[0], x[1], 0.0])[0];
    if x[2] > surf {
        return Err(Error::Domain(format!("x3 = {} lies above the free surface {surf}", x[2])));
    }
    let amp = state.h.max_abs();
    // y3 + eta(y3) is increasing, so the root is bracketed
    let mut lo = x[2] - amp - 1e-12;
    let mut hi = (x[2] + amp + 1e-12).min(0.0);
    let mut y3 = x[2].min(0.0);
    for _ in 0..200 {
        let e = state.eval([x[0], x[1], y3]);
        let f = y3 + e[0] - x[2];
        if f.abs() < 1e-15 * (1.0 + x[2].abs()) {
            return Ok([x[0], x[1], y3]);
        }
        if f > 0.0 {
            hi = y3;
        } else {
            lo = y3;
        }
        let step = y3 - f / (1.0 + e[3]);
        y3 = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * (1.0 + x[2].abs()) {
            return Ok([x[0], x[1], y3]);
        }
    }
    Err(Error::Numerical {
        msg: "Hanzawa inversion did not converge".into(),
        condition: None,
    })
}

/// Derivatives of `f = fbar o Theta^{-1}` expressed in reference
/// coordinates: `grad[j] = d_j f` and `hess[j][k] = d_j d_k f`, physical.
pub fn transformed_derivatives(fbar: &HalfSpaceField, state: &HeightState) -> Result<Derivatives> {
    if fbar.comps() != 1 {
        return invalid("transformed derivatives act on scalar fields");
    }
    let fd = fbar.derivatives(0);
    let e = &state.derivs;
    let n = fd.grad[0].data().len();
    let mut out = fd.clone();
    for i in 0..n {
        let de = [e.grad[0].data()[i].re, e.grad[1].data()[i].re, e.grad[2].data()[i].re];
        let dde = |j: usize, k: usize| e.hess[j][k].data()[i].re;
        let j3 = 1.0 + de[2];
        let df = |j: usize| fd.grad[j].data()[i];
        let ddf = |j: usize, k: usize| fd.hess[j][k].data()[i];
        for j in 0..3 {
            out.grad[j].data_mut()[i] = df(j) - de[j] / j3 * df(2);
        }
        for j in 0..3 {
            for k in 0..3 {
                let c1 = (dde(j, k) * j3 * j3 - de[k] * dde(j, 2) * j3 - de[j] * dde(2, k) * j3
                    + de[j] * de[k] * dde(2, 2))
                    / (j3 * j3 * j3);
                let op = c1 * df(2) + de[k] / j3 * ddf(j, 2) + de[j] / j3 * ddf(2, k)
                    - de[j] * de[k] / (j3 * j3) * ddf(2, 2);
                out.hess[j][k].data_mut()[i] = ddf(j, k) - op;
            }
        }
    }
    Ok(out)
}

/// Upward unit normal `(-grad' h, 1) / sqrt(1 + |grad' h|^2)`, physical.
pub fn surface_normal(h: &SurfaceField) -> [SurfaceField; 3] {
    let d1 = h.derivative(0).physical();
    let d2 = h.derivative(1).physical();
    let mut n = [d1.clone(), d2.clone(), d1.clone()];
    for i in 0..h.data().len() {
        let (a, b) = (d1.data()[i].re, d2.data()[i].re);
        let w = (1.0 + a * a + b * b).sqrt();
        n[0].data_mut()[i] = Complex64::new(-a / w, 0.0);
        n[1].data_mut()[i] = Complex64::new(-b / w, 0.0);
        n[2].data_mut()[i] = Complex64::new(1.0 / w, 0.0);
    }
    n
}

/// Nonlinear part of the mean curvature, so that `kappa = Lap' h - K(h)`.
pub fn curvature_remainder(h: &SurfaceField) -> SurfaceField {
    let d = [h.derivative(0).physical(), h.derivative(1).physical()];
    let dd = [
        [h.derivative(0).derivative(0).physical(), h.derivative(0).derivative(1).physical()],
        [h.derivative(1).derivative(0).physical(), h.derivative(1).derivative(1).physical()],
    ];
    let mut out = d[0].clone();
    for i in 0..h.data().len() {
        let g = [d[0].data()[i].re, d[1].data()[i].re];
        let hh = |j: usize, k: usize| dd[j][k].data()[i].re;
        let g2 = g[0] * g[0] + g[1] * g[1];
        let w = (1.0 + g2).sqrt();
        let lap = hh(0, 0) + hh(1, 1);
        let mut quad = 0.0;
        for j in 0..2 {
            for k in 0..2 {
                quad += g[j] * g[k] * hh(j, k);
            }
        }
        out.data_mut()[i] = Complex64::new(g2 * lap / ((1.0 + w) * w) + quad / (w * w * w), 0.0);
    }
    out
}

/// Normal and mean curvature `kappa = Lap' h - K(h)` of the graph of `h`.
pub fn surface_normal_curvature(h: &SurfaceField) -> ([SurfaceField; 3], SurfaceField) {
    let mut kappa = h.laplacian().physical();
    kappa.axpy(-1.0, &curvature_remainder(h));
    (surface_normal(h), kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{HorizontalGrid, VerticalScheme};
    use std::f64::consts::PI;

    fn grids(n: usize, nz: usize) -> (Arc<crate::spectral::HorizontalGrid>, Arc<VerticalGrid>) {
        (
            HorizontalGrid::new(n, 2.0 * PI).unwrap(),
            VerticalGrid::new(VerticalScheme::Chebyshev, nz, 10.0).unwrap(),
        )
    }

    #[test]
    fn constant_height_extends_to_constant() {
        let (h, v) = grids(8, 16);
        let eta = harmonic_extension(&SurfaceField::from_fn(&h, |_| 1.0), &v).physical();
        assert!(eta.data().iter().all(|x| (x - 1.0).norm() < 1e-14));
    }

    #[test]
    fn cosine_mode_decays_exponentially() {
        let (h, v) = grids(8, 16);
        let eta = harmonic_extension(&SurfaceField::from_fn(&h, |x| x[0].cos()), &v).physical();
        for (iz, z) in v.nodes().iter().enumerate() {
            for p in 0..h.len() {
                let want = h.point(p)[0].cos() * z.exp();
                assert!((eta.get(0, iz, p).re - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn round_trip_of_transform() {
        let (h, v) = grids(16, 20);
        let hf = SurfaceField::from_fn(&h, |x| 0.2 * x[0].cos() + 0.1 * (x[0] + 2.0 * x[1]).sin());
        let st = HeightState::new(&hf, None, &v, DEFAULT_C0).unwrap();
        for y in [[0.3, 1.0, -0.5], [2.0, 5.0, 0.0], [4.0, 0.1, -3.0]] {
            let x = hanzawa_forward(y, &st).unwrap();
            let back = hanzawa_inverse(x, &st).unwrap();
            for j in 0..3 {
                assert!((back[j] - y[j]).abs() < 1e-12);
            }
        }
        assert!(hanzawa_forward([0.0, 0.0, 0.1], &st).is_err());
    }

    #[test]
    fn steep_height_is_rejected() {
        let (h, v) = grids(16, 20);
        let hf = SurfaceField::from_fn(&h, |x| 0.6 * x[0].cos());
        assert!(matches!(HeightState::new(&hf, None, &v, DEFAULT_C0), Err(Error::NearDegenerate(_))));
    }

    #[test]
    fn vertical_coordinate_has_unit_gradient() {
        let (h, v) = grids(16, 24);
        let hf = SurfaceField::from_fn(&h, |x| 0.1 * x[0].sin() * x[1].cos());
        let st = HeightState::new(&hf, None, &v, DEFAULT_C0).unwrap();
        // x3 pulled back is y3 + eta(y)
        let mut fbar = HalfSpaceField::from_fn(&h, &v, 1, |_, y| y[2]);
        fbar.axpy(1.0, &st.eta.physical());
        let d = transformed_derivatives(&fbar, &st).unwrap();
        for i in 0..fbar.data().len() {
            assert!(d.grad[0].data()[i].norm() < 1e-10);
            assert!(d.grad[1].data()[i].norm() < 1e-10);
            assert!((d.grad[2].data()[i] - 1.0).norm() < 1e-10);
            for j in 0..3 {
                for k in 0..3 {
                    assert!(d.hess[j][k].data()[i].norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn transformed_second_derivative_of_quadratic() {
        // f(x) = x3^2 has d3 d3 f = 2 and d1 f = 0 in any coordinates
        let (h, v) = grids(16, 24);
        let hf = SurfaceField::from_fn(&h, |x| 0.15 * x[0].cos());
        let st = HeightState::new(&hf, None, &v, DEFAULT_C0).unwrap();
        let eta = st.eta.physical();
        let mut fbar = HalfSpaceField::from_fn(&h, &v, 1, |_, _| 0.0);
        for iz in 0..v.len() {
            for p in 0..h.len() {
                let x3 = v.nodes()[iz] + eta.get(0, iz, p).re;
                fbar.set(0, iz, p, Complex64::new(x3 * x3, 0.0));
            }
        }
        let d = transformed_derivatives(&fbar, &st).unwrap();
        for i in 0..fbar.data().len() {
            assert!((d.hess[2][2].data()[i] - 2.0).norm() < 1e-7);
            assert!(d.hess[0][2].data()[i].norm() < 1e-7);
            assert!(d.hess[0][0].data()[i].norm() < 1e-7);
        }
    }

    #[test]
    fn curvature_matches_divergence_form() {
        let g = HorizontalGrid::new(32, 2.0 * PI).unwrap();
        let hf = SurfaceField::from_fn(&g, |x| 0.3 * x[0].cos() + 0.2 * (x[0] - x[1]).sin());
        let (n, kappa) = surface_normal_curvature(&hf);
        let d = [hf.derivative(0).physical(), hf.derivative(1).physical()];
        let mut flux = [d[0].clone(), d[1].clone()];
        for i in 0..hf.data().len() {
            let w = (1.0 + d[0].data()[i].norm_sqr() + d[1].data()[i].norm_sqr()).sqrt();
            flux[0].data_mut()[i] /= w;
            flux[1].data_mut()[i] /= w;
        }
        let mut div = flux[0].derivative(0);
        div.axpy(1.0, &flux[1].derivative(1));
        let div = div.physical();
        let err = (0..hf.data().len())
            .map(|i| (div.data()[i] - kappa.data()[i]).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        for i in 0..hf.data().len() {
            let m: f64 = n.iter().map(|c| c.data()[i].norm_sqr()).sum();
            assert!((m - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_surface_has_zero_curvature() {
        let g = HorizontalGrid::new(8, 2.0 * PI).unwrap();
        let (n, k) = surface_normal_curvature(&SurfaceField::from_fn(&g, |_| 0.0));
        assert!(k.max_abs() == 0.0);
        assert!(n[2].data().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }
}
