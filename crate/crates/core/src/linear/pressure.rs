use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::PhysicalParams;
use crate::error::{invalid, Error, Result};
use crate::spectral::{HalfSpaceField, Repr, SurfaceField, VerticalGrid};

/// Pressure `K1(u) + K2(h)` for one mode: solves
/// `(d3^2 - A^2) p = div(mu Lap u + (mu - 1) grad div u)` with
/// `p(0) = 2 mu d3 u3 - div u + (c_g + c_sigma A^2) h` and `d3 p = 0` at the bottom.
pub fn reconstruct_pressure_mode(
    xi: [f64; 2],
    u: &[Vec<Complex64>; 3],
    h: Complex64,
    params: &PhysicalParams,
    vgrid: &Arc<VerticalGrid>,
) -> Result<Vec<Complex64>> {
    forced_pressure_mode(xi, u, h, None, Complex64::default(), params, vgrid)
}

/// Pressure of a solution driven by momentum forcing `f` and normal stress
/// `h3`: adds `div f` to the interior equation, `f3` to the bottom
/// condition and `-h3` to the surface value.
pub(crate) fn forced_pressure_mode(
    xi: [f64; 2],
    u: &[Vec<Complex64>; 3],
    h: Complex64,
    f: Option<&[Vec<Complex64>; 3]>,
    h3: Complex64,
    params: &PhysicalParams,
    vgrid: &Arc<VerticalGrid>,
) -> Result<Vec<Complex64>> {
    let n = vgrid.len();
    if u.iter().chain(f.into_iter().flatten()).any(|c| c.len() != n) {
        return invalid("velocity profile does not match the vertical grid");
    }
    let top = n - 1;
    let mu = params.mu;
    let a2 = xi[0] * xi[0] + xi[1] * xi[1];
    let ixi = [Complex64::new(0.0, xi[0]), Complex64::new(0.0, xi[1])];
    let d1 = |f: &[Complex64]| vgrid.apply(vgrid.d1(), f);
    let d2 = |f: &[Complex64]| vgrid.apply(vgrid.d2(), f);
    let du3 = d1(&u[2]);
    let div: Vec<Complex64> = (0..n).map(|i| ixi[0] * u[0][i] + ixi[1] * u[1][i] + du3[i]).collect();
    let ddiv = d1(&div);
    let mut w: [Vec<Complex64>; 3] = Default::default();
    for j in 0..3 {
        let lap = d2(&u[j]);
        w[j] = (0..n)
            .map(|i| {
                let g = if j < 2 { ixi[j] * div[i] } else { ddiv[i] };
                mu * (lap[i] - a2 * u[j][i]) + (mu - 1.0) * g
            })
            .collect();
    }
    let dw3 = d1(&w[2]);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut b = DVector::from_element(n, Complex64::default());
    for i in 1..top {
        for c in 0..n {
            m[(i, c)] = Complex64::new(vgrid.d2()[(i, c)], 0.0);
        }
        m[(i, i)] -= a2;
        b[i] = ixi[0] * w[0][i] + ixi[1] * w[1][i] + dw3[i];
    }
    if let Some(f) = f {
        let df3 = d1(&f[2]);
        for i in 1..top {
            b[i] += ixi[0] * f[0][i] + ixi[1] * f[1][i] + df3[i];
        }
        b[0] = f[2][0];
    }
    for c in 0..n {
        m[(0, c)] = Complex64::new(vgrid.d1()[(0, c)], 0.0);
    }
    m[(top, top)] = Complex64::new(1.0, 0.0);
    b[top] = 2.0 * mu * du3[top] - div[top] + (params.c_g + params.c_sigma * a2) * h - h3;
    let x = m.lu().solve(&b).ok_or_else(|| Error::Numerical {
        msg: "pressure problem is singular".into(),
        condition: None,
    })?;
    Ok(x.as_slice().to_vec())
}

/// Field version of [`reconstruct_pressure_mode`]; the result is spectral.
pub fn reconstruct_pressure(u: &HalfSpaceField, h: &SurfaceField, params: &PhysicalParams) -> Result<HalfSpaceField> {
    if u.comps() != 3 {
        return invalid("pressure reconstruction needs a velocity field");
    }
    let us = u.spectral();
    let hs = h.spectral();
    let g = u.hgrid();
    let mut p = HalfSpaceField::zeros(g, u.vgrid(), 1, Repr::Spectral);
    for m in 0..g.len() {
        let prof = [us.column(0, m), us.column(1, m), us.column(2, m)];
        let col = reconstruct_pressure_mode(g.xi(m), &prof, hs.data()[m], params, u.vgrid())?;
        p.set_column(0, m, &col);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::VerticalScheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Sum of exponentials `sum c_k e^{kappa_k z}`.
    #[derive(Clone, Default)]
    struct Exps(Vec<(Complex64, f64)>);

    impl Exps {
        fn eval(&self, z: f64) -> Complex64 {
            self.0.iter().map(|(c, k)| c * (k * z).exp()).sum()
        }
        fn d(&self) -> Self {
            Exps(self.0.iter().map(|(c, k)| (c * k, *k)).collect())
        }
        fn scale(&self, s: Complex64) -> Self {
            Exps(self.0.iter().map(|(c, k)| (c * s, *k)).collect())
        }
        fn add(&self, o: &Self) -> Self {
            Exps(self.0.iter().chain(&o.0).cloned().collect())
        }
        fn sample(&self, z: &[f64]) -> Vec<Complex64> {
            z.iter().map(|&z| self.eval(z)).collect()
        }
    }

    /// Exact decaying pressure for exponential velocity profiles.
    fn exact(xi: [f64; 2], u: &[Exps; 3], h: Complex64, params: &PhysicalParams) -> Exps {
        let mu = params.mu;
        let a2 = xi[0] * xi[0] + xi[1] * xi[1];
        let a = a2.sqrt();
        let ixi = [c(0.0, xi[0]), c(0.0, xi[1])];
        let div = u[0].scale(ixi[0]).add(&u[1].scale(ixi[1])).add(&u[2].d());
        let w: Vec<Exps> = (0..3)
            .map(|j| {
                let lap = u[j].d().d().add(&u[j].scale(c(-a2, 0.0))).scale(c(mu, 0.0));
                let g = if j < 2 { div.scale(ixi[j]) } else { div.d() };
                lap.add(&g.scale(c(mu - 1.0, 0.0)))
            })
            .collect();
        let rhs = w[0].scale(ixi[0]).add(&w[1].scale(ixi[1])).add(&w[2].d());
        let part = Exps(rhs.0.iter().map(|(c, k)| (c / (k * k - a2), *k)).collect());
        let top = 2.0 * mu * u[2].d().eval(0.0) - div.eval(0.0) + params.gamma(a) * h;
        part.add(&Exps(vec![(top - part.eval(0.0), a)]))
    }

    #[test]
    fn zero_input_gives_zero_pressure() {
        let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 32, 8.0).unwrap();
        let z = vec![Complex64::default(); vg.len()];
        let p = reconstruct_pressure_mode([1.0, 1.0], &[z.clone(), z.clone(), z], c(0.0, 0.0), &PhysicalParams::default(), &vg).unwrap();
        assert!(p.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn manufactured_pressure_is_recovered() {
        let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 72, 24.0).unwrap();
        let params = PhysicalParams { mu: 0.7, c_sigma: 1.5, c_g: 0.8 };
        let xi = [1.0, -2.0];
        let u = [
            Exps(vec![(c(0.5, 0.2), 1.3), (c(-0.1, 0.4), 3.0)]),
            Exps(vec![(c(-0.3, 0.6), 2.1)]),
            Exps(vec![(c(0.2, -0.7), 1.7), (c(0.4, 0.0), 4.5)]),
        ];
        let h = c(0.6, -0.2);
        let prof: [Vec<Complex64>; 3] = std::array::from_fn(|j| u[j].sample(vg.nodes()));
        let p = reconstruct_pressure_mode(xi, &prof, h, &params, &vg).unwrap();
        let want = exact(xi, &u, h, &params).sample(vg.nodes());
        let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = p.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-7 * scale, "{err:.2e}");
    }

    /// `|d3 p| + A |p|` against the `W^2`-type norm of `u` over random
    /// exponential profiles and frequencies.
    #[test]
    fn pressure_gradient_is_bounded_by_velocity() {
        let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 72, 24.0).unwrap();
        let params = PhysicalParams { mu: 1.0, c_sigma: 0.0, c_g: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l2 = |v: &[Complex64]| vg.integrate(&v.iter().map(|x| x.norm_sqr()).collect::<Vec<_>>()).sqrt();
        let mut worst: f64 = 0.0;
        for _ in 0..60 {
            let a = rng.random_range(1.0..12.0);
            let th = rng.random_range(0.0..6.3);
            let xi = [a * f64::cos(th), a * f64::sin(th)];
            let prof: [Vec<Complex64>; 3] = std::array::from_fn(|_| {
                let k = rng.random_range(0.5..8.0);
                let cf = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                vg.nodes().iter().map(|z| cf * (k * z).exp()).collect()
            });
            let p = reconstruct_pressure_mode(xi, &prof, c(0.0, 0.0), &params, &vg).unwrap();
            let lhs = l2(&vg.apply(vg.d1(), &p)) + a * l2(&p);
            let rhs: f64 = prof
                .iter()
                .map(|u| {
                    let du = vg.apply(vg.d1(), u);
                    l2(&vg.apply(vg.d1(), &du)) + a * l2(&du) + a * a * l2(u)
                })
                .sum();
            worst = worst.max(lhs / rhs);
        }
        assert!(worst < 10.0, "{worst}");
    }
}
