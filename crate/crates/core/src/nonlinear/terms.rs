//! Right-hand sides of the free-surface equations after the Hanzawa
//! transform, evaluated pointwise on the collocation grid.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::geometry::{curvature_remainder, HeightState};
use crate::linear::PhysicalParams;
use crate::spectral::{HalfSpaceField, HorizontalGrid, Repr, SurfaceField, VerticalGrid};

/// Transformed nonlinear terms, all in physical representation.
#[derive(Debug, Clone)]
pub struct NonlinearTerms {
    /// Convection part `F1`.
    pub f1: HalfSpaceField,
    /// Moving-frame part `F2`.
    pub f2: HalfSpaceField,
    /// Viscous commutator part `F3`.
    pub f3: HalfSpaceField,
    /// `G = -M1(eta) v`.
    pub gvec: HalfSpaceField,
    /// `G = grad eta . D3 v - (D3 eta) div v`.
    pub g: HalfSpaceField,
    /// Stress term `H`.
    pub h: [SurfaceField; 3],
    /// Kinematic term `K = -v1 D1 eta - v2 D2 eta`.
    pub k: SurfaceField,
}

impl NonlinearTerms {
    pub fn f(&self) -> HalfSpaceField {
        let mut f = self.f1.clone();
        f.axpy(1.0, &self.f2);
        f.axpy(1.0, &self.f3);
        f
    }
}

fn re(f: &HalfSpaceField) -> Vec<f64> {
    f.physical().data().iter().map(|v| v.re).collect()
}

fn field(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>, comps: &[Vec<f64>]) -> HalfSpaceField {
    let mut f = HalfSpaceField::zeros(hg, vg, comps.len(), Repr::Physical);
    let n = comps[0].len();
    for (c, vals) in comps.iter().enumerate() {
        for (d, v) in f.data_mut()[c * n..(c + 1) * n].iter_mut().zip(vals) {
            *d = Complex64::new(*v, 0.0);
        }
    }
    f
}

fn surface(hg: &Arc<HorizontalGrid>, vals: &[f64]) -> SurfaceField {
    let mut s = SurfaceField::zeros(hg, Repr::Physical);
    for (d, v) in s.data_mut().iter_mut().zip(vals) {
        *d = Complex64::new(*v, 0.0);
    }
    s
}

/// `eta` derivatives and the Jacobian `J = 1 + D3 eta` at every node.
struct Geometry {
    e: [Vec<f64>; 3],
    he: [[Vec<f64>; 3]; 3],
    jac: Vec<f64>,
}

impl Geometry {
    fn new(height: &HeightState) -> Result<Self> {
        let e: [Vec<f64>; 3] = std::array::from_fn(|j| re(&height.derivs.grad[j]));
        let he = std::array::from_fn(|j| std::array::from_fn(|k| re(&height.derivs.hess[j][k])));
        let jac: Vec<f64> = e[2].iter().map(|d| 1.0 + d).collect();
        let floor = 1.0 - height.c0;
        let min = jac.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < floor {
            return Err(Error::Domain(format!("1 + D3 eta reaches {min:.4}, below 1 - c0 = {floor}")));
        }
        Ok(Self { e, he, jac })
    }
}

/// Velocity values with first and (optionally) second derivatives;
/// `dv[i][j] = D_j v_i`, `ddv[i][j][k] = D_j D_k v_i`.
struct Velocity {
    v: [Vec<f64>; 3],
    dv: [[Vec<f64>; 3]; 3],
    ddv: Option<Vec<[[Vec<f64>; 3]; 3]>>,
}

impl Velocity {
    fn new(v: &HalfSpaceField, second: bool) -> Self {
        let d: Vec<_> = (0..3).map(|i| v.derivatives(i)).collect();
        Self {
            v: std::array::from_fn(|i| re(&v.component(i))),
            dv: std::array::from_fn(|i| std::array::from_fn(|j| re(&d[i].grad[j]))),
            ddv: second.then(|| {
                d.iter()
                    .map(|di| std::array::from_fn(|j| std::array::from_fn(|k| re(&di.hess[j][k]))))
                    .collect()
            }),
        }
    }
}

fn check_grids(v: &HalfSpaceField, height: &HeightState) -> Result<()> {
    if v.comps() != 3 {
        return invalid("the velocity must have three components");
    }
    if v.hgrid().n() != height.h.grid().n() || v.vgrid().nodes() != height.eta.vgrid().nodes() {
        return invalid("velocity and height live on different grids");
    }
    Ok(())
}

/// `(G, G) = (-M1(eta) v, grad eta . D3 v - (D3 eta) div v)`.
pub fn divergence_terms(v: &HalfSpaceField, height: &HeightState) -> Result<(HalfSpaceField, HalfSpaceField)> {
    check_grids(v, height)?;
    let geo = Geometry::new(height)?;
    let vel = Velocity::new(v, false);
    Ok(divergence_parts(v, &geo, &vel))
}

fn divergence_parts(v: &HalfSpaceField, geo: &Geometry, vel: &Velocity) -> (HalfSpaceField, HalfSpaceField) {
    let n = geo.jac.len();
    let (e, vv, dv) = (&geo.e, &vel.v, &vel.dv);
    let gvec = [
        (0..n).map(|i| -e[2][i] * vv[0][i]).collect(),
        (0..n).map(|i| -e[2][i] * vv[1][i]).collect(),
        (0..n).map(|i| e[0][i] * vv[0][i] + e[1][i] * vv[1][i]).collect(),
    ];
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let div = dv[0][0][i] + dv[1][1][i] + dv[2][2][i];
            (0..3).map(|j| e[j][i] * dv[j][2][i]).sum::<f64>() - e[2][i] * div
        })
        .collect();
    (field(v.hgrid(), v.vgrid(), &gvec), field(v.hgrid(), v.vgrid(), &[g]))
}

/// Stress term `H(v, eta)` on the surface.
pub fn stress_term(v: &HalfSpaceField, height: &HeightState, params: &PhysicalParams) -> Result<[SurfaceField; 3]> {
    check_grids(v, height)?;
    let geo = Geometry::new(height)?;
    let vel = Velocity::new(v, false);
    Ok(stress_parts(v, height, &geo, &vel, params))
}

fn stress_parts(v: &HalfSpaceField, height: &HeightState, geo: &Geometry, vel: &Velocity, params: &PhysicalParams) -> [SurfaceField; 3] {
    let hg = v.hgrid();
    let np = hg.len();
    let off = v.vgrid().top() * np;
    let mu = params.mu;
    let kc = curvature_remainder(&height.h);
    let mut out = [vec![0.0; np], vec![0.0; np], vec![0.0; np]];
    for p in 0..np {
        let i = off + p;
        let e = [geo.e[0][i], geo.e[1][i], geo.e[2][i]];
        let jac = geo.jac[i];
        let d = |a: usize, b: usize| vel.dv[a][b][i] + vel.dv[b][a][i];
        let d3v = [vel.dv[0][2][i], vel.dv[1][2][i], vel.dv[2][2][i]];
        let m = [-e[0], -e[1], 0.0];
        let nv = [-e[0], -e[1], 1.0];
        let dm: [f64; 3] = std::array::from_fn(|a| (0..3).map(|b| d(a, b) * m[b]).sum());
        let dn: [f64; 3] = std::array::from_fn(|a| (0..3).map(|b| d(a, b) * nv[b]).sum());
        let sn: [f64; 3] = std::array::from_fn(|a| (0..3).map(|b| (e[a] * d3v[b] + e[b] * d3v[a]) * nv[b]).sum());
        let m2dn = [-e[0] * dn[2], -e[1] * dn[2], 0.0];
        let ism2 = [sn[0] + e[0] * sn[2], sn[1] + e[1] * sn[2], sn[2]];
        for a in 0..3 {
            out[a][p] = -mu * dm[a] + mu * m2dn[a] + mu / jac * ism2[a];
        }
        out[2][p] -= params.c_sigma * kc.data()[p].re;
    }
    out.map(|o| surface(hg, &o))
}

/// `K(v, eta) = -v1 D1 eta - v2 D2 eta` on the surface.
pub fn kinematic_term(v: &HalfSpaceField, height: &HeightState) -> Result<SurfaceField> {
    check_grids(v, height)?;
    let geo = Geometry::new(height)?;
    let vel = Velocity::new(v, false);
    Ok(kinematic_part(v, &geo, &vel))
}

fn kinematic_part(v: &HalfSpaceField, geo: &Geometry, vel: &Velocity) -> SurfaceField {
    let np = v.hgrid().len();
    let off = v.vgrid().top() * np;
    let k: Vec<f64> = (off..off + np)
        .map(|i| -vel.v[0][i] * geo.e[0][i] - vel.v[1][i] * geo.e[1][i])
        .collect();
    surface(v.hgrid(), &k)
}

/// Assembles every nonlinear term at one time. `dt_v3` is the time
/// derivative of the vertical velocity; `height` must carry `d_t eta`.
pub fn assemble_nonlinear(v: &HalfSpaceField, dt_v3: &HalfSpaceField, height: &HeightState, params: &PhysicalParams) -> Result<NonlinearTerms> {
    check_grids(v, height)?;
    params.validate()?;
    let Some(dt_eta) = &height.dt_eta else {
        return invalid("assembling the momentum terms needs d_t eta");
    };
    if dt_v3.comps() != 1 {
        return invalid("d_t v3 must be a scalar field");
    }
    let geo = Geometry::new(height)?;
    let vel = Velocity::new(v, true);
    let (hg, vg) = (v.hgrid(), v.vgrid());
    let n = geo.jac.len();
    let mu = params.mu;
    let (e, he, jac) = (&geo.e, &geo.he, &geo.jac);
    let (vv, dv) = (&vel.v, &vel.dv);
    let ddv = vel.ddv.as_ref().expect("second derivatives requested");
    let deta = re(dt_eta);
    let dv3 = re(dt_v3);
    // (I + M3) w = w + w3 grad eta
    let lift = |w: [f64; 3], i: usize| -> [f64; 3] { std::array::from_fn(|a| w[a] + w[2] * e[a][i]) };
    let mut f1 = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut f2 = f1.clone();
    let mut f3 = f1.clone();
    let mut phi = vec![0.0; n];
    for i in 0..n {
        let ve: f64 = (0..3).map(|j| vv[j][i] * e[j][i]).sum();
        let w1: [f64; 3] = std::array::from_fn(|a| -(0..3).map(|j| vv[j][i] * dv[a][j][i]).sum::<f64>() + ve * dv[a][2][i] / jac[i]);
        let w2: [f64; 3] = std::array::from_fn(|a| deta[i] * dv[a][2][i] / jac[i]);
        let (l1, l2) = (lift(w1, i), lift(w2, i));
        // sum_j D_jj(eta) v_a
        let s: [f64; 3] = std::array::from_fn(|a| {
            (0..3)
                .map(|j| {
                    let c1 = (he[j][j][i] * jac[i] * jac[i] - 2.0 * e[j][i] * he[j][2][i] * jac[i] + e[j][i] * e[j][i] * he[2][2][i])
                        / jac[i].powi(3);
                    c1 * dv[a][2][i] + 2.0 * e[j][i] / jac[i] * ddv[a][j][2][i] - (e[j][i] / jac[i]).powi(2) * ddv[a][2][2][i]
                })
                .sum()
        });
        let ls = lift(s, i);
        let lap3: f64 = (0..3).map(|j| ddv[2][j][j][i]).sum();
        for a in 0..3 {
            f1[a][i] = l1[a];
            f2[a][i] = l2[a];
            f3[a][i] = (-dv3[i] + mu * lap3) * e[a][i] - mu * ls[a];
        }
        phi[i] = (0..3).map(|j| e[j][i] * dv[j][2][i]).sum::<f64>() / jac[i];
    }
    let phi = field(hg, vg, &[phi]);
    for (a, f) in f3.iter_mut().enumerate() {
        let d = re(&phi.derivative(0, a));
        for (x, y) in f.iter_mut().zip(d) {
            *x -= mu * y;
        }
    }
    let (gvec, g) = divergence_parts(v, &geo, &vel);
    Ok(NonlinearTerms {
        f1: field(hg, vg, &f1),
        f2: field(hg, vg, &f2),
        f3: field(hg, vg, &f3),
        gvec,
        g,
        h: stress_parts(v, height, &geo, &vel, params),
        k: kinematic_part(v, &geo, &vel),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use nalgebra::{Matrix3, Vector3};

    use super::*;
    use crate::geometry::DEFAULT_C0;
    use crate::spectral::VerticalScheme;

    fn grids() -> (Arc<HorizontalGrid>, Arc<VerticalGrid>) {
        (
            HorizontalGrid::new(16, 2.0 * PI).unwrap(),
            VerticalGrid::new(VerticalScheme::Chebyshev, 48, 20.0).unwrap(),
        )
    }

    fn params() -> PhysicalParams {
        PhysicalParams { mu: 0.7, c_sigma: 0.3, c_g: 1.2 }
    }

    fn height(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>, a: f64, b: f64) -> HeightState {
        let h = SurfaceField::from_fn(hg, |x| a * x[0].cos() + 0.5 * a * (x[1] + 0.3).sin());
        let dh = SurfaceField::from_fn(hg, |x| b * x[0].cos() - b * (x[0] + x[1]).sin());
        HeightState::new(&h, Some(&dh), vg, DEFAULT_C0).unwrap()
    }

    fn velocity(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>, eps: f64) -> HalfSpaceField {
        HalfSpaceField::from_fn(hg, vg, 3, |c, x| {
            let ez = x[2].exp();
            eps * match c {
                0 => x[0].cos() * ez + 0.2 * (x[1] - x[0]).sin() * ez,
                1 => (x[1] + 0.4).sin() * ez,
                _ => (x[0] + x[1]).cos() * (x[2] + 1.0) * ez,
            }
        })
    }

    fn sup3(f: &HalfSpaceField) -> f64 {
        f.max_abs()
    }

    #[test]
    fn zero_velocity_leaves_only_curvature() {
        let (hg, vg) = grids();
        let st = height(&hg, &vg, 0.1, 0.05);
        let zero = HalfSpaceField::zeros(&hg, &vg, 3, Repr::Physical);
        let t = assemble_nonlinear(&zero, &zero.component(2), &st, &params()).unwrap();
        assert_eq!(sup3(&t.f()), 0.0);
        assert_eq!(t.g.max_abs() + t.gvec.max_abs() + t.k.max_abs(), 0.0);
        let mut want = curvature_remainder(&st.h);
        want = want.scaled(-params().c_sigma);
        let mut d = t.h[2].clone();
        d.axpy(-1.0, &want);
        assert!(d.max_abs() < 1e-15 && t.h[0].max_abs() == 0.0 && t.h[1].max_abs() == 0.0);
    }

    #[test]
    fn flat_surface_leaves_only_convection() {
        let (hg, vg) = grids();
        let st = height(&hg, &vg, 0.0, 0.0);
        let v = velocity(&hg, &vg, 1.0);
        let t = assemble_nonlinear(&v, &v.component(2), &st, &params()).unwrap();
        assert_eq!(t.f2.max_abs() + t.f3.max_abs(), 0.0);
        assert_eq!(t.g.max_abs() + t.gvec.max_abs() + t.k.max_abs(), 0.0);
        assert!(t.h.iter().all(|h| h.max_abs() == 0.0));
        // -(v . grad) v from the closed form
        let conv = HalfSpaceField::from_fn(&hg, &vg, 3, |c, x| {
            let ez = x[2].exp();
            let v = [
                x[0].cos() * ez + 0.2 * (x[1] - x[0]).sin() * ez,
                (x[1] + 0.4).sin() * ez,
                (x[0] + x[1]).cos() * (x[2] + 1.0) * ez,
            ];
            let grad = match c {
                0 => [-x[0].sin() * ez - 0.2 * (x[1] - x[0]).cos() * ez, 0.2 * (x[1] - x[0]).cos() * ez, v[0]],
                1 => [0.0, (x[1] + 0.4).cos() * ez, v[1]],
                _ => {
                    let s = -(x[0] + x[1]).sin() * (x[2] + 1.0) * ez;
                    [s, s, (x[0] + x[1]).cos() * (x[2] + 2.0) * ez]
                }
            };
            -(v[0] * grad[0] + v[1] * grad[1] + v[2] * grad[2])
        });
        let mut d = t.f1.clone();
        d.axpy(-1.0, &conv);
        assert!(d.max_abs() < 1e-9, "{}", d.max_abs());
    }

    /// `v(y) = T grad phi(Theta(y))` with `phi = sin(x1) e^{x3}`: then the
    /// transformed momentum operator minus `F` is `(I + M3)` applied to the
    /// physical one, which is `T' grad phi + T^2 e^{2 x3} e3` here.
    #[test]
    fn momentum_terms_match_the_physical_operator() {
        let (hg, vg) = grids();
        let (a, b) = (0.1, 0.05);
        let st = height(&hg, &vg, a, b);
        let par = params();
        let (tt, dtt) = (1.3, 0.4);
        let eta = |x: [f64; 3]| st.eval(x)[0];
        let deta = |x: [f64; 3]| {
            b * x[0].cos() * x[2].exp() - b * (x[0] + x[1]).sin() * (2f64.sqrt() * x[2]).exp()
        };
        let grad_phi = |x: [f64; 3]| {
            let x3 = x[2] + eta(x);
            [x[0].cos() * x3.exp(), 0.0, x[0].sin() * x3.exp()]
        };
        let v = HalfSpaceField::from_fn(&hg, &vg, 3, |c, x| tt * grad_phi(x)[c]);
        let dv = HalfSpaceField::from_fn(&hg, &vg, 3, |c, x| (dtt + tt * deta(x)) * grad_phi(x)[c]);
        let t = assemble_nonlinear(&v, &dv.component(2), &st, &par).unwrap();
        let f = t.f();
        let mu = par.mu;
        let lap: Vec<HalfSpaceField> = (0..3)
            .map(|c| {
                let d = v.derivatives(c);
                let mut l = d.hess[0][0].clone();
                l.axpy(1.0, &d.hess[1][1]);
                l.axpy(1.0, &d.hess[2][2]);
                l
            })
            .collect();
        let div = {
            let mut s = v.derivative(0, 0).physical();
            s.axpy(1.0, &v.derivative(1, 1).physical());
            s.axpy(1.0, &v.derivative(2, 2).physical());
            s
        };
        let fp = f.physical();
        let dvp = dv.physical();
        let mut worst: f64 = 0.0;
        for c in 0..3 {
            let gd = div.derivative(0, c).physical();
            for iz in 0..vg.len() {
                for p in 0..hg.len() {
                    let [x1, x2] = hg.point(p);
                    let y = [x1, x2, vg.nodes()[iz]];
                    let lhs = dvp.get(c, iz, p).re - mu * lap[c].get(0, iz, p).re - mu * gd.get(0, iz, p).re - fp.get(c, iz, p).re;
                    let x3 = y[2] + eta(y);
                    let phys: [f64; 3] = std::array::from_fn(|k| dtt * grad_phi(y)[k] + if k == 2 { tt * tt * (2.0 * x3).exp() } else { 0.0 });
                    let e = st.eval(y);
                    let want = phys[c] + phys[2] * e[1 + c];
                    worst = worst.max((lhs - want).abs());
                }
            }
        }
        assert!(worst < 1e-8, "{worst}");
        // div_y v - G = J div_x u = 0, and G = div G
        let mut r = div.clone();
        r.axpy(-1.0, &t.g);
        assert!(r.max_abs() < 1e-8, "{}", r.max_abs());
        let mut dg = t.gvec.derivative(0, 0).physical();
        dg.axpy(1.0, &t.gvec.derivative(1, 1).physical());
        dg.axpy(1.0, &t.gvec.derivative(2, 2).physical());
        dg.axpy(-1.0, &t.g);
        assert!(dg.max_abs() < 1e-8, "{}", dg.max_abs());
    }

    /// Stress term against the unexpanded form
    /// `-c_s K e3 + mu D e3 - mu (I - M2)[D - S / J](I + M2) e3`.
    #[test]
    fn stress_term_matches_matrix_form() {
        let (hg, vg) = grids();
        let st = height(&hg, &vg, 0.15, 0.0);
        let par = params();
        let v = velocity(&hg, &vg, 0.3);
        let h = stress_term(&v, &st, &par).unwrap();
        let der: Vec<_> = (0..3).map(|c| v.derivatives(c)).collect();
        let kc = curvature_remainder(&st.h);
        let top = vg.top();
        for p in 0..hg.len() {
            let [x1, x2] = hg.point(p);
            let e = st.eval([x1, x2, 0.0]);
            let g = Vector3::new(e[1], e[2], e[3]);
            let jac = 1.0 + e[3];
            let grad = Matrix3::from_fn(|i, j| der[i].grad[j].get(0, top, p).re);
            let d = grad + grad.transpose();
            let d3v = Vector3::from_fn(|i, _| der[i].grad[2].get(0, top, p).re);
            let s = g * d3v.transpose() + d3v * g.transpose();
            let m2 = Matrix3::new(0.0, 0.0, -e[1], 0.0, 0.0, -e[2], 0.0, 0.0, 0.0);
            let e3 = Vector3::z();
            let want = -par.c_sigma * kc.data()[p].re * e3 + par.mu * d * e3
                - par.mu * (Matrix3::identity() - m2) * (d - s / jac) * (Matrix3::identity() + m2) * e3;
            for c in 0..3 {
                assert!((h[c].data()[p].re - want[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn terms_are_quadratic_in_amplitude() {
        let (hg, vg) = grids();
        let par = params();
        let size = |eps: f64| {
            let st = height(&hg, &vg, eps, eps);
            let v = velocity(&hg, &vg, eps);
            let t = assemble_nonlinear(&v, &v.component(2).scaled(0.5), &st, &par).unwrap();
            let mut hr = t.h[2].clone();
            hr.axpy(par.c_sigma, &curvature_remainder(&st.h));
            t.f().lp_norm(2.0) + t.g.lp_norm(2.0) + t.h[0].lp_norm(2.0) + t.h[1].lp_norm(2.0) + hr.lp_norm(2.0) + t.k.lp_norm(2.0)
        };
        let s: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&e| size(e)).collect();
        for w in s.windows(2) {
            let slope = (w[0] / w[1]).log10();
            assert!((slope - 2.0).abs() < 0.05, "{slope}");
        }
    }

    #[test]
    fn rejects_degenerate_jacobian_and_missing_rate() {
        let (hg, vg) = grids();
        let v = velocity(&hg, &vg, 0.1);
        let mut st = height(&hg, &vg, 0.2, 0.1);
        st.c0 = 0.01;
        assert!(matches!(assemble_nonlinear(&v, &v.component(2), &st, &params()), Err(Error::Domain(_))));
        let mut st = height(&hg, &vg, 0.1, 0.1);
        st.dt_eta = None;
        assert!(assemble_nonlinear(&v, &v.component(2), &st, &params()).is_err());
        assert!(divergence_terms(&v, &st).is_ok());
    }
}
