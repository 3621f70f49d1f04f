//! Closed-form mode solutions driven by surface stress, and the
//! capillary-gravity dispersion function built from them.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::PhysicalParams;
use crate::error::{Error, Result};
use crate::symbols::{b_of, cal_m, eval_ab, lopatinskii_d, Contour, Sector};

/// Velocity profiles and their vertical derivatives.
#[derive(Debug, Clone)]
pub struct BoundaryProfiles {
    pub u: [Vec<Complex64>; 3],
    pub dz_u: [Vec<Complex64>; 3],
}

/// Solution of `lambda v - Div T(v, q) = 0`, `div v = 0`, `T(v, q) e3 = h`
/// for one mode, evaluated at the heights `z`.
pub fn boundary_forced_mode(xi: [f64; 2], lambda: Complex64, mu: f64, h: [Complex64; 3], z: &[f64]) -> Result<BoundaryProfiles> {
    let (a, b) = eval_ab(xi, lambda, mu)?;
    let d = lopatinskii_d(a, b);
    if d.norm() < 1e-12 * (lambda.norm().sqrt() + a).powi(3) {
        return Err(Error::NearDegenerate(format!("D(A, B) = {d} is too small at lambda = {lambda}")));
    }
    let i = Complex64::new(0.0, 1.0);
    let ixi = [i * xi[0], i * xi[1]];
    let xh = xi[0] * h[0] + xi[1] * h[1];
    let ixh = ixi[0] * h[0] + ixi[1] * h[1];
    let s = b * b + a * a;
    let n = z.len();
    let mut out = BoundaryProfiles {
        u: [vec![Complex64::default(); n], vec![Complex64::default(); n], vec![Complex64::default(); n]],
        dz_u: [vec![Complex64::default(); n], vec![Complex64::default(); n], vec![Complex64::default(); n]],
    };
    for (k, &zk) in z.iter().enumerate() {
        let e = (b * zk).exp();
        let m = cal_m(zk, a, b);
        let de = b * e;
        let dm = b * m + (a * zk).exp();
        for j in 0..2 {
            // the A / A factors of the first two terms are cancelled by hand
            let c_m = (2.0 * xi[j] * b * xh - ixi[j] * s * h[2]) / (mu * d);
            let c_e = (-xi[j] * (3.0 * b - a) * xh / b + ixi[j] * (b - a) * h[2]) / (mu * d) + h[j] / (mu * b);
            out.u[j][k] = c_m * m + c_e * e;
            out.dz_u[j][k] = c_m * dm + c_e * de;
        }
        let c_m = (-2.0 * b * a * ixh - s * a * h[2]) / (mu * d);
        let c_e = (-(b - a) * ixh + a * (b + a) * h[2]) / (mu * d);
        out.u[2][k] = c_m * m + c_e * e;
        out.dz_u[2][k] = c_m * dm + c_e * de;
    }
    Ok(out)
}

/// Dispersion function `Delta(lambda) = lambda mu D + gamma_A A (B + A)` and
/// its derivative. Free-surface modes driven by kinematic data have
/// `H = mu D K / Delta`.
pub fn dispersion(a: f64, lambda: Complex64, params: &PhysicalParams) -> (Complex64, Complex64) {
    let mu = params.mu;
    let gamma = params.c_g + params.c_sigma * a * a;
    let b = b_of(a, lambda, mu);
    let d = lopatinskii_d(a, b);
    let db = 1.0 / (2.0 * mu * b);
    let dd = (3.0 * b * b + 2.0 * a * b + 3.0 * a * a) * db;
    let val = lambda * mu * d + gamma * a * (b + a);
    let der = mu * d + lambda * mu * dd + gamma * a * db;
    (val, der)
}

/// Zeros of the dispersion function to the right of the wedge
/// `{ v_in + s e^{+-i theta} : |theta| >= pi - eps_in }` that contains the
/// branch cut, located by the argument principle and polished by Newton.
pub fn dispersion_poles(a: f64, params: &PhysicalParams, v_in: f64, eps_in: f64) -> Result<Vec<Complex64>> {
    let mu = params.mu;
    let gamma = params.c_g + params.c_sigma * a * a;
    let radius = 4.0 * ((gamma * a).sqrt() + 4.0 * mu * a * a + gamma / (mu * a) + 1.0 + v_in.abs());
    // closed curve: lower ray outwards is reversed; we go up the right arc
    let phi = PI - eps_in;
    let mut pieces = 64usize;
    for _ in 0..8 {
        let m = moments(a, params, v_in, phi, radius, pieces);
        let n = m[0].re;
        if (n - n.round()).abs() < 1e-3 && m[0].im.abs() < 1e-3 {
            let count = n.round() as i64;
            let roots: Vec<Complex64> = match count {
                0 => vec![],
                1 => vec![m[1]],
                2 => {
                    let s1 = m[1];
                    let p = (s1 * s1 - m[2]) * 0.5;
                    let disc = (s1 * s1 - 4.0 * p).sqrt();
                    vec![(s1 + disc) * 0.5, (s1 - disc) * 0.5]
                }
                _ => {
                    return Err(Error::Numerical {
                        msg: format!("unexpected dispersion root count {count} at A = {a}"),
                        condition: None,
                    })
                }
            };
            return roots.into_iter().map(|r| newton(a, params, r)).collect();
        }
        pieces *= 2;
    }
    Err(Error::Accuracy(format!("argument principle did not settle at A = {a}")))
}

fn newton(a: f64, params: &PhysicalParams, mut x: Complex64) -> Result<Complex64> {
    for _ in 0..60 {
        let (f, df) = dispersion(a, x, params);
        let step = f / df;
        x -= step;
        if step.norm() < 1e-15 * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    let (f, _) = dispersion(a, x, params);
    if f.norm() < 1e-10 {
        Ok(x)
    } else {
        Err(Error::Numerical {
            msg: format!("Newton failed for the dispersion root at A = {a}"),
            condition: None,
        })
    }
}

/// `(1 / 2 pi i) oint lambda^k Delta'/Delta` for `k = 0, 1, 2`.
fn moments(a: f64, params: &PhysicalParams, v: f64, phi: f64, radius: f64, pieces: usize) -> [Complex64; 3] {
    let (gx, gw) = gauss_legendre_16();
    let mut acc = [Complex64::default(); 3];
    let mut add = |lam: Complex64, dl: Complex64| {
        let (f, df) = dispersion(a, lam, params);
        let q = df / f * dl;
        acc[0] += q;
        acc[1] += q * lam;
        acc[2] += q * lam * lam;
    };
    let dir = Complex64::from_polar(1.0, phi);
    // geometric refinement towards the vertex, where the cut is closest
    let s_lo = 1e-9 * (v.abs() + 1e-3 * radius);
    let ratio = (radius / s_lo).ln();
    for piece in 0..pieces {
        let u0 = piece as f64 / pieces as f64;
        let u1 = (piece + 1) as f64 / pieces as f64;
        for (x, w) in gx.iter().zip(&gw) {
            let u = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * x;
            let s = s_lo * (ratio * u).exp();
            let ds = s * ratio * 0.5 * (u1 - u0) * w;
            // upper ray, traversed inwards
            add(v + s * dir, -dir * ds);
            // lower ray, traversed outwards
            add(v + s * dir.conj(), dir.conj() * ds);
        }
    }
    // right-hand arc from the lower ray end to the upper ray end
    for piece in 0..pieces {
        let t0 = -phi + 2.0 * phi * piece as f64 / pieces as f64;
        let t1 = -phi + 2.0 * phi * (piece + 1) as f64 / pieces as f64;
        for (x, w) in gx.iter().zip(&gw) {
            let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x;
            let e = Complex64::from_polar(radius, t);
            add(v + e, Complex64::new(0.0, 1.0) * e * 0.5 * (t1 - t0) * w);
        }
    }
    // small arc around the vertex, crossing the cut side: skipped since the
    // cut lies strictly inside the wedge
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    [acc[0] / two_pi_i, acc[1] / two_pi_i, acc[2] / two_pi_i]
}

/// Surface-stress propagator `B(tau) = e^{-tau} C(tau)`, where `C(tau)` is
/// the inverse Laplace transform of [`boundary_forced_mode`] along the
/// sector contour. For the real data `Re(f e^{i xi.x'})` it returns the `L_q`
/// norms of `B(tau) f` and `grad B(tau) f` over `[-depth, 0]`, per unit
/// horizontal area, divided by the surface norm of the data.
pub fn boundary_kernel_norms(
    xi: [f64; 2],
    f: [Complex64; 3],
    mu: f64,
    q: f64,
    depth: f64,
    taus: &[f64],
) -> Result<Vec<[f64; 2]>> {
    if !(q >= 1.0 && depth > 0.0 && mu > 0.0) {
        return Err(Error::InvalidInput(format!("need q >= 1, depth > 0 and mu > 0, got {q}, {depth}, {mu}")));
    }
    let Some(t_min) = taus.iter().cloned().reduce(f64::min).filter(|t| *t > 0.0) else {
        return Err(Error::InvalidInput("kernel times must be positive and non-empty".into()));
    };
    let t_max = taus.iter().cloned().fold(0.0, f64::max);
    // every singularity sits on the negative axis, so the vertex may move
    // towards the origin to keep e^{lambda tau} bounded at long times
    let sector = Sector::default();
    let vertex = sector.vertex().min(1.0 / t_max);
    let s_max = Contour::s_for_time(vertex, sector.eps, t_min);
    let contour = Contour::wedge(vertex, sector.eps, s_max, KERNEL_NODES)?;

    // graded panels: fine near the surface where the shear layer sits
    let (gx, gw) = gauss_legendre_16();
    let (mut z, mut wz) = (Vec::new(), Vec::new());
    let (mut top, mut width) = (0.0_f64, 0.02_f64);
    while top > -depth {
        let bottom = (top - width).max(-depth);
        for (x, w) in gx.iter().zip(&gw) {
            z.push(0.5 * (top + bottom) + 0.5 * (top - bottom) * x);
            wz.push(0.5 * (top - bottom) * w);
        }
        top = bottom;
        width *= 1.3;
    }

    let nz = z.len();
    let mut v = vec![[[Complex64::default(); 3]; 2]; taus.len() * nz];
    for node in &contour.nodes {
        let prof = boundary_forced_mode(xi, node.lambda, mu, f, &z)?;
        for (it, &tau) in taus.iter().enumerate() {
            let w = node.weight * ((node.lambda - 1.0) * tau).exp();
            for k in 0..nz {
                let cell = &mut v[it * nz + k];
                for c in 0..3 {
                    cell[0][c] += w * prof.u[c][k];
                    cell[1][c] += w * prof.dz_u[c][k];
                }
            }
        }
    }

    let i = Complex64::new(0.0, 1.0);
    let phases: Vec<Complex64> = (0..KERNEL_PHASES).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / KERNEL_PHASES as f64)).collect();
    let mean_q = |sq: &dyn Fn(Complex64) -> f64| phases.iter().map(|&e| sq(e).powf(0.5 * q)).sum::<f64>() / KERNEL_PHASES as f64;
    let f_norm = mean_q(&|e| f.iter().map(|fc| (fc * e).re.powi(2)).sum()).powf(1.0 / q);
    if f_norm == 0.0 {
        return Err(Error::InvalidInput("kernel data must be nonzero".into()));
    }
    Ok((0..taus.len())
        .map(|it| {
            let (mut n0, mut n1) = (0.0, 0.0);
            for k in 0..nz {
                let [u, du] = v[it * nz + k];
                n0 += wz[k] * mean_q(&|e| u.iter().map(|c| (c * e).re.powi(2)).sum());
                n1 += wz[k]
                    * mean_q(&|e| {
                        u.iter()
                            .zip(&du)
                            .map(|(c, d)| (i * xi[0] * c * e).re.powi(2) + (i * xi[1] * c * e).re.powi(2) + (d * e).re.powi(2))
                            .sum()
                    });
            }
            [n0.powf(1.0 / q) / f_norm, n1.powf(1.0 / q) / f_norm]
        })
        .collect())
}

const KERNEL_NODES: usize = 400;
const KERNEL_PHASES: usize = 64;

fn gauss_legendre_16() -> ([f64; 16], [f64; 16]) {
    let mut x = [0.0; 16];
    let mut w = [0.0; 16];
    let n = 16;
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, t);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * t * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (t * q1 - q0) / (t * t - 1.0);
                x[i] = t;
                w[i] = 2.0 / ((1.0 - t * t) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{ModeData, ModeOperator};
    use crate::spectral::{VerticalGrid, VerticalScheme};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_rel(a: &[Complex64], b: &[Complex64], scale: f64) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn zero_stress_gives_zero() {
        let z = [-1.0, -0.5, 0.0];
        let p = boundary_forced_mode([1.0, 2.0], c(1.0, 1.0), 1.0, [c(0.0, 0.0); 3], &z).unwrap();
        assert!(p.u.iter().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn normal_stress_on_zero_mode_has_no_tangential_velocity() {
        let z = [-2.0, -1.0, 0.0];
        let p = boundary_forced_mode([0.0, 0.0], c(2.0, 0.5), 1.0, [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], &z).unwrap();
        assert!(p.u[0][2].norm() < 1e-14 && p.u[1][2].norm() < 1e-14);
    }

    /// Closed-form stress-driven profiles against the collocation BVP with
    /// the surface operator switched off, on random shifted resolvent points.
    /// Radii start at the lowest nonzero frequency of a `2 pi` box; the
    /// truncated column then loses `e^{-A L}` ~ 2e-9 at the bottom.
    #[test]
    fn formulas_match_the_collocation_solve() {
        let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 80, 20.0).unwrap();
        let mu = 0.9;
        let params = PhysicalParams { mu, c_sigma: 0.0, c_g: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let (r, th) = (rng.random_range(1.0..4.0), rng.random_range(0.0..2.0 * PI));
            let xi = [r * f64::cos(th), r * f64::sin(th)];
            let arg = rng.random_range(-0.7 * PI..0.7 * PI);
            let lambda = 1.0 + Complex64::from_polar(rng.random_range(1.0..40.0), arg);
            let h = [
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ];
            let exact = boundary_forced_mode(xi, lambda, mu, h, vg.nodes()).unwrap();
            let mut data = ModeData::zeros(vg.len());
            data.stress = h;
            let s = ModeOperator::new(xi, lambda, &params, &vg).unwrap().solve(&data).unwrap();
            let scale = exact.u.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
            for j in 0..3 {
                worst = worst.max(max_rel(&s.u[j], &exact.u[j], scale));
            }
        }
        assert!(worst < 1e-6, "worst relative error {worst:.2e}");
    }

    #[test]
    fn derivative_profiles_match_differentiation() {
        let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 64, 12.0).unwrap();
        let h = [c(0.3, 0.1), c(-0.2, 0.4), c(1.0, -0.5)];
        let p = boundary_forced_mode([1.5, -0.5], c(2.0, 3.0), 1.1, h, vg.nodes()).unwrap();
        for j in 0..3 {
            let d = vg.apply(vg.d1(), &p.u[j]);
            let scale = p.dz_u[j].iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(max_rel(&d, &p.dz_u[j], scale) < 1e-8);
        }
    }

    /// Height from the dispersion relation against the collocation solve
    /// with kinematic data only.
    #[test]
    fn zero_mode_kernel_is_the_shear_layer() {
        // u1 = e^{-tau} e^{-z^2 / 4 mu tau} / sqrt(pi mu tau) for unit tangential stress
        let (mu, q) = (0.7, 3.0);
        let taus = [0.2, 1.0, 4.0];
        let f = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let got = boundary_kernel_norms([0.0, 0.0], f, mu, q, 40.0, &taus).unwrap();
        for (t, g) in taus.iter().zip(&got) {
            let amp = (-t).exp() / (PI * mu * t).sqrt();
            let n0 = amp * (PI * mu * t / q).powf(0.5 / q);
            let a = q / (4.0 * mu * t);
            let n1 = amp / (2.0 * mu * t) * (0.5 / a.powf(2.0)).powf(1.0 / q);
            assert!((g[0] / n0 - 1.0).abs() < 1e-8, "{t}: {} vs {n0}", g[0]);
            assert!((g[1] / n1 - 1.0).abs() < 1e-8, "{t}: {} vs {n1}", g[1]);
        }
    }

    #[test]
    fn kernel_norms_are_homogeneous_in_the_data() {
        let f = [c(0.6, 0.2), c(-0.3, 0.0), c(0.5, -0.4)];
        let taus = [0.1, 1.0, 20.0];
        let a = boundary_kernel_norms([0.3, -0.4], f, 1.0, 3.19, 40.0, &taus).unwrap();
        let b = boundary_kernel_norms([0.3, -0.4], f.map(|x| 2.0 * x), 1.0, 3.19, 40.0, &taus).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x[0] > 0.0 && x[1] > 0.0);
            assert!((x[0] / y[0] - 1.0).abs() < 1e-12 && (x[1] / y[1] - 1.0).abs() < 1e-12);
        }
        assert!(boundary_kernel_norms([0.3, -0.4], f, 1.0, 3.19, 40.0, &[0.0]).is_err());
    }

    #[test]
    fn dispersion_relation_gives_the_height() {
        let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 64, 12.0).unwrap();
        let params = PhysicalParams { mu: 1.3, c_sigma: 0.7, c_g: 2.0 };
        for (xi, lambda) in [([1.0, 0.0], c(1.0, 2.0)), ([0.6, 0.8], c(-0.4, 5.0)), ([2.0, 1.0], c(8.0, -1.0))] {
            let a: f64 = f64::hypot(xi[0], xi[1]);
            let mut data = ModeData::zeros(vg.len());
            data.k = c(1.0, 0.0);
            let s = ModeOperator::new(xi, lambda, &params, &vg).unwrap().solve(&data).unwrap();
            let b = b_of(a, lambda, params.mu);
            let h = params.mu * lopatinskii_d(a, b) / dispersion(a, lambda, &params).0;
            assert!((s.h - h).norm() < 1e-8 * h.norm(), "{} vs {}", s.h, h);
        }
    }

    #[test]
    fn dispersion_derivative_matches_finite_difference() {
        let params = PhysicalParams { mu: 0.7, c_sigma: 1.0, c_g: 1.0 };
        let (a, lam) = (1.7, c(-0.3, 1.2));
        let e = 1e-6;
        let fd = (dispersion(a, lam + e, &params).0 - dispersion(a, lam - e, &params).0) / (2.0 * e);
        let d = dispersion(a, lam, &params).1;
        assert!((fd - d).norm() < 1e-7 * d.norm());
    }

    /// Poles from the argument principle against Newton started on a dense
    /// lattice of the region right of the inner wedge.
    #[test]
    fn poles_match_a_lattice_search() {
        let params = PhysicalParams { mu: 1.0, c_sigma: 1.0, c_g: 1.0 };
        for a in [0.05, 0.5, 1.0, 3.0, 10.0] {
            let v_in = -0.5 * a * a;
            let eps_in = PI / 6.0;
            let poles = dispersion_poles(a, &params, v_in, eps_in).unwrap();
            for p in &poles {
                assert!(dispersion(a, *p, &params).0.norm() < 1e-9 * (1.0 + p.norm()).powi(2));
                assert!(p.re < 0.0);
            }
            let inside = |z: Complex64| z.im != 0.0 && (z - v_in).arg().abs() < PI - eps_in || z.re > v_in;
            let scale = 4.0 * (a * a + (a * (1.0 + a * a)).sqrt() + 1.0);
            let mut found: Vec<Complex64> = vec![];
            for i in 0..40 {
                for j in 0..40 {
                    let mut z = c(-scale + 2.0 * scale * i as f64 / 39.0, -scale + 2.0 * scale * j as f64 / 39.0);
                    if !inside(z) {
                        continue;
                    }
                    let mut ok = false;
                    for _ in 0..80 {
                        if !inside(z) || z.norm() > 1e3 * scale {
                            break;
                        }
                        let (f, df) = dispersion(a, z, &params);
                        let step = f / df;
                        z -= step;
                        if step.norm() < 1e-13 * (1.0 + z.norm()) {
                            ok = inside(z);
                            break;
                        }
                    }
                    if ok && !found.iter().any(|w| (w - z).norm() < 1e-6 * (1.0 + z.norm())) {
                        found.push(z);
                    }
                }
            }
            assert_eq!(found.len(), poles.len(), "A = {a}: lattice {found:?}, argument principle {poles:?}");
            for z in &found {
                assert!(poles.iter().any(|p| (p - z).norm() < 1e-8 * (1.0 + z.norm())));
            }
        }
    }
}
