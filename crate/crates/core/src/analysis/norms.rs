//! Discrete versions of the solution norms: time integrals by the
//! trapezoid rule, suprema by maxima over samples, fractional Sobolev
//! orders on the surface by Bessel potentials.

use std::sync::Arc;

use super::config::{rate_exponents, ExponentConfig, WeightConfig};
use super::fit::{weighted_lp, weighted_sup};
use crate::error::{invalid, Error, Result};
use crate::geometry::HeightState;
use crate::nonlinear::StateZ;
use crate::spectral::{HalfSpaceField, HorizontalGrid, Repr, SurfaceField, VerticalGrid};

/// Pointwise squared magnitude of a tensor field, accumulated one
/// component at a time.
struct Magnitude {
    hg: Arc<HorizontalGrid>,
    vg: Arc<VerticalGrid>,
    sq: Vec<f64>,
}

impl Magnitude {
    fn new(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>) -> Self {
        Self {
            hg: hg.clone(),
            vg: vg.clone(),
            sq: vec![0.0; hg.len() * vg.len()],
        }
    }

    /// Adds `weight * |f|^2` for a scalar field.
    fn add(&mut self, f: &HalfSpaceField, weight: f64) {
        let ph = f.physical();
        for (s, v) in self.sq.iter_mut().zip(ph.data()) {
            *s += weight * v.norm_sqr();
        }
    }

    fn lr(&self, r: f64) -> f64 {
        let np = self.hg.len();
        let cell = self.hg.spacing().powi(2);
        let mut acc = 0.0;
        for (iz, w) in self.vg.weights().iter().enumerate() {
            let plane: f64 = self.sq[iz * np..(iz + 1) * np].iter().map(|s| s.powf(0.5 * r)).sum();
            acc += w * cell * plane;
        }
        acc.powf(1.0 / r)
    }
}

/// Multisets of `k` derivative directions with their multiplicities.
fn multi_indices(k: usize) -> Vec<([usize; 3], f64)> {
    let fact = |n: usize| (1..=n).product::<usize>() as f64;
    let mut out = vec![];
    for a in 0..=k {
        for b in 0..=k - a {
            let c = k - a - b;
            out.push(([a, b, c], fact(k) / (fact(a) * fact(b) * fact(c))));
        }
    }
    out
}

/// `||grad^k E(h)||_{L_r}` for `k = 1, 2, 3`, computed exactly from the
/// Fourier multipliers of the harmonic extension.
fn extension_gradients(h: &SurfaceField, vg: &Arc<VerticalGrid>, r: f64) -> [f64; 3] {
    let hs = h.spectral();
    let hg = h.grid();
    std::array::from_fn(|k| {
        let mut mag = Magnitude::new(hg, vg);
        for (alpha, mult) in multi_indices(k + 1) {
            let mut f = HalfSpaceField::zeros(hg, vg, 1, Repr::Spectral);
            for (iz, z) in vg.nodes().iter().enumerate() {
                for (p, v) in f.plane_mut(0, iz).iter_mut().enumerate() {
                    let a = hg.abs_xi(p);
                    let sym = hg.ixi(p, 0).powu(alpha[0] as u32) * hg.ixi(p, 1).powu(alpha[1] as u32) * a.powi(alpha[2] as i32);
                    *v = hs.data()[p] * sym * (a * z).exp();
                }
            }
            mag.add(&f, mult);
        }
        mag.lr(r)
    })
}

/// Bessel-potential norm `||(1 - Lap')^{s/2} h||_{L_r}`.
fn surface_sobolev(h: &SurfaceField, s: f64, r: f64) -> f64 {
    h.multiply_radial(|a| (1.0 + a * a).powf(0.5 * s)).lp_norm(r)
}

/// Spatial norms of one sample for one integrability exponent.
#[derive(Debug, Clone, Copy, Default)]
struct Snapshot {
    u: f64,
    dt_u: f64,
    grad_u: f64,
    hess_u: f64,
    grad_p: f64,
    h: f64,
    h_top: f64,
    dt_h: f64,
    dt_h_top: f64,
    eta: [f64; 3],
    dt_eta: [f64; 3],
}

fn snapshot(z: &StateZ, n: usize, r: f64) -> Snapshot {
    let v = &z.v[n];
    let (hg, vg) = (v.hgrid(), v.vgrid());
    let dv = &z.dt_v.as_ref().expect("checked")[n];
    let dh = &z.dt_h.as_ref().expect("checked")[n];
    let mut grad = Magnitude::new(hg, vg);
    let mut hess = Magnitude::new(hg, vg);
    for c in 0..3 {
        let d = v.derivatives(c);
        for j in 0..3 {
            grad.add(&d.grad[j], 1.0);
            for k in 0..3 {
                hess.add(&d.hess[j][k], 1.0);
            }
        }
    }
    let mut gp = Magnitude::new(hg, vg);
    for j in 0..3 {
        gp.add(&z.q[n].derivative(0, j), 1.0);
    }
    Snapshot {
        u: v.lp_norm(r),
        dt_u: dv.lp_norm(r),
        grad_u: grad.lr(r),
        hess_u: hess.lr(r),
        grad_p: gp.lr(r),
        h: z.h[n].lp_norm(r),
        h_top: surface_sobolev(&z.h[n], 3.0 - 1.0 / r, r),
        dt_h: dh.lp_norm(r),
        dt_h_top: surface_sobolev(dh, 2.0 - 1.0 / r, r),
        eta: extension_gradients(&z.h[n], vg, r),
        dt_eta: extension_gradients(dh, vg, r),
    }
}

/// Named parts of the solution norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    /// `(name, value)` for every summand, in a fixed order.
    pub terms: Vec<(String, f64)>,
    /// Maximal-regularity norms for `r = q` and `r = 2`.
    pub m: [f64; 2],
    /// Decay norms for `r = q` and `r = 2`.
    pub n: [f64; 2],
    /// Time-weighted norm with weights `(a1, a2)`.
    pub n_weighted: f64,
    /// `sup_t ||d_t eta||_{L_2}`.
    pub dt_eta_sup: f64,
    /// Sum of all of the above.
    pub x_norm: f64,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "term,value";

    pub fn csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (k, v) in &self.terms {
            s.push_str(&format!("{k},{v:.12e}\n"));
        }
        s.push_str(&format!("x_norm,{:.12e}\n", self.x_norm));
        s
    }
}

/// Discrete solution norms of a trajectory on `[t_0, t_end]`.
pub fn weighted_norms(z: &StateZ, cfg: &ExponentConfig, w: &WeightConfig) -> Result<NormReport> {
    if z.dt_v.is_none() || z.dt_h.is_none() {
        return invalid("the solution norms need the time derivatives of v and h");
    }
    if z.times.len() >= 3 {
        let dt = z.times[1] - z.times[0];
        if z.times.windows(2).any(|s| ((s[1] - s[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300)) {
            return invalid("the solution norms need a uniform time grid");
        }
    }
    let (p, qbar) = (cfg.p, cfg.q_bar());
    let t = &z.times;
    let rs = [cfg.q, 2.0];
    let snaps: Vec<[Snapshot; 2]> = (0..t.len()).map(|n| rs.map(|r| snapshot(z, n, r))).collect();
    let col = |k: usize, f: &dyn Fn(&Snapshot) -> f64| -> Vec<f64> { snaps.iter().map(|s| f(&s[k])).collect() };
    let mut terms = vec![];
    let mut m = [0.0; 2];
    let mut nn = [0.0; 2];
    for (k, &r) in rs.iter().enumerate() {
        let tag = if k == 0 { "q" } else { "2" };
        let rates = rate_exponents(qbar, r)?;
        let mparts: [(&str, Vec<f64>); 5] = [
            ("u", col(k, &|s| s.dt_u + s.u + s.grad_u + s.hess_u + s.grad_p)),
            ("dt_h", col(k, &|s| s.dt_h_top)),
            ("h", col(k, &|s| s.h_top)),
            ("dt_eta", col(k, &|s| s.dt_eta[0] + s.dt_eta[1])),
            ("eta", col(k, &|s| s.eta[0] + s.eta[1] + s.eta[2])),
        ];
        for (name, vals) in mparts {
            let v = weighted_lp(t, &vals, 0.0, p);
            terms.push((format!("M_{tag}:{name}"), v));
            m[k] += v;
        }
        let nparts: [(&str, Vec<f64>, f64); 6] = [
            ("u", col(k, &|s| s.u), rates.m),
            ("grad_u", col(k, &|s| s.grad_u), rates.n + 0.125),
            ("h", col(k, &|s| s.h), 1.0 / qbar - 1.0 / r),
            ("dt_h", col(k, &|s| s.dt_h), rates.m),
            ("grad_eta", col(k, &|s| s.eta[0] + s.eta[1]), rates.m + 0.25),
            ("grad_dt_eta", col(k, &|s| s.dt_eta[0]), rates.m + 0.5),
        ];
        for (name, vals, s) in nparts {
            let v = weighted_sup(t, &vals, s);
            terms.push((format!("N_{tag}:{name}"), v));
            nn[k] += v;
        }
    }
    let wparts: [(&str, Vec<f64>, f64); 4] = [
        ("dt_u", col(0, &|s| s.dt_u), w.a1),
        ("hess_u", col(0, &|s| s.hess_u), w.a1),
        ("hess_dt_eta", col(0, &|s| s.dt_eta[1]), w.a2),
        ("grad3_eta", col(0, &|s| s.eta[2]), w.a2),
    ];
    let mut n_weighted = 0.0;
    for (name, vals, s) in wparts {
        let v = weighted_lp(t, &vals, s, p);
        terms.push((format!("N_w:{name}"), v));
        n_weighted += v;
    }
    let dt_eta_sup = (0..t.len())
        .map(|n| z.dt_eta(n).expect("checked").lp_norm(2.0))
        .fold(0.0, f64::max);
    terms.push(("dt_eta_sup".into(), dt_eta_sup));
    Ok(NormReport {
        terms,
        m,
        n: nn,
        n_weighted,
        dt_eta_sup,
        x_norm: n_weighted + m[0] + m[1] + nn[0] + nn[1] + dt_eta_sup,
    })
}

/// `||u||_{L_r(Omega_t)}` by the change of variables `x = Theta(y)`:
/// the integral of `|v|^r (1 + D3 eta)` over the reference domain.
pub fn pushforward_norms(v: &HalfSpaceField, height: &HeightState, r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return invalid(format!("integrability exponent must be at least 1, got {r}"));
    }
    if height.grad_sup >= height.c0 {
        return Err(Error::Domain(format!(
            "sup |grad eta| = {:.4} violates the invertibility bound {}",
            height.grad_sup, height.c0
        )));
    }
    let vp = v.physical();
    let d3 = height.derivs.grad[2].physical();
    let (hg, vg) = (v.hgrid(), v.vgrid());
    if d3.data().len() * v.comps() != vp.data().len() {
        return invalid("velocity and height live on different grids");
    }
    let np = hg.len();
    let nz = vg.len();
    let cell = hg.spacing().powi(2);
    let mut acc = 0.0;
    for iz in 0..nz {
        let mut plane = 0.0;
        for p in 0..np {
            let m2: f64 = (0..v.comps()).map(|c| vp.get(c, iz, p).norm_sqr()).sum();
            let jac = 1.0 + d3.get(0, iz, p).re;
            if jac <= 1.0 - height.c0 {
                return Err(Error::Domain(format!("Jacobian {jac:.4} below 1 - c0")));
            }
            plane += m2.powf(0.5 * r) * jac;
        }
        acc += vg.weights()[iz] * cell * plane;
    }
    Ok(acc.powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::geometry::DEFAULT_C0;
    use crate::spectral::VerticalScheme;

    fn grids() -> (Arc<HorizontalGrid>, Arc<VerticalGrid>) {
        (
            HorizontalGrid::new(8, 2.0 * PI).unwrap(),
            VerticalGrid::new(VerticalScheme::Chebyshev, 24, 12.0).unwrap(),
        )
    }

    fn trajectory(scale: f64, nt: usize) -> StateZ {
        let (hg, vg) = grids();
        let times: Vec<f64> = (0..nt).map(|k| k as f64 * 0.5).collect();
        let v = |t: f64| HalfSpaceField::from_fn(&hg, &vg, 3, move |c, x| scale * (-t).exp() * (x[0] + c as f64).cos() * x[2].exp());
        let q = |t: f64| HalfSpaceField::from_fn(&hg, &vg, 1, move |_, x| scale * (1.0 + t).recip() * x[1].sin() * x[2].exp());
        let h = |t: f64| SurfaceField::from_fn(&hg, move |x| scale * (-t).exp() * (x[0] - x[1]).cos());
        StateZ::new(
            times.clone(),
            times.iter().map(|&t| v(t)).collect(),
            times.iter().map(|&t| q(t)).collect(),
            times.iter().map(|&t| h(t)).collect(),
            Some(times.iter().map(|&t| v(t).scaled(-1.0)).collect()),
            Some(times.iter().map(|&t| h(t).scaled(-1.0)).collect()),
        )
        .unwrap()
    }

    #[test]
    fn zero_trajectory_has_zero_norms() {
        let (hg, vg) = grids();
        let z = StateZ::zeros(&hg, &vg, &[0.0, 0.5, 1.0]);
        let cfg = ExponentConfig::default();
        let rep = weighted_norms(&z, &cfg, &WeightConfig::standard(cfg.q)).unwrap();
        assert_eq!(rep.x_norm, 0.0);
    }

    #[test]
    fn norms_are_homogeneous() {
        let cfg = ExponentConfig::default();
        let w = WeightConfig::standard(cfg.q);
        let a = weighted_norms(&trajectory(1.0, 5), &cfg, &w).unwrap();
        let b = weighted_norms(&trajectory(-0.25, 5), &cfg, &w).unwrap();
        for ((na, va), (_, vb)) in a.terms.iter().zip(&b.terms) {
            assert!((vb - 0.25 * va).abs() <= 1e-12 * va.abs().max(1e-300), "{na}");
        }
        assert!(a.x_norm > 0.0);
    }

    #[test]
    fn constant_in_time_lp_norm() {
        let (hg, vg) = grids();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let v = HalfSpaceField::from_fn(&hg, &vg, 3, |c, x| if c == 0 { x[0].cos() * x[2].exp() } else { 0.0 });
        let zero_h = SurfaceField::zeros(&hg, Repr::Physical);
        let nt = times.len();
        let z = StateZ::new(
            times.clone(),
            vec![v.clone(); nt],
            vec![HalfSpaceField::zeros(&hg, &vg, 1, Repr::Physical); nt],
            vec![zero_h.clone(); nt],
            Some(vec![HalfSpaceField::zeros(&hg, &vg, 3, Repr::Physical); nt]),
            Some(vec![zero_h; nt]),
        )
        .unwrap();
        let cfg = ExponentConfig { p: 3.0, ..Default::default() };
        let rep = weighted_norms(&z, &cfg, &WeightConfig::standard(cfg.q)).unwrap();
        let snap = snapshot(&z, 0, cfg.q);
        let want = 5f64.powf(1.0 / 3.0) * (snap.u + snap.grad_u + snap.hess_u);
        let got = rep.terms.iter().find(|(k, _)| k == "M_q:u").unwrap().1;
        assert!((got - want).abs() < 1e-12 * want);
        let l2 = (2.0 * PI * PI * 0.5 * (1.0 - (-24f64).exp())).sqrt();
        assert!((snapshot(&z, 0, 2.0).u - l2).abs() < 1e-6 * l2);
    }

    #[test]
    fn extension_gradient_of_a_single_mode() {
        let (hg, vg) = grids();
        let h = SurfaceField::from_fn(&hg, |x| (2.0 * x[0]).cos());
        // |grad^k eta|^2 = 2^{2k} 2^{k-1} e^{4z} summed over ordered index tuples
        for (k, got) in extension_gradients(&h, &vg, 2.0).iter().enumerate() {
            let k = k as i32 + 1;
            let want = (8f64.powi(k) / 2.0 * 4.0 * PI * PI / 4.0 * (1.0 - (-48f64).exp())).sqrt();
            assert!((got - want).abs() < 1e-6 * want, "k={k} {got} {want}");
        }
    }

    #[test]
    fn pushforward_of_flat_and_constant_heights() {
        let (hg, vg) = grids();
        let v = HalfSpaceField::from_fn(&hg, &vg, 3, |c, x| (x[0] * (c + 1) as f64).sin() * x[2].exp());
        let flat = v.lp_norm(3.0);
        for c in [0.0, 0.3] {
            let st = HeightState::new(&SurfaceField::from_fn(&hg, |_| c), None, &vg, DEFAULT_C0).unwrap();
            assert!((pushforward_norms(&v, &st, 3.0).unwrap() - flat).abs() < 1e-12 * flat);
        }
        let st = HeightState::new(&SurfaceField::from_fn(&hg, |x| 0.05 * x[0].cos()), None, &vg, DEFAULT_C0).unwrap();
        let moved = pushforward_norms(&v, &st, 3.0).unwrap();
        let d3 = st.derivs.grad[2].max_abs();
        assert!((moved / flat - 1.0).abs() <= d3 / 3.0 * 1.05);
        let mut bad = st.clone();
        bad.c0 = 0.01;
        assert!(matches!(pushforward_norms(&v, &bad, 3.0), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn holder_interpolation(a in 0.1f64..0.9, s2 in 1.0f64..2.5, s3 in 3.0f64..8.0, k in 1usize..4) {
            let (hg, vg) = grids();
            let f = HalfSpaceField::from_fn(&hg, &vg, 1, |_, x| (k as f64 * x[0]).cos() * (1.0 + x[1].sin()) * (0.5 * x[2]).exp());
            let s1 = 1.0 / (a / s2 + (1.0 - a) / s3);
            let lhs = f.lp_norm(s1);
            let rhs = f.lp_norm(s2).powf(a) * f.lp_norm(s3).powf(1.0 - a);
            prop_assert!(lhs <= rhs * (1.0 + 1e-10));
        }
    }
}
