//! Free-surface Stokes semigroup by inverse Laplace transform over the
//! resolvent contour.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::boundary::{dispersion, dispersion_poles};
use super::mode::{ModeData, RadialOperator};
use super::{LinearSolution, PhysicalParams};
use crate::error::{invalid, Error, Result};
use crate::spectral::{HalfSpaceField, HorizontalGrid, Repr, SurfaceField, VerticalGrid};
use crate::symbols::{cal_m, expm1, lopatinskii_d, Contour, ContourNode, Sector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the mode resolvent is evaluated at contour nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventBackend {
    /// Collocation BVP for every mode and node, on the sector contour.
    Collocation,
    /// Closed-form profiles for data `(0, h0)`, with the contour moved left
    /// onto the branch cut and the capillary-gravity poles taken as residues.
    /// Valid for arbitrarily long times.
    BoundaryFormula,
}

#[derive(Debug, Clone)]
pub struct SemigroupOptions {
    pub sector: Sector,
    pub node_count: usize,
    /// Contour truncation; `None` picks it from the smallest positive time.
    pub s_max: Option<f64>,
    pub backend: ResolventBackend,
    /// Recompute with doubled truncation and node count and compare.
    pub check_truncation: bool,
    /// Largest tolerated `e^{vertex * t}` on the sector contour.
    pub max_amplification: f64,
}

impl SemigroupOptions {
    /// Residue route with a node count that resolves the inner wedge.
    pub fn boundary_formula() -> Self {
        Self {
            node_count: 800,
            backend: ResolventBackend::BoundaryFormula,
            ..Self::default()
        }
    }
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        Self {
            sector: Sector::default(),
            node_count: 400,
            s_max: None,
            backend: ResolventBackend::Collocation,
            check_truncation: false,
            max_amplification: 1e10,
        }
    }
}

fn check_times(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return invalid("no output times");
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return invalid("output times must be finite and non-negative");
    }
    Ok(times.iter().cloned().filter(|t| *t > 0.0).fold(f64::INFINITY, f64::min))
}

/// Spectral entries below this fraction of the largest one are FFT
/// round-off and are not propagated.
pub(crate) const ROUNDOFF: f64 = 1e-15;

/// `true` if the spectrum is that of a real field.
pub(crate) fn is_real_spectrum(g: &HorizontalGrid, planes: &[&[Complex64]]) -> bool {
    planes.iter().all(|pl| {
        let scale = pl.iter().map(|v| v.norm()).fold(0.0, f64::max);
        (0..g.len()).all(|p| (pl[p] - pl[g.conj_index(p)].conj()).norm() <= 1e-13 * scale.max(1e-300))
    })
}

/// Modes that must be solved: non-Nyquist, nonzero data, and one
/// representative per conjugate pair when the data is real.
pub(crate) fn active_modes(g: &HorizontalGrid, nonzero: impl Fn(usize) -> bool, real: bool) -> Vec<usize> {
    (0..g.len())
        .filter(|&p| !g.is_nyquist(p) && nonzero(p) && (!real || p <= g.conj_index(p)))
        .collect()
}

/// Upper-ray nodes paired with their mirror images on the lower ray.
pub(crate) fn conjugate_pairs(c: &Contour) -> impl Iterator<Item = (&ContourNode, &ContourNode)> {
    let half = c.nodes.len() / 2;
    (0..half).map(move |k| {
        let (up, lo) = (&c.nodes[half + k], &c.nodes[half - 1 - k]);
        debug_assert!((up.lambda - lo.lambda.conj()).norm() <= 1e-12 * up.lambda.norm());
        (up, lo)
    })
}

/// Active modes grouped by `|xi'|`, one group per circle.
pub(crate) fn radius_groups(g: &HorizontalGrid, modes: &[usize]) -> Vec<(f64, Vec<usize>)> {
    let mut by: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &p in modes {
        let [a, b] = g.int_mode(p);
        by.entry(a * a + b * b).or_default().push(p);
    }
    by.into_values().map(|v| (g.abs_xi(v[0]), v)).collect()
}

/// Evolves `(u0, h0)` under the linear free-surface Stokes semigroup and
/// returns velocity, pressure and height (spectral) at each time.
pub fn evolve_semigroup(
    params: &PhysicalParams,
    u0: Option<&HalfSpaceField>,
    h0: &SurfaceField,
    vgrid: &Arc<VerticalGrid>,
    times: &[f64],
    opts: &SemigroupOptions,
) -> Result<LinearSolution> {
    params.validate()?;
    let t_min = check_times(times)?;
    if let Some(u) = u0 {
        if u.comps() != 3 || !Arc::ptr_eq(u.vgrid(), vgrid) && u.vgrid().nodes() != vgrid.nodes() {
            return invalid("initial velocity must be a vector field on the given vertical grid");
        }
        if u.hgrid().n() != h0.grid().n() || u.hgrid().box_len() != h0.grid().box_len() {
            return invalid("initial velocity and height live on different horizontal grids");
        }
    }
    let sol = match opts.backend {
        ResolventBackend::Collocation => collocation(params, u0, h0, vgrid, times, t_min, opts, 1)?,
        ResolventBackend::BoundaryFormula => {
            if u0.is_some_and(|u| u.max_abs() > 0.0) {
                return invalid("the boundary-formula backend only propagates height data");
            }
            let prop = BoundaryFormulaPropagator::new(params, h0.grid(), vgrid, t_min, opts.node_count)?;
            prop.propagate(h0, times)?
        }
    };
    if opts.check_truncation && opts.backend == ResolventBackend::Collocation {
        let fine = collocation(params, u0, h0, vgrid, times, t_min, opts, 2)?;
        for (k, (a, b)) in sol.h.iter().zip(&fine.h).enumerate() {
            let mut d = a.clone();
            d.axpy(-1.0, b);
            let err = d.spectral_l2() / b.spectral_l2().max(1e-300);
            let du = {
                let mut d = sol.u[k].clone();
                d.axpy(-1.0, &fine.u[k]);
                d.lp_norm(2.0) / fine.u[k].lp_norm(2.0).max(1e-300)
            };
            if err.max(du) > 1e-6 && b.spectral_l2() > 0.0 {
                return Err(Error::Accuracy(format!(
                    "contour truncation changes the solution by {:.2e} at t = {}",
                    err.max(du),
                    times[k]
                )));
            }
        }
    }
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn collocation(
    params: &PhysicalParams,
    u0: Option<&HalfSpaceField>,
    h0: &SurfaceField,
    vgrid: &Arc<VerticalGrid>,
    times: &[f64],
    t_min: f64,
    opts: &SemigroupOptions,
    refine: usize,
) -> Result<LinearSolution> {
    let hg = h0.grid().clone();
    let v = opts.sector.vertex();
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    if (v * t_max).exp() > opts.max_amplification {
        return Err(Error::Accuracy(format!(
            "e^(vertex t) = {:.2e} at t = {t_max} exceeds the cancellation budget; use a smaller gamma0 or the boundary-formula backend",
            (v * t_max).exp()
        )));
    }
    let s_max = opts.s_max.unwrap_or_else(|| Contour::s_for_time(v, opts.sector.eps, t_min.min(1.0)));
    let contour = Contour::wedge(v, opts.sector.eps, s_max * refine as f64, opts.node_count * refine)?;
    let hs = h0.spectral();
    let us = u0.map(|u| u.spectral());
    let nz = vgrid.len();
    let planes: Vec<&[Complex64]> = {
        let mut v: Vec<&[Complex64]> = vec![hs.data()];
        if let Some(u) = &us {
            for c in 0..3 {
                for iz in 0..nz {
                    v.push(u.plane(c, iz));
                }
            }
        }
        v
    };
    let real = is_real_spectrum(&hg, &planes);
    let floor = ROUNDOFF * planes.iter().flat_map(|pl| pl.iter()).map(|v| v.norm()).fold(0.0, f64::max);
    let nonzero = |p: usize| planes.iter().any(|pl| pl[p].norm() > floor);
    let modes = active_modes(&hg, nonzero, real);
    let nt = times.len();
    // per mode: values [u (3 nz), p (nz), h] for each time, plus time derivatives
    let groups = radius_groups(&hg, &modes);
    let per_group: Vec<Vec<(usize, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)>> = groups
        .par_iter()
        .map(|(a, group)| -> Result<_> {
            let dim = 4 * nz + 1;
            let data: Vec<ModeData> = group
                .iter()
                .map(|&p| {
                    let mut d = ModeData::zeros(nz);
                    if let Some(u) = &us {
                        for c in 0..3 {
                            d.f[c] = u.column(c, p);
                        }
                    }
                    d.k = hs.data()[p];
                    d
                })
                .collect();
            let mut acc = vec![vec![vec![ZERO; dim]; nt]; group.len()];
            let mut dacc = acc.clone();
            for (upper, lower) in conjugate_pairs(&contour) {
                let op = RadialOperator::new(*a, upper.lambda, params, vgrid)?;
                for (node, conj) in [(upper, false), (lower, true)] {
                    let ew: Vec<Complex64> = times.iter().map(|&t| node.weight * (node.lambda * t).exp()).collect();
                    for (m, &p) in group.iter().enumerate() {
                        let s = if conj { op.solve_conjugate(hg.xi(p), &data[m])? } else { op.solve(hg.xi(p), &data[m])? };
                        for (ti, &t) in times.iter().enumerate() {
                            if t == 0.0 {
                                continue;
                            }
                            let w = ew[ti];
                            let dw = w * node.lambda;
                            let (row, drow) = (&mut acc[m][ti], &mut dacc[m][ti]);
                            for (k, v) in s.u.iter().chain(std::iter::once(&s.p)).flatten().chain(std::iter::once(&s.h)).enumerate() {
                                row[k] += w * v;
                                drow[k] += dw * v;
                            }
                        }
                    }
                }
            }
            Ok(group.iter().cloned().zip(acc.into_iter().zip(dacc)).map(|(p, (a, d))| (p, a, d)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let per_mode = per_group.into_iter().flatten();

    let mut sol = LinearSolution::zeros(&hg, vgrid, times);
    for (p, acc, dacc) in per_mode {
        let targets: Vec<(usize, bool)> = if real && hg.conj_index(p) != p {
            vec![(p, false), (hg.conj_index(p), true)]
        } else {
            vec![(p, false)]
        };
        for (ti, &t) in times.iter().enumerate() {
            for &(q, cj) in &targets {
                let f = |v: Complex64| if cj { v.conj() } else { v };
                if t == 0.0 {
                    if let Some(u) = &us {
                        for c in 0..3 {
                            sol.u[ti].set_column(c, q, &u.column(c, q));
                        }
                    }
                    sol.h[ti].data_mut()[q] = hs.data()[q];
                    continue;
                }
                for c in 0..3 {
                    for iz in 0..nz {
                        sol.u[ti].set(c, iz, q, f(acc[ti][c * nz + iz]));
                        sol.dt_u.as_mut().unwrap()[ti].set(c, iz, q, f(dacc[ti][c * nz + iz]));
                    }
                }
                for iz in 0..nz {
                    sol.p[ti].set(0, iz, q, f(acc[ti][3 * nz + iz]));
                }
                sol.h[ti].data_mut()[q] = f(acc[ti][4 * nz]);
                sol.dt_h.as_mut().unwrap()[ti].data_mut()[q] = f(dacc[ti][4 * nz]);
            }
        }
    }
    Ok(sol)
}

/// Per-radius data of the boundary-formula propagator.
struct RadiusData {
    a: f64,
    nodes: Vec<(Complex64, Complex64)>,
    /// Residues: pole and `1 / Delta'(pole)`.
    poles: Vec<(Complex64, Complex64)>,
}

/// Time profiles for unit kinematic data at one radius: `u_j = i xi_j psi`,
/// `u3 = psi3`, `h = eta`, `p = pz e^{A z}`, and their time derivatives.
#[derive(Debug, Clone)]
pub struct RadiusProfiles {
    pub psi: Vec<Complex64>,
    pub psi3: Vec<Complex64>,
    pub dz_psi: Vec<Complex64>,
    pub dz_psi3: Vec<Complex64>,
    pub h: Complex64,
    pub p0: Complex64,
    pub dt_psi: Vec<Complex64>,
    pub dt_psi3: Vec<Complex64>,
    pub dt_h: Complex64,
}

/// Semigroup for height data built from the closed-form boundary profiles.
///
/// For each distinct `|xi'|` the contour is moved onto a narrow wedge around
/// the branch cut `(-inf, -mu A^2]` with vertex `-mu A^2 / 2`, and the zeros of
/// the dispersion function crossed on the way contribute residues. There is
/// no exponential amplification, so long times are accurate.
pub struct BoundaryFormulaPropagator {
    params: PhysicalParams,
    hgrid: Arc<HorizontalGrid>,
    vgrid: Arc<VerticalGrid>,
    radii: BTreeMap<i64, RadiusData>,
}

impl BoundaryFormulaPropagator {
    pub fn new(params: &PhysicalParams, hgrid: &Arc<HorizontalGrid>, vgrid: &Arc<VerticalGrid>, t_min: f64, node_count: usize) -> Result<Self> {
        params.validate()?;
        if !(t_min > 0.0) {
            return invalid("the propagator needs a positive smallest time");
        }
        let mut keys: Vec<i64> = (0..hgrid.len())
            .filter(|&p| !hgrid.is_nyquist(p))
            .map(|p| {
                let [a, b] = hgrid.int_mode(p);
                a * a + b * b
            })
            .filter(|k| *k > 0)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let unit = 2.0 * PI / hgrid.box_len();
        let built: Vec<(i64, RadiusData)> = keys
            .par_iter()
            .map(|&k| -> Result<(i64, RadiusData)> {
                let a = unit * (k as f64).sqrt();
                Ok((k, Self::radius(params, a, t_min, node_count)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: *params,
            hgrid: hgrid.clone(),
            vgrid: vgrid.clone(),
            radii: built.into_iter().collect(),
        })
    }

    fn radius(params: &PhysicalParams, a: f64, t_min: f64, node_count: usize) -> Result<RadiusData> {
        let mu = params.mu;
        let v_in = -0.5 * mu * a * a;
        // pick an opening whose rays stay clear of every pole
        let mut chosen = None;
        for eps_in in [PI / 6.0, PI / 4.0, PI / 9.0, PI / 3.0, PI / 12.0] {
            let poles = dispersion_poles(a, params, v_in, eps_in)?;
            let clear = poles.iter().all(|z| {
                let ang = (z - v_in).arg().abs();
                (ang - (PI - eps_in)).abs() > 0.1
            });
            if clear {
                chosen = Some((eps_in, poles));
                break;
            }
        }
        let (eps_in, poles) = chosen.ok_or_else(|| Error::Numerical {
            msg: format!("no contour opening avoids the dispersion poles at A = {a}"),
            condition: None,
        })?;
        let poles = poles.into_iter().map(|z| (z, 1.0 / dispersion(a, z, params).1)).collect();
        let s_max = Contour::s_for_time(v_in, eps_in, t_min);
        let c = Contour::wedge(v_in, eps_in, s_max, node_count)?;
        Ok(RadiusData {
            a,
            nodes: c.nodes.iter().map(|n| (n.lambda, n.weight)).collect(),
            poles,
        })
    }

    pub fn hgrid(&self) -> &Arc<HorizontalGrid> {
        &self.hgrid
    }

    pub fn vgrid(&self) -> &Arc<VerticalGrid> {
        &self.vgrid
    }

    /// Profiles at radius key `k1^2 + k2^2` for each time.
    pub fn profiles(&self, key: i64, times: &[f64]) -> Result<Vec<RadiusProfiles>> {
        let r = self
            .radii
            .get(&key)
            .ok_or_else(|| Error::InvalidInput(format!("no mode with |k|^2 = {key}")))?;
        let z = self.vgrid.nodes();
        let nz = z.len();
        let (a, mu) = (r.a, self.params.mu);
        let gamma = self.params.c_g + self.params.c_sigma * a * a;
        let eaz: Vec<f64> = z.iter().map(|z| (a * z).exp()).collect();
        let mut out: Vec<RadiusProfiles> = times
            .iter()
            .map(|_| RadiusProfiles {
                psi: vec![ZERO; nz],
                psi3: vec![ZERO; nz],
                dz_psi: vec![ZERO; nz],
                dz_psi3: vec![ZERO; nz],
                h: ZERO,
                p0: ZERO,
                dt_psi: vec![ZERO; nz],
                dt_psi3: vec![ZERO; nz],
                dt_h: ZERO,
            })
            .collect();
        // every contribution is c * N(lambda) with c = weight / Delta at
        // nodes and c = 1 / Delta' at poles
        let mut contrib = |lambda: Complex64, c: Complex64| {
            let b = crate::symbols::b_of(a, lambda, mu);
            let d = lopatinskii_d(a, b);
            let s = b * b + a * a;
            let mut ps = vec![ZERO; nz];
            let mut ps3 = vec![ZERO; nz];
            let mut dps = vec![ZERO; nz];
            let mut dps3 = vec![ZERO; nz];
            for k in 0..nz {
                let em1 = expm1((b - a) * z[k]);
                let e = eaz[k] * (em1 + 1.0);
                let m = cal_m(z[k], a, b);
                let dm = b * m + eaz[k];
                ps[k] = -gamma * (-s * m + (b - a) * e);
                ps3[k] = -gamma * a * (-s * m + (b + a) * e);
                dps[k] = -gamma * (-s * dm + (b - a) * b * e);
                dps3[k] = -gamma * a * (-s * dm + (b + a) * b * e);
            }
            let hh = mu * d;
            for (ti, &t) in times.iter().enumerate() {
                let w = c * (lambda * t).exp();
                let wl = w * lambda;
                let o = &mut out[ti];
                for k in 0..nz {
                    o.psi[k] += w * ps[k];
                    o.psi3[k] += w * ps3[k];
                    o.dz_psi[k] += w * dps[k];
                    o.dz_psi3[k] += w * dps3[k];
                    o.dt_psi[k] += wl * ps[k];
                    o.dt_psi3[k] += wl * ps3[k];
                }
                o.h += w * hh;
                o.dt_h += wl * hh;
            }
        };
        for &(lambda, w) in &r.nodes {
            let (delta, _) = dispersion(a, lambda, &self.params);
            contrib(lambda, w / delta);
        }
        for &(pole, inv_d) in &r.poles {
            contrib(pole, inv_d);
        }
        let top = nz - 1;
        for o in out.iter_mut() {
            o.p0 = 2.0 * mu * o.dz_psi3[top] + gamma * o.h;
        }
        Ok(out)
    }

    /// Solution for height data `h0` at the given times.
    pub fn propagate(&self, h0: &SurfaceField, times: &[f64]) -> Result<LinearSolution> {
        let hg = &self.hgrid;
        if h0.grid().n() != hg.n() || h0.grid().box_len() != hg.box_len() {
            return invalid("height lives on a different grid");
        }
        check_times(times)?;
        let hs = h0.spectral();
        let nz = self.vgrid.len();
        let mut sol = LinearSolution::zeros(hg, &self.vgrid, times);
        let pos: Vec<f64> = times.iter().map(|t| t.max(f64::MIN_POSITIVE)).collect();
        let mut by_key: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        let floor = ROUNDOFF * hs.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for p in 0..hg.len() {
            if hg.is_nyquist(p) || hs.data()[p].norm() <= floor {
                continue;
            }
            let [a, b] = hg.int_mode(p);
            by_key.entry(a * a + b * b).or_default().push(p);
        }
        let keyed: Vec<(i64, Vec<usize>)> = by_key.into_iter().collect();
        let profs: Vec<Option<Vec<RadiusProfiles>>> = keyed
            .par_iter()
            .map(|(k, _)| if *k == 0 { Ok(None) } else { self.profiles(*k, &pos).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        for ((_, modes), prof) in keyed.iter().zip(profs) {
            for &p in modes {
                let c = hs.data()[p];
                for (ti, &t) in times.iter().enumerate() {
                    if t == 0.0 || prof.is_none() {
                        sol.h[ti].data_mut()[p] = c;
                        for iz in 0..nz {
                            sol.p[ti].set(0, iz, p, self.params.c_g * c);
                        }
                        continue;
                    }
                    let pr = &prof.as_ref().unwrap()[ti];
                    let ix = [hg.ixi(p, 0), hg.ixi(p, 1)];
                    let a = hg.abs_xi(p);
                    for iz in 0..nz {
                        for j in 0..2 {
                            sol.u[ti].set(j, iz, p, ix[j] * pr.psi[iz] * c);
                            sol.dt_u.as_mut().unwrap()[ti].set(j, iz, p, ix[j] * pr.dt_psi[iz] * c);
                        }
                        sol.u[ti].set(2, iz, p, pr.psi3[iz] * c);
                        sol.dt_u.as_mut().unwrap()[ti].set(2, iz, p, pr.dt_psi3[iz] * c);
                        let z = self.vgrid.nodes()[iz];
                        sol.p[ti].set(0, iz, p, pr.p0 * (a * z).exp() * c);
                    }
                    sol.h[ti].data_mut()[p] = pr.h * c;
                    sol.dt_h.as_mut().unwrap()[ti].data_mut()[p] = pr.dt_h * c;
                }
            }
        }
        Ok(sol)
    }
}

impl LinearSolution {
    pub(crate) fn zeros(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>, times: &[f64]) -> Self {
        let nt = times.len();
        let u = HalfSpaceField::zeros(hg, vg, 3, Repr::Spectral);
        let p = HalfSpaceField::zeros(hg, vg, 1, Repr::Spectral);
        let h = SurfaceField::zeros(hg, Repr::Spectral);
        Self {
            times: times.to_vec(),
            u: vec![u.clone(); nt],
            p: vec![p; nt],
            h: vec![h.clone(); nt],
            dt_u: Some(vec![u; nt]),
            dt_h: Some(vec![h; nt]),
            provenance: super::Provenance::Semigroup,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::VerticalScheme;

    fn grids() -> (Arc<HorizontalGrid>, Arc<VerticalGrid>) {
        (
            HorizontalGrid::new(8, 2.0 * PI).unwrap(),
            VerticalGrid::new(VerticalScheme::Chebyshev, 56, 20.0).unwrap(),
        )
    }

    fn rel(a: &HalfSpaceField, b: &HalfSpaceField) -> f64 {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        d.max_abs() / b.max_abs()
    }

    fn rel_s(a: &SurfaceField, b: &SurfaceField) -> f64 {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        d.max_abs() / b.max_abs()
    }

    fn swirl(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>) -> HalfSpaceField {
        // u = (-d3 psi, 0, d1 psi) with psi = cos(x1) z^2 e^{2z}
        HalfSpaceField::from_fn(hg, vg, 3, |c, x| {
            let z = x[2];
            match c {
                0 => -x[0].cos() * (2.0 * z + 2.0 * z * z) * (2.0 * z).exp(),
                1 => 0.0,
                _ => -x[0].sin() * z * z * (2.0 * z).exp(),
            }
        })
    }

    #[test]
    fn zero_data_stays_zero() {
        let (hg, vg) = grids();
        let h0 = SurfaceField::zeros(&hg, Repr::Physical);
        let s = evolve_semigroup(&PhysicalParams::default(), None, &h0, &vg, &[0.5, 1.0], &SemigroupOptions::default()).unwrap();
        assert!(s.u.iter().all(|u| u.max_abs() == 0.0) && s.h.iter().all(|h| h.max_abs() == 0.0));
    }

    #[test]
    fn residue_route_matches_collocation() {
        let (hg, vg) = grids();
        let params = PhysicalParams { mu: 0.8, c_sigma: 0.5, c_g: 1.0 };
        let h0 = SurfaceField::from_fn(&hg, |x| 0.1 * x[0].cos() + 0.05 * (2.0 * x[1]).sin() + 0.02 * (x[0] + x[1]).cos());
        let times = [0.3, 1.0, 2.0];
        let a = evolve_semigroup(&params, None, &h0, &vg, &times, &SemigroupOptions::default()).unwrap();
        let b = evolve_semigroup(&params, None, &h0, &vg, &times, &SemigroupOptions::boundary_formula()).unwrap();
        for k in 0..times.len() {
            assert!(rel(&a.u[k], &b.u[k]) < 1e-6, "u at t={}: {:.2e}", times[k], rel(&a.u[k], &b.u[k]));
            assert!(rel_s(&a.h[k], &b.h[k]) < 1e-6, "h at t={}", times[k]);
            assert!(rel(&a.p[k], &b.p[k]) < 1e-5, "p at t={}: {:.2e}", times[k], rel(&a.p[k], &b.p[k]));
            let (da, db) = (&a.dt_u.as_ref().unwrap()[k], &b.dt_u.as_ref().unwrap()[k]);
            assert!(rel(da, db) < 1e-6, "dt u at t={}", times[k]);
        }
    }

    #[test]
    fn semigroup_property_holds() {
        let (hg, vg) = grids();
        let params = PhysicalParams::default();
        let h0 = SurfaceField::from_fn(&hg, |x| 0.1 * x[0].cos() + 0.03 * x[1].sin());
        let u0 = swirl(&hg, &vg).scaled(0.2);
        let opts = SemigroupOptions {
            node_count: 400,
            ..Default::default()
        };
        let direct = evolve_semigroup(&params, Some(&u0), &h0, &vg, &[1.0], &opts).unwrap();
        let half = evolve_semigroup(&params, Some(&u0), &h0, &vg, &[0.5], &opts).unwrap();
        let twice = evolve_semigroup(&params, Some(&half.u[0]), &half.h[0], &vg, &[0.5], &opts).unwrap();
        assert!(rel(&twice.u[0], &direct.u[0]) < 1e-6, "{:.2e}", rel(&twice.u[0], &direct.u[0]));
        assert!(rel_s(&twice.h[0], &direct.h[0]) < 1e-6);
    }

    #[test]
    fn truncation_check_accepts_converged_contours() {
        let (hg, vg) = grids();
        let h0 = SurfaceField::from_fn(&hg, |x| 0.1 * x[0].cos());
        let opts = SemigroupOptions {
            check_truncation: true,
            ..Default::default()
        };
        assert!(evolve_semigroup(&PhysicalParams::default(), None, &h0, &vg, &[0.2, 1.0], &opts).is_ok());
        let coarse = SemigroupOptions {
            node_count: 16,
            ..opts
        };
        let r = evolve_semigroup(&PhysicalParams::default(), None, &h0, &vg, &[0.2, 1.0], &coarse);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }

    #[test]
    fn long_times_need_the_residue_route() {
        let (hg, vg) = grids();
        let h0 = SurfaceField::from_fn(&hg, |x| 0.1 * x[0].cos());
        let r = evolve_semigroup(&PhysicalParams::default(), None, &h0, &vg, &[20.0], &SemigroupOptions::default());
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }

    /// `|u(t) - u0|_2` shrinks as `t -> 0`, with a positive fitted power.
    #[test]
    fn strongly_continuous_at_zero() {
        let (hg, vg) = grids();
        let params = PhysicalParams::default();
        let u0 = swirl(&hg, &vg);
        let h0 = SurfaceField::zeros(&hg, Repr::Physical);
        let opts = SemigroupOptions {
            node_count: 320,
            ..Default::default()
        };
        let times = [0.1, 0.05, 0.025];
        let s = evolve_semigroup(&params, Some(&u0), &h0, &vg, &times, &opts).unwrap();
        let errs: Vec<f64> = s
            .u
            .iter()
            .map(|u| {
                let mut d = u.physical();
                d.axpy(-1.0, &u0);
                d.lp_norm(2.0) / u0.lp_norm(2.0)
            })
            .collect();
        let p1 = (errs[0] / errs[1]).log2();
        let p2 = (errs[1] / errs[2]).log2();
        assert!(p1 > 0.2 && p2 > 0.2, "{errs:?}");
        assert!(errs[2] < 0.2, "{errs:?}");
    }
}
