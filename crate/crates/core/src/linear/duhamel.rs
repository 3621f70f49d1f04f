//! Zero-initial-data solutions `u(t) = int_0^t R(t - s) (f, h, k)(s) ds` by
//! product integration on the resolvent contour.
//!
//! Data are interpolated linearly in time. For each contour node the
//! convolution with `e^{lambda (t - s)}` is integrated exactly, so the time
//! step only enters through the interpolation error. The contour kernel is
//! wrong for lags below `~1 / s_max`; that defect is removed with its
//! Laplace transform at a real point `sigma` right of the contour.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::mode::{ModeData, RadialOperator};
use super::pressure::forced_pressure_mode;
use super::semigroup::{active_modes, conjugate_pairs, is_real_spectrum, radius_groups, ROUNDOFF};
use super::{LinearSolution, PhysicalParams, Provenance};
use crate::error::{invalid, Error, Result};
use crate::spectral::{HalfSpaceField, HorizontalGrid, Repr, SurfaceField, VerticalGrid};
use crate::symbols::{Contour, Sector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Surface stress data `T e3` sampled on a time grid.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub times: Vec<f64>,
    pub h: Vec<[SurfaceField; 3]>,
}

/// Momentum forcing, surface stress and kinematic data on a uniform time
/// grid starting at zero. Missing parts are zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct DuhamelData<'a> {
    pub f: Option<&'a [HalfSpaceField]>,
    pub stress: Option<&'a BoundaryData>,
    pub k: Option<&'a [SurfaceField]>,
}

#[derive(Debug, Clone)]
pub struct DuhamelOptions {
    pub sector: Sector,
    pub node_count: usize,
    /// Compare with the solution on every other time level.
    pub richardson: bool,
    /// Largest accepted relative Richardson error estimate.
    pub tolerance: f64,
    /// Largest tolerated `e^{vertex T}`.
    pub max_amplification: f64,
}

impl Default for DuhamelOptions {
    fn default() -> Self {
        Self {
            sector: Sector::default(),
            node_count: 240,
            richardson: false,
            tolerance: 1e-4,
            max_amplification: 1e10,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DuhamelReport {
    pub s_max: f64,
    pub node_count: usize,
    pub active_modes: usize,
    /// Relative error estimate `|u_tau - u_2tau| / 3`, if requested.
    pub richardson_error: Option<f64>,
}

/// `phi1(z) = (e^z - 1) / z` and `phi2(z) = (e^z - 1 - z) / z^2`.
fn phis(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.25 {
        let (mut p1, mut p2) = (ZERO, ZERO);
        let mut term = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..16 {
            // term = z^k
            p1 += term / (fact * (k + 1) as f64);
            p2 += term / (fact * ((k + 1) * (k + 2)) as f64);
            term *= z;
            fact *= (k + 1) as f64;
        }
        (p1, p2)
    } else {
        let p1 = (z.exp() - 1.0) / z;
        (p1, (p1 - 1.0) / z)
    }
}

struct Spectra {
    f: Option<Vec<HalfSpaceField>>,
    stress: Option<Vec<[SurfaceField; 3]>>,
    k: Option<Vec<SurfaceField>>,
}

impl Spectra {
    fn mode_data(&self, p: usize, n: usize, nz: usize) -> ModeData {
        let mut d = ModeData::zeros(nz);
        if let Some(f) = &self.f {
            for c in 0..3 {
                d.f[c] = f[n].column(c, p);
            }
        }
        if let Some(s) = &self.stress {
            for c in 0..3 {
                d.stress[c] = s[n][c].data()[p];
            }
        }
        if let Some(k) = &self.k {
            d.k = k[n].data()[p];
        }
        d
    }

    fn subsample(&self) -> Self {
        fn every<T: Clone>(v: &[T]) -> Vec<T> {
            v.iter().step_by(2).cloned().collect()
        }
        Self {
            f: self.f.as_deref().map(every),
            stress: self.stress.as_deref().map(every),
            k: self.k.as_deref().map(every),
        }
    }
}

/// `[u1, u2, u3, h]` of a mode solution as one vector.
fn stacked(s: &super::ModeProfile) -> Vec<Complex64> {
    s.u.iter().flatten().cloned().chain(std::iter::once(s.h)).collect()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Solves the linear free-surface problem with zero initial data and the
/// given forcing. Pressure is reconstructed from the velocity at each time.
pub fn duhamel_solve(
    params: &PhysicalParams,
    hgrid: &Arc<HorizontalGrid>,
    vgrid: &Arc<VerticalGrid>,
    times: &[f64],
    data: &DuhamelData,
    opts: &DuhamelOptions,
) -> Result<(LinearSolution, DuhamelReport)> {
    params.validate()?;
    let nt = times.len();
    if nt < 2 || times[0] != 0.0 {
        return invalid("the time grid must start at 0 and have at least two levels");
    }
    let tau = times[1];
    if !(tau > 0.0) || times.iter().enumerate().any(|(n, t)| (t - n as f64 * tau).abs() > 1e-9 * tau * n.max(1) as f64) {
        return invalid("the time grid must be uniform");
    }
    let same_h = |g: &Arc<HorizontalGrid>| g.n() == hgrid.n() && g.box_len() == hgrid.box_len();
    if let Some(f) = data.f {
        if f.len() != nt || f.iter().any(|f| f.comps() != 3 || !same_h(f.hgrid()) || f.vgrid().nodes() != vgrid.nodes()) {
            return invalid("momentum forcing must be a vector field per time level on the solver grids");
        }
    }
    if let Some(s) = data.stress {
        if s.h.len() != nt || s.times.len() != nt || s.h.iter().flatten().any(|h| !same_h(h.grid())) {
            return invalid("stress data must be given per time level on the solver grid");
        }
    }
    if let Some(k) = data.k {
        if k.len() != nt || k.iter().any(|k| !same_h(k.grid())) {
            return invalid("kinematic data must be given per time level on the solver grid");
        }
    }
    let t_max = times[nt - 1];
    let v = opts.sector.vertex();
    if (v * t_max).exp() > opts.max_amplification {
        return Err(Error::Accuracy(format!(
            "e^(vertex T) = {:.2e} exceeds the cancellation budget; use a smaller gamma0 or a shorter horizon",
            (v * t_max).exp()
        )));
    }
    let spectra = Spectra {
        f: data.f.map(|f| f.iter().map(|x| x.spectral()).collect()),
        stress: data.stress.map(|s| s.h.iter().map(|h| [h[0].spectral(), h[1].spectral(), h[2].spectral()]).collect()),
        k: data.k.map(|k| k.iter().map(|x| x.spectral()).collect()),
    };
    let mut planes: Vec<&[Complex64]> = vec![];
    if let Some(f) = &spectra.f {
        for x in f {
            for c in 0..3 {
                for iz in 0..vgrid.len() {
                    planes.push(x.plane(c, iz));
                }
            }
        }
    }
    if let Some(s) = &spectra.stress {
        planes.extend(s.iter().flatten().map(|x| x.data()));
    }
    if let Some(k) = &spectra.k {
        planes.extend(k.iter().map(|x| x.data()));
    }
    let real = is_real_spectrum(hgrid, &planes);
    let floor = ROUNDOFF * planes.iter().flat_map(|p| p.iter()).map(|v| v.norm()).fold(0.0, f64::max);
    let modes = active_modes(hgrid, |p| planes.iter().any(|pl| pl[p].norm() > floor), real);
    drop(planes);

    let s_max = Contour::s_for_time(v, opts.sector.eps, tau);
    let contour = Contour::wedge(v, opts.sector.eps, s_max, opts.node_count)?;
    let sigma = v + 1.0;
    let ctx = Ctx {
        params,
        hgrid,
        vgrid,
        contour: &contour,
        sigma,
        real,
    };
    let fine = ctx.run(&modes, &spectra, tau, nt)?;
    let mut report = DuhamelReport {
        s_max,
        node_count: opts.node_count,
        active_modes: modes.len(),
        richardson_error: None,
    };
    if opts.richardson {
        if (nt - 1) % 2 != 0 {
            return invalid("the Richardson check needs an even number of time steps");
        }
        let coarse = ctx.run(&modes, &spectra.subsample(), 2.0 * tau, nt.div_ceil(2))?;
        let (mut num, mut den): (f64, f64) = (0.0, 0.0);
        for (m, c) in coarse.u.iter().enumerate() {
            let mut d = fine.u[2 * m].clone();
            d.axpy(-1.0, c);
            num = num.max(d.max_abs());
            den = den.max(fine.u[2 * m].max_abs());
            let mut dh = fine.h[2 * m].clone();
            dh.axpy(-1.0, &coarse.h[m]);
            num = num.max(dh.max_abs());
            den = den.max(fine.h[2 * m].max_abs());
        }
        let err = if den > 0.0 { num / den / 3.0 } else { 0.0 };
        report.richardson_error = Some(err);
        if err > opts.tolerance {
            return Err(Error::Accuracy(format!(
                "time step {tau} too coarse: Richardson estimate {err:.2e} exceeds {:.2e}",
                opts.tolerance
            )));
        }
    }
    let sol = ctx.finish(fine, &spectra, times)?;
    Ok((sol, report))
}

struct Ctx<'a> {
    params: &'a PhysicalParams,
    hgrid: &'a Arc<HorizontalGrid>,
    vgrid: &'a Arc<VerticalGrid>,
    contour: &'a Contour,
    sigma: f64,
    real: bool,
}

/// Velocity and height on the time grid.
struct Raw {
    u: Vec<HalfSpaceField>,
    h: Vec<SurfaceField>,
}

/// Second-order finite differences in time, one-sided at the ends.
pub(crate) fn time_derivative(u: &[HalfSpaceField], tau: f64) -> Vec<HalfSpaceField> {
    let nt = u.len();
    let comb = |terms: &[(f64, usize)]| {
        let mut d = u[terms[0].1].scaled(terms[0].0 / tau);
        for &(c, i) in &terms[1..] {
            d.axpy(c / tau, &u[i]);
        }
        d
    };
    if nt == 2 {
        let d = comb(&[(1.0, 1), (-1.0, 0)]);
        return vec![d.clone(), d];
    }
    (0..nt)
        .map(|n| match n {
            0 => comb(&[(-1.5, 0), (2.0, 1), (-0.5, 2)]),
            n if n == nt - 1 => comb(&[(1.5, n), (-2.0, n - 1), (0.5, n - 2)]),
            n => comb(&[(0.5, n + 1), (-0.5, n - 1)]),
        })
        .collect()
}

impl Ctx<'_> {
    fn run(&self, modes: &[usize], spectra: &Spectra, tau: f64, nt: usize) -> Result<Raw> {
        let (hg, vg) = (self.hgrid, self.vgrid);
        let nz = vg.len();
        let dim = 3 * nz + 1;
        let groups = radius_groups(hg, modes);
        let results: Vec<Vec<(usize, Vec<Vec<Complex64>>)>> = groups
            .par_iter()
            .map(|(a, group)| -> Result<_> {
                let data: Vec<Vec<ModeData>> = group.iter().map(|&p| (0..nt).map(|n| spectra.mode_data(p, n, nz)).collect()).collect();
                let mut acc = vec![vec![vec![ZERO; dim]; nt]; group.len()];
                let mut solve_all = |op: &RadialOperator, conj: bool, weight: Complex64, lambda: Complex64| -> Result<()> {
                    let z = lambda * tau;
                    let (p1, p2) = phis(z);
                    let (ca, cb) = (tau * (p1 - p2), tau * p2);
                    let ez = z.exp();
                    let cw = weight / (self.sigma - lambda);
                    for (m, &p) in group.iter().enumerate() {
                        let ys: Vec<Vec<Complex64>> = data[m]
                            .iter()
                            .map(|d| {
                                if d.is_zero() {
                                    Ok(vec![ZERO; dim])
                                } else if conj {
                                    op.solve_conjugate(hg.xi(p), d).map(|s| stacked(&s))
                                } else {
                                    op.solve(hg.xi(p), d).map(|s| stacked(&s))
                                }
                            })
                            .collect::<Result<_>>()?;
                        let mut w = vec![ZERO; dim];
                        for n in 0..nt {
                            if n > 0 {
                                for k in 0..dim {
                                    w[k] = ez * w[k] + ca * ys[n - 1][k] + cb * ys[n][k];
                                }
                            }
                            axpy(&mut acc[m][n], weight, &w);
                            axpy(&mut acc[m][n], -cw, &ys[n]);
                        }
                    }
                    Ok(())
                };
                for (upper, lower) in conjugate_pairs(self.contour) {
                    let op = RadialOperator::new(*a, upper.lambda, self.params, vg)?;
                    solve_all(&op, false, upper.weight, upper.lambda)?;
                    solve_all(&op, true, lower.weight, lower.lambda)?;
                }
                // Laplace transform of the kernel itself at sigma
                let op = RadialOperator::new(*a, Complex64::new(self.sigma, 0.0), self.params, vg)?;
                for (m, &p) in group.iter().enumerate() {
                    for n in 0..nt {
                        if !data[m][n].is_zero() {
                            let y = stacked(&op.solve(hg.xi(p), &data[m][n])?);
                            axpy(&mut acc[m][n], Complex64::new(1.0, 0.0), &y);
                        }
                    }
                }
                Ok(group.iter().cloned().zip(acc).collect())
            })
            .collect::<Result<_>>()?;

        let u0 = HalfSpaceField::zeros(hg, vg, 3, Repr::Spectral);
        let h0 = SurfaceField::zeros(hg, Repr::Spectral);
        let mut raw = Raw {
            u: vec![u0; nt],
            h: vec![h0; nt],
        };
        for (p, acc) in results.into_iter().flatten() {
            let targets: Vec<(usize, bool)> = if self.real && hg.conj_index(p) != p {
                vec![(p, false), (hg.conj_index(p), true)]
            } else {
                vec![(p, false)]
            };
            for n in 1..nt {
                for &(q, cj) in &targets {
                    let f = |v: Complex64| if cj { v.conj() } else { v };
                    for c in 0..3 {
                        for iz in 0..nz {
                            raw.u[n].set(c, iz, q, f(acc[n][c * nz + iz]));
                        }
                    }
                    raw.h[n].data_mut()[q] = f(acc[n][3 * nz]);
                }
            }
        }
        Ok(raw)
    }

    fn finish(&self, raw: Raw, spectra: &Spectra, times: &[f64]) -> Result<LinearSolution> {
        let (hg, vg) = (self.hgrid, self.vgrid);
        let nz = vg.len();
        let top = nz - 1;
        let nt = times.len();
        let mut p_all = Vec::with_capacity(nt);
        let mut dt_h = Vec::with_capacity(nt);
        for n in 0..nt {
            let mut p = HalfSpaceField::zeros(hg, vg, 1, Repr::Spectral);
            let mut dh = SurfaceField::zeros(hg, Repr::Spectral);
            for q in 0..hg.len() {
                let u = [raw.u[n].column(0, q), raw.u[n].column(1, q), raw.u[n].column(2, q)];
                let d = spectra.mode_data(q, n, nz);
                let forcing = spectra.f.as_ref().map(|_| d.f.clone());
                let col = forced_pressure_mode(hg.xi(q), &u, raw.h[n].data()[q], forcing.as_ref(), d.stress[2], self.params, vg)?;
                p.set_column(0, q, &col);
                dh.data_mut()[q] = u[2][top] + d.k;
            }
            p_all.push(p);
            dt_h.push(dh);
        }
        let dt_u = time_derivative(&raw.u, times[1]);
        Ok(LinearSolution {
            times: times.to_vec(),
            u: raw.u,
            p: p_all,
            h: raw.h,
            dt_u: Some(dt_u),
            dt_h: Some(dt_h),
            provenance: Provenance::Duhamel,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::manufactured::trajectory;

    fn data(tr: &crate::linear::manufactured::Trajectory) -> DuhamelData<'_> {
        DuhamelData {
            f: Some(&tr.f),
            stress: Some(&tr.stress),
            k: Some(&tr.k),
        }
    }

    #[test]
    fn phi_series_matches_closed_form() {
        for z in [Complex64::new(0.24, 0.0), Complex64::new(-0.1, 0.2)] {
            let (a, b) = phis(z);
            let p1 = (z.exp() - 1.0) / z;
            assert!((a - p1).norm() < 1e-14);
            assert!((b - (p1 - 1.0) / z).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let tr = trajectory(0.1, 4);
        let (s, _) = duhamel_solve(&tr.params, &tr.hg, &tr.vg, &tr.times, &DuhamelData::default(), &DuhamelOptions::default()).unwrap();
        assert!(s.u.iter().all(|u| u.max_abs() == 0.0) && s.h.iter().all(|h| h.max_abs() == 0.0));
    }

    #[test]
    fn manufactured_trajectory_is_recovered() {
        let tr = trajectory(0.02, 50);
        let opts = DuhamelOptions {
            richardson: true,
            ..Default::default()
        };
        let (s, rep) = duhamel_solve(&tr.params, &tr.hg, &tr.vg, &tr.times, &data(&tr), &opts).unwrap();
        let n = tr.times.len() - 1;
        let mut d = s.u[n].physical();
        d.axpy(-1.0, &tr.exact.u[n]);
        let err = d.max_abs() / tr.exact.u[n].max_abs();
        let mut dh = s.h[n].physical();
        dh.axpy(-1.0, &tr.exact.h[n]);
        let herr = dh.max_abs() / tr.exact.h[n].max_abs();
        let mut dp = s.p[n].physical();
        dp.axpy(-1.0, &tr.exact.p[n]);
        let perr = dp.max_abs() / tr.exact.p[n].max_abs();
        let mut dd = s.dt_u.as_ref().unwrap()[n].physical();
        dd.axpy(-1.0, &tr.exact.dt_u.as_ref().unwrap()[n]);
        let derr = dd.max_abs() / tr.exact.dt_u.as_ref().unwrap()[n].max_abs();
        let est = rep.richardson_error.unwrap();
        assert!(est > 0.3 * err && est < 3.0 * err, "estimate {est:.2e} vs error {err:.2e}");
        assert!(err < 1e-4 && herr < 1e-4 && perr < 1e-4 && derr < 1e-4);
    }

    #[test]
    fn second_order_in_the_time_step() {
        let err = |tau: f64, steps: usize| {
            let tr = trajectory(tau, steps);
            let (s, _) = duhamel_solve(&tr.params, &tr.hg, &tr.vg, &tr.times, &data(&tr), &DuhamelOptions::default()).unwrap();
            let mut d = s.u[steps].physical();
            d.axpy(-1.0, &tr.exact.u[steps]);
            d.max_abs()
        };
        let ratio = err(0.1, 10) / err(0.05, 20);
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn superposition() {
        let tr = trajectory(0.1, 6);
        let opts = DuhamelOptions::default();
        let only_f = DuhamelData {
            f: Some(&tr.f),
            ..Default::default()
        };
        let rest = DuhamelData {
            stress: Some(&tr.stress),
            k: Some(&tr.k),
            ..Default::default()
        };
        let (a, _) = duhamel_solve(&tr.params, &tr.hg, &tr.vg, &tr.times, &only_f, &opts).unwrap();
        let (b, _) = duhamel_solve(&tr.params, &tr.hg, &tr.vg, &tr.times, &rest, &opts).unwrap();
        let (c, _) = duhamel_solve(&tr.params, &tr.hg, &tr.vg, &tr.times, &data(&tr), &opts).unwrap();
        for n in 1..tr.times.len() {
            let mut s = a.u[n].clone();
            s.axpy(1.0, &b.u[n]);
            s.axpy(-1.0, &c.u[n]);
            assert!(s.max_abs() <= 1e-10 * c.u[n].max_abs());
        }
    }

    #[test]
    fn coarse_steps_fail_the_richardson_check() {
        let tr = trajectory(0.5, 4);
        let opts = DuhamelOptions {
            richardson: true,
            tolerance: 1e-8,
            ..Default::default()
        };
        let r = duhamel_solve(&tr.params, &tr.hg, &tr.vg, &tr.times, &data(&tr), &opts);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }
}
