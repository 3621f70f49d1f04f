use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::StateZ;
use crate::error::{invalid, Result};
use crate::linear::{evolve_semigroup, LinearSolution, PhysicalParams, SemigroupOptions};
use crate::spectral::{HalfSpaceField, Repr, SurfaceField};

/// Initial flow `z* = (u* + w*, q*, h*)`.
#[derive(Debug, Clone)]
pub struct InitialFlow {
    pub z: StateZ,
    /// Free-surface Stokes flow from `(0, h0)`.
    pub u: LinearSolution,
    /// Damped heat flow from `v0`, and its time derivative.
    pub w: Vec<HalfSpaceField>,
    pub dt_w: Vec<HalfSpaceField>,
}

/// `d_t w + w - mu Lap w = 0` from `w(0) = v0`, per component.
///
/// The column is closed by `D3 w = 0` at the surface, which is the even
/// reflection of the whole-space flow, and `w = 0` at the truncation depth.
/// The surface value is eliminated through the Neumann row and the interior
/// system is propagated by a matrix exponential; every horizontal mode
/// shares it up to the factor `e^{-(1 + mu |xi|^2) t}`.
pub fn damped_heat(v0: &HalfSpaceField, mu: f64, times: &[f64]) -> Result<(Vec<HalfSpaceField>, Vec<HalfSpaceField>)> {
    if !(mu.is_finite() && mu > 0.0) {
        return invalid(format!("viscosity must be positive, got {mu}"));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return invalid("output times must be finite and non-negative");
    }
    let (hg, vg) = (v0.hgrid(), v0.vgrid());
    let nz = vg.len();
    let top = nz - 1;
    let m = nz - 2;
    let (d1, d2) = (vg.d1(), vg.d2());
    // w_top = sum_j beta_j w_j over interior nodes
    let beta: Vec<f64> = (1..top).map(|j| -d1[(top, j)] / d1[(top, top)]).collect();
    let k = DMatrix::from_fn(m, m, |i, j| mu * (d2[(i + 1, j + 1)] + d2[(i + 1, top)] * beta[j]));
    let s = v0.spectral();
    let comps = v0.comps();
    let np = hg.len();
    let close = |col: &DVector<Complex64>| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); nz];
        out[1..top].copy_from_slice(col.as_slice());
        out[top] = col.iter().zip(&beta).map(|(v, b)| v * b).sum();
        out
    };
    let cols: Vec<Vec<DVector<Complex64>>> = (0..comps)
        .map(|c| (0..np).map(|p| DVector::from_iterator(m, s.column(c, p)[1..top].iter().cloned())).collect())
        .collect();
    let kc = k.map(|v| Complex64::new(v, 0.0));
    let mut w = vec![];
    let mut dt_w = vec![];
    for &t in times {
        let e = (k.scale(t)).exp().map(|v| Complex64::new(v, 0.0));
        let mut wf = HalfSpaceField::zeros(hg, vg, comps, Repr::Spectral);
        let mut df = wf.clone();
        for (c, per_mode) in cols.iter().enumerate() {
            for (p, col) in per_mode.iter().enumerate() {
                if col.iter().all(|v| v.norm() == 0.0) {
                    continue;
                }
                let shift = 1.0 + mu * hg.abs_xi(p).powi(2);
                let x = (&e * col).scale((-shift * t).exp());
                let dx = &kc * &x - x.scale(shift);
                wf.set_column(c, p, &close(&x));
                df.set_column(c, p, &close(&dx));
            }
        }
        w.push(wf);
        dt_w.push(df);
    }
    Ok((w, dt_w))
}

/// Builds the initial flow: the semigroup from `(0, h0)` plus the damped
/// heat flow from `v0`. Pressure and height come from the semigroup part.
pub fn initial_flow(
    v0: &HalfSpaceField,
    h0: &SurfaceField,
    params: &PhysicalParams,
    times: &[f64],
    opts: &SemigroupOptions,
) -> Result<InitialFlow> {
    params.validate()?;
    if v0.comps() != 3 {
        return invalid("initial velocity must be a vector field");
    }
    let u = evolve_semigroup(params, None, h0, v0.vgrid(), times, opts)?;
    let (w, dt_w) = damped_heat(v0, params.mu, times)?;
    let (Some(du), Some(dh)) = (&u.dt_u, &u.dt_h) else {
        return invalid("the semigroup route did not return time derivatives");
    };
    let sum = |a: &[HalfSpaceField], b: &[HalfSpaceField]| -> Vec<HalfSpaceField> {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let mut s = x.spectral();
                s.axpy(1.0, y);
                s
            })
            .collect()
    };
    let z = StateZ::new(
        times.to_vec(),
        sum(&u.u, &w),
        u.p.clone(),
        u.h.clone(),
        Some(sum(du, &dt_w)),
        Some(dh.clone()),
    )?;
    Ok(InitialFlow { z, u, w, dt_w })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::spectral::{HorizontalGrid, VerticalGrid, VerticalScheme};

    fn grids() -> (Arc<HorizontalGrid>, Arc<VerticalGrid>) {
        (
            HorizontalGrid::new(8, 2.0 * PI).unwrap(),
            VerticalGrid::new(VerticalScheme::Chebyshev, 32, 12.0).unwrap(),
        )
    }

    #[test]
    fn zero_data_gives_zero_flow() {
        let (hg, vg) = grids();
        let f = initial_flow(
            &HalfSpaceField::zeros(&hg, &vg, 3, Repr::Physical),
            &SurfaceField::zeros(&hg, Repr::Physical),
            &PhysicalParams::default(),
            &[0.0, 0.5, 1.0],
            &SemigroupOptions::boundary_formula(),
        )
        .unwrap();
        for n in 0..3 {
            assert_eq!(f.z.v[n].max_abs(), 0.0);
            assert_eq!(f.z.h[n].max_abs(), 0.0);
        }
    }

    #[test]
    fn velocity_data_only_drives_the_heat_flow() {
        let (hg, vg) = grids();
        let v0 = HalfSpaceField::from_fn(&hg, &vg, 3, |c, x| (x[0] + c as f64).cos() * (0.7 * x[2]).exp());
        let times = [0.0, 0.5, 1.0];
        let f = initial_flow(&v0, &SurfaceField::zeros(&hg, Repr::Physical), &PhysicalParams::default(), &times, &SemigroupOptions::boundary_formula()).unwrap();
        let (w, _) = damped_heat(&v0, 1.0, &times).unwrap();
        for n in 0..3 {
            assert_eq!(f.u.u[n].max_abs(), 0.0);
            let mut d = f.z.v[n].clone();
            d.axpy(-1.0, &w[n]);
            assert!(d.max_abs() < 1e-14);
        }
    }

    #[test]
    fn single_mode_heat_flow_decays_at_the_scalar_rate() {
        // |xi| = 0.8, vertical wavenumber 0.6 with a node at the bottom and a
        // crest at the surface: rate 1 + 0.64 + 0.36 = 2
        let hg = HorizontalGrid::new(8, 2.0 * PI / 0.8).unwrap();
        let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 32, PI / 1.2).unwrap();
        let v0 = HalfSpaceField::from_fn(&hg, &vg, 3, |_, x| (0.8 * x[0]).cos() * (0.6 * x[2]).cos());
        let times: Vec<f64> = (0..=8).map(|k| 0.25 * k as f64).collect();
        let (w, dt_w) = damped_heat(&v0, 1.0, &times).unwrap();
        let n0 = v0.lp_norm(2.0);
        for (n, &t) in times.iter().enumerate() {
            let want = (-2.0 * t).exp() * n0;
            assert!((w[n].lp_norm(2.0) - want).abs() < 1e-9 * n0, "t={t}");
            assert!((dt_w[n].lp_norm(2.0) - 2.0 * want).abs() < 1e-7 * n0, "t={t}");
        }
    }

    #[test]
    fn heat_flow_decays_exponentially() {
        let (hg, vg) = grids();
        let v0 = HalfSpaceField::from_fn(&hg, &vg, 3, |c, x| (1.0 + (x[1] + c as f64).sin()) * (-0.1 * x[2] * x[2]).exp());
        let times: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
        let (w, _) = damped_heat(&v0, 0.5, &times).unwrap();
        let pts: Vec<(f64, f64)> = times.iter().zip(&w).map(|(t, w)| (*t, w.lp_norm(2.0).ln())).collect();
        let n = pts.len() as f64;
        let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mt, my) = (st / n, sy / n);
        let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
        let gamma = -slope;
        // the zero mode decays at least at the damping rate 1
        assert!(gamma >= 1.0 - 1e-6, "gamma = {gamma}");
    }
}
