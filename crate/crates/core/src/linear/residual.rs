use num_complex::Complex64;

use super::duhamel::BoundaryData;
use super::{LinearSolution, PhysicalParams};
use crate::error::{invalid, Result};
use crate::spectral::{HalfSpaceField, SurfaceField};

/// Right-hand sides of the linear problem at the solution's time levels;
/// missing parts are zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearData<'a> {
    pub f: Option<&'a [HalfSpaceField]>,
    pub g: Option<&'a [HalfSpaceField]>,
    pub stress: Option<&'a BoundaryData>,
    pub k: Option<&'a [SurfaceField]>,
}

/// Discrete `L2` norms of each equation, maximised over time levels.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualReport {
    /// `dt u - mu Lap u + grad p - f` at interior nodes.
    pub momentum: f64,
    /// `div u - g` at every node.
    pub divergence: f64,
    /// Surface stress rows.
    pub stress: f64,
    /// `dt h - u3 - k` on the surface.
    pub kinematic: f64,
    /// `u` at the bottom of the column.
    pub no_slip: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        [self.momentum, self.divergence, self.stress, self.kinematic, self.no_slip]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Residual of every equation row of the linear free-surface problem.
/// Needs the time derivatives of `u` and `h`.
pub fn residual(sol: &LinearSolution, data: &LinearData, params: &PhysicalParams) -> Result<ResidualReport> {
    let (Some(dt_u), Some(dt_h)) = (&sol.dt_u, &sol.dt_h) else {
        return invalid("the residual needs the time derivatives of the solution");
    };
    let nt = sol.times.len();
    let lens_ok = data.f.is_none_or(|f| f.len() == nt)
        && data.g.is_none_or(|g| g.len() == nt)
        && data.stress.is_none_or(|s| s.h.len() == nt)
        && data.k.is_none_or(|k| k.len() == nt);
    if !lens_ok || sol.u.len() != nt || sol.p.len() != nt || sol.h.len() != nt {
        return invalid("data and solution have different numbers of time levels");
    }
    let mut rep = ResidualReport::default();
    for n in 0..nt {
        let u = sol.u[n].spectral();
        let p = sol.p[n].spectral();
        let h = sol.h[n].spectral();
        let du = dt_u[n].spectral();
        let dh = dt_h[n].spectral();
        let hg = u.hgrid().clone();
        let vg = u.vgrid().clone();
        let nz = vg.len();
        let top = nz - 1;
        let mu = params.mu;
        let f = data.f.map(|f| f[n].spectral());
        let g = data.g.map(|g| g[n].spectral());
        let st = data.stress.map(|s| [s.h[n][0].spectral(), s.h[n][1].spectral(), s.h[n][2].spectral()]);
        let k = data.k.map(|k| k[n].spectral());
        let area = hg.box_len() * hg.box_len();
        let (mut mom, mut div, mut stress, mut kin, mut slip) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for q in 0..hg.len() {
            let a2 = hg.abs_xi(q).powi(2);
            let ixi = [hg.ixi(q, 0), hg.ixi(q, 1)];
            let cols: [Vec<Complex64>; 3] = std::array::from_fn(|c| u.column(c, q));
            let pc = p.column(0, q);
            let d1 = |v: &[Complex64]| vg.apply(vg.d1(), v);
            let d2 = |v: &[Complex64]| vg.apply(vg.d2(), v);
            let dp = d1(&pc);
            let du3 = d1(&cols[2]);
            let mut row = vec![0.0; nz];
            for c in 0..3 {
                let lap = d2(&cols[c]);
                let dtc = du.column(c, q);
                let fc = f.as_ref().map(|f| f.column(c, q));
                for i in 1..top {
                    let grad = if c < 2 { ixi[c] * pc[i] } else { dp[i] };
                    let mut r = dtc[i] - mu * (lap[i] - a2 * cols[c][i]) + grad;
                    if let Some(fc) = &fc {
                        r -= fc[i];
                    }
                    row[i] += r.norm_sqr();
                }
                slip += cols[c][0].norm_sqr() * area;
            }
            mom += area * vg.integrate(&row);
            let gc = g.as_ref().map(|g| g.column(0, q));
            let drow: Vec<f64> = (0..nz)
                .map(|i| {
                    let mut r = ixi[0] * cols[0][i] + ixi[1] * cols[1][i] + du3[i];
                    if let Some(gc) = &gc {
                        r -= gc[i];
                    }
                    r.norm_sqr()
                })
                .collect();
            div += area * vg.integrate(&drow);
            let s = |c: usize| st.as_ref().map_or(Complex64::default(), |s| s[c].data()[q]);
            for j in 0..2 {
                let dj = d1(&cols[j]);
                let r = mu * (dj[top] + ixi[j] * cols[2][top]) - s(j);
                stress += area * r.norm_sqr();
            }
            let r = 2.0 * mu * du3[top] - pc[top] + params.gamma(a2.sqrt()) * h.data()[q] - s(2);
            stress += area * r.norm_sqr();
            let kq = k.as_ref().map_or(Complex64::default(), |k| k.data()[q]);
            kin += area * (dh.data()[q] - cols[2][top] - kq).norm_sqr();
        }
        rep.momentum = rep.momentum.max(mom.sqrt());
        rep.divergence = rep.divergence.max(div.sqrt());
        rep.stress = rep.stress.max(stress.sqrt());
        rep.kinematic = rep.kinematic.max(kin.sqrt());
        rep.no_slip = rep.no_slip.max(slip.sqrt());
    }
    Ok(rep)
}
