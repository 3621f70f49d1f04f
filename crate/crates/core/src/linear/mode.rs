//! Vertical boundary-value problem for one horizontal mode of the
//! resolvent system with free surface.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use super::PhysicalParams;
use crate::error::{invalid, Error, Result};
use crate::spectral::VerticalGrid;
use crate::symbols::Sector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Right-hand side of the mode problem. Profiles are sampled on the
/// vertical nodes; entries at the bottom node and the stress rows at the top
/// node are replaced by boundary conditions.
#[derive(Debug, Clone)]
pub struct ModeData {
    pub f: [Vec<Complex64>; 3],
    /// Divergence data; `None` means solenoidal.
    pub g: Option<Vec<Complex64>>,
    /// Stress data `T e3` at the surface.
    pub stress: [Complex64; 3],
    /// Kinematic data.
    pub k: Complex64,
}

impl ModeData {
    pub fn zeros(n: usize) -> Self {
        Self {
            f: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            g: None,
            stress: [ZERO; 3],
            k: ZERO,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().all(|c| c.iter().all(|v| *v == ZERO))
            && self.g.as_ref().is_none_or(|g| g.iter().all(|v| *v == ZERO))
            && self.stress.iter().all(|v| *v == ZERO)
            && self.k == ZERO
    }
}

#[derive(Debug, Clone)]
pub struct ModeProfile {
    pub xi: [f64; 2],
    pub u: [Vec<Complex64>; 3],
    pub p: Vec<Complex64>,
    pub h: Complex64,
    /// Relative residual of the assembled linear system.
    pub residual: f64,
    /// Ratio of extreme pivots of the factorisation.
    pub condition: f64,
}

/// Factorised operator for one `(|xi'|, lambda)`.
///
/// The system is solved in the frame `(e_r, e_p, e3)` with
/// `e_r = xi' / |xi'|`; the cross-stream component `e_p` decouples into a
/// scalar heat problem, so one factorisation serves every mode on a circle.
pub struct RadialOperator {
    a: f64,
    lambda: Complex64,
    params: PhysicalParams,
    vgrid: Arc<VerticalGrid>,
    kind: Kind,
}

enum Kind {
    General {
        main: LU<Complex64, Dyn, Dyn>,
        main_mat: DMatrix<Complex64>,
        perp: LU<Complex64, Dyn, Dyn>,
        perp_mat: DMatrix<Complex64>,
        cond: f64,
    },
    Zero {
        tang: LU<Complex64, Dyn, Dyn>,
        vert: LU<Complex64, Dyn, Dyn>,
        pres: LU<Complex64, Dyn, Dyn>,
    },
}

fn pivot_ratio(lu: &LU<Complex64, Dyn, Dyn>) -> f64 {
    let u = lu.u();
    let d: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let mx = d.iter().cloned().fold(0.0, f64::max);
    let mn = d.iter().cloned().fold(f64::INFINITY, f64::min);
    mx / mn
}

fn factor(mat: &DMatrix<Complex64>, what: &str) -> Result<(LU<Complex64, Dyn, Dyn>, f64)> {
    let lu = mat.clone().lu();
    let cond = pivot_ratio(&lu);
    if !cond.is_finite() || cond > 1e15 {
        return Err(Error::Numerical {
            msg: format!("singular {what}"),
            condition: Some(cond),
        });
    }
    Ok((lu, cond))
}

/// Solves `M x = b`, or `conj(M) x = b` when `conj` is set.
fn checked_solve(lu: &LU<Complex64, Dyn, Dyn>, mat: &DMatrix<Complex64>, b: &DVector<Complex64>, cond: f64, conj: bool) -> Result<(DVector<Complex64>, f64)> {
    let b = &if conj { b.map(|v| v.conj()) } else { b.clone() };
    let x = lu.solve(b).ok_or_else(|| Error::Numerical {
        msg: "mode system is singular".into(),
        condition: Some(cond),
    })?;
    let r = mat * &x - b;
    let scale = mat.iter().map(|v| v.norm()).fold(0.0, f64::max) * x.camax() + b.camax();
    let residual = if scale > 0.0 { r.camax() / scale } else { 0.0 };
    if residual > 1e-8 || !residual.is_finite() {
        return Err(Error::Numerical {
            msg: format!("mode residual {residual:.3e} exceeds 1e-8"),
            condition: Some(cond),
        });
    }
    Ok((if conj { x.map(|v| v.conj()) } else { x }, residual))
}

impl RadialOperator {
    pub fn new(a: f64, lambda: Complex64, params: &PhysicalParams, vgrid: &Arc<VerticalGrid>) -> Result<Self> {
        params.validate()?;
        if !(a.is_finite() && a >= 0.0) {
            return invalid(format!("invalid frequency radius {a}"));
        }
        if lambda.im == 0.0 && lambda.re <= -params.mu * a * a {
            return Err(Error::BranchCut {
                lambda: crate::error::Complex(lambda),
            });
        }
        if lambda == ZERO {
            return Err(Error::Domain("lambda = 0 is not in the resolvent set".into()));
        }
        let kind = if a == 0.0 {
            zero_mode(lambda, params, vgrid)
        } else {
            let main_mat = assemble_main(a, lambda, params, vgrid);
            let perp_mat = assemble_perp(a, lambda, params.mu, vgrid);
            let (main, c1) = factor(&main_mat, &format!("mode system at |xi| = {a}, lambda = {lambda}"))?;
            let (perp, c2) = factor(&perp_mat, &format!("cross-stream system at |xi| = {a}, lambda = {lambda}"))?;
            Kind::General {
                main,
                main_mat,
                perp,
                perp_mat,
                cond: c1.max(c2),
            }
        };
        Ok(Self {
            a,
            lambda,
            params: *params,
            vgrid: vgrid.clone(),
            kind,
        })
    }

    pub fn radius(&self) -> f64 {
        self.a
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// Solves for the mode `xi` with `|xi| = radius()`.
    pub fn solve(&self, xi: [f64; 2], data: &ModeData) -> Result<ModeProfile> {
        self.solve_with(xi, data, false)
    }

    /// Solves the system at `conj(lambda)` with the same factorisation:
    /// away from `lambda` every matrix entry is real.
    pub fn solve_conjugate(&self, xi: [f64; 2], data: &ModeData) -> Result<ModeProfile> {
        self.solve_with(xi, data, true)
    }

    fn solve_with(&self, xi: [f64; 2], data: &ModeData, conj: bool) -> Result<ModeProfile> {
        let n = self.vgrid.len();
        if data.f.iter().any(|c| c.len() != n) || data.g.as_ref().is_some_and(|g| g.len() != n) {
            return invalid("mode data does not match the vertical grid");
        }
        if (xi[0].hypot(xi[1]) - self.a).abs() > 1e-12 * (1.0 + self.a) {
            return invalid("mode does not lie on the factorised circle");
        }
        let lambda = if conj { self.lambda.conj() } else { self.lambda };
        match &self.kind {
            Kind::General {
                main,
                main_mat,
                perp,
                perp_mat,
                cond,
            } => {
                let top = n - 1;
                let (a, mu) = (self.a, self.params.mu);
                let ia = Complex64::new(0.0, a);
                let er = [xi[0] / a, xi[1] / a];
                let ep = [-er[1], er[0]];
                let fr: Vec<Complex64> = (0..n).map(|i| er[0] * data.f[0][i] + er[1] * data.f[1][i]).collect();
                let fp: Vec<Complex64> = (0..n).map(|i| ep[0] * data.f[0][i] + ep[1] * data.f[1][i]).collect();
                let hr = er[0] * data.stress[0] + er[1] * data.stress[1];
                let hp = ep[0] * data.stress[0] + ep[1] * data.stress[1];
                let zeros = vec![ZERO; n];
                let g = data.g.as_deref().unwrap_or(&zeros);
                let has_g = data.g.is_some();
                let (dg, d2g) = if has_g {
                    (self.vgrid.apply(self.vgrid.d1(), g), self.vgrid.apply(self.vgrid.d2(), g))
                } else {
                    (zeros.clone(), zeros.clone())
                };
                let mut b = DVector::from_element(2 * n + 1, ZERO);
                b[0] = g[0];
                for i in 1..top {
                    b[i] = ia * fr[i] - (lambda + mu * a * a) * g[i] + mu * d2g[i];
                    b[n + i] = data.f[2][i];
                }
                b[top] = ia * hr - mu * dg[top];
                b[n + top] = data.stress[2];
                b[2 * n] = data.k;
                let (x, r1) = checked_solve(main, main_mat, &b, *cond, conj)?;
                let mut bp = DVector::from_element(n, ZERO);
                for i in 1..top {
                    bp[i] = fp[i];
                }
                bp[top] = hp;
                let (up, r2) = checked_solve(perp, perp_mat, &bp, *cond, conj)?;
                let u3 = x.as_slice()[..n].to_vec();
                let du3 = self.vgrid.apply(self.vgrid.d1(), &u3);
                let ur: Vec<Complex64> = (0..n).map(|i| (g[i] - du3[i]) / ia).collect();
                let u = [
                    (0..n).map(|i| er[0] * ur[i] + ep[0] * up[i]).collect(),
                    (0..n).map(|i| er[1] * ur[i] + ep[1] * up[i]).collect(),
                    u3,
                ];
                Ok(ModeProfile {
                    xi,
                    u,
                    p: x.as_slice()[n..2 * n].to_vec(),
                    h: x[2 * n],
                    residual: r1.max(r2),
                    condition: *cond,
                })
            }
            Kind::Zero { tang, vert, pres } => self.solve_zero(xi, lambda, conj, data, tang, vert, pres),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn solve_zero(
        &self,
        xi: [f64; 2],
        lambda: Complex64,
        conj: bool,
        data: &ModeData,
        tang: &LU<Complex64, Dyn, Dyn>,
        vert: &LU<Complex64, Dyn, Dyn>,
        pres: &LU<Complex64, Dyn, Dyn>,
    ) -> Result<ModeProfile> {
        let n = self.vgrid.len();
        let top = n - 1;
        let mu = self.params.mu;
        let fail = || Error::Numerical {
            msg: "zero-mode system is singular".into(),
            condition: None,
        };
        let mut u = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
        for j in 0..2 {
            let mut b = DVector::from_vec(data.f[j].clone());
            b[0] = ZERO;
            b[top] = data.stress[j];
            let cj = |v: DVector<Complex64>| if conj { v.map(|x| x.conj()) } else { v };
            u[j] = cj(tang.solve(&cj(b)).ok_or_else(fail)?).as_slice().to_vec();
        }
        let mut b = DVector::from_element(n, ZERO);
        if let Some(g) = &data.g {
            for i in 1..n {
                b[i] = g[i];
            }
        }
        u[2] = vert.solve(&b).ok_or_else(fail)?.as_slice().to_vec();
        let h = (data.k + u[2][top]) / lambda;
        let d2u3 = self.vgrid.apply(self.vgrid.d2(), &u[2]);
        let d1u3 = self.vgrid.apply(self.vgrid.d1(), &u[2]);
        let mut b = DVector::from_element(n, ZERO);
        for i in 0..top {
            b[i] = data.f[2][i] - lambda * u[2][i] + mu * d2u3[i];
        }
        b[top] = data.stress[2] - 2.0 * mu * d1u3[top] - self.params.c_g * h;
        let p = pres.solve(&b).ok_or_else(fail)?.as_slice().to_vec();
        Ok(ModeProfile {
            xi,
            u,
            p,
            h,
            residual: 0.0,
            condition: 1.0,
        })
    }
}

fn zero_mode(lambda: Complex64, params: &PhysicalParams, vgrid: &Arc<VerticalGrid>) -> Kind {
    let n = vgrid.len();
    let top = n - 1;
    let (d1, d2) = (vgrid.d1(), vgrid.d2());
    let mu = params.mu;
    let mut tang = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..top {
        for m in 0..n {
            tang[(i, m)] = Complex64::new(-mu * d2[(i, m)], 0.0);
        }
        tang[(i, i)] += lambda;
    }
    tang[(0, 0)] = Complex64::new(1.0, 0.0);
    for m in 0..n {
        tang[(top, m)] = Complex64::new(mu * d1[(top, m)], 0.0);
    }
    // vertical velocity: d3 u3 = g above the bottom, u3 = 0 at the bottom
    let mut vert = DMatrix::<Complex64>::zeros(n, n);
    vert[(0, 0)] = Complex64::new(1.0, 0.0);
    for i in 1..n {
        for m in 0..n {
            vert[(i, m)] = Complex64::new(d1[(i, m)], 0.0);
        }
    }
    // pressure: d3 p given below the top, value at the top
    let mut pres = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..top {
        for m in 0..n {
            pres[(i, m)] = Complex64::new(d1[(i, m)], 0.0);
        }
    }
    pres[(top, top)] = Complex64::new(-1.0, 0.0);
    Kind::Zero {
        tang: tang.lu(),
        vert: vert.lu(),
        pres: pres.lu(),
    }
}

/// Rotated system with unknowns `[U3, P, H]`. The divergence holds at every
/// node, so `U_r = (g - d3 U3) / (i A)` is eliminated; the radial momentum
/// and tangential stress rows are multiplied by `i A`.
fn assemble_main(a: f64, lambda: Complex64, params: &PhysicalParams, vgrid: &VerticalGrid) -> DMatrix<Complex64> {
    let n = vgrid.len();
    let top = n - 1;
    let (d1, d2) = (vgrid.d1(), vgrid.d2());
    let d21 = d2 * d1;
    let d11 = d1 * d1;
    let mu = params.mu;
    let diag = lambda + mu * a * a;
    let re = |v: f64| Complex64::new(v, 0.0);
    let mut m = DMatrix::<Complex64>::zeros(2 * n + 1, 2 * n + 1);
    for c in 0..n {
        m[(0, c)] = re(d1[(0, c)]);
    }
    for i in 1..top {
        for c in 0..n {
            m[(i, c)] = -diag * d1[(i, c)] + mu * d21[(i, c)];
            m[(n + i, c)] = re(-mu * d2[(i, c)]);
            m[(n + i, n + c)] = re(d1[(i, c)]);
        }
        m[(i, n + i)] = re(-a * a);
        m[(n + i, i)] += diag;
    }
    for c in 0..n {
        m[(top, c)] = re(-mu * d11[(top, c)]);
        m[(n + top, c)] = re(2.0 * mu * d1[(top, c)]);
    }
    m[(top, top)] -= mu * a * a;
    m[(n, 0)] = re(1.0);
    m[(n + top, n + top)] = re(-1.0);
    m[(n + top, 2 * n)] = re(params.gamma(a));
    m[(2 * n, 2 * n)] = lambda;
    m[(2 * n, top)] = re(-1.0);
    m
}

fn assemble_perp(a: f64, lambda: Complex64, mu: f64, vgrid: &VerticalGrid) -> DMatrix<Complex64> {
    let n = vgrid.len();
    let top = n - 1;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..top {
        for c in 0..n {
            m[(i, c)] = Complex64::new(-mu * vgrid.d2()[(i, c)], 0.0);
        }
        m[(i, i)] += lambda + mu * a * a;
    }
    m[(0, 0)] = Complex64::new(1.0, 0.0);
    for c in 0..n {
        m[(top, c)] = Complex64::new(mu * vgrid.d1()[(top, c)], 0.0);
    }
    m
}

/// Resolvent operator for a single mode `xi'`.
pub struct ModeOperator {
    xi: [f64; 2],
    radial: RadialOperator,
}

impl ModeOperator {
    pub fn new(xi: [f64; 2], lambda: Complex64, params: &PhysicalParams, vgrid: &Arc<VerticalGrid>) -> Result<Self> {
        Ok(Self {
            xi,
            radial: RadialOperator::new(xi[0].hypot(xi[1]), lambda, params, vgrid)?,
        })
    }

    /// Resolvent operator restricted to the sector.
    pub fn in_sector(xi: [f64; 2], lambda: Complex64, sector: &Sector, params: &PhysicalParams, vgrid: &Arc<VerticalGrid>) -> Result<Self> {
        if !sector.contains(lambda) {
            return Err(Error::Domain(format!("lambda = {lambda} lies outside the sector")));
        }
        Self::new(xi, lambda, params, vgrid)
    }

    pub fn lambda(&self) -> Complex64 {
        self.radial.lambda
    }

    pub fn xi(&self) -> [f64; 2] {
        self.xi
    }

    pub fn solve(&self, data: &ModeData) -> Result<ModeProfile> {
        self.radial.solve(self.xi, data)
    }
}

/// Dense matrix of the unrotated mode system for `|xi'| > 0`. Unknowns are
/// `[U1, U2, U3, P, H]`; rows are momentum (interior), no-slip (bottom),
/// stress (top), divergence (all nodes) and the kinematic condition.
pub fn assemble(xi: [f64; 2], lambda: Complex64, params: &PhysicalParams, vgrid: &VerticalGrid) -> DMatrix<Complex64> {
    let n = vgrid.len();
    let top = n - 1;
    let dim = 4 * n + 1;
    let (d1, d2) = (vgrid.d1(), vgrid.d2());
    let mu = params.mu;
    let a2 = xi[0] * xi[0] + xi[1] * xi[1];
    let ixi = [Complex64::new(0.0, xi[0]), Complex64::new(0.0, xi[1])];
    let gamma = params.c_g + params.c_sigma * a2;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let diag = lambda + mu * a2;
    for j in 0..3 {
        let r0 = j * n;
        for i in 1..top {
            for c in 0..n {
                m[(r0 + i, r0 + c)] = Complex64::new(-mu * d2[(i, c)], 0.0);
            }
            m[(r0 + i, r0 + i)] += diag;
            if j < 2 {
                m[(r0 + i, 3 * n + i)] = ixi[j];
            } else {
                for c in 0..n {
                    m[(r0 + i, 3 * n + c)] = Complex64::new(d1[(i, c)], 0.0);
                }
            }
        }
        m[(r0, r0)] = Complex64::new(1.0, 0.0);
    }
    for j in 0..2 {
        let r = j * n + top;
        for c in 0..n {
            m[(r, j * n + c)] = Complex64::new(mu * d1[(top, c)], 0.0);
        }
        m[(r, 2 * n + top)] = mu * ixi[j];
    }
    let r = 2 * n + top;
    for c in 0..n {
        m[(r, 2 * n + c)] = Complex64::new(2.0 * mu * d1[(top, c)], 0.0);
    }
    m[(r, 3 * n + top)] = Complex64::new(-1.0, 0.0);
    m[(r, 4 * n)] = Complex64::new(gamma, 0.0);
    for i in 0..n {
        let r = 3 * n + i;
        m[(r, i)] = ixi[0];
        m[(r, n + i)] = ixi[1];
        for c in 0..n {
            m[(r, 2 * n + c)] = Complex64::new(d1[(i, c)], 0.0);
        }
    }
    m[(4 * n, 4 * n)] = lambda;
    m[(4 * n, 2 * n + top)] = Complex64::new(-1.0, 0.0);
    m
}

/// Right-hand side matching [`assemble`].
pub fn assemble_rhs(data: &ModeData) -> DVector<Complex64> {
    let n = data.f[0].len();
    let top = n - 1;
    let mut b = DVector::from_element(4 * n + 1, ZERO);
    for j in 0..3 {
        for i in 1..top {
            b[j * n + i] = data.f[j][i];
        }
        b[j * n + top] = data.stress[j];
    }
    if let Some(g) = &data.g {
        for i in 0..n {
            b[3 * n + i] = g[i];
        }
    }
    b[4 * n] = data.k;
    b
}

/// Solves the resolvent problem for one mode.
pub fn solve_resolvent_mode(
    xi: [f64; 2],
    lambda: Complex64,
    data: &ModeData,
    params: &PhysicalParams,
    sector: &Sector,
    vgrid: &Arc<VerticalGrid>,
) -> Result<ModeProfile> {
    ModeOperator::in_sector(xi, lambda, sector, params, vgrid)?.solve(data)
}
