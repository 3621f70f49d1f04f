
use super::initial::{initial_flow, InitialFlow};
use super::terms::{assemble_nonlinear, kinematic_term, NonlinearTerms};
use super::{check_compatibility, divergence, viscous_traction, StateZ};
use crate::analysis::{weighted_norms, ExponentConfig, WeightConfig};
use crate::error::{invalid, Error, Result};
use crate::geometry::{harmonic_extension, HeightState, DEFAULT_C0};
use crate::linear::duhamel::time_derivative;
use crate::linear::{
    duhamel_solve, residual, solve_divergence, BoundaryData, DuhamelData, DuhamelOptions, LinearData, LinearSolution, PhysicalParams,
    Provenance, SemigroupOptions,
};
use crate::spectral::{HalfSpaceField, SurfaceField};

#[derive(Debug, Clone)]
pub struct PicardOptions {
    /// Time horizon `T`.
    pub horizon: f64,
    /// Uniform time step.
    pub tau: f64,
    /// Stop once `||z_k - z_{k-1}||_X <= tol ||z*||_X`.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest accepted `max(||v0||_inf, ||h0||_inf)`.
    pub smallness: f64,
    /// Radius of the ball for the iterates, relative to `||z*||_X`.
    pub ball_factor: f64,
    /// Compatibility tolerance on the initial data.
    pub compat_tol: f64,
    pub c0: f64,
    pub exponents: ExponentConfig,
    pub weights: WeightConfig,
    pub duhamel: DuhamelOptions,
    pub semigroup: SemigroupOptions,
}

impl Default for PicardOptions {
    fn default() -> Self {
        let exponents = ExponentConfig::default();
        Self {
            horizon: 5.0,
            tau: 0.05,
            tol: 1e-6,
            max_iter: 12,
            smallness: 1e-3,
            ball_factor: 2.0,
            compat_tol: 1e-6,
            c0: DEFAULT_C0,
            weights: WeightConfig::standard(exponents.q),
            exponents,
            duhamel: DuhamelOptions::default(),
            semigroup: SemigroupOptions::boundary_formula(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardIterate {
    pub index: usize,
    /// `||z_k||_X` of the correction to the initial flow.
    pub norm: f64,
    /// `||z_k - z_{k-1}||_X`.
    pub diff: f64,
    /// `diff_k / diff_{k-1}`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterations: Vec<PicardIterate>,
    /// `max(||v0||_inf, ||h0||_inf)`.
    pub data_amplitude: f64,
    /// `||z*||_X` of the initial flow.
    pub initial_norm: f64,
    pub ball_radius: f64,
    pub in_ball: bool,
    pub converged: bool,
    /// Residual rows of the full system at the final state over `(0, T]`.
    pub residual_momentum: f64,
    pub residual_divergence: f64,
    pub residual_stress: f64,
    pub residual_kinematic: f64,
    pub residual_no_slip: f64,
    /// Largest of the momentum, divergence, stress and kinematic rows
    /// divided by `||z*||_X`.
    pub relative_residual: f64,
}

impl PicardReport {
    pub fn diffs(&self) -> Vec<f64> {
        self.iterations.iter().map(|i| i.diff).collect()
    }

    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.iterations.iter().filter_map(|i| i.ratio).collect()
    }
}

/// Correction `(v, q, h)` to the initial flow with its time derivatives.
#[derive(Clone)]
struct Correction {
    v: Vec<HalfSpaceField>,
    q: Vec<HalfSpaceField>,
    h: Vec<SurfaceField>,
    dt_v: Vec<HalfSpaceField>,
    dt_h: Vec<SurfaceField>,
}

impl Correction {
    fn zeros(z: &StateZ) -> Self {
        let zero = StateZ::zeros(z.v[0].hgrid(), z.v[0].vgrid(), &z.times);
        Self {
            v: zero.v,
            q: zero.q,
            h: zero.h,
            dt_v: zero.dt_v.expect("zeros carry derivatives"),
            dt_h: zero.dt_h.expect("zeros carry derivatives"),
        }
    }

    fn state(&self, times: &[f64]) -> Result<StateZ> {
        StateZ::new(times.to_vec(), self.v.clone(), self.q.clone(), self.h.clone(), Some(self.dt_v.clone()), Some(self.dt_h.clone()))
    }

    fn minus(&self, other: &Self) -> Self {
        fn d<T: Clone>(a: &[T], b: &[T], f: impl Fn(&T, &T) -> T) -> Vec<T> {
            a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
        }
        let hs = |x: &HalfSpaceField, y: &HalfSpaceField| {
            let mut s = x.spectral();
            s.axpy(-1.0, &y.spectral());
            s
        };
        let sf = |x: &SurfaceField, y: &SurfaceField| {
            let mut s = x.spectral();
            s.axpy(-1.0, &y.spectral());
            s
        };
        Self {
            v: d(&self.v, &other.v, hs),
            q: d(&self.q, &other.q, hs),
            h: d(&self.h, &other.h, sf),
            dt_v: d(&self.dt_v, &other.dt_v, hs),
            dt_h: d(&self.dt_h, &other.dt_h, sf),
        }
    }
}

fn plus(a: &HalfSpaceField, b: &HalfSpaceField) -> HalfSpaceField {
    let mut s = a.spectral();
    s.axpy(1.0, &b.spectral());
    s
}

fn plus_s(a: &SurfaceField, b: &SurfaceField) -> SurfaceField {
    let mut s = a.spectral();
    s.axpy(1.0, &b.spectral());
    s
}

/// Sum of `mu D_jj` over `j` applied to every component, and `mu grad f`.
fn laplacian(v: &HalfSpaceField) -> HalfSpaceField {
    let parts: Vec<HalfSpaceField> = (0..v.comps())
        .map(|c| {
            let d = v.derivatives(c);
            let mut l = d.hess[0][0].clone();
            l.axpy(1.0, &d.hess[1][1]);
            l.axpy(1.0, &d.hess[2][2]);
            l
        })
        .collect();
    HalfSpaceField::stack(&parts).expect("components share a grid")
}

fn gradient(f: &HalfSpaceField) -> HalfSpaceField {
    let s = f.spectral();
    HalfSpaceField::stack(&[s.derivative(0, 0), s.derivative(0, 1), s.derivative(0, 2)]).expect("components share a grid")
}

struct Map<'a> {
    params: &'a PhysicalParams,
    opts: &'a PicardOptions,
    star: &'a InitialFlow,
    /// `d_t v*`, with the one-sided difference at `t = 0` where the
    /// semigroup has an initial layer.
    dt_star: Vec<HalfSpaceField>,
}

impl Map<'_> {
    fn times(&self) -> &[f64] {
        &self.star.z.times
    }

    /// Total velocity, height state with `d_t eta` from the kinematic
    /// relation, and the assembled terms at sample `n`.
    fn terms(&self, bar: &Correction, n: usize) -> Result<(HalfSpaceField, NonlinearTerms)> {
        let z = &self.star.z;
        let v = plus(&z.v[n], &bar.v[n]);
        let h = plus_s(&z.h[n], &bar.h[n]);
        let mut height = HeightState::new(&h, None, v.vgrid(), self.opts.c0)?;
        let k = kinematic_term(&v, &height)?;
        let dt_h = plus_s(&v.trace(2), &k);
        height.dt_eta = Some(harmonic_extension(&dt_h, v.vgrid()));
        let dt_v3 = plus(&self.dt_star[n], &bar.dt_v[n]).component(2);
        let terms = assemble_nonlinear(&v, &dt_v3, &height, self.params)?;
        Ok((v, terms))
    }

    fn apply(&self, bar: &Correction) -> Result<Correction> {
        let (hg, vg) = (self.star.z.v[0].hgrid().clone(), self.star.z.v[0].vgrid().clone());
        let times = self.times().to_vec();
        let mu = self.params.mu;
        let (w, nt) = (&self.star.w, times.len());
        let mut f = Vec::with_capacity(nt);
        let mut d = Vec::with_capacity(nt);
        let mut stress = Vec::with_capacity(nt);
        let mut k = Vec::with_capacity(nt);
        for n in 0..nt {
            let (_, t) = self.terms(bar, n)?;
            let div_w = divergence(&w[n]);
            let mut sf = t.f().spectral();
            sf.axpy(1.0, &w[n].spectral());
            sf.axpy(mu, &gradient(&div_w));
            let mut sg = t.g.spectral();
            sg.axpy(-1.0, &div_w);
            let tw = viscous_traction(&w[n], mu);
            let sh: [SurfaceField; 3] = std::array::from_fn(|j| {
                let mut s = t.h[j].spectral();
                s.axpy(-1.0, &tw[j]);
                s
            });
            let sk = plus_s(&t.k, &w[n].trace(2));
            let dn = solve_divergence(&sg)?;
            // f~ = SF + mu Lap d + mu grad div d; d_t d is added below
            sf.axpy(mu, &laplacian(&dn).spectral());
            sf.axpy(mu, &gradient(&divergence(&dn)));
            let td = viscous_traction(&dn, mu);
            stress.push(std::array::from_fn(|j| {
                let mut s = sh[j].clone();
                s.axpy(-1.0, &td[j]);
                s
            }));
            k.push(plus_s(&sk, &dn.trace(2)));
            f.push(sf);
            d.push(dn);
        }
        let dt_d = time_derivative(&d, self.opts.tau);
        for (f, dd) in f.iter_mut().zip(&dt_d) {
            f.axpy(-1.0, dd);
        }
        let stress = BoundaryData { times: times.clone(), h: stress };
        let data = DuhamelData {
            f: Some(&f),
            stress: Some(&stress),
            k: Some(&k),
        };
        let (sol, _) = duhamel_solve(self.params, &hg, &vg, &times, &data, &self.opts.duhamel)?;
        let (Some(du), Some(dh)) = (sol.dt_u, sol.dt_h) else {
            return invalid("the Duhamel route did not return time derivatives");
        };
        Ok(Correction {
            v: sol.u.iter().zip(&d).map(|(u, d)| plus(u, d)).collect(),
            q: sol.p,
            h: sol.h,
            dt_v: du.iter().zip(&dt_d).map(|(u, d)| plus(u, d)).collect(),
            dt_h: dh,
        })
    }

    /// Residual of the full transformed system at `z* + bar` over `(0, T]`.
    fn residual(&self, bar: &Correction) -> Result<crate::linear::ResidualReport> {
        let z = &self.star.z;
        let nt = self.times().len();
        let dt_hs = z.dt_h.as_ref().expect("initial flow carries derivatives");
        let mu = self.params.mu;
        let mut sol = LinearSolution {
            times: self.times()[1..].to_vec(),
            u: vec![],
            p: vec![],
            h: vec![],
            dt_u: Some(vec![]),
            dt_h: Some(vec![]),
            provenance: Provenance::Duhamel,
        };
        let (mut f, mut g, mut st, mut k) = (vec![], vec![], vec![], vec![]);
        for n in 1..nt {
            let v = plus(&z.v[n], &bar.v[n]);
            let h = plus_s(&z.h[n], &bar.h[n]);
            let dt_h = plus_s(&dt_hs[n], &bar.dt_h[n]);
            let dt_v = plus(&self.dt_star[n], &bar.dt_v[n]);
            let height = HeightState::new(&h, Some(&dt_h), v.vgrid(), self.opts.c0)?;
            let t = assemble_nonlinear(&v, &dt_v.component(2), &height, self.params)?;
            let mut fn_ = t.f().spectral();
            fn_.axpy(mu, &gradient(&divergence(&v)));
            f.push(fn_);
            g.push(t.g.clone());
            st.push(t.h.clone());
            k.push(t.k.clone());
            sol.u.push(v);
            sol.p.push(plus(&z.q[n], &bar.q[n]));
            sol.h.push(h);
            sol.dt_u.as_mut().unwrap().push(dt_v);
            sol.dt_h.as_mut().unwrap().push(dt_h);
        }
        let stress = BoundaryData { times: sol.times.clone(), h: st };
        residual(
            &sol,
            &LinearData {
                f: Some(&f),
                g: Some(&g),
                stress: Some(&stress),
                k: Some(&k),
            },
            self.params,
        )
    }
}

fn x_norm(c: &Correction, times: &[f64], opts: &PicardOptions) -> Result<f64> {
    Ok(weighted_norms(&c.state(times)?, &opts.exponents, &opts.weights)?.x_norm)
}

/// Fixed-point iteration for the correction `z = z_total - z*` to the
/// initial flow on `[0, T]`. Each step evaluates the shifted right-hand
/// sides at the previous iterate, removes the divergence with the
/// corrector and solves the remaining linear problem by Duhamel's formula.
pub fn picard_solve(
    v0: &HalfSpaceField,
    h0: &SurfaceField,
    params: &PhysicalParams,
    opts: &PicardOptions,
) -> Result<(StateZ, PicardReport)> {
    params.validate()?;
    if !(opts.horizon > 0.0 && opts.tau > 0.0 && opts.tau <= opts.horizon) {
        return invalid("the horizon and time step must be positive with tau <= T");
    }
    let steps = (opts.horizon / opts.tau).round() as usize;
    if ((steps as f64) * opts.tau - opts.horizon).abs() > 1e-9 * opts.horizon || steps < 2 {
        return invalid("the horizon must be an integer multiple (at least 2) of the time step");
    }
    let amplitude = v0.max_abs().max(h0.max_abs());
    if amplitude > opts.smallness * (1.0 + 1e-9) {
        return invalid(format!(
            "data amplitude {amplitude:.3e} exceeds the smallness threshold {:.3e}",
            opts.smallness
        ));
    }
    let compat = check_compatibility(v0, h0, params, opts.compat_tol)?;
    if !compat.pass {
        return invalid(format!(
            "initial data are not compatible: divergence residual {:.3e}, tangential stress residual {:.3e}",
            compat.divergence, compat.tangential
        ));
    }
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * opts.tau).collect();
    let star = initial_flow(v0, h0, params, &times, &opts.semigroup)?;
    let mut dt_star = star.z.dt_v.clone().expect("initial flow carries derivatives");
    let du0 = time_derivative(&star.u.u[..3], opts.tau).swap_remove(0);
    dt_star[0] = plus(&du0, &star.dt_w[0]);
    let map = Map { params, opts, star: &star, dt_star };
    let initial_norm = weighted_norms(&star.z, &opts.exponents, &opts.weights)?.x_norm;
    let ball_radius = opts.ball_factor * initial_norm;

    let mut bar = Correction::zeros(&star.z);
    let mut iterations: Vec<PicardIterate> = vec![];
    let mut converged = false;
    let mut in_ball = true;
    let mut growing = 0;
    for index in 1..=opts.max_iter {
        let next = map.apply(&bar)?;
        let diff = x_norm(&next.minus(&bar), &times, opts)?;
        let norm = x_norm(&next, &times, opts)?;
        let ratio = iterations.last().map(|p| if p.diff > 0.0 { diff / p.diff } else { 0.0 });
        iterations.push(PicardIterate { index, norm, diff, ratio });
        in_ball &= norm <= ball_radius;
        bar = next;
        if diff <= opts.tol * initial_norm {
            converged = true;
            break;
        }
        growing = if ratio.is_some_and(|r| r >= 1.0) { growing + 1 } else { 0 };
        if growing >= 2 {
            return Err(Error::Divergence(format!(
                "contraction ratio >= 1 on two consecutive iterations (last {:.3}); data too large",
                ratio.unwrap_or(f64::NAN)
            )));
        }
    }
    let r = map.residual(&bar)?;
    let worst = [r.momentum, r.divergence, r.stress, r.kinematic].into_iter().fold(0.0, f64::max);
    let report = PicardReport {
        iterations,
        data_amplitude: amplitude,
        initial_norm,
        ball_radius,
        in_ball,
        converged,
        residual_momentum: r.momentum,
        residual_divergence: r.divergence,
        residual_stress: r.stress,
        residual_kinematic: r.kinematic,
        residual_no_slip: r.no_slip,
        relative_residual: if initial_norm > 0.0 { worst / initial_norm } else { worst },
    };
    let total = StateZ::new(
        times.clone(),
        star.z.v.iter().zip(&bar.v).map(|(a, b)| plus(a, b)).collect(),
        star.z.q.iter().zip(&bar.q).map(|(a, b)| plus(a, b)).collect(),
        star.z.h.iter().zip(&bar.h).map(|(a, b)| plus_s(a, b)).collect(),
        Some(map.dt_star.iter().zip(&bar.dt_v).map(|(a, b)| plus(a, b)).collect()),
        Some(star.z.dt_h.as_ref().expect("initial flow carries derivatives").iter().zip(&bar.dt_h).map(|(a, b)| plus_s(a, b)).collect()),
    )?;
    Ok((total, report))
}
