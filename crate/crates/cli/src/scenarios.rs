use std::f64::consts::PI;
use std::sync::Arc;

use freesurf_core::analysis::{decay_reports, decay_samples, decay_targets, fit_decay, localized_height, DecayReport, DecaySample};
use freesurf_core::linear::{
    boundary_forced_mode, boundary_kernel_norms, solve_divergence, BoundaryFormulaPropagator, ModeData, ModeOperator, PhysicalParams,
};
use freesurf_core::nonlinear::{picard_solve, PicardOptions};
use freesurf_core::spectral::{HalfSpaceField, HorizontalGrid, Repr, SurfaceField, VerticalGrid, VerticalScheme};
use freesurf_core::symbols::{lopatinskii_audit, multiplier_bound_estimate, MultiplierType, Sector, Symbol};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Config, InitialData, Scenario};
use crate::error::CliError;
use crate::output::{CsvTable, Outcome, Verdict};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cfg: &Config) -> Result<Outcome> {
    match cfg.scenario {
        Scenario::LinearDecay => linear_decay(cfg),
        Scenario::BoundaryForced => boundary_forced(cfg),
        Scenario::ResolventSweep => resolvent_sweep(cfg),
        Scenario::MultiplierAudit => multiplier_audit(cfg),
        Scenario::NonlinearSmallData => nonlinear_small_data(cfg),
        Scenario::DivergenceCorrector => divergence_corrector(cfg),
    }
}

fn params(cfg: &Config) -> PhysicalParams {
    PhysicalParams { mu: cfg.physics.mu, c_sigma: cfg.physics.c_sigma, c_g: cfg.physics.c_g }
}

fn grids(cfg: &Config) -> Result<(Arc<HorizontalGrid>, Arc<VerticalGrid>)> {
    let g = &cfg.grid;
    Ok((HorizontalGrid::new(g.modes, g.box_len)?, VerticalGrid::new(g.scheme.into(), g.vertical_nodes, g.depth)?))
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| lo * (hi / lo).powf(j as f64 / (n - 1) as f64)).collect()
}

fn l2(vg: &VerticalGrid, v: &[Complex64]) -> f64 {
    vg.integrate(&v.iter().map(|x| x.norm_sqr()).collect::<Vec<_>>()).sqrt()
}

/// `|lambda|` log-uniform above `gamma0`, argument uniform inside the sector.
fn random_lambda(rng: &mut ChaCha8Rng, sector: &Sector, r_max: f64) -> Complex64 {
    let r = rng.random_range((sector.gamma0 * 1.01).ln()..r_max.ln()).exp();
    Complex64::from_polar(r, rng.random_range(-1.0..1.0) * (PI - sector.eps) * 0.999)
}

fn linear_decay(cfg: &Config) -> Result<Outcome> {
    let d = &cfg.decay;
    let e = &cfg.exponents;
    let (hg, vg) = grids(cfg)?;
    let times = log_spaced(d.t_min, d.t_max, d.samples);
    let h0 = match d.data {
        InitialData::Localized => localized_height(&hg, e.q_bar)?.scaled(d.amplitude),
        InitialData::Zero => SurfaceField::from_fn(&hg, |_| 0.0),
    };
    let prop = BoundaryFormulaPropagator::new(&params(cfg), &hg, &vg, times[0], d.contour_nodes)?;
    let sol = prop.propagate(&h0, &times)?;
    let samples = decay_samples(&sol, e.q, e.r)?;
    let targets = decay_targets(e.q_bar, e.q, e.r)?;

    let mut out = Outcome::default();
    let mut table = CsvTable::new("samples.csv", DecaySample::CSV_HEADER);
    table.rows = samples.iter().map(DecaySample::csv_row).collect();
    out.tables.push(table);

    let vanishes = samples.iter().all(|s| s.u == 0.0 && s.grad_u == 0.0 && s.h == 0.0);
    let mut fits = CsvTable::new("fits.csv", &format!("window,{}", DecayReport::CSV_HEADER));
    if vanishes {
        for q in ["u", "grad_u", "h"] {
            out.verdicts.push(Verdict::trivial(format!("{q} decay exponent"), "zero data: every norm vanishes"));
        }
    } else {
        let tol = cfg.tolerances.decay_exponent;
        for r in decay_reports(&samples, &targets, (d.t_min, d.t_max), tol)? {
            fits.rows.push(format!("main,{}", r.csv_row()));
            out.verdicts.push(Verdict::at_most(
                format!("{} decay exponent", r.label),
                (r.fit.exponent - r.target).abs(),
                tol,
                format!("fitted {:.4} vs target {:.4}", r.fit.exponent, r.target),
            ));
        }
        for w in &d.windows {
            for r in decay_reports(&samples, &targets, (w[0], w[1]), tol)? {
                fits.rows.push(format!("sensitivity,{}", r.csv_row()));
            }
        }
    }
    out.tables.push(fits);
    Ok(out)
}

fn boundary_forced(cfg: &Config) -> Result<Outcome> {
    let b = &cfg.boundary;
    let tol = &cfg.tolerances;
    let (_, vg) = grids(cfg)?;
    let mu = cfg.physics.mu;
    // the closed-form solution has no height coupling, so neither may the
    // collocated one
    let stress_only = PhysicalParams { mu, c_sigma: 0.0, c_g: 0.0 };
    let sector = Sector::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Outcome::default();
    let mut table = CsvTable::new("cross_check.csv", "sample,xi1,xi2,lambda_re,lambda_im,relative_mismatch");
    let mut worst: f64 = 0.0;
    for k in 0..b.samples {
        let (r, th) = (rng.random_range(b.xi_min..b.xi_max), rng.random_range(0.0..2.0 * PI));
        let xi = [r * th.cos(), r * th.sin()];
        let lambda = random_lambda(&mut rng, &sector, b.lambda_max);
        let h: [Complex64; 3] = std::array::from_fn(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let exact = boundary_forced_mode(xi, lambda, mu, h, vg.nodes())?;
        let mut data = ModeData::zeros(vg.len());
        data.stress = h;
        let s = ModeOperator::new(xi, lambda, &stress_only, &vg)?.solve(&data)?;
        let num: f64 = (0..3)
            .map(|j| l2(&vg, &s.u[j].iter().zip(&exact.u[j]).map(|(a, b)| a - b).collect::<Vec<_>>()).powi(2))
            .sum();
        let den: f64 = (0..3).map(|j| l2(&vg, &exact.u[j]).powi(2)).sum();
        let m = (num / den).sqrt();
        worst = worst.max(m);
        table.rows.push(format!("{k},{:.10e},{:.10e},{:.10e},{:.10e},{m:.6e}", xi[0], xi[1], lambda.re, lambda.im));
    }
    out.tables.push(table);
    out.verdicts.push(Verdict::at_most(
        "closed form vs collocation",
        worst,
        tol.cross_check,
        format!("worst relative L2 mismatch over {} samples", b.samples),
    ));

    let q = cfg.exponents.q;
    let taus = log_spaced(b.tau_min, b.tau_max, b.tau_samples);
    let f = [Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default()];
    let norms = boundary_kernel_norms([b.kernel_xi, 0.0], f, mu, q, b.kernel_depth, &taus)?;
    let mut kt = CsvTable::new("kernel.csv", "tau,u_lq,grad_u_lq");
    kt.rows = taus.iter().zip(&norms).map(|(t, n)| format!("{t:.10e},{:.10e},{:.10e}", n[0], n[1])).collect();
    out.tables.push(kt);
    let mut fit_table = CsvTable::new("kernel_fit.csv", "derivatives,power,target,verdict");
    for l in 0..2 {
        let series: Vec<(f64, f64)> = taus.iter().zip(&norms).map(|(t, v)| (*t, v[l] * t.exp())).collect();
        let power = -fit_decay(&series, (b.tau_min, b.tau_max))?.exponent;
        let target = -(1.0 + l as f64) / 2.0 + 0.5 / q;
        let v = Verdict::at_most(
            format!("kernel power l={l}"),
            (power - target).abs(),
            tol.kernel_power,
            format!("power {power:.4} vs {target:.4}"),
        );
        fit_table.rows.push(format!("{l},{power:.6},{target:.6},{}", if v.pass { "pass" } else { "fail" }));
        out.verdicts.push(v);
    }
    out.tables.push(fit_table);
    Ok(out)
}

struct Manufactured {
    data: ModeData,
    u: [Vec<Complex64>; 3],
    h: Complex64,
}

/// Smooth profiles vanishing at the bottom, with the data that makes them
/// an exact solution of the collocated mode problem.
fn manufacture(xi: [f64; 2], lambda: Complex64, params: &PhysicalParams, vg: &VerticalGrid) -> Manufactured {
    let c = Complex64::new;
    let z = vg.nodes();
    let l = vg.depth();
    let mu = params.mu;
    let a2 = xi[0] * xi[0] + xi[1] * xi[1];
    let ixi = [c(0.0, xi[0]), c(0.0, xi[1])];
    let amp = [c(0.7, -0.2), c(-0.3, 0.5), c(0.4, 0.1)];
    let kap = [1.3, 0.9, 1.7];
    let (cp, kp) = (c(0.25, -0.6), 1.1);
    let h = c(0.35, 0.15);
    let prof = |j: usize, z: f64| amp[j] * ((kap[j] * z).exp() - (-kap[j] * l).exp());
    let dprof = |j: usize, z: f64| amp[j] * kap[j] * (kap[j] * z).exp();
    let d2prof = |j: usize, z: f64| amp[j] * kap[j] * kap[j] * (kap[j] * z).exp();
    let pr = |z: f64| cp * (kp * z).exp();
    let mut data = ModeData::zeros(z.len());
    for j in 0..3 {
        data.f[j] = z
            .iter()
            .map(|&z| {
                let grad = if j < 2 { ixi[j] * pr(z) } else { kp * pr(z) };
                (lambda + mu * a2) * prof(j, z) - mu * d2prof(j, z) + grad
            })
            .collect();
    }
    data.g = Some(z.iter().map(|&z| ixi[0] * prof(0, z) + ixi[1] * prof(1, z) + dprof(2, z)).collect());
    for j in 0..2 {
        data.stress[j] = mu * (dprof(j, 0.0) + ixi[j] * prof(2, 0.0));
    }
    data.stress[2] = 2.0 * mu * dprof(2, 0.0) - pr(0.0) + params.gamma(a2.sqrt()) * h;
    data.k = lambda * h - prof(2, 0.0);
    Manufactured { data, u: std::array::from_fn(|j| z.iter().map(|&z| prof(j, z)).collect()), h }
}

/// Left side of the resolvent estimate over its right side, with the
/// height measured in the Bessel-potential norms the estimate uses.
fn estimate_ratio(vg: &Arc<VerticalGrid>, xi: [f64; 2], lambda: Complex64, params: &PhysicalParams) -> Result<f64> {
    let a2 = xi[0] * xi[0] + xi[1] * xi[1];
    let bessel = |s: f64| (1.0 + a2).powf(0.5 * s);
    let mut data = ModeData::zeros(vg.len());
    data.f[0] = vg.nodes().iter().map(|z| Complex64::new((2.0 * z).exp(), 0.0)).collect();
    data.f[2] = vg.nodes().iter().map(|z| Complex64::new(0.0, z * z.exp())).collect();
    data.k = Complex64::new(0.3, 0.0);
    let s = ModeOperator::new(xi, lambda, params, vg)?.solve(&data)?;
    let (r, rs) = (lambda.norm(), lambda.norm().sqrt());
    let mut lhs = 0.0;
    for u in &s.u {
        let du = vg.apply(vg.d1(), u);
        let d2u = vg.apply(vg.d2(), u);
        let grad = (a2 * l2(vg, u).powi(2) + l2(vg, &du).powi(2)).sqrt();
        let hess = (a2 * a2 * l2(vg, u).powi(2) + 2.0 * a2 * l2(vg, &du).powi(2) + l2(vg, &d2u).powi(2)).sqrt();
        lhs += r * l2(vg, u) + rs * grad + hess;
    }
    let dp = vg.apply(vg.d1(), &s.p);
    lhs += (a2 * l2(vg, &s.p).powi(2) + l2(vg, &dp).powi(2)).sqrt();
    lhs += (r * bessel(1.5) + bessel(2.5)) * s.h.norm();
    let rhs = data.f.iter().map(|f| l2(vg, f)).sum::<f64>() + bessel(1.5) * data.k.norm();
    Ok(lhs / rhs)
}

fn resolvent_sweep(cfg: &Config) -> Result<Outcome> {
    let sw = &cfg.sweep;
    let tol = &cfg.tolerances;
    let (_, vg) = grids(cfg)?;
    let params = params(cfg);
    let sector = Sector::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Outcome::default();

    let mut table = CsvTable::new("manufactured.csv", "sample,xi1,xi2,lambda_re,lambda_im,relative_error,residual");
    let mut worst: f64 = 0.0;
    for k in 0..sw.samples {
        let xi = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let lambda = random_lambda(&mut rng, &sector, sw.lambda_max);
        let m = manufacture(xi, lambda, &params, &vg);
        let s = ModeOperator::new(xi, lambda, &params, &vg)?.solve(&m.data)?;
        let num: f64 = (0..3)
            .map(|j| l2(&vg, &s.u[j].iter().zip(&m.u[j]).map(|(a, b)| a - b).collect::<Vec<_>>()).powi(2))
            .sum::<f64>()
            + (s.h - m.h).norm_sqr();
        let den: f64 = (0..3).map(|j| l2(&vg, &m.u[j]).powi(2)).sum::<f64>() + m.h.norm_sqr();
        let err = (num / den).sqrt();
        worst = worst.max(err).max(s.residual);
        table.rows.push(format!(
            "{k},{:.10e},{:.10e},{:.10e},{:.10e},{err:.6e},{:.6e}",
            xi[0], xi[1], lambda.re, lambda.im, s.residual
        ));
    }
    out.tables.push(table);
    out.verdicts.push(Verdict::at_most(
        "manufactured solves",
        worst,
        tol.resolvent,
        format!("worst relative error or residual over {} samples", sw.samples),
    ));

    let mut sweep = CsvTable::new("sweep.csv", "arg_over_pi,lambda_abs,estimate_ratio");
    let mut ratios = vec![];
    for &frac in &sw.arg_fractions {
        for k in 0..=sw.per_decade * sw.decades {
            let mag = 10f64.powf(k as f64 / sw.per_decade as f64);
            let ratio = estimate_ratio(&vg, sw.xi, Complex64::from_polar(mag, frac * PI), &params)?;
            sweep.rows.push(format!("{frac},{mag:.10e},{ratio:.10e}"));
            ratios.push(ratio);
        }
    }
    out.tables.push(sweep);
    if ratios.is_empty() {
        return Err(CliError::Usage("the estimate sweep needs at least one ray".into()));
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let spread = sorted.iter().map(|r| (r / median).max(median / r)).fold(0.0, f64::max);
    out.verdicts.push(Verdict::at_most(
        "estimate ratio spread",
        spread,
        tol.ratio_spread,
        format!("largest factor from the median {median:.4} over {} sweep points", ratios.len()),
    ));
    Ok(out)
}

/// Symbols with known class membership: order and type.
fn members() -> Vec<(Symbol, f64, MultiplierType)> {
    vec![
        (Symbol::APow(1.0), 1.0, MultiplierType::Type2),
        (Symbol::BPow(1.0), 1.0, MultiplierType::Type1),
        (Symbol::BPow(-1.0), -1.0, MultiplierType::Type1),
        (Symbol::DPow(-1.0), -3.0, MultiplierType::Type2),
        (Symbol::XiOverA(0), 0.0, MultiplierType::Type2),
        (Symbol::Product(Box::new(Symbol::BPow(-1.0)), Box::new(Symbol::XiOverA(1))), -1.0, MultiplierType::Type2),
    ]
}

fn multiplier_audit(cfg: &Config) -> Result<Outcome> {
    let a = &cfg.audit;
    let tol = &cfg.tolerances;
    let sector = Sector::new(PI / 4.0, 0.0)?;
    let mut out = Outcome::default();
    let mut table = CsvTable::new("constants.csv", "symbol,order,type,constant,constant_4x_budget,growth");
    for (sym, order, ty) in members() {
        let small = multiplier_bound_estimate(&sym, order, ty, &sector, a.budget)?.constant;
        let big = multiplier_bound_estimate(&sym, order, ty, &sector, 4 * a.budget)?.constant;
        let growth = big / small;
        let ty_name = match ty {
            MultiplierType::Type1 => 1,
            MultiplierType::Type2 => 2,
        };
        table.rows.push(format!("{},{order},{ty_name},{small:.6e},{big:.6e},{growth:.6}", sym.id()));
        out.verdicts.push(Verdict::at_most(format!("{} constant", sym.id()), big, tol.max_constant, ""));
        out.verdicts.push(Verdict::at_most(
            format!("{} growth", sym.id()),
            growth,
            tol.constant_growth,
            "constant at 4x budget over constant at 1x",
        ));
    }
    out.tables.push(table);

    let l = lopatinskii_audit(&Sector::default(), cfg.physics.mu, a.lopatinskii_samples, cfg.seed)?;
    let mut lt = CsvTable::new("lopatinskii.csv", "samples,min_ratio,max_ratio,argmin_a,argmin_lambda_re,argmin_lambda_im");
    lt.rows.push(format!(
        "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
        l.samples, l.min_ratio, l.max_ratio, l.argmin_a, l.argmin_lambda.re, l.argmin_lambda.im
    ));
    out.tables.push(lt);
    out.verdicts.push(Verdict::at_least(
        "Lopatinskii lower bound",
        l.min_ratio,
        f64::MIN_POSITIVE,
        "min |D(A,B)| / (|lambda|^(1/2) + A)^3 over the sector",
    ));
    out.verdicts.push(Verdict::at_most("Lopatinskii spread", l.max_ratio / l.min_ratio, tol.lopatinskii_spread, "max over min ratio"));
    Ok(out)
}

fn nonlinear_small_data(cfg: &Config) -> Result<Outcome> {
    let pc = &cfg.picard;
    let tol = &cfg.tolerances;
    let (hg, vg) = grids(cfg)?;
    let h0 = SurfaceField::from_fn(&hg, |x| pc.amplitude * x[0].cos());
    let v0 = HalfSpaceField::zeros(&hg, &vg, 3, Repr::Physical);
    let opts = PicardOptions {
        horizon: pc.horizon,
        tau: pc.tau,
        tol: pc.tol,
        max_iter: pc.max_iter,
        exponents: cfg.exponent_config(),
        weights: cfg.weight_config(),
        ..Default::default()
    };
    let (_, rep) = picard_solve(&v0, &h0, &params(cfg), &opts)?;
    let mut out = Outcome::default();
    let mut it = CsvTable::new("iterations.csv", "index,norm,diff,ratio");
    it.rows = rep
        .iterations
        .iter()
        .map(|i| format!("{},{:.10e},{:.10e},{}", i.index, i.norm, i.diff, i.ratio.map_or(String::new(), |r| format!("{r:.10e}"))))
        .collect();
    out.tables.push(it);
    let mut res = CsvTable::new("residuals.csv", "momentum,divergence,stress,kinematic,no_slip,relative");
    res.rows.push(format!(
        "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
        rep.residual_momentum, rep.residual_divergence, rep.residual_stress, rep.residual_kinematic, rep.residual_no_slip, rep.relative_residual
    ));
    out.tables.push(res);

    out.verdicts.push(Verdict::at_least(
        "converged",
        f64::from(u8::from(rep.converged)),
        1.0,
        format!("{} iterations, in ball {}", rep.iterations.len(), rep.in_ball),
    ));
    let ratios = rep.contraction_ratios();
    let worst = if ratios.is_empty() { f64::NAN } else { ratios.iter().cloned().fold(0.0, f64::max) };
    out.verdicts.push(Verdict::at_most(
        "contraction ratio",
        worst,
        tol.contraction,
        if ratios.is_empty() { "no ratio: fewer than two differences".to_string() } else { format!("largest of {} ratios", ratios.len()) },
    ));
    out.verdicts.push(Verdict::at_most(
        "relative residual",
        rep.relative_residual,
        tol.residual_factor * pc.tol,
        "converged residual against the iteration tolerance",
    ));
    Ok(out)
}

/// Largest interior defect `|div d - g|` of the corrector for
/// `g = sin(x1) z^2 e^{2z}`.
fn divergence_defect(hg: &Arc<HorizontalGrid>, vg: &Arc<VerticalGrid>) -> Result<f64> {
    let g = HalfSpaceField::from_fn(hg, vg, 1, |_, x| x[0].sin() * x[2] * x[2] * (2.0 * x[2]).exp());
    let d = solve_divergence(&g)?;
    let mut div = d.derivative(0, 0);
    div.axpy(1.0, &d.derivative(1, 1));
    div.axpy(1.0, &d.derivative(2, 2));
    let (div, g) = (div.physical(), g.physical());
    let top = vg.len() - 1;
    Ok((0..hg.len())
        .flat_map(|p| (1..top).map(move |iz| (p, iz)))
        .map(|(p, iz)| (div.get(0, iz, p) - g.get(0, iz, p)).norm())
        .fold(0.0, f64::max))
}

fn divergence_corrector(cfg: &Config) -> Result<Outcome> {
    let g = &cfg.grid;
    let hg = HorizontalGrid::new(g.modes, g.box_len)?;
    let scheme: VerticalScheme = g.scheme.into();
    let mut table = CsvTable::new("convergence.csv", "nodes,spacing,max_defect,order");
    let mut last_order = f64::NAN;
    let mut prev: Option<f64> = None;
    for k in 0..cfg.divergence.levels {
        let n = g.vertical_nodes << k;
        let vg = VerticalGrid::new(scheme, n, g.depth)?;
        let e = divergence_defect(&hg, &vg)?;
        let order = prev.map(|p| (p / e).log2());
        if let Some(o) = order {
            last_order = o;
        }
        table.rows.push(format!(
            "{n},{:.6e},{e:.6e},{}",
            g.depth / (n - 1) as f64,
            order.map_or(String::new(), |o| format!("{o:.4}"))
        ));
        prev = Some(e);
    }
    let mut out = Outcome::default();
    out.tables.push(table);
    out.verdicts.push(Verdict::at_least(
        "observed order",
        last_order,
        cfg.tolerances.order,
        "last refinement of the interior divergence defect",
    ));
    Ok(out)
}
