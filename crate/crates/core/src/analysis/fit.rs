use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

/// Power-law fit `value ~ C t^{-exponent}` over a time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares slope of `log value` against `log t` on the samples with
/// `t` in `window`; the exponent is minus the slope.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1).cloned().collect();
    if pts.len() < 10 {
        return invalid(format!("decay fit needs at least 10 samples in the window, got {}", pts.len()));
    }
    if let Some((t, v)) = pts.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return invalid(format!("decay fit needs positive times and values, got {v} at t = {t}"));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("decay fit needs distinct sample times");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok(DecayFit {
        exponent: -slope,
        stderr: (rss / (n - 2.0) / sxx).sqrt(),
        window,
        samples: pts.len(),
    })
}

/// Fitted exponent compared with a theoretical target.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub label: String,
    pub fit: DecayFit,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DecayReport {
    pub fn new(label: impl Into<String>, fit: DecayFit, target: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            pass: (fit.exponent - target).abs() <= tolerance,
            fit,
            target,
            tolerance,
        }
    }

    pub const CSV_HEADER: &'static str = "quantity,exponent,stderr,target,tolerance,t_min,t_max,samples,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.3},{},{},{},{}",
            self.label,
            self.fit.exponent,
            self.fit.stderr,
            self.target,
            self.tolerance,
            self.fit.window.0,
            self.fit.window.1,
            self.fit.samples,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return invalid("a time series needs at least two samples");
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return invalid("the time grid must be uniform");
    }
    Ok(dt)
}

/// `L_p` norm in time of the Bessel potential `(1 + |tau|^2)^{s/2}` of a
/// sampled series. The ends are tapered with a cosine over 5% of the
/// samples before the transform.
pub fn fractional_time_norm(times: &[f64], values: &[Complex64], order: f64, p: f64) -> Result<f64> {
    let dt = check_uniform(times)?;
    if values.len() != times.len() {
        return invalid("series and time grid differ in length");
    }
    if !(p >= 1.0) {
        return invalid(format!("time integrability must be at least 1, got {p}"));
    }
    let n = values.len();
    let ramp = ((0.05 * n as f64).round() as usize).max(1);
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let edge = k.min(n - 1 - k);
            let w = if edge < ramp { 0.5 * (1.0 - (PI * (edge as f64 + 0.5) / ramp as f64).cos()) } else { 1.0 };
            v * w
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let tau = 2.0 * PI * kk / (n as f64 * dt);
        *v *= (1.0 + tau * tau).powf(order / 2.0) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok((buf.iter().map(|v| v.norm().powf(p)).sum::<f64>() * dt).powf(1.0 / p))
}

/// Trapezoid `L_p` norm in time of `(t + 2)^s f(t)`.
pub fn weighted_lp(times: &[f64], values: &[f64], s: f64, p: f64) -> f64 {
    if times.len() < 2 {
        return values.first().map_or(0.0, |v| v.abs() * 2f64.powf(s));
    }
    let g: Vec<f64> = times.iter().zip(values).map(|(t, v)| ((t + 2.0).powf(s) * v.abs()).powf(p)).collect();
    let mut acc = 0.0;
    for k in 1..g.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (g[k] + g[k - 1]);
    }
    acc.powf(1.0 / p)
}

/// `sup_t (t + 2)^s |f(t)|` over the samples.
pub fn weighted_sup(times: &[f64], values: &[f64], s: f64) -> f64 {
    times.iter().zip(values).map(|(t, v)| (t + 2.0).powf(s) * v.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..200).map(|k| 1.0 + k as f64 * 0.5).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_decay(&series(|t| 3.0 * t.powf(-0.75)), (1.0, 100.0)).unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-6 && fit.stderr < 1e-10);
        let fit = fit_decay(&series(|_| 2.0), (1.0, 100.0)).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<(f64, f64)> = series(|t| t.powf(-0.6)).into_iter().map(|(t, v)| (t, v * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))).collect();
        let fit = fit_decay(&s, (1.0, 100.0)).unwrap();
        assert!((fit.exponent - 0.6).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_series() {
        assert!(fit_decay(&series(|t| t - 50.0), (1.0, 100.0)).is_err());
        assert!(fit_decay(&series(|t| t), (1.0, 3.0)).is_err());
    }

    #[test]
    fn report_verdict() {
        let fit = fit_decay(&series(|t| t.powf(-0.5)), (1.0, 100.0)).unwrap();
        assert!(DecayReport::new("u", fit, 0.45, 0.1).pass);
        assert!(!DecayReport::new("u", fit, 0.3, 0.1).pass);
    }

    #[test]
    fn fractional_norm_of_zero_and_oscillation() {
        let times: Vec<f64> = (0..4096).map(|k| k as f64 * 0.01).collect();
        assert_eq!(fractional_time_norm(&times, &vec![Complex64::default(); 4096], 0.5, 2.0).unwrap(), 0.0);
        let t_len = 40.96;
        let tau0 = 2.0 * PI * 200.0 / t_len;
        let osc: Vec<Complex64> = times.iter().map(|t| Complex64::from_polar(1.0, tau0 * t)).collect();
        let tapered = fractional_time_norm(&times, &osc, 0.0, 2.0).unwrap();
        let lifted = fractional_time_norm(&times, &osc, 0.5, 2.0).unwrap();
        let want = (1.0 + tau0 * tau0).powf(0.25);
        assert!((lifted / tapered / want - 1.0).abs() < 1e-2, "{} vs {want}", lifted / tapered);
    }

    #[test]
    fn fractional_norm_of_bump_is_interpolated() {
        let times: Vec<f64> = (0..2048).map(|k| k as f64 * 0.01).collect();
        let f = |t: f64| (-(t - 10.0).powi(2)).exp();
        let df = |t: f64| -2.0 * (t - 10.0) * f(t);
        let vals: Vec<Complex64> = times.iter().map(|&t| Complex64::new(f(t), 0.0)).collect();
        let p = 3.0;
        let lp = |g: &dyn Fn(f64) -> f64| (times.iter().map(|&t| g(t).abs().powf(p)).sum::<f64>() * 0.01).powf(1.0 / p);
        let half = fractional_time_norm(&times, &vals, 0.5, p).unwrap();
        assert!(half > lp(&f) && half < lp(&f) + lp(&df), "{half}");
        let times_bad = [0.0, 0.1, 0.3];
        assert!(fractional_time_norm(&times_bad, &vals[..3], 0.5, p).is_err());
    }

    #[test]
    fn weighted_norms_of_constants() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.05).collect();
        let ones = vec![2.0; 101];
        assert!((weighted_lp(&times, &ones, 0.0, 4.0) - 2.0 * 5f64.powf(0.25)).abs() < 1e-12);
        assert!((weighted_sup(&times, &ones, 0.5) - 2.0 * 7f64.sqrt()).abs() < 1e-12);
    }
}
