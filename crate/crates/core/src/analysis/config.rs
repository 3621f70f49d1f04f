use num_rational::Ratio;

use crate::error::{invalid, Result};

/// Decay rates `m(s1, s2)` and `n(s1, s2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub m: f64,
    pub n: f64,
}

fn check_range(s1: f64, s2: f64) -> Result<()> {
    if !(s1 >= 1.0 && s1 <= 2.0 && s2 >= 2.0 && s2.is_finite()) {
        return invalid(format!("rate exponents need 1 <= s1 <= 2 <= s2 < inf, got ({s1}, {s2})"));
    }
    Ok(())
}

/// `m = (1/s1 - 1/s2) + (1/2)(1/2 - 1/s2)`, `n = (3/2)(1/s1 - 1/s2)`.
pub fn rate_exponents(s1: f64, s2: f64) -> Result<DecayRates> {
    check_range(s1, s2)?;
    let d = 1.0 / s1 - 1.0 / s2;
    Ok(DecayRates {
        m: d + 0.5 * (0.5 - 1.0 / s2),
        n: 1.5 * d,
    })
}

/// Exact version of [`rate_exponents`] for rational exponents.
pub fn rate_exponents_exact(s1: Ratio<i64>, s2: Ratio<i64>) -> Result<(Ratio<i64>, Ratio<i64>)> {
    let (one, two) = (Ratio::from_integer(1), Ratio::from_integer(2));
    if s1 < one || s1 > two || s2 < two {
        return invalid(format!("rate exponents need 1 <= s1 <= 2 <= s2, got ({s1}, {s2})"));
    }
    let half = Ratio::new(1, 2);
    let d = s1.recip() - s2.recip();
    Ok((d + half * (half - s2.recip()), Ratio::new(3, 2) * d))
}

/// Integrability exponents of the solution class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentConfig {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        Self {
            p: 64.0,
            q: 3.19,
            theta: 0.5,
        }
    }
}

impl ExponentConfig {
    pub fn q_bar(&self) -> f64 {
        self.q / 2.0
    }

    /// `q(theta) = 2 (1 - 1 / (3 - theta))`, in `[1, 4/3]`.
    pub fn q_theta(&self) -> f64 {
        2.0 * (1.0 - 1.0 / (3.0 - self.theta))
    }
}

/// Time weights of the linear estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub c1: f64,
    pub d1: f64,
}

impl WeightConfig {
    /// Weights used for the nonlinear problem: `a = (1/2, 3/4)`,
    /// `b1 = b2 = 2/q + 3/8`, `b3 = b4 = 1`, `c1 = 0`, `d1 = 1/4`.
    pub fn standard(q: f64) -> Self {
        Self {
            a1: 0.5,
            a2: 0.75,
            b1: 2.0 / q + 0.375,
            b2: 2.0 / q + 0.375,
            b3: 1.0,
            b4: 1.0,
            c1: 0.0,
            d1: 0.25,
        }
    }

    pub fn a0(&self) -> f64 {
        self.a1.max(self.a2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Left side minus right side; the check holds when this is positive
    /// (or non-negative for the non-strict inequalities).
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigReport {
    pub checks: Vec<Check>,
}

impl ConfigReport {
    pub fn valid(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }
}

/// Itemised check of the exponent conditions of the nonlinear theory and
/// of the weight conditions of the linear estimate.
pub fn validate_config(cfg: &ExponentConfig, w: &WeightConfig) -> ConfigReport {
    let (p, q) = (cfg.p, cfg.q);
    let mut checks = vec![];
    let mut strict = |name, margin: f64| checks.push(Check { name, margin, pass: margin > 0.0 });
    strict("p > 2", p - 2.0);
    strict("q > 3", q - 3.0);
    strict("q < 16/5", 3.2 - q);
    strict("2/p + 3/q < 1", 1.0 - 2.0 / p - 3.0 / q);
    strict("q < 4", 4.0 - q);
    strict("p (2/q - 1/2) > 1", p * (2.0 / q - 0.5) - 1.0);
    strict("0 < theta", cfg.theta);
    strict("theta < 1", 1.0 - cfg.theta);
    let minb = w.b1.min(w.b2).min(w.b3).min(w.b4);
    let m = if q >= 2.0 && cfg.q_bar() >= 1.0 && cfg.q_bar() <= 2.0 {
        rate_exponents(cfg.q_bar(), q).map(|r| r.m).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    strict("b1 > 1", w.b1 - 1.0);
    strict("b2 > 1", w.b2 - 1.0);
    strict("a1 > 0", w.a1);
    strict("a2 > 0", w.a2);
    strict("p (min b - a1) > 1", p * (minb - w.a1) - 1.0);
    strict("p (m(q/2, q) + 1/4 - a1) > 1", p * (m + 0.25 - w.a1) - 1.0);
    strict("p (min b - a2) > 1", p * (minb - w.a2) - 1.0);
    strict("p (1/2 + 2/q - a2) > 1", p * (0.5 + 2.0 / q - w.a2) - 1.0);
    strict("p (1 + c1 - a0) > 1", p * (1.0 + w.c1 - w.a0()) - 1.0);
    strict("p (1 + d1 - max(b3, b4)) > 1", p * (1.0 + w.d1 - w.b3.max(w.b4)) - 1.0);
    let mut weak = |name, margin: f64| checks.push(Check { name, margin, pass: margin >= 0.0 });
    weak("b3 >= 1", w.b3 - 1.0);
    weak("b4 >= 1", w.b4 - 1.0);
    weak("c1 >= 0", w.c1);
    weak("d1 >= 0", w.d1);
    for c in &mut checks {
        if c.margin.is_nan() {
            c.pass = false;
        }
    }
    ConfigReport { checks }
}
