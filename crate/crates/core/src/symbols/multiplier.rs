use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{b_of, lopatinskii_d, Sector};
use crate::error::{invalid, Error, Result};

/// Symbols with known multiplier-class membership, plus products.
#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    /// `A^s`
    APow(f64),
    /// `B^s`
    BPow(f64),
    /// `D(A, B)^s`
    DPow(f64),
    /// `xi_j / A`
    XiOverA(usize),
    /// `xi_j`
    Xi(usize),
    Product(Box<Symbol>, Box<Symbol>),
}

impl Symbol {
    pub fn id(&self) -> String {
        match self {
            Symbol::APow(s) => format!("A^{s}"),
            Symbol::BPow(s) => format!("B^{s}"),
            Symbol::DPow(s) => format!("D^{s}"),
            Symbol::XiOverA(j) => format!("xi{}/A", j + 1),
            Symbol::Xi(j) => format!("xi{}", j + 1),
            Symbol::Product(a, b) => format!("({})*({})", a.id(), b.id()),
        }
    }

    pub fn eval(&self, xi: [f64; 2], lambda: Complex64, mu: f64) -> Complex64 {
        let a = xi[0].hypot(xi[1]);
        match self {
            Symbol::APow(s) => Complex64::new(a.powf(*s), 0.0),
            Symbol::BPow(s) => b_of(a, lambda, mu).powf(*s),
            Symbol::DPow(s) => lopatinskii_d(a, b_of(a, lambda, mu)).powf(*s),
            Symbol::XiOverA(j) => Complex64::new(xi[*j] / a, 0.0),
            Symbol::Xi(j) => Complex64::new(xi[*j], 0.0),
            Symbol::Product(p, q) => p.eval(xi, lambda, mu) * q.eval(xi, lambda, mu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierType {
    /// `|d^a m| <= C (|lambda|^{1/2} + A)^{s - |a|}`
    Type1,
    /// `|d^a m| <= C A^{-|a|} (|lambda|^{1/2} + A)^s`
    Type2,
}

#[derive(Debug, Clone)]
pub struct AlphaEstimate {
    pub alpha: [u8; 2],
    /// Whether the bound is for `tau d_tau m` rather than `m`.
    pub tau_derivative: bool,
    pub constant: f64,
    pub argmax_xi: [f64; 2],
    pub argmax_lambda: Complex64,
}

#[derive(Debug, Clone)]
pub struct MultiplierEstimate {
    pub symbol_id: String,
    pub order: f64,
    pub ty: MultiplierType,
    pub per_alpha: Vec<AlphaEstimate>,
    pub constant: f64,
}

const ALPHAS: [[u8; 2]; 6] = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];

fn deriv_xi(f: &dyn Fn([f64; 2]) -> Complex64, xi: [f64; 2], alpha: [u8; 2], h: f64) -> Complex64 {
    let sh = |d0: f64, d1: f64| f([xi[0] + d0, xi[1] + d1]);
    match alpha {
        [0, 0] => f(xi),
        [1, 0] => (sh(h, 0.0) - sh(-h, 0.0)) / (2.0 * h),
        [0, 1] => (sh(0.0, h) - sh(0.0, -h)) / (2.0 * h),
        [2, 0] => (sh(h, 0.0) - 2.0 * f(xi) + sh(-h, 0.0)) / (h * h),
        [0, 2] => (sh(0.0, h) - 2.0 * f(xi) + sh(0.0, -h)) / (h * h),
        _ => (sh(h, h) - sh(h, -h) - sh(-h, h) + sh(-h, -h)) / (4.0 * h * h),
    }
}

/// Samples `(xi', lambda)` over `Sigma_eps x R^2` and reports the largest
/// normalised derivative for `|alpha'| <= 2`, for `m` and for `tau d_tau m`.
///
/// The frequency range widens with the budget (`|xi'|` up to
/// `sqrt(budget)`), so a symbol outside the class shows a constant that
/// grows with the budget.
pub fn multiplier_bound_estimate(
    symbol: &Symbol,
    order: f64,
    ty: MultiplierType,
    sector: &Sector,
    budget: usize,
) -> Result<MultiplierEstimate> {
    Sector::new(sector.eps, sector.gamma0)?;
    if budget == 0 {
        return invalid("sample budget must be positive");
    }
    let mu = 1.0;
    let r = (budget as f64).sqrt().max(10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d75_6c74);
    let lam_lo = (sector.gamma0.max(1e-2) * 1.0001).ln();
    let lam_hi = (r * r).ln().max(lam_lo + 1.0);
    let mut per: Vec<AlphaEstimate> = Vec::new();
    for tau in [false, true] {
        for alpha in ALPHAS {
            per.push(AlphaEstimate {
                alpha,
                tau_derivative: tau,
                constant: 0.0,
                argmax_xi: [0.0; 2],
                argmax_lambda: Complex64::new(0.0, 0.0),
            });
        }
    }
    for _ in 0..budget {
        let a = (rng.random_range((1e-2f64).ln()..r.ln())).exp();
        let phi = rng.random_range(0.0..2.0 * PI);
        let xi = [a * phi.cos(), a * phi.sin()];
        let lm = rng.random_range(lam_lo..lam_hi).exp();
        let arg = rng.random_range(-1.0..1.0) * (PI - sector.eps) * 0.999;
        let lambda = Complex64::from_polar(lm, arg);
        let scale = lm.sqrt() + a;
        // type-1 symbols vary on the scale |lambda|^{1/2} + A; a step tied to
        // A alone drowns their second differences in roundoff when A is small
        let h = 1e-3
            * match ty {
                MultiplierType::Type1 => scale,
                MultiplierType::Type2 => a,
            };
        let dl = 1e-3 * lm;
        let m = |x: [f64; 2]| symbol.eval(x, lambda, mu);
        // tau d_tau m with lambda = gamma + i tau and m holomorphic in lambda
        let tm = |x: [f64; 2]| {
            let d = (symbol.eval(x, lambda + dl, mu) - symbol.eval(x, lambda - dl, mu)) / (2.0 * dl);
            Complex64::new(0.0, lambda.im) * d
        };
        for e in per.iter_mut() {
            let d = if e.tau_derivative {
                deriv_xi(&tm, xi, e.alpha, h)
            } else {
                deriv_xi(&m, xi, e.alpha, h)
            };
            if !(d.re.is_finite() && d.im.is_finite()) {
                return Err(Error::Numerical {
                    msg: format!("{} is not finite at xi={xi:?}, lambda={lambda}", symbol.id()),
                    condition: None,
                });
            }
            let k = (e.alpha[0] + e.alpha[1]) as i32;
            let norm = match ty {
                MultiplierType::Type1 => scale.powf(k as f64 - order),
                MultiplierType::Type2 => a.powi(k) * scale.powf(-order),
            };
            let c = d.norm() * norm;
            if c > e.constant {
                e.constant = c;
                e.argmax_xi = xi;
                e.argmax_lambda = lambda;
            }
        }
    }
    let constant = per.iter().map(|e| e.constant).fold(0.0, f64::max);
    Ok(MultiplierEstimate {
        symbol_id: symbol.id(),
        order,
        ty,
        per_alpha: per,
        constant,
    })
}

#[derive(Debug, Clone)]
pub struct LopatinskiiAudit {
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin_a: f64,
    pub argmin_lambda: Complex64,
}

/// Samples `|D(A, B)| / (|lambda|^{1/2} + A)^3` over the sector with `mu`.
pub fn lopatinskii_audit(sector: &Sector, mu: f64, samples: usize, seed: u64) -> Result<LopatinskiiAudit> {
    Sector::new(sector.eps, sector.gamma0)?;
    if samples == 0 {
        return invalid("sample count must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LopatinskiiAudit {
        samples,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        argmin_a: 0.0,
        argmin_lambda: Complex64::new(0.0, 0.0),
    };
    let lo = (sector.gamma0.max(1e-3) * 1.0001).ln();
    for _ in 0..samples {
        let a = rng.random_range((1e-3f64).ln()..(1e3f64).ln()).exp();
        let lambda = Complex64::from_polar(
            rng.random_range(lo..(1e6f64).ln()).exp(),
            rng.random_range(-1.0..1.0) * (PI - sector.eps),
        );
        let b = b_of(a, lambda, mu);
        let r = lopatinskii_d(a, b).norm() / (lambda.norm().sqrt() + a).powi(3);
        if r < out.min_ratio {
            out.min_ratio = r;
            out.argmin_a = a;
            out.argmin_lambda = lambda;
        }
        out.max_ratio = out.max_ratio.max(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_members_are_bounded() {
        let s = Sector::new(PI / 4.0, 0.0).unwrap();
        let cases = [
            (Symbol::BPow(1.0), 1.0, MultiplierType::Type1),
            (Symbol::BPow(-1.0), -1.0, MultiplierType::Type1),
            (Symbol::APow(1.0), 1.0, MultiplierType::Type2),
            (Symbol::DPow(-1.0), -3.0, MultiplierType::Type2),
            (Symbol::XiOverA(0), 0.0, MultiplierType::Type2),
        ];
        for (sym, s_ord, ty) in cases {
            let small = multiplier_bound_estimate(&sym, s_ord, ty, &s, 400).unwrap().constant;
            let big = multiplier_bound_estimate(&sym, s_ord, ty, &s, 6400).unwrap().constant;
            assert!(big.is_finite() && big < 100.0, "{} {big}", sym.id());
            assert!(big < 3.0 * small + 1.0, "{} {small} {big}", sym.id());
        }
    }

    #[test]
    fn xi_is_not_order_zero_type_two() {
        let s = Sector::new(PI / 4.0, 0.0).unwrap();
        let e = |n| multiplier_bound_estimate(&Symbol::Xi(0), 0.0, MultiplierType::Type2, &s, n).unwrap().constant;
        let (a, b) = (e(400), e(40000));
        assert!(b > 5.0 * a, "{a} {b}");
    }

    #[test]
    fn products_respect_leibniz_bound() {
        let s = Sector::new(PI / 4.0, 0.0).unwrap();
        let m1 = Symbol::BPow(-1.0);
        let m2 = Symbol::XiOverA(1);
        let p = Symbol::Product(Box::new(m1.clone()), Box::new(m2.clone()));
        let e = |m: &Symbol, o| multiplier_bound_estimate(m, o, MultiplierType::Type2, &s, 2000).unwrap().constant;
        assert!(e(&p, -1.0) <= 4.0 * e(&m1, -1.0) * e(&m2, 0.0));
    }
}
