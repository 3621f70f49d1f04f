use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

/// Periodic horizontal box `[0, box_len)^2` sampled on `n x n` points.
///
/// Flat index of point or mode `(i1, i2)` is `i1 * n + i2`, with `i1`
/// running along `x1`. Mode indices follow FFT order, so index `m` carries
/// the integer wavenumber `m` for `m < n/2` and `m - n` otherwise.
pub struct HorizontalGrid {
    n: usize,
    box_len: f64,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for HorizontalGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HorizontalGrid")
            .field("n", &self.n)
            .field("box_len", &self.box_len)
            .finish()
    }
}

impl HorizontalGrid {
    pub fn new(n: usize, box_len: f64) -> Result<Arc<Self>> {
        if n < 8 || n % 2 != 0 {
            return invalid(format!("modes per dimension must be even and >= 8, got {n}"));
        }
        if !(box_len.is_finite() && box_len > 0.0) {
            return invalid(format!("box length must be positive, got {box_len}"));
        }
        let k = (0..n)
            .map(|m| 2.0 * PI * Self::int_wavenumber(n, m) as f64 / box_len)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            box_len,
            k,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    fn int_wavenumber(n: usize, m: usize) -> i64 {
        if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    /// Physical coordinate of grid index `m`.
    pub fn coord(&self, m: usize) -> f64 {
        m as f64 * self.spacing()
    }

    pub fn point(&self, p: usize) -> [f64; 2] {
        [self.coord(p / self.n), self.coord(p % self.n)]
    }

    pub fn int_mode(&self, p: usize) -> [i64; 2] {
        [Self::int_wavenumber(self.n, p / self.n), Self::int_wavenumber(self.n, p % self.n)]
    }

    /// Flat index of the integer mode `(j1, j2)` (taken modulo `n`).
    pub fn index_of(&self, j: [i64; 2]) -> usize {
        let n = self.n as i64;
        (j[0].rem_euclid(n) * n + j[1].rem_euclid(n)) as usize
    }

    pub fn xi(&self, p: usize) -> [f64; 2] {
        [self.k[p / self.n], self.k[p % self.n]]
    }

    pub fn abs_xi(&self, p: usize) -> f64 {
        let [a, b] = self.xi(p);
        a.hypot(b)
    }

    /// `true` when either component sits on the Nyquist index, where odd
    /// derivatives are set to zero.
    pub fn is_nyquist(&self, p: usize) -> bool {
        p / self.n == self.n / 2 || p % self.n == self.n / 2
    }

    /// Symbol of `D_j` at mode `p`; zero on Nyquist indices.
    pub fn ixi(&self, p: usize, j: usize) -> Complex64 {
        let m = if j == 0 { p / self.n } else { p % self.n };
        if m == self.n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.k[m])
        }
    }

    /// Index of the mode `-xi`.
    pub fn conj_index(&self, p: usize) -> usize {
        let (a, b) = (p / self.n, p % self.n);
        ((self.n - a) % self.n) * self.n + (self.n - b) % self.n
    }

    /// Forward transform with `1/n^2` normalisation, so a plane wave of
    /// amplitude one maps to a unit coefficient.
    pub fn forward(&self, plane: &mut [Complex64]) {
        self.transform(plane, &self.fwd);
        let s = 1.0 / self.len() as f64;
        plane.iter_mut().for_each(|v| *v *= s);
    }

    pub fn inverse(&self, plane: &mut [Complex64]) {
        self.transform(plane, &self.inv);
    }

    fn transform(&self, plane: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(plane.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // rows: contiguous along x2
        plan.process_with_scratch(plane, &mut scratch);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i2 in 0..n {
            for i1 in 0..n {
                col[i1] = plane[i1 * n + i2];
            }
            plan.process_with_scratch(&mut col, &mut scratch);
            for i1 in 0..n {
                plane[i1 * n + i2] = col[i1];
            }
        }
    }
}

/// Vertical discretisation of `[-depth, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerticalScheme {
    Chebyshev,
    FiniteDifference,
}

/// Nodes in increasing order with the last node exactly at `0`, plus first
/// and second differentiation matrices and quadrature weights.
#[derive(Debug, Clone)]
pub struct VerticalGrid {
    scheme: VerticalScheme,
    depth: f64,
    nodes: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    weights: Vec<f64>,
}

impl VerticalGrid {
    pub fn new(scheme: VerticalScheme, n: usize, depth: f64) -> Result<Arc<Self>> {
        if n < 16 {
            return invalid(format!("vertical grid needs at least 16 nodes, got {n}"));
        }
        if !(depth.is_finite() && depth > 0.0) {
            return invalid(format!("depth must be positive, got {depth}"));
        }
        let g = match scheme {
            VerticalScheme::Chebyshev => Self::chebyshev(n, depth),
            VerticalScheme::FiniteDifference => Self::finite_difference(n, depth),
        };
        Ok(Arc::new(g))
    }

    fn chebyshev(n: usize, depth: f64) -> Self {
        let m = (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| -0.5 * depth * (1.0 + (PI * i as f64 / m).cos()))
            .collect();
        nodes[0] = -depth;
        nodes[n - 1] = 0.0;
        // barycentric weights of the Lobatto points
        let bw: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let mut d1 = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (bw[j] / bw[i]) / (nodes[i] - nodes[j]);
                    d1[(i, j)] = v;
                    diag -= v;
                }
            }
            d1[(i, i)] = diag;
        }
        let d2 = &d1 * &d1;
        Self {
            scheme: VerticalScheme::Chebyshev,
            depth,
            weights: clenshaw_curtis(n, depth),
            nodes,
            d1,
            d2,
        }
    }

    fn finite_difference(n: usize, depth: f64) -> Self {
        let h = depth / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| -depth + i as f64 * h).collect();
        nodes[n - 1] = 0.0;
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        for i in 1..n - 1 {
            d1[(i, i - 1)] = -0.5 / h;
            d1[(i, i + 1)] = 0.5 / h;
            d2[(i, i - 1)] = 1.0 / (h * h);
            d2[(i, i)] = -2.0 / (h * h);
            d2[(i, i + 1)] = 1.0 / (h * h);
        }
        // one-sided closures; the first-derivative one carries the same leading
        // error h^2 f''' / 6 as the central rows, so the two cancel in d1 * d1
        // next to the boundary and the composed operator stays second order
        for (o, v) in [-2.0, 3.5, -2.0, 0.5].iter().enumerate() {
            d1[(0, o)] = v / h;
            d1[(n - 1, n - 1 - o)] = -v / h;
        }
        let c = [2.0, -5.0, 4.0, -1.0];
        for (o, v) in c.iter().enumerate() {
            d2[(0, o)] = v / (h * h);
            d2[(n - 1, n - 1 - o)] = v / (h * h);
        }
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Self {
            scheme: VerticalScheme::FiniteDifference,
            depth,
            nodes,
            d1,
            d2,
            weights,
        }
    }

    pub fn scheme(&self) -> VerticalScheme {
        self.scheme
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn top(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest gap between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Applies `d` to a column of complex samples.
    pub fn apply(&self, d: &DMatrix<f64>, col: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, c) in col.iter().enumerate() {
                s += *c * d[(i, j)];
            }
            *o = s;
        }
        out
    }

    pub fn integrate(&self, col: &[f64]) -> f64 {
        self.weights.iter().zip(col).map(|(w, v)| w * v).sum()
    }
}

/// Clenshaw-Curtis weights for the Lobatto nodes, mapped to `[-depth, 0]`.
fn clenshaw_curtis(n: usize, depth: f64) -> Vec<f64> {
    let m = n - 1;
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        let theta = PI * i as f64 / m as f64;
        let mut s = 1.0;
        for k in 1..=m / 2 {
            let b = if 2 * k == m { 1.0 } else { 2.0 };
            s -= b * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if i == 0 || i == m { 1.0 } else { 2.0 };
        *wi = c * s / m as f64 * 0.5 * depth;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_differentiates_exponential() {
        let g = VerticalGrid::new(VerticalScheme::Chebyshev, 48, 10.0).unwrap();
        let f: Vec<Complex64> = g.nodes().iter().map(|z| Complex64::new(z.exp(), 0.0)).collect();
        let df = g.apply(g.d1(), &f);
        let d2f = g.apply(g.d2(), &f);
        for i in 0..g.len() {
            assert!((df[i] - f[i]).norm() < 1e-10);
            assert!((d2f[i] - f[i]).norm() < 1e-8);
        }
        let int = g.integrate(&g.nodes().iter().map(|z| z.exp()).collect::<Vec<_>>());
        assert!((int - (1.0 - (-10.0f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn nodes_are_increasing_and_end_at_zero() {
        for s in [VerticalScheme::Chebyshev, VerticalScheme::FiniteDifference] {
            let g = VerticalGrid::new(s, 20, 3.0).unwrap();
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
            assert_eq!(*g.nodes().last().unwrap(), 0.0);
            assert_eq!(g.nodes()[0], -3.0);
        }
    }

    #[test]
    fn finite_difference_is_second_order() {
        let err = |n| {
            let g = VerticalGrid::new(VerticalScheme::FiniteDifference, n, 2.0).unwrap();
            let f: Vec<Complex64> = g.nodes().iter().map(|z| Complex64::new(z.sin(), 0.0)).collect();
            let d = g.apply(g.d1(), &f);
            g.nodes()
                .iter()
                .zip(&d)
                .map(|(z, v)| (v.re - z.cos()).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(41) / err(81)).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(HorizontalGrid::new(7, 1.0).is_err());
        assert!(HorizontalGrid::new(6, 1.0).is_err());
        assert!(HorizontalGrid::new(8, -1.0).is_err());
        assert!(VerticalGrid::new(VerticalScheme::Chebyshev, 8, 1.0).is_err());
    }
}
