use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// `Sigma_{eps, gamma0} = { lambda : |arg lambda| < pi - eps, |lambda| > gamma0 }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub eps: f64,
    pub gamma0: f64,
}

impl Default for Sector {
    fn default() -> Self {
        Self {
            eps: PI / 4.0,
            gamma0: 1.0,
        }
    }
}

impl Sector {
    pub fn new(eps: f64, gamma0: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < PI / 2.0) {
            return invalid(format!("sector half-gap must lie in (0, pi/2), got {eps}"));
        }
        if !(gamma0.is_finite() && gamma0 >= 0.0) {
            return invalid(format!("gamma0 must be non-negative, got {gamma0}"));
        }
        Ok(Self { eps, gamma0 })
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        lambda.norm() > self.gamma0 && lambda.arg().abs() < PI - self.eps
    }

    /// Vertex `2 gamma0 / sin(eps)` of the resolvent contour.
    pub fn vertex(&self) -> f64 {
        2.0 * self.gamma0 / self.eps.sin()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContourNode {
    pub lambda: Complex64,
    /// Quadrature weight including `d lambda / (2 pi i)`.
    pub weight: Complex64,
}

/// Two rays `vertex + s e^{+-i(pi - eps)}`, `0 <= s <= s_max`, traversed from
/// the lower ray to the upper ray. Each ray is discretised by the trapezoid
/// rule in `u = ln s` on `[ln s_min, ln s_max]`, which keeps the corner at the
/// vertex out of the quadrature error.
#[derive(Debug, Clone)]
pub struct Contour {
    pub vertex: f64,
    pub eps: f64,
    pub s_max: f64,
    pub nodes: Vec<ContourNode>,
}

impl Contour {
    pub fn wedge(vertex: f64, eps: f64, s_max: f64, node_count: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < PI / 2.0) {
            return invalid(format!("contour half-gap must lie in (0, pi/2), got {eps}"));
        }
        if node_count < 8 || node_count % 2 != 0 {
            return invalid(format!("node count must be even and >= 8, got {node_count}"));
        }
        if !(s_max.is_finite() && s_max > 0.0) {
            return invalid(format!("truncation must be positive, got {s_max}"));
        }
        let per_ray = node_count / 2;
        let s_min = 1e-12 * (1.0 + vertex.abs()).min(s_max);
        let (u0, u1) = (s_min.ln(), s_max.ln());
        let du = (u1 - u0) / (per_ray - 1) as f64;
        let dir = Complex64::from_polar(1.0, PI - eps);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let mut nodes = Vec::with_capacity(node_count);
        // lower ray, outer end first
        for j in (0..per_ray).rev() {
            let s = (u0 + j as f64 * du).exp();
            let tw = if j == 0 || j == per_ray - 1 { 0.5 * du } else { du };
            nodes.push(ContourNode {
                lambda: vertex + s * dir.conj(),
                weight: -tw * s * dir.conj() / two_pi_i,
            });
        }
        for j in 0..per_ray {
            let s = (u0 + j as f64 * du).exp();
            let tw = if j == 0 || j == per_ray - 1 { 0.5 * du } else { du };
            nodes.push(ContourNode {
                lambda: vertex + s * dir,
                weight: tw * s * dir / two_pi_i,
            });
        }
        Ok(Self {
            vertex,
            eps,
            s_max,
            nodes,
        })
    }

    /// Truncation long enough that `e^{lambda t}` has decayed below `1e-14`
    /// relative to its vertex value for every `t >= t_min`.
    pub fn s_for_time(vertex: f64, eps: f64, t_min: f64) -> f64 {
        (vertex.max(0.0) + 33.0 / t_min) / eps.cos()
    }

    /// `(1 / 2 pi i) int e^{lambda t} g(lambda) d lambda` for a sampled
    /// integrand `g_k = g(lambda_k)`.
    pub fn inverse_laplace(&self, g: &[Complex64], t: f64) -> Complex64 {
        self.nodes.iter().zip(g).map(|(n, v)| n.weight * (n.lambda * t).exp() * v).sum()
    }
}

/// Resolvent contour of the sector: vertex `2 gamma0 / sin eps`, rays at
/// angle `pi - eps`, truncated at `s_max`.
pub fn contour_nodes(sector: &Sector, s_max: f64, node_count: usize) -> Result<Contour> {
    Sector::new(sector.eps, sector.gamma0)?;
    Contour::wedge(sector.vertex(), sector.eps, s_max, node_count)
}
