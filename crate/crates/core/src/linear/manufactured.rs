//! Closed-form trajectory of the linear problem used as a test oracle.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{BoundaryData, LinearSolution, PhysicalParams, Provenance};
use crate::spectral::{HalfSpaceField, HorizontalGrid, SurfaceField, VerticalGrid, VerticalScheme};

/// Divergence-free velocity from the stream function
/// `psi = T(t) cos(x1) z^2 e^{2z}`, pressure `T(t) cos(x1) e^z / 2` and height
/// `T(t) cos(x1) / 10`, with `T(t) = t^2`; the data are obtained by applying
/// the operators exactly.
pub(crate) struct Trajectory {
    pub hg: Arc<HorizontalGrid>,
    pub vg: Arc<VerticalGrid>,
    pub params: PhysicalParams,
    pub times: Vec<f64>,
    pub exact: LinearSolution,
    pub f: Vec<HalfSpaceField>,
    pub stress: BoundaryData,
    pub k: Vec<SurfaceField>,
}

fn phi(z: f64) -> [f64; 4] {
    let e = (2.0 * z).exp();
    [
        z * z * e,
        (2.0 * z + 2.0 * z * z) * e,
        (2.0 + 8.0 * z + 4.0 * z * z) * e,
        (12.0 + 24.0 * z + 8.0 * z * z) * e,
    ]
}

pub(crate) fn trajectory(tau: f64, steps: usize) -> Trajectory {
    let hg = HorizontalGrid::new(8, 2.0 * PI).unwrap();
    let vg = VerticalGrid::new(VerticalScheme::Chebyshev, 48, 20.0).unwrap();
    let params = PhysicalParams { mu: 0.9, c_sigma: 0.4, c_g: 1.1 };
    let mu = params.mu;
    let times: Vec<f64> = (0..=steps).map(|n| n as f64 * tau).collect();
    let vel = |t: f64, dt: bool| {
        let s = if dt { 2.0 * t } else { t * t };
        HalfSpaceField::from_fn(&hg, &vg, 3, move |c, x| {
            let ph = phi(x[2]);
            match c {
                0 => -s * x[0].cos() * ph[1],
                1 => 0.0,
                _ => -s * x[0].sin() * ph[0],
            }
        })
    };
    let mut exact = LinearSolution {
        times: times.clone(),
        u: vec![],
        p: vec![],
        h: vec![],
        dt_u: Some(vec![]),
        dt_h: Some(vec![]),
        provenance: Provenance::Duhamel,
    };
    let (mut f, mut k, mut st) = (vec![], vec![], vec![]);
    for &t in &times {
        let (s, ds) = (t * t, 2.0 * t);
        exact.u.push(vel(t, false));
        exact.dt_u.as_mut().unwrap().push(vel(t, true));
        exact.p.push(HalfSpaceField::from_fn(&hg, &vg, 1, move |_, x| 0.5 * s * x[0].cos() * x[2].exp()));
        exact.h.push(SurfaceField::from_fn(&hg, move |x| 0.1 * s * x[0].cos()));
        exact.dt_h.as_mut().unwrap().push(SurfaceField::from_fn(&hg, move |x| 0.1 * ds * x[0].cos()));
        f.push(HalfSpaceField::from_fn(&hg, &vg, 3, move |c, x| {
            let ph = phi(x[2]);
            let q = 0.5 * x[2].exp();
            match c {
                0 => -ds * x[0].cos() * ph[1] + mu * s * x[0].cos() * (ph[3] - ph[1]) - s * x[0].sin() * q,
                1 => 0.0,
                _ => -ds * x[0].sin() * ph[0] + mu * s * x[0].sin() * (ph[2] - ph[0]) + s * x[0].cos() * q,
            }
        }));
        k.push(SurfaceField::from_fn(&hg, move |x| 0.1 * ds * x[0].cos()));
        let gamma = params.c_g + params.c_sigma;
        st.push([
            SurfaceField::from_fn(&hg, move |x| -2.0 * mu * s * x[0].cos()),
            SurfaceField::from_fn(&hg, |_| 0.0),
            SurfaceField::from_fn(&hg, move |x| s * x[0].cos() * (-0.5 + 0.1 * gamma)),
        ]);
    }
    Trajectory {
        hg,
        vg,
        params,
        times: times.clone(),
        exact,
        f,
        stress: BoundaryData { times, h: st },
        k,
    }
}
