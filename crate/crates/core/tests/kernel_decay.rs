use freesurf_core::analysis::fit_decay;
use freesurf_core::linear::boundary_kernel_norms;
use num_complex::Complex64;

fn exponents(taus: &[f64], q: f64) -> [f64; 2] {
    let f = [Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default()];
    let n = boundary_kernel_norms([0.02, 0.0], f, 1.0, q, 40.0, taus).unwrap();
    let window = (taus[0], taus[taus.len() - 1]);
    std::array::from_fn(|l| {
        let s: Vec<(f64, f64)> = taus.iter().zip(&n).map(|(t, v)| (*t, v[l] * t.exp())).collect();
        fit_decay(&s, window).unwrap().exponent
    })
}

#[test]
fn shear_layer_decay_matches_the_kernel_bound() {
    let taus: Vec<f64> = (0..30).map(|j| 0.1 * 200f64.powf(j as f64 / 29.0)).collect();
    for q in [2.0, 3.19, 6.0] {
        let e = exponents(&taus, q);
        for l in 0..2 {
            let want = (1 + l) as f64 / 2.0 - 0.5 / q;
            assert!((e[l] - want).abs() < 0.1, "q {q} l {l}: {} vs {want}", e[l]);
        }
    }
}

#[test]
fn normal_stress_decays_no_slower_than_tangential() {
    let taus: Vec<f64> = (0..12).map(|j| 0.2 * 25f64.powf(j as f64 / 11.0)).collect();
    let g = |f: [Complex64; 3]| boundary_kernel_norms([0.02, 0.0], f, 1.0, 3.19, 40.0, &taus).unwrap();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let (t, n) = (g([one, zero, zero]), g([zero, zero, one]));
    for (a, b) in t.iter().zip(&n) {
        assert!(b[0] <= a[0] && b[1] <= a[1], "{a:?} {b:?}");
    }
}
