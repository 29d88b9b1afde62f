mod common;

use covcraft::rmt::mp_cdf;
use covcraft::{
    clip_eigenvalues, demean, eigh, empirical_spectral_cdf, mp_bounds, mp_density, sample_covariance, MpBounds,
    MpParams, SpectralDecomposition,
};
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

fn params(c: f64, s: f64) -> MpParams {
    MpParams::new(c, s).unwrap()
}

fn moment(p: MpParams, k: i32, upto: Option<f64>) -> f64 {
    common::mp_moment(p, k, upto)
}

#[test]
fn bounds_examples() {
    let b = mp_bounds(params(0.5, 1.0));
    assert!((b.lower - (1.0 - 0.5f64.sqrt()).powi(2)).abs() < 1e-15);
    assert!((b.upper - (1.0 + 0.5f64.sqrt()).powi(2)).abs() < 1e-15);
    assert!((b.lower - 0.085786).abs() < 1e-6 && (b.upper - 2.914213).abs() < 1e-6);

    let b = mp_bounds(params(0.25, 2.0));
    assert!((b.lower - 0.5).abs() < 1e-15 && (b.upper - 4.5).abs() < 1e-15);

    let b = mp_bounds(params(1e-12, 1.0));
    assert!((b.lower - 1.0).abs() < 1e-5 && (b.upper - 1.0).abs() < 1e-5);
}

#[test]
fn invalid_params() {
    assert!(MpParams::new(0.0, 1.0).is_err());
    assert!(MpParams::new(1.0, 1.0).is_err());
    assert!(MpParams::new(0.5, 0.0).is_err());
    assert!(MpParams::new(f64::NAN, 1.0).is_err());
}

#[test]
fn density_support() {
    let p = params(0.5, 1.0);
    let b = mp_bounds(p);
    assert_eq!(mp_density(b.lower, p), 0.0);
    assert_eq!(mp_density(b.upper, p), 0.0);
    assert_eq!(mp_density(b.lower * 0.5, p), 0.0);
    assert_eq!(mp_density(b.upper + 1.0, p), 0.0);
    assert_eq!(mp_density(-1.0, p), 0.0);
}

#[test]
fn density_moments() {
    for (c, s) in [(0.5, 1.0), (0.25, 2.0), (0.9, 0.3), (0.01, 1.0)] {
        let p = params(c, s);
        assert!((moment(p, 0, None) - 1.0).abs() < 1e-6, "mass c={c}");
        // E[x] = σ², E[x²] = σ⁴(1 + c)
        assert!((moment(p, 1, None) - s).abs() < 1e-6 * s);
        assert!((moment(p, 2, None) - s * s * (1.0 + c)).abs() < 1e-6 * s * s);
    }
}

#[test]
fn cdf_matches_independent_quadrature() {
    let p = params(0.5, 1.0);
    let b = mp_bounds(p);
    for k in 1..20 {
        let x = b.lower + (b.upper - b.lower) * k as f64 / 20.0;
        assert!((mp_cdf(x, p) - moment(p, 0, Some(x))).abs() < 1e-9, "x={x}");
    }
    assert_eq!(mp_cdf(b.lower - 0.01, p), 0.0);
    assert_eq!(mp_cdf(b.upper + 0.01, p), 1.0);
}

#[test]
fn density_has_interior_mode_and_is_finite() {
    for c in [0.05, 0.3, 0.5, 0.8, 0.99] {
        let p = params(c, 1.0);
        let b = mp_bounds(p);
        let grid: Vec<f64> = (1..400).map(|k| b.lower + (b.upper - b.lower) * k as f64 / 400.0).collect();
        assert!(grid.iter().all(|&x| mp_density(x, p).is_finite() && mp_density(x, p) > 0.0));
        // d/dx log g = 0 at x* = σ²(1 − c)²/(1 + c)
        let mode = (1.0 - c) * (1.0 - c) / (1.0 + c);
        assert!(b.strictly_contains(mode));
        let eps = 1e-4 * (mode - b.lower).min(b.upper - mode);
        assert!(mp_density(mode, p) > mp_density(mode - eps, p));
        assert!(mp_density(mode, p) > mp_density(mode + eps, p));
    }
}

#[test]
fn empirical_cdf_examples() {
    let g = empirical_spectral_cdf(&[3.0, 1.0, 2.0]).unwrap();
    assert!((g.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(g.eval(0.5), 0.0);
    assert_eq!(g.eval(3.5), 1.0);
    assert_eq!(g.support(), [1.0, 2.0, 3.0]);
    assert!(empirical_spectral_cdf(&[]).is_err());
    assert!(empirical_spectral_cdf(&[1.0, f64::NAN]).is_err());
}

#[test]
fn ks_distance_brute_force() {
    let values = [0.3, 0.9, 0.9, 1.4, 2.0];
    let g = empirical_spectral_cdf(&values).unwrap();
    let cdf = |x: f64| (x / 2.5).clamp(0.0, 1.0);
    // sup over a fine grid, including one-sided limits at the jumps
    let mut brute: f64 = 0.0;
    for k in 0..=250_000 {
        let x = 2.5 * k as f64 / 250_000.0;
        brute = brute.max((g.eval(x) - cdf(x)).abs());
        brute = brute.max((g.eval(x - 1e-12) - cdf(x)).abs());
    }
    assert!((g.ks_distance(cdf) - brute).abs() < 1e-5);
}

#[test]
fn null_model_spectrum_follows_law() {
    let x = common::panel(common::gaussian(250, 500, 77));
    let (c, _) = demean(&x);
    let s = sample_covariance(&c).unwrap();
    let d = s.matrix().as_array().diag().mapv(f64::sqrt);
    let corr = s.matrix().as_array() / &d.view().insert_axis(ndarray::Axis(1)) / &d.view().insert_axis(ndarray::Axis(0));
    let values = eigh(&common::sym(corr)).unwrap().eigenvalues().to_vec();
    let p = params(0.5, 1.0);
    let g = empirical_spectral_cdf(&values).unwrap();
    assert!(g.ks_distance(|x| mp_cdf(x, p)) < 0.05);
}

#[test]
fn clip_example() {
    let d = SpectralDecomposition::new(array![5.0, 1.2, 0.8, 0.05], Array2::eye(4));
    let bounds = MpBounds { lower: 0.0858, upper: 2.914 };
    let out = clip_eigenvalues(&d, bounds);
    assert_eq!(out.eigenvalues().to_vec(), vec![5.0, 1.0, 1.0, 0.05]);
    assert_eq!(out.eigenvectors(), d.eigenvectors());
}

#[test]
fn clip_outside_only_is_identity() {
    let d = SpectralDecomposition::new(array![9.0, 4.0, 0.01], Array2::eye(3));
    let out = clip_eigenvalues(&d, MpBounds { lower: 0.1, upper: 3.0 });
    assert_eq!(out, d);
}

#[test]
fn clip_bound_ties_stay() {
    let d = SpectralDecomposition::new(array![3.0, 2.0, 1.0, 0.1], Array2::eye(4));
    let out = clip_eigenvalues(&d, MpBounds { lower: 0.1, upper: 3.0 });
    assert_eq!(out.eigenvalues().to_vec(), vec![3.0, 1.5, 1.5, 0.1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clip_preserves_trace(values in proptest::collection::vec(0.0f64..6.0, 1..40), c in 0.05f64..0.95) {
        let n = values.len();
        let d = SpectralDecomposition::new(Array1::from(values), Array2::eye(n));
        let out = clip_eigenvalues(&d, mp_bounds(params(c, 1.0)));
        let before: f64 = d.eigenvalues().sum();
        let after: f64 = out.eigenvalues().sum();
        prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1e-300));
        prop_assert_eq!(out.eigenvectors(), d.eigenvectors());
    }

    #[test]
    fn bound_width(c in 1e-6f64..0.999, s in 1e-3f64..1e3) {
        let b = mp_bounds(params(c, s));
        let width = 4.0 * s * c.sqrt();
        prop_assert!((b.upper - b.lower - width).abs() <= 1e-12 * width);
        prop_assert!(b.lower >= 0.0 && b.lower < b.upper);
    }
}
