mod common;

use covcraft::synthetic::SyntheticError;
use covcraft::{build_population, eigh, frobenius_error, sample_covariance, sample_panel, demean, Innovation, SpikeSpec};
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

#[test]
fn null_and_axis_spike() {
    let pop = build_population(&SpikeSpec::null(5, 2e-4)).unwrap();
    assert_eq!(pop.matrix().as_array(), &(Array2::<f64>::eye(5) * 2e-4));
    let pop = build_population(&SpikeSpec::null(4, 1.0).with_spike(10.0, None)).unwrap();
    assert_eq!(pop.matrix().as_array(), &Array2::from_diag(&array![10.0, 1.0, 1.0, 1.0]));
}

#[test]
fn random_orthonormal_spikes_have_the_requested_spectrum() {
    let spec = SpikeSpec::null(50, 1.0).with_spike(8.0, None).with_spike(4.0, None).with_random_directions(3);
    let values = eigh(build_population(&spec).unwrap().matrix()).unwrap().eigenvalues().to_owned();
    let mut expected = vec![8.0, 4.0];
    expected.extend(std::iter::repeat_n(1.0, 48));
    for (got, want) in values.iter().zip(&expected) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        SpikeSpec::null(1, 1.0),
        SpikeSpec::null(3, 0.0),
        SpikeSpec::null(3, 1.0).with_spike(0.5, None),
        SpikeSpec::null(3, 1.0).with_ar1(1.0),
        SpikeSpec::null(3, 1.0).with_innovation(Innovation::StudentT { nu: 2.0 }),
        SpikeSpec::null(3, 1.0).with_spike(2.0, Some(array![1.0, 1.0, 0.0])),
        SpikeSpec::null(2, 1.0).with_spike(2.0, None).with_spike(2.0, None).with_spike(2.0, None),
    ];
    for spec in bad {
        assert!(matches!(build_population(&spec), Err(SyntheticError::InvalidSpec(_))), "{spec:?}");
    }
    let spec = SpikeSpec::null(3, 1.0);
    let pop = build_population(&spec).unwrap();
    assert!(matches!(sample_panel(&pop, 1, &spec, 0), Err(SyntheticError::TooFewDays(1))));
}

#[test]
fn large_sample_covariance_converges() {
    let spec = SpikeSpec::null(3, 1.0);
    let pop = build_population(&spec).unwrap();
    let (c, _) = demean(&sample_panel(&pop, 100_000, &spec, 5).unwrap());
    let s = sample_covariance(&c).unwrap();
    assert!(common::max_abs_diff(s.matrix().as_array(), &Array2::eye(3)) < 0.02);
}

#[test]
fn same_seed_same_panel() {
    let spec = SpikeSpec::null(6, 1e-4).with_spike(5.0, None).with_innovation(Innovation::StudentT { nu: 4.0 });
    let pop = build_population(&spec).unwrap();
    let a = sample_panel(&pop, 50, &spec, 9).unwrap();
    let b = sample_panel(&pop, 50, &spec, 9).unwrap();
    let bits = |p: &covcraft::ReturnsPanel| p.returns().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&sample_panel(&pop, 50, &spec, 10).unwrap()));
}

fn kurtosis(x: &Array1<f64>) -> f64 {
    let mean = x.mean().unwrap();
    let m2 = x.mapv(|v| (v - mean).powi(2)).mean().unwrap();
    let m4 = x.mapv(|v| (v - mean).powi(4)).mean().unwrap();
    m4 / (m2 * m2)
}

#[test]
fn student_t_margins_are_heavy_tailed() {
    let spec = SpikeSpec::null(2, 1.0).with_innovation(Innovation::StudentT { nu: 3.0 });
    let pop = build_population(&spec).unwrap();
    let heavy = (0..20)
        .filter(|&seed| kurtosis(&sample_panel(&pop, 5000, &spec, seed).unwrap().returns().row(0).to_owned()) > 3.0)
        .count();
    assert!(heavy >= 19, "{heavy}/20");
    // unit variance after scaling
    let (c, _) = demean(&sample_panel(&pop, 200_000, &spec.clone().with_innovation(Innovation::StudentT { nu: 5.0 }), 1).unwrap());
    let v = sample_covariance(&c).unwrap().matrix().get(0, 0);
    assert!((v - 1.0).abs() < 0.03, "{v}");
}

#[test]
fn ar1_margins_keep_unit_variance_and_lag_correlation() {
    let phi = 0.6;
    let spec = SpikeSpec::null(2, 1.0).with_ar1(phi);
    let pop = build_population(&spec).unwrap();
    let p = sample_panel(&pop, 100_000, &spec, 4).unwrap();
    let x = p.returns().row(0).to_owned();
    let mean = x.mean().unwrap();
    let var = x.mapv(|v| (v - mean).powi(2)).mean().unwrap();
    let lag: f64 = x.iter().zip(x.iter().skip(1)).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / (x.len() - 1) as f64;
    assert!((var - 1.0).abs() < 0.03, "{var}");
    assert!((lag / var - phi).abs() < 0.02, "{}", lag / var);
}

#[test]
fn frobenius_examples() {
    let i2 = common::cov(Array2::eye(2));
    assert_eq!(frobenius_error(&i2, &i2).unwrap(), 0.0);
    let zero = common::cov(Array2::zeros((2, 2)));
    assert!((frobenius_error(&i2, &zero).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert!(frobenius_error(&i2, &common::cov(Array2::eye(3))).is_err());
}

proptest! {
    #[test]
    fn frobenius_triangle_inequality(seed in any::<u64>(), m in 2usize..8) {
        let a = common::cov(common::random_psd(m, 4, seed));
        let b = common::cov(common::random_psd(m, 4, seed ^ 1));
        let c = common::cov(common::random_psd(m, 4, seed ^ 2));
        let ab = frobenius_error(&a, &b).unwrap();
        let bc = frobenius_error(&b, &c).unwrap();
        let ac = frobenius_error(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(ab, frobenius_error(&b, &a).unwrap());
    }
}
