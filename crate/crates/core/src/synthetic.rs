//! Synthetic panels with a known population covariance.
//!
//! The population matrix is `σ²_base · (I + Σ_k (λ_k − 1) u_k u_kᵀ)`: the
//! NULL model when there are no spikes, the SPIKE model otherwise. Panels are
//! drawn as `x_t = A z_t` with `A` the symmetric square root of the
//! population matrix and `z_t` unit-variance innovations (Gaussian or
//! standardized Student-t, optionally AR(1) in time).
//!
//! Randomness comes from PCG-64 (`Lcg128Xsl64`, the `rand_pcg::Pcg64`
//! generator) seeded with `seed_from_u64`, so a `(spec, seed)` pair always
//! yields the same panel.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::estimators::{CovarianceEstimate, EstimateMeta, EstimatorKind};
use crate::market_data::{PanelError, ReturnsPanel};
use crate::matrix::SymmetricMatrix;
use crate::spectral::{eigh, reconstruct, SpectralError};

/// AR(1) warm-up steps discarded before recording.
pub const AR1_BURN_IN: usize = 100;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid spike specification: {0}")]
    InvalidSpec(String),
    #[error("population matrix is not positive semi-definite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("need at least 2 days, got {0}")]
    TooFewDays(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Innovation distribution, always scaled to unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Gaussian,
    /// Student-t with `nu > 2` degrees of freedom, scaled by `√((ν−2)/ν)`.
    StudentT { nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spike {
    pub eigenvalue: f64,
    /// Unit direction; `None` uses the `k`-th standard basis vector.
    pub direction: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSpec {
    pub dim: usize,
    pub spikes: Vec<Spike>,
    pub base_variance: f64,
    pub innovation: Innovation,
    pub temporal_ar1: f64,
}

impl SpikeSpec {
    /// Gaussian NULL model `σ² I`.
    pub fn null(dim: usize, base_variance: f64) -> Self {
        Self {
            dim,
            spikes: Vec::new(),
            base_variance,
            innovation: Innovation::Gaussian,
            temporal_ar1: 0.0,
        }
    }

    pub fn with_spike(mut self, eigenvalue: f64, direction: Option<Array1<f64>>) -> Self {
        self.spikes.push(Spike {
            eigenvalue,
            direction,
        });
        self
    }

    pub fn with_innovation(mut self, innovation: Innovation) -> Self {
        self.innovation = innovation;
        self
    }

    pub fn with_ar1(mut self, coefficient: f64) -> Self {
        self.temporal_ar1 = coefficient;
        self
    }

    /// Replaces every spike direction with a random orthonormal set.
    pub fn with_random_directions(mut self, seed: u64) -> Self {
        let mut rng = Pcg64::seed_from_u64(seed);
        let mut basis: Vec<Array1<f64>> = Vec::new();
        for spike in &mut self.spikes {
            let v = loop {
                let mut v = Array1::from_shape_fn(self.dim, |_| StandardNormal.sample(&mut rng));
                for b in &basis {
                    let proj = v.dot(b);
                    v.scaled_add(-proj, b);
                }
                let norm = v.dot(&v).sqrt();
                if norm > 1e-8 {
                    break v / norm;
                }
            };
            basis.push(v.clone());
            spike.direction = Some(v);
        }
        self
    }

    fn directions(&self) -> Vec<Array1<f64>> {
        self.spikes
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.direction.clone().unwrap_or_else(|| {
                    let mut e = Array1::zeros(self.dim);
                    if k < self.dim {
                        e[k] = 1.0;
                    }
                    e
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |msg: String| Err(SyntheticError::InvalidSpec(msg));
        if self.dim < 2 {
            return bad(format!("dimension {} < 2", self.dim));
        }
        if self.spikes.len() > self.dim {
            return bad(format!("{} spikes in dimension {}", self.spikes.len(), self.dim));
        }
        if !(self.base_variance > 0.0 && self.base_variance.is_finite()) {
            return bad(format!("base variance {}", self.base_variance));
        }
        if !(0.0..1.0).contains(&self.temporal_ar1) {
            return bad(format!("AR(1) coefficient {} outside [0, 1)", self.temporal_ar1));
        }
        if let Innovation::StudentT { nu } = self.innovation {
            if !(nu > 2.0) {
                return bad(format!("student-t needs nu > 2, got {nu}"));
            }
        }
        if let Some(s) = self.spikes.iter().find(|s| !(s.eigenvalue > 1.0 && s.eigenvalue.is_finite())) {
            return bad(format!("spike eigenvalue {} must exceed 1", s.eigenvalue));
        }
        let dirs = self.directions();
        for (i, u) in dirs.iter().enumerate() {
            if u.len() != self.dim {
                return bad(format!("direction {i} has length {}", u.len()));
            }
            for (j, v) in dirs.iter().enumerate().skip(i) {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (u.dot(v) - expected).abs() > 1e-10 {
                    return bad(format!("directions {i} and {j} are not orthonormal"));
                }
            }
        }
        Ok(())
    }
}

/// `σ²_base · (I + Σ_k (λ_k − 1) u_k u_kᵀ)`.
pub fn build_population(spec: &SpikeSpec) -> Result<CovarianceEstimate, SyntheticError> {
    spec.validate()?;
    let m = spec.dim;
    let mut a = Array2::<f64>::eye(m);
    for (spike, u) in spec.spikes.iter().zip(spec.directions()) {
        let scale = spike.eigenvalue - 1.0;
        for i in 0..m {
            for j in 0..m {
                a[[i, j]] += scale * u[i] * u[j];
            }
        }
    }
    a *= spec.base_variance;
    let matrix = SymmetricMatrix::symmetrized(&a).expect("finite");
    Ok(CovarianceEstimate::new(matrix, EstimatorKind::Population, EstimateMeta::None)
        .expect("diagonal is positive"))
}

/// Draws an `M × n_days` panel with population covariance `pop`.
pub fn sample_panel(
    pop: &CovarianceEstimate,
    n_days: usize,
    spec: &SpikeSpec,
    seed: u64,
) -> Result<ReturnsPanel, SyntheticError> {
    spec.validate()?;
    if n_days < 2 {
        return Err(SyntheticError::TooFewDays(n_days));
    }
    let m = pop.dim();
    let d = eigh(pop.matrix())?;
    if d.min_eigenvalue() < -1e-10 * pop.trace().abs() {
        return Err(SyntheticError::NotPsd(d.min_eigenvalue()));
    }
    let root = reconstruct(&d.with_eigenvalues(d.eigenvalues().mapv(|l| l.max(0.0).sqrt())));

    let mut rng = Pcg64::seed_from_u64(seed);
    let student = match spec.innovation {
        Innovation::StudentT { nu } => Some((
            StudentT::new(nu).map_err(|e| SyntheticError::InvalidSpec(e.to_string()))?,
            ((nu - 2.0) / nu).sqrt(),
        )),
        Innovation::Gaussian => None,
    };
    let mut draw = || -> f64 {
        match &student {
            Some((t, scale)) => scale * t.sample(&mut rng),
            None => StandardNormal.sample(&mut rng),
        }
    };

    let ar = spec.temporal_ar1;
    let burn = if ar > 0.0 { AR1_BURN_IN } else { 0 };
    let innovation_scale = (1.0 - ar * ar).sqrt();
    let mut z = Array2::<f64>::zeros((m, n_days));
    let mut state: Vec<f64> = (0..m).map(|_| draw()).collect();
    for step in 0..(burn + n_days) {
        if step > 0 {
            for s in state.iter_mut() {
                *s = ar * *s + innovation_scale * draw();
            }
        }
        if step >= burn {
            for (i, s) in state.iter().enumerate() {
                z[[i, step - burn]] = *s;
            }
        }
    }
    let x = root.as_array().dot(&z);
    Ok(ReturnsPanel::from_matrix(x)?)
}

/// `‖A − B‖_F`.
pub fn frobenius_error(a: &CovarianceEstimate, b: &CovarianceEstimate) -> Result<f64, SyntheticError> {
    if a.dim() != b.dim() {
        return Err(SyntheticError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.matrix()
        .as_array()
        .iter()
        .zip(b.matrix().as_array())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn null_and_axis_spike() {
        let p = build_population(&SpikeSpec::null(3, 2.0)).unwrap();
        assert_eq!(p.matrix().as_array(), &(Array2::<f64>::eye(3) * 2.0));
        let p = build_population(&SpikeSpec::null(4, 1.0).with_spike(10.0, None)).unwrap();
        let mut expected = Array2::<f64>::eye(4);
        expected[[0, 0]] = 10.0;
        assert_eq!(p.matrix().as_array(), &expected);
    }

    #[test]
    fn invalid_specs() {
        assert!(SpikeSpec::null(4, 1.0).with_spike(0.5, None).validate().is_err());
        assert!(SpikeSpec::null(4, 1.0)
            .with_innovation(Innovation::StudentT { nu: 2.0 })
            .validate()
            .is_err());
        assert!(SpikeSpec::null(2, 1.0)
            .with_spike(3.0, Some(array![1.0, 1.0]))
            .validate()
            .is_err());
        assert!(SpikeSpec::null(4, 1.0).with_ar1(1.0).validate().is_err());
    }

    #[test]
    fn same_seed_same_panel() {
        let spec = SpikeSpec::null(3, 1.0).with_spike(4.0, None);
        let pop = build_population(&spec).unwrap();
        let a = sample_panel(&pop, 50, &spec, 9).unwrap();
        let b = sample_panel(&pop, 50, &spec, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_panel(&pop, 50, &spec, 10).unwrap());
    }

    #[test]
    fn frobenius_examples() {
        let i = CovarianceEstimate::from_array(Array2::eye(2), EstimatorKind::Scm).unwrap();
        let z = CovarianceEstimate::from_array(Array2::zeros((2, 2)), EstimatorKind::Scm).unwrap();
        assert_eq!(frobenius_error(&i, &i).unwrap(), 0.0);
        assert!((frobenius_error(&i, &z).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }
}
