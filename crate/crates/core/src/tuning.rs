//! Choosing the combination weights `(θ, φ)`.
//!
//! On real data the population covariance is unknown, so [`tune_weights`]
//! splits the training window chronologically, builds `Σ*(θ, φ)` on the first
//! part for every grid point, and keeps the weights whose minimum-variance
//! portfolio realizes the smallest variance on the held-out part.
//!
//! When the population matrix is known (synthetic data), [`oracle_weights`]
//! projects it onto the triangle spanned by `F`, `S_mp` and `S` in Frobenius
//! geometry.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimators::{
    combine, combine_arrays, mp_clean, sample_covariance, shrinkage_target_f, CombinationWeights,
    CovarianceEstimate, EstimatorError,
};
use crate::linalg::dot;
use crate::market_data::{demean, ReturnsPanel};
use crate::matrix::SymmetricMatrix;
use crate::portfolio::{solve_min_variance_from, PortfolioError, ReturnForecast};
use crate::qp::SimplexQp;
use crate::spectral::{eigh, SpectralError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuningError {
    #[error("invalid grid: step {step}, validation fraction {validation_fraction}")]
    InvalidGrid { step: f64, validation_fraction: f64 },
    #[error("training window of {days} days cannot be split with validation fraction {validation_fraction}")]
    WindowTooSmall { days: usize, validation_fraction: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Portfolio(#[from] PortfolioError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Grid resolution for `θ` and `φ` and the held-out share of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    step: f64,
    validation_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 0.02,
            validation_fraction: 0.25,
        }
    }
}

impl GridSpec {
    pub fn new(step: f64, validation_fraction: f64) -> Result<Self, TuningError> {
        let err = TuningError::InvalidGrid {
            step,
            validation_fraction,
        };
        if !(step > 0.0 && step <= 0.5) || !(validation_fraction > 0.0 && validation_fraction < 0.5) {
            return Err(err);
        }
        let k = 1.0 / step;
        if (k - k.round()).abs() > 1e-9 {
            return Err(err);
        }
        Ok(Self {
            step,
            validation_fraction,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn validation_fraction(&self) -> f64 {
        self.validation_fraction
    }

    /// `0, step, …, 1` computed as `k / K` so the endpoints are exact.
    pub fn points(&self) -> Vec<f64> {
        let k = (1.0 / self.step).round() as usize;
        (0..=k).map(|i| i as f64 / k as f64).collect()
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub theta: f64,
    pub phi: f64,
    /// Realized variance of the portfolio's daily returns on the validation days.
    pub validation_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningOutcome {
    pub weights: CombinationWeights,
    pub validation_variance: f64,
    /// Ordered by `φ`, then `θ`.
    pub surface: Vec<GridPoint>,
}

/// Chronological fit/validation split of a raw training window.
pub(crate) struct ValidationSplit {
    fit: ReturnsPanel,
    validation: Array2<f64>,
}

impl ValidationSplit {
    pub(crate) fn new(train: &ReturnsPanel, validation_fraction: f64) -> Option<Self> {
        let n = train.n_days();
        let n_fit = ((1.0 - validation_fraction) * n as f64).round() as usize;
        if n_fit < 2 || n.saturating_sub(n_fit) < 2 {
            return None;
        }
        let fit = train.columns(0..n_fit).ok()?;
        let validation = train.returns().slice(ndarray::s![.., n_fit..]).to_owned();
        Some(Self { fit, validation })
    }

    /// Builds `S`, `F` and (optionally) `S_mp` on the demeaned fit segment.
    pub(crate) fn components(&self, with_mp: bool) -> Result<Components, TuningError> {
        let (centered, _) = demean(&self.fit);
        let scm = sample_covariance(&centered)?;
        let f = shrinkage_target_f(&scm);
        let mp = if with_mp {
            Some(mp_clean(&scm, centered.dimensionality())?)
        } else {
            None
        };
        let top = |e: &CovarianceEstimate| -> Result<f64, TuningError> {
            Ok(eigh(e.matrix())?.max_eigenvalue())
        };
        Ok(Components {
            lmax_scm: top(&scm)?,
            lmax_f: top(&f)?,
            lmax_mp: mp.as_ref().map(top).transpose()?.unwrap_or(0.0),
            scm,
            f,
            mp,
            validation: self.validation.clone(),
        })
    }
}

pub(crate) struct Components {
    scm: CovarianceEstimate,
    f: CovarianceEstimate,
    mp: Option<CovarianceEstimate>,
    lmax_scm: f64,
    lmax_f: f64,
    lmax_mp: f64,
    validation: Array2<f64>,
}

impl Components {
    /// Realized validation variance of the min-variance portfolio of `cov`,
    /// plus the weights (for warm starts).
    fn score(
        &self,
        cov: Array2<f64>,
        lambda_bound: f64,
        fc: &ReturnForecast,
        start: Option<&[f64]>,
    ) -> (f64, Vec<f64>) {
        let cov = SymmetricMatrix::from_trusted(cov);
        match solve_min_variance_from(&cov, Some(fc), lambda_bound, start) {
            Ok(a) => {
                let w = a.portfolio.weights();
                let v = realized_variance(&self.validation.t().dot(w));
                (v, w.to_vec())
            }
            Err(_) => (f64::INFINITY, vec![]),
        }
    }

    pub(crate) fn score_shrinkage(&self, grid: &[f64], fc: &ReturnForecast) -> Vec<f64> {
        let s = self.scm.matrix().as_array();
        let f = self.f.matrix().as_array();
        let mut start: Option<Vec<f64>> = None;
        grid.iter()
            .map(|&rho| {
                let cov = f * rho + s * (1.0 - rho);
                let bound = rho * self.lmax_f + (1.0 - rho) * self.lmax_scm;
                let (v, w) = self.score(cov, bound, fc, start.as_deref());
                start = (!w.is_empty()).then_some(w);
                v
            })
            .collect()
    }

    /// Validation variance for every `(φ, θ)` pair, indexed `[φ][θ]`.
    fn score_grid(&self, points: &[f64], fc: &ReturnForecast) -> Vec<Vec<f64>> {
        let mp = self.mp.as_ref().expect("grid scoring needs the clipped matrix");
        let (f, m, s) = (
            self.f.matrix().as_array(),
            mp.matrix().as_array(),
            self.scm.matrix().as_array(),
        );
        points
            .par_iter()
            .map(|&phi| {
                if phi == 0.0 {
                    // Σ* = S for every θ
                    let (v, _) = self.score(s.clone(), self.lmax_scm, fc, None);
                    return vec![v; points.len()];
                }
                let mut start: Option<Vec<f64>> = None;
                points
                    .iter()
                    .map(|&theta| {
                        let w = CombinationWeights::new(theta, phi).expect("grid inside [0,1]");
                        let (a, b, g) = w.simplex();
                        let bound = a * self.lmax_f + b * self.lmax_mp + g * self.lmax_scm;
                        let (v, p) =
                            self.score(combine_arrays(f, m, s, w), bound, fc, start.as_deref());
                        start = (!p.is_empty()).then_some(p);
                        v
                    })
                    .collect()
            })
            .collect()
    }
}

/// Population variance (`1/T`) of a return series.
pub(crate) fn realized_variance(series: &Array1<f64>) -> f64 {
    let t = series.len() as f64;
    let mean = series.sum() / t;
    series.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / t
}

/// Grid search for `(θ, φ)` on a chronological validation split of `train`.
///
/// `train` holds raw (not demeaned) returns; the fit segment is demeaned
/// internally. Ties in validation variance go to the smaller `φ`, then the
/// smaller `θ`, independent of evaluation order.
pub fn tune_weights(
    train: &ReturnsPanel,
    fc: &ReturnForecast,
    grid: GridSpec,
) -> Result<TuningOutcome, TuningError> {
    if fc.g.len() != train.n_assets() {
        return Err(TuningError::DimensionMismatch {
            left: train.n_assets(),
            right: fc.g.len(),
        });
    }
    let split = ValidationSplit::new(train, grid.validation_fraction).ok_or(
        TuningError::WindowTooSmall {
            days: train.n_days(),
            validation_fraction: grid.validation_fraction,
        },
    )?;
    let parts = split.components(true)?;
    let points = grid.points();
    let scores = parts.score_grid(&points, fc);

    let mut surface = Vec::with_capacity(points.len() * points.len());
    let mut best: Option<GridPoint> = None;
    for (i, &phi) in points.iter().enumerate() {
        for (j, &theta) in points.iter().enumerate() {
            let point = GridPoint {
                theta,
                phi,
                validation_variance: scores[i][j],
            };
            if best.is_none_or(|b| point.validation_variance < b.validation_variance) {
                best = Some(point);
            }
            surface.push(point);
        }
    }
    let best = best.expect("grid is non-empty");
    Ok(TuningOutcome {
        weights: CombinationWeights::new(best.theta, best.phi)?,
        validation_variance: best.validation_variance,
        surface,
    })
}

/// Frobenius projection of `pop` onto the convex hull of `{F, S_mp, S}`.
///
/// Solves `min ‖pop − αF − βS_mp − γS‖_F` over the 2-simplex as a 3-variable
/// QP on the Frobenius Gram matrix, then maps back with `φ = α + β`,
/// `θ = α/(α + β)`. Returns the weights and the attained distance.
pub fn oracle_weights(
    pop: &CovarianceEstimate,
    f: &CovarianceEstimate,
    mp: &CovarianceEstimate,
    scm: &CovarianceEstimate,
) -> Result<(CombinationWeights, f64), TuningError> {
    for other in [f, mp, scm] {
        if other.dim() != pop.dim() {
            return Err(TuningError::DimensionMismatch {
                left: pop.dim(),
                right: other.dim(),
            });
        }
    }
    let flat = |e: &CovarianceEstimate| -> Vec<f64> { e.matrix().as_array().iter().copied().collect() };
    let comps = [flat(f), flat(mp), flat(scm)];
    let target = flat(pop);

    let mut q = vec![0.0; 9];
    let mut c = vec![0.0; 3];
    for i in 0..3 {
        for j in i..3 {
            let g = 2.0 * dot(&comps[i], &comps[j]);
            q[i * 3 + j] = g;
            q[j * 3 + i] = g;
        }
        c[i] = -2.0 * dot(&comps[i], &target);
    }
    let q_norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gram = SymmetricMatrix::new(Array2::from_shape_vec((3, 3), q.clone()).expect("3x3"))
        .map_err(EstimatorError::from)?;
    let lipschitz = eigh(&gram)?.max_eigenvalue();
    let qp = SimplexQp {
        q: &q,
        c: Some(&c),
        halfspace: None,
        lipschitz,
        tol: 1e-13 * (q_norm + c_norm),
    };
    let sol = qp.solve(None);

    // rounding-level weights are snapped to zero so vertex solutions map
    // back to exact (θ, φ)
    let mut w = sol.x;
    for v in w.iter_mut() {
        if *v < 1e-12 {
            *v = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    let weights = CombinationWeights::from_simplex(w[0], w[1])?;
    let combined = combine(f, mp, scm, weights)?;
    let err = crate::synthetic::frobenius_error(pop, &combined)
        .expect("dimensions checked above");
    Ok((weights, err))
}
