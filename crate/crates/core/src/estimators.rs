//! Covariance estimators: sample covariance, shrinkage targets, linear
//! shrinkage, Marchenko-Pastur cleaning and the three-way convex combination.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::Serialize;
use thiserror::Error;

use crate::market_data::ReturnsPanel;
use crate::matrix::{MatrixError, SymmetricMatrix};
use crate::portfolio::ReturnForecast;
use crate::rmt::{clip_eigenvalues, mp_bounds, MpParams, RmtError};
use crate::spectral::{eigh, reconstruct, SpectralError};
use crate::tuning;

/// Grid spacing for the shrinkage intensity search.
pub const RHO_GRID_STEP: f64 = 0.05;
/// A row counts as demeaned when `|mean| ≤ DEMEAN_TOL · max|x|`.
pub const DEMEAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("row {row} is not demeaned (mean {mean:e})")]
    NotDemeaned { row: usize, mean: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("shrinkage intensity {0} is outside [0, 1]")]
    RhoOutOfRange(f64),
    #[error("combination weights (theta = {theta}, phi = {phi}) are outside [0, 1]²")]
    WeightsOutOfRange { theta: f64, phi: f64 },
    #[error("asset {0} has non-positive variance")]
    ZeroVariance(usize),
    #[error("negative variance on the diagonal at {0}")]
    NegativeDiagonal(usize),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Rmt(#[from] RmtError),
}

/// Which estimator produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Scm,
    #[serde(rename = "identity")]
    IdentityTarget,
    #[serde(rename = "f")]
    FTarget,
    Shrink,
    Mp,
    Combined,
    /// Known population matrix (synthetic data).
    Population,
}

impl EstimatorKind {
    /// The six estimators a backtest can compare.
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Scm,
        EstimatorKind::IdentityTarget,
        EstimatorKind::FTarget,
        EstimatorKind::Shrink,
        EstimatorKind::Mp,
        EstimatorKind::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Scm => "scm",
            EstimatorKind::IdentityTarget => "identity",
            EstimatorKind::FTarget => "f",
            EstimatorKind::Shrink => "shrink",
            EstimatorKind::Mp => "mp",
            EstimatorKind::Combined => "combined",
            EstimatorKind::Population => "population",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown estimator {s:?} (expected scm|identity|f|shrink|mp|combined)"))
    }
}

/// `(θ, φ) ∈ [0, 1]²`, equivalently `(α, β, γ) = (θφ, (1−θ)φ, 1−φ)` on the
/// 2-simplex: the weights of `F`, the clipped matrix and the sample covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombinationWeights {
    theta: f64,
    phi: f64,
}

impl CombinationWeights {
    pub fn new(theta: f64, phi: f64) -> Result<Self, EstimatorError> {
        if !((0.0..=1.0).contains(&theta) && (0.0..=1.0).contains(&phi)) {
            return Err(EstimatorError::WeightsOutOfRange { theta, phi });
        }
        Ok(Self { theta, phi })
    }

    /// Inverse map from simplex weights; `θ = 0` when `α + β = 0`.
    pub fn from_simplex(alpha: f64, beta: f64) -> Result<Self, EstimatorError> {
        let phi = (alpha + beta).clamp(0.0, 1.0);
        let theta = if alpha + beta > 0.0 {
            (alpha / (alpha + beta)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Self::new(theta, phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `(α, β, γ)`.
    pub fn simplex(&self) -> (f64, f64, f64) {
        (
            self.theta * self.phi,
            (1.0 - self.theta) * self.phi,
            1.0 - self.phi,
        )
    }
}

/// Parameters an estimate was built with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EstimateMeta {
    None,
    Rho { rho: f64 },
    Weights(CombinationWeights),
}

/// A covariance matrix tagged with the estimator that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    matrix: SymmetricMatrix,
    kind: EstimatorKind,
    meta: EstimateMeta,
}

impl CovarianceEstimate {
    /// Wraps a matrix; rejects negative diagonal entries.
    pub fn new(
        matrix: SymmetricMatrix,
        kind: EstimatorKind,
        meta: EstimateMeta,
    ) -> Result<Self, EstimatorError> {
        if let Some(i) = (0..matrix.dim()).find(|&i| matrix.get(i, i) < 0.0) {
            return Err(EstimatorError::NegativeDiagonal(i));
        }
        Ok(Self { matrix, kind, meta })
    }

    pub fn from_array(a: Array2<f64>, kind: EstimatorKind) -> Result<Self, EstimatorError> {
        Self::new(SymmetricMatrix::new(a)?, kind, EstimateMeta::None)
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn meta(&self) -> EstimateMeta {
        self.meta
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Smallest eigenvalue ≥ `−1e-10 · trace`.
    pub fn is_psd(&self) -> Result<bool, EstimatorError> {
        let d = eigh(&self.matrix)?;
        Ok(d.min_eigenvalue() >= -1e-10 * self.trace().abs())
    }
}

fn same_dim(a: &CovarianceEstimate, b: &CovarianceEstimate) -> Result<(), EstimatorError> {
    if a.dim() != b.dim() {
        return Err(EstimatorError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// `X Xᵀ / N` of a demeaned panel.
pub fn sample_covariance(train: &ReturnsPanel) -> Result<CovarianceEstimate, EstimatorError> {
    let x = train.returns();
    for (row, r) in x.rows().into_iter().enumerate() {
        let mean = r.mean().expect("non-empty row");
        let scale = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if mean.abs() > DEMEAN_TOL * scale {
            return Err(EstimatorError::NotDemeaned { row, mean });
        }
    }
    let n = train.n_days() as f64;
    let product = x.dot(&x.t()) / n;
    // mirror the upper triangle so the result is exactly symmetric
    let m = product.nrows();
    let mut s = product;
    for i in 0..m {
        for j in (i + 1)..m {
            s[[j, i]] = s[[i, j]];
        }
    }
    CovarianceEstimate::new(SymmetricMatrix::from_trusted(s), EstimatorKind::Scm, EstimateMeta::None)
}

/// `(trace(S)/M) · I`.
pub fn identity_target(scm: &CovarianceEstimate) -> CovarianceEstimate {
    let m = scm.dim();
    let mean_var = scm.trace() / m as f64;
    let mut a = Array2::zeros((m, m));
    a.diag_mut().fill(mean_var);
    CovarianceEstimate {
        matrix: SymmetricMatrix::from_trusted(a),
        kind: EstimatorKind::IdentityTarget,
        meta: EstimateMeta::None,
    }
}

/// Sample variances on the diagonal, mean sample covariance elsewhere.
pub fn shrinkage_target_f(scm: &CovarianceEstimate) -> CovarianceEstimate {
    let s = scm.matrix.as_array();
    let m = scm.dim();
    let mut off_sum = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            off_sum += s[[i, j]];
        }
    }
    let pairs = (m * (m - 1) / 2).max(1) as f64;
    let off_mean = off_sum / pairs;
    let f = Array2::from_shape_fn((m, m), |(i, j)| if i == j { s[[i, i]] } else { off_mean });
    CovarianceEstimate {
        matrix: SymmetricMatrix::from_trusted(f),
        kind: EstimatorKind::FTarget,
        meta: EstimateMeta::None,
    }
}

/// `ρ·F + (1−ρ)·S`.
pub fn linear_shrinkage(
    scm: &CovarianceEstimate,
    target: &CovarianceEstimate,
    rho: f64,
) -> Result<CovarianceEstimate, EstimatorError> {
    same_dim(scm, target)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(EstimatorError::RhoOutOfRange(rho));
    }
    let out = Array2::from_shape_fn((scm.dim(), scm.dim()), |(i, j)| {
        rho * target.matrix.get(i, j) + (1.0 - rho) * scm.matrix.get(i, j)
    });
    Ok(CovarianceEstimate {
        matrix: SymmetricMatrix::from_trusted(out),
        kind: EstimatorKind::Shrink,
        meta: EstimateMeta::Rho { rho },
    })
}

/// Shrinkage intensity toward `F` picked on a chronological validation split.
///
/// The first `(1 − validation_fraction)` of `train` (raw returns) is demeaned
/// and used to build `S` and `F`; for each `ρ ∈ {0, 0.05, …, 1}` the
/// minimum-variance portfolio of the shrunk matrix is held over the remaining
/// days, and the `ρ` with the smallest realized variance wins (ties go to the
/// smaller `ρ`). Falls back to `ρ = 0` when either segment is too short.
pub fn shrinkage_intensity(
    train: &ReturnsPanel,
    forecast: &ReturnForecast,
    validation_fraction: f64,
) -> Result<f64, EstimatorError> {
    let steps = (1.0 / RHO_GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let Some(split) = tuning::ValidationSplit::new(train, validation_fraction) else {
        return Ok(0.0);
    };
    let parts = match split.components(false) {
        Ok(p) => p,
        Err(_) => return Ok(0.0),
    };
    let scores = parts.score_shrinkage(&grid, forecast);
    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(k, _)| grid[k])
        .unwrap_or(0.0);
    Ok(best)
}

/// Marchenko-Pastur eigenvalue clipping on the correlation matrix.
///
/// `S → C = D^{-1/2} S D^{-1/2}`, clip eigenvalues of `C` strictly inside
/// `[(1−√c)², (1+√c)²]` to their mean, rebuild, reset the diagonal to 1, and
/// rescale by `D^{1/2}`. Asset variances are preserved exactly.
pub fn mp_clean(scm: &CovarianceEstimate, c: f64) -> Result<CovarianceEstimate, EstimatorError> {
    let params = MpParams::new(c, 1.0)?;
    let s = scm.matrix.as_array();
    let m = scm.dim();
    let sd: Vec<f64> = (0..m)
        .map(|i| {
            let v = s[[i, i]];
            if v > 0.0 {
                Ok(v.sqrt())
            } else {
                Err(EstimatorError::ZeroVariance(i))
            }
        })
        .collect::<Result<_, _>>()?;
    let corr = Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            1.0
        } else {
            s[[i, j]] / (sd[i] * sd[j])
        }
    });
    let corr = SymmetricMatrix::symmetrized(&corr)?;
    let decomposition = eigh(&corr)?;
    let clipped = clip_eigenvalues(&decomposition, mp_bounds(params));
    let cleaned = reconstruct(&clipped);
    let c_clean = cleaned.as_array();
    let out = Array2::from_shape_fn((m, m), |(i, j)| {
        let (i, j) = (i.min(j), i.max(j));
        if i == j {
            s[[i, i]]
        } else {
            sd[i] * c_clean[[i, j]] * sd[j]
        }
    });
    Ok(CovarianceEstimate {
        matrix: SymmetricMatrix::from_trusted(out),
        kind: EstimatorKind::Mp,
        meta: EstimateMeta::None,
    })
}

/// `θφ·F + (1−θ)φ·S_mp + (1−φ)·S`.
pub fn combine(
    f: &CovarianceEstimate,
    mp: &CovarianceEstimate,
    scm: &CovarianceEstimate,
    w: CombinationWeights,
) -> Result<CovarianceEstimate, EstimatorError> {
    same_dim(f, mp)?;
    same_dim(f, scm)?;
    let out = combine_arrays(f.matrix.as_array(), mp.matrix.as_array(), scm.matrix.as_array(), w);
    Ok(CovarianceEstimate {
        matrix: SymmetricMatrix::from_trusted(out),
        kind: EstimatorKind::Combined,
        meta: EstimateMeta::Weights(w),
    })
}

pub(crate) fn combine_arrays(
    f: &Array2<f64>,
    mp: &Array2<f64>,
    scm: &Array2<f64>,
    w: CombinationWeights,
) -> Array2<f64> {
    let (a, b, g) = w.simplex();
    let mut out = Array2::zeros(f.dim());
    ndarray::Zip::from(&mut out)
        .and(f)
        .and(mp)
        .and(scm)
        .for_each(|o, &x, &y, &z| *o = a * x + b * y + g * z);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::demean;
    use ndarray::array;

    fn est(a: Array2<f64>) -> CovarianceEstimate {
        CovarianceEstimate::from_array(a, EstimatorKind::Scm).unwrap()
    }

    #[test]
    fn scm_single_row_and_identical_rows() {
        let p = ReturnsPanel::from_matrix(array![[-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]]).unwrap();
        let s = sample_covariance(&p).unwrap();
        assert!(s.matrix().as_array().iter().all(|&v| (v - 2.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn scm_rejects_raw_panel() {
        let p = ReturnsPanel::from_matrix(array![[1.0, 2.0, 3.0], [0.0, 1.0, -1.0]]).unwrap();
        assert!(matches!(
            sample_covariance(&p),
            Err(EstimatorError::NotDemeaned { row: 0, .. })
        ));
        let (d, _) = demean(&p);
        assert!(sample_covariance(&d).is_ok());
    }

    #[test]
    fn identity_target_examples() {
        let t = identity_target(&est(array![[1.0, 0.5], [0.5, 3.0]]));
        assert_eq!(t.matrix().as_array(), &array![[2.0, 0.0], [0.0, 2.0]]);
        let i = est(Array2::eye(3));
        assert_eq!(identity_target(&i).matrix().as_array(), i.matrix().as_array());
    }

    #[test]
    fn f_target_examples() {
        let s = est(array![[1.0, 0.2], [0.2, 4.0]]);
        assert_eq!(shrinkage_target_f(&s).matrix().as_array(), s.matrix().as_array());
        let s = est(Array2::eye(3));
        assert_eq!(shrinkage_target_f(&s).matrix().as_array(), &Array2::<f64>::eye(3));
        let s = est(array![[1.0, 0.1, 0.2], [0.1, 1.0, 0.3], [0.2, 0.3, 1.0]]);
        let f = shrinkage_target_f(&s);
        for i in 0..3 {
            assert_eq!(f.matrix().get(i, i), 1.0);
            for j in 0..3 {
                if i != j {
                    assert!((f.matrix().get(i, j) - 0.2).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn linear_shrinkage_examples() {
        let s = est(array![[2.0, 0.0], [0.0, 2.0]]);
        let f = est(Array2::eye(2));
        assert_eq!(linear_shrinkage(&s, &f, 0.0).unwrap().matrix(), s.matrix());
        assert_eq!(linear_shrinkage(&s, &f, 1.0).unwrap().matrix(), f.matrix());
        let half = linear_shrinkage(&s, &f, 0.5).unwrap();
        assert_eq!(half.matrix().as_array(), &array![[1.5, 0.0], [0.0, 1.5]]);
        assert_eq!(half.meta(), EstimateMeta::Rho { rho: 0.5 });
        assert!(matches!(
            linear_shrinkage(&s, &f, 1.5),
            Err(EstimatorError::RhoOutOfRange(_))
        ));
        assert!(matches!(
            linear_shrinkage(&s, &est(Array2::eye(3)), 0.5),
            Err(EstimatorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mp_clean_null_fixed_point() {
        for var in [1.0, 0.37, 4e-4] {
            let s = est(Array2::eye(5) * var);
            let out = mp_clean(&s, 0.5).unwrap();
            for (a, b) in out.matrix().as_array().iter().zip(s.matrix().as_array()) {
                assert!((a - b).abs() <= 1e-15 * var);
            }
        }
    }

    #[test]
    fn mp_clean_errors() {
        let s = est(array![[1.0, 0.0], [0.0, 0.0]]);
        assert!(matches!(mp_clean(&s, 0.5), Err(EstimatorError::ZeroVariance(1))));
        assert!(matches!(
            mp_clean(&est(Array2::eye(2)), 1.0),
            Err(EstimatorError::Rmt(_))
        ));
    }

    #[test]
    fn weights_map() {
        let w = CombinationWeights::new(0.3, 0.6).unwrap();
        let (a, b, g) = w.simplex();
        assert!((a + b + g - 1.0).abs() < 1e-15);
        let back = CombinationWeights::from_simplex(a, b).unwrap();
        assert!((back.theta() - 0.3).abs() < 1e-15 && (back.phi() - 0.6).abs() < 1e-15);
        assert_eq!(CombinationWeights::from_simplex(0.0, 0.0).unwrap().theta(), 0.0);
        assert!(CombinationWeights::new(1.1, 0.0).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("rie".parse::<EstimatorKind>().is_err());
    }
}
