//! Long-only minimum-variance portfolios with a minimum expected return.
//!
//! ```text
//! minimize pᵀΣp   s.t.  1ᵀp = 1,  p ≥ 0,  gᵀp ≥ r_daily
//! ```

use ndarray::Array1;
use serde::Serialize;
use thiserror::Error;

use crate::estimators::CovarianceEstimate;
use crate::market_data::ReturnsPanel;
use crate::matrix::SymmetricMatrix;
use crate::qp::{HalfSpace, SimplexQp};
use crate::spectral::{eigh, SpectralError};

/// Relative KKT tolerance: projected-gradient norm ≤ `KKT_TOL · ‖Σ‖_F`.
pub const KKT_TOL: f64 = 1e-8;
/// Calendar days per year used for annualization and return targets.
pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PortfolioError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("covariance is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("variance {0} is negative")]
    NegativeVariance(f64),
    #[error("invalid portfolio weights: {0}")]
    InvalidWeights(String),
    #[error("forecast contains a non-finite value")]
    NonFiniteForecast,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Portfolio {
    weights: Array1<f64>,
}

impl Portfolio {
    pub fn new(weights: Array1<f64>) -> Result<Self, PortfolioError> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -1e-12) {
            return Err(PortfolioError::InvalidWeights(format!("entry {w}")));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PortfolioError::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { weights })
    }

    pub fn equal(m: usize) -> Self {
        Self {
            weights: Array1::from_elem(m, 1.0 / m as f64),
        }
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Expected daily returns `g` and the minimum daily return `r_daily`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnForecast {
    pub g: Array1<f64>,
    pub r_daily: f64,
}

impl ReturnForecast {
    pub fn new(g: Array1<f64>, r_daily: f64) -> Result<Self, PortfolioError> {
        if !r_daily.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(PortfolioError::NonFiniteForecast);
        }
        Ok(Self { g, r_daily })
    }

    /// Whether some simplex point satisfies `gᵀp ≥ r_daily`.
    pub fn is_feasible(&self) -> bool {
        self.g.iter().any(|&v| v >= self.r_daily)
    }
}

/// Non-fatal conditions met while solving.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveWarning {
    /// No asset reaches `r_daily`; solved without the return constraint.
    InfeasibleReturn { max_expected: f64, r_daily: f64 },
    /// Iteration cap reached before the KKT tolerance.
    NotConverged { residual: f64 },
}

impl std::fmt::Display for SolveWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveWarning::InfeasibleReturn {
                max_expected,
                r_daily,
            } => write!(
                f,
                "return constraint relaxed: best expected return {max_expected:e} < target {r_daily:e}"
            ),
            SolveWarning::NotConverged { residual } => {
                write!(f, "solver stopped at the iteration cap (kkt residual {residual:e})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub portfolio: Portfolio,
    /// `pᵀΣp`.
    pub variance: f64,
    pub iterations: usize,
    /// Projected-gradient norm of `½pᵀΣp` at the solution.
    pub kkt_residual: f64,
    pub warnings: Vec<SolveWarning>,
}

/// Minimum-variance long-only portfolio for `cov` under `fc`.
pub fn min_variance(
    cov: &CovarianceEstimate,
    fc: &ReturnForecast,
) -> Result<Allocation, PortfolioError> {
    let d = eigh(cov.matrix())?;
    if d.min_eigenvalue() < -1e-10 * cov.trace().abs() {
        return Err(PortfolioError::NotPsd {
            min_eigenvalue: d.min_eigenvalue(),
        });
    }
    solve_min_variance(cov.matrix(), Some(fc), d.max_eigenvalue())
}

/// Solver entry point for callers that already hold an upper bound on the
/// largest eigenvalue of a PSD `cov`. `fc = None` drops the return constraint.
pub fn solve_min_variance(
    cov: &SymmetricMatrix,
    fc: Option<&ReturnForecast>,
    lambda_max: f64,
) -> Result<Allocation, PortfolioError> {
    solve_min_variance_from(cov, fc, lambda_max, None)
}

pub(crate) fn solve_min_variance_from(
    cov: &SymmetricMatrix,
    fc: Option<&ReturnForecast>,
    lambda_max: f64,
    start: Option<&[f64]>,
) -> Result<Allocation, PortfolioError> {
    let m = cov.dim();
    if let Some(fc) = fc {
        if fc.g.len() != m {
            return Err(PortfolioError::DimensionMismatch {
                left: m,
                right: fc.g.len(),
            });
        }
    }
    let q: Vec<f64> = cov.as_array().iter().copied().collect();
    let mut warnings = Vec::new();
    let g: Option<Vec<f64>> = fc.map(|f| f.g.to_vec());
    let halfspace = match (fc, &g) {
        (Some(fc), Some(g)) if fc.is_feasible() => Some(HalfSpace { g, r: fc.r_daily }),
        (Some(fc), Some(_)) => {
            warnings.push(SolveWarning::InfeasibleReturn {
                max_expected: fc.g.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
                r_daily: fc.r_daily,
            });
            None
        }
        _ => None,
    };
    let qp = SimplexQp {
        q: &q,
        c: None,
        halfspace,
        lipschitz: lambda_max,
        tol: KKT_TOL * cov.frobenius_norm(),
    };
    let sol = qp.solve(start);
    if !sol.converged {
        warnings.push(SolveWarning::NotConverged {
            residual: sol.residual,
        });
    }
    let variance = 2.0 * qp.objective(&sol.x);
    Ok(Allocation {
        portfolio: Portfolio::new(Array1::from(sol.x))?,
        variance,
        iterations: sol.iterations,
        kkt_residual: sol.residual,
        warnings,
    })
}

/// `pᵀΣp`.
pub fn portfolio_variance(p: &Portfolio, cov: &CovarianceEstimate) -> Result<f64, PortfolioError> {
    if p.dim() != cov.dim() {
        return Err(PortfolioError::DimensionMismatch {
            left: p.dim(),
            right: cov.dim(),
        });
    }
    let w = p.weights();
    Ok(w.dot(&cov.matrix().as_array().dot(w)))
}

/// Smallest eigenvalue and its unit eigenvector: the minimum of `pᵀΣp` over
/// the unit sphere.
pub fn min_eig_portfolio(cov: &CovarianceEstimate) -> Result<(f64, Array1<f64>), PortfolioError> {
    let d = eigh(cov.matrix())?;
    let k = d.dim() - 1;
    Ok((d.eigenvalues()[k], d.eigenvectors().column(k).to_owned()))
}

/// Daily variance → annualized percent standard deviation, `100·√v·√365`.
pub fn annualize_risk(daily_variance: f64) -> Result<f64, PortfolioError> {
    if daily_variance < 0.0 || daily_variance.is_nan() {
        return Err(PortfolioError::NegativeVariance(daily_variance));
    }
    Ok(100.0 * daily_variance.sqrt() * DAYS_PER_YEAR.sqrt())
}

/// Per-asset mean of raw training returns and the daily equivalent of an
/// annual return target, `(1 + annual)^(1/365) − 1`.
pub fn forecast_returns(train: &ReturnsPanel, annual_target: f64) -> ReturnForecast {
    ReturnForecast {
        g: train.row_means(),
        r_daily: (1.0 + annual_target).powf(1.0 / DAYS_PER_YEAR) - 1.0,
    }
}
