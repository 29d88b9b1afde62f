//! Covariance estimation for small-sample, high-dimensional return panels.
//!
//! The crate builds three covariance estimates from a window of daily returns
//! and blends them:
//!
//! - the sample covariance matrix `S = X Xᵀ / N` of the demeaned panel,
//! - the "sample variance and mean covariance" shrinkage target `F`,
//! - the Marchenko-Pastur eigenvalue-clipped matrix `S_mp`,
//!
//! into `Σ* = θφ·F + (1−θ)φ·S_mp + (1−φ)·S` with `(θ, φ) ∈ [0, 1]²`.
//!
//! Around that estimator sit the pieces needed to use and evaluate it: a
//! long-only minimum-variance portfolio solver with a minimum-return
//! constraint, validation-grid tuning of `(θ, φ)`, Frobenius projection onto
//! the convex hull of the three components when the population matrix is
//! known, a rolling-window backtest, and a spiked-covariance data generator.
//!
//! Each capability has a runnable program under `examples/`; the `covcraft`
//! binary wraps the same functions as subcommands.

pub mod backtest;
pub mod cli;
pub mod estimators;
mod linalg;
pub mod market_data;
pub mod matrix;
pub mod portfolio;
mod qp;
pub mod rmt;
pub mod spectral;
pub mod synthetic;
pub mod tuning;

pub use backtest::{
    compare_estimators, run_backtest, run_backtests, BacktestConfig, BacktestError, BacktestReport, RankingRow,
};
pub use estimators::{
    combine, identity_target, linear_shrinkage, mp_clean, sample_covariance, shrinkage_intensity,
    shrinkage_target_f, CombinationWeights, CovarianceEstimate, EstimatorError, EstimatorKind,
};
pub use market_data::{demean, load_panel, save_panel, slice_window, PanelError, ReturnsPanel, WindowSpec};
pub use matrix::SymmetricMatrix;
pub use portfolio::{
    annualize_risk, forecast_returns, min_eig_portfolio, min_variance, portfolio_variance,
    Allocation, Portfolio, PortfolioError, ReturnForecast,
};
pub use rmt::{clip_eigenvalues, empirical_spectral_cdf, mp_bounds, mp_density, MpBounds, MpParams};
pub use spectral::{eigh, reconstruct, SpectralDecomposition, SpectralError};
pub use synthetic::{build_population, frobenius_error, sample_panel, Innovation, SpikeSpec};
pub use tuning::{oracle_weights, tune_weights, GridSpec, TuningError};
