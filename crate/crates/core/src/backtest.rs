//! Rolling-window out-of-sample evaluation.
//!
//! At each rebalance day `t` the trailing `train_len` days `[t − train_len, t)`
//! are used to fit every configured estimator and solve the minimum-variance
//! problem; the weights are then held unchanged for `rebalance_every` days and
//! the realized portfolio returns `pᵀx` are recorded from raw returns. The
//! window then moves forward by `rebalance_every` days.

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimators::{
    combine, identity_target, linear_shrinkage, mp_clean, sample_covariance, shrinkage_intensity,
    shrinkage_target_f, CovarianceEstimate, EstimateMeta, EstimatorError, EstimatorKind,
};
use crate::market_data::{demean, PanelError, ReturnsPanel};
use crate::portfolio::{annualize_risk, forecast_returns, min_variance, PortfolioError, ReturnForecast};
use crate::tuning::{realized_variance, tune_weights, GridSpec, TuningError};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("panel has {days} days but one rebalance needs {needed}")]
    PanelTooShort { days: usize, needed: usize },
    #[error("invalid backtest configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Portfolio(#[from] PortfolioError),
    #[error(transparent)]
    Tuning(#[from] TuningError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestConfig {
    pub train_len: usize,
    pub rebalance_every: usize,
    pub annual_return_target: f64,
    pub estimators: Vec<EstimatorKind>,
    pub grid: GridSpec,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            train_len: 200,
            rebalance_every: 30,
            annual_return_target: 0.10,
            estimators: EstimatorKind::ALL.to_vec(),
            grid: GridSpec::default(),
        }
    }
}

impl BacktestConfig {
    fn validate(&self, panel: &ReturnsPanel) -> Result<(), BacktestError> {
        let bad = |m: String| Err(BacktestError::InvalidConfig(m));
        if self.train_len < 2 {
            return bad(format!("train_len {} < 2", self.train_len));
        }
        if self.rebalance_every == 0 {
            return bad("rebalance_every must be positive".into());
        }
        if self.estimators.is_empty() {
            return bad("no estimators configured".into());
        }
        if let Some(k) = self.estimators.iter().find(|k| **k == EstimatorKind::Population) {
            return bad(format!("{k} is not a backtestable estimator"));
        }
        let needs_mp = self
            .estimators
            .iter()
            .any(|k| matches!(k, EstimatorKind::Mp | EstimatorKind::Combined));
        if needs_mp && panel.n_assets() >= self.train_len {
            return bad(format!(
                "clipping needs M/train_len < 1, got {}/{}",
                panel.n_assets(),
                self.train_len
            ));
        }
        let needed = self.train_len + self.rebalance_every;
        if panel.n_days() < needed {
            return Err(BacktestError::PanelTooShort {
                days: panel.n_days(),
                needed,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rebalance {
    /// First day the weights are held.
    pub date: NaiveDate,
    pub weights: Vec<f64>,
    pub params: EstimateMeta,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRun {
    pub name: EstimatorKind,
    pub rebalance_every: usize,
    pub annualized_risk_pct: f64,
    pub mean_daily_return: f64,
    #[serde(skip)]
    pub realized: Vec<f64>,
    pub rebalances: Vec<Rebalance>,
}

impl EstimatorRun {
    pub fn warning_count(&self) -> usize {
        self.rebalances.iter().map(|r| r.warnings.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub estimators: Vec<EstimatorRun>,
}

impl BacktestReport {
    pub fn run(&self, kind: EstimatorKind) -> Option<&EstimatorRun> {
        self.estimators.iter().find(|r| r.name == kind)
    }
}

/// Number of rebalances that fit: `⌊(N − train_len) / rebalance_every⌋`.
pub fn rebalance_count(n_days: usize, train_len: usize, rebalance_every: usize) -> usize {
    n_days.saturating_sub(train_len) / rebalance_every
}

/// Estimators fitted on one training window, built lazily and shared.
struct WindowFit<'a> {
    raw: &'a ReturnsPanel,
    forecast: ReturnForecast,
    scm: CovarianceEstimate,
    f: CovarianceEstimate,
    grid: GridSpec,
}

impl<'a> WindowFit<'a> {
    fn new(raw: &'a ReturnsPanel, cfg: &BacktestConfig) -> Result<Self, BacktestError> {
        let (centered, _) = demean(raw);
        let scm = sample_covariance(&centered)?;
        let f = shrinkage_target_f(&scm);
        Ok(Self {
            raw,
            forecast: forecast_returns(raw, cfg.annual_return_target),
            scm,
            f,
            grid: cfg.grid,
        })
    }

    fn mp(&self) -> Result<CovarianceEstimate, BacktestError> {
        Ok(mp_clean(&self.scm, self.raw.dimensionality())?)
    }

    fn estimate(&self, kind: EstimatorKind) -> Result<CovarianceEstimate, BacktestError> {
        Ok(match kind {
            EstimatorKind::Scm => self.scm.clone(),
            EstimatorKind::IdentityTarget => identity_target(&self.scm),
            EstimatorKind::FTarget => self.f.clone(),
            EstimatorKind::Mp => self.mp()?,
            EstimatorKind::Shrink => {
                let rho =
                    shrinkage_intensity(self.raw, &self.forecast, self.grid.validation_fraction())?;
                linear_shrinkage(&self.scm, &self.f, rho)?
            }
            EstimatorKind::Combined => {
                let tuned = tune_weights(self.raw, &self.forecast, self.grid)?;
                combine(&self.f, &self.mp()?, &self.scm, tuned.weights)?
            }
            EstimatorKind::Population => {
                return Err(BacktestError::InvalidConfig("population is not an estimator".into()))
            }
        })
    }
}

/// Runs the rolling protocol for every configured estimator.
pub fn run_backtest(panel: &ReturnsPanel, cfg: &BacktestConfig) -> Result<BacktestReport, BacktestError> {
    let mut reports = run_backtests(panel, cfg, &[cfg.rebalance_every])?;
    Ok(reports.remove(0))
}

/// Runs the protocol once per rebalance period in `periods`, ignoring
/// `cfg.rebalance_every`.
///
/// Weights chosen on a given day depend only on the `train_len` days before
/// it, so a day shared by several schedules (every 60-day rebalance is also
/// a 30-day one) is fitted once. Each report equals what [`run_backtest`]
/// returns for that period alone.
pub fn run_backtests(
    panel: &ReturnsPanel,
    cfg: &BacktestConfig,
    periods: &[usize],
) -> Result<Vec<BacktestReport>, BacktestError> {
    if periods.is_empty() {
        return Err(BacktestError::InvalidConfig("no rebalance periods".into()));
    }
    let configs: Vec<BacktestConfig> = periods
        .iter()
        .map(|&rebalance_every| BacktestConfig {
            rebalance_every,
            ..cfg.clone()
        })
        .collect();
    for c in &configs {
        c.validate(panel)?;
    }
    let starts: BTreeSet<usize> = configs
        .iter()
        .flat_map(|c| {
            let count = rebalance_count(panel.n_days(), c.train_len, c.rebalance_every);
            (0..count).map(move |k| c.train_len + k * c.rebalance_every)
        })
        .collect();
    let starts: Vec<usize> = starts.into_iter().collect();

    // rebalance days are independent given the panel; results come back in
    // day order
    let fitted: Vec<Vec<Rebalance>> = starts
        .par_iter()
        .map(|&start| -> Result<Vec<Rebalance>, BacktestError> {
            let raw = panel.columns(start - cfg.train_len..start)?;
            let fit = WindowFit::new(&raw, cfg)?;
            cfg.estimators
                .iter()
                .map(|&kind| {
                    let est = fit.estimate(kind)?;
                    let alloc = min_variance(&est, &fit.forecast)?;
                    Ok(Rebalance {
                        date: panel.dates()[start],
                        weights: alloc.portfolio.weights().to_vec(),
                        params: est.meta(),
                        warnings: alloc.warnings.iter().map(ToString::to_string).collect(),
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let by_start: HashMap<usize, &Vec<Rebalance>> = starts.iter().copied().zip(&fitted).collect();

    let returns = panel.returns();
    configs
        .into_iter()
        .map(|c| {
            let count = rebalance_count(panel.n_days(), c.train_len, c.rebalance_every);
            let mut runs = Vec::with_capacity(c.estimators.len());
            for (e, &kind) in c.estimators.iter().enumerate() {
                let mut realized = Vec::with_capacity(count * c.rebalance_every);
                let mut rebalances = Vec::with_capacity(count);
                for k in 0..count {
                    let start = c.train_len + k * c.rebalance_every;
                    let rebalance = &by_start[&start][e];
                    let w = ArrayView1::from(&rebalance.weights[..]);
                    realized.extend((start..start + c.rebalance_every).map(|t| returns.column(t).dot(&w)));
                    rebalances.push(rebalance.clone());
                }
                let series = Array1::from(realized.clone());
                runs.push(EstimatorRun {
                    name: kind,
                    rebalance_every: c.rebalance_every,
                    annualized_risk_pct: annualize_risk(realized_variance(&series))?,
                    mean_daily_return: series.mean().unwrap_or(0.0),
                    realized,
                    rebalances,
                });
            }
            Ok(BacktestReport {
                config: c,
                estimators: runs,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub name: EstimatorKind,
    pub rebalance_every: usize,
    pub annualized_risk_pct: f64,
    pub mean_daily_return: f64,
    pub warnings: usize,
}

/// Estimators ordered by annualized risk; ties keep name order.
pub fn compare_estimators(report: &BacktestReport) -> Vec<RankingRow> {
    let mut rows: Vec<RankingRow> = report
        .estimators
        .iter()
        .map(|r| RankingRow {
            name: r.name,
            rebalance_every: r.rebalance_every,
            annualized_risk_pct: r.annualized_risk_pct,
            mean_daily_return: r.mean_daily_return,
            warnings: r.warning_count(),
        })
        .collect();
    rows.sort_by(|a, b| {
        a.annualized_risk_pct
            .total_cmp(&b.annualized_risk_pct)
            .then_with(|| a.name.name().cmp(b.name.name()))
    });
    rows
}
