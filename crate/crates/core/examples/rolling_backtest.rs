//! Rolling out-of-sample backtest of every estimator on a synthetic panel with
//! a diffuse market factor and a second, orthogonal factor.
//!
//! ```text
//! cargo run --release --example rolling_backtest
//! ```

use std::time::Instant;

use covcraft::{build_population, compare_estimators, run_backtest, sample_panel, BacktestConfig, SpikeSpec};
use ndarray::Array1;
use rand::SeedableRng;
use rand_distr::{Distribution, Uniform};
use rand_pcg::Pcg64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Pcg64::seed_from_u64(7);
    let noise = Uniform::new(-1.0f64, 1.0)?;
    let mut market = Array1::from_shape_fn(100, |_| 1.0 + 0.5 * noise.sample(&mut rng));
    market /= market.dot(&market).sqrt();
    let mut second = Array1::from_shape_fn(100, |_| noise.sample(&mut rng));
    let overlap = second.dot(&market);
    second.scaled_add(-overlap, &market);
    second /= second.dot(&second).sqrt();

    let spec = SpikeSpec::null(100, 1e-4)
        .with_spike(5.0, Some(market))
        .with_spike(3.0, Some(second));
    let panel = sample_panel(&build_population(&spec)?, 750, &spec, 11)?;

    for period in [30, 60, 90] {
        let cfg = BacktestConfig {
            rebalance_every: period,
            ..BacktestConfig::default()
        };
        let started = Instant::now();
        let report = run_backtest(&panel, &cfg)?;
        println!("rebalance every {period} days ({:.1?})", started.elapsed());
        for row in compare_estimators(&report) {
            println!(
                "  {:<9} {:>8.4}%  warnings={}",
                row.name, row.annualized_risk_pct, row.warnings
            );
        }
    }
    Ok(())
}
