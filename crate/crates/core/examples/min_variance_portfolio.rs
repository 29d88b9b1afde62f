//! Long-only minimum-variance portfolio with a minimum-return constraint,
//! compared with the unconstrained eigenvector bound.
//!
//! ```text
//! cargo run --release --example min_variance_portfolio
//! ```

use covcraft::{
    annualize_risk, build_population, combine, demean, forecast_returns, min_eig_portfolio, min_variance, mp_clean,
    sample_covariance, sample_panel, shrinkage_target_f, CombinationWeights, SpikeSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SpikeSpec::null(50, 1e-4).with_spike(6.0, None).with_random_directions(2);
    let raw = sample_panel(&build_population(&spec)?, 200, &spec, 3)?;
    let (centered, _) = demean(&raw);
    let scm = sample_covariance(&centered)?;
    let f = shrinkage_target_f(&scm);
    let mp = mp_clean(&scm, centered.dimensionality())?;
    let combined = combine(&f, &mp, &scm, CombinationWeights::new(0.5, 0.5)?)?;

    let fc = forecast_returns(&raw, 0.10);
    println!("daily return floor r = {:.4e} (10% a year)", fc.r_daily);
    for (label, cov) in [("scm", &scm), ("combined", &combined)] {
        let alloc = min_variance(cov, &fc)?;
        let w = alloc.portfolio.weights();
        let held = w.iter().filter(|&&v| v > 1e-6).count();
        println!(
            "{label:<9} model risk {:.3}%/yr, expected return {:.3e}/day, {held} assets held, largest weight {:.3}, {} iterations",
            annualize_risk(alloc.variance)?,
            fc.g.dot(w),
            w.iter().cloned().fold(0.0, f64::max),
            alloc.iterations
        );
        for warning in &alloc.warnings {
            println!("  warning: {warning}");
        }
    }

    // the unit-sphere minimum is λ_min; the simplex minimum sits above λ_min·‖p‖²
    let (lambda_min, _) = min_eig_portfolio(&scm)?;
    println!("λ_min(scm) = {lambda_min:.4e}");
    Ok(())
}
