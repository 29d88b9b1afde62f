//! Chooses (θ, φ) for the combined estimator on a chronological validation
//! split and prints a coarse view of the validation-variance surface.
//!
//! ```text
//! cargo run --release --example tune_combined
//! ```

use covcraft::{build_population, forecast_returns, sample_panel, tune_weights, GridSpec, SpikeSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SpikeSpec::null(100, 1e-4)
        .with_spike(8.0, None)
        .with_spike(3.0, None)
        .with_random_directions(9);
    let train = sample_panel(&build_population(&spec)?, 200, &spec, 10)?;
    let fc = forecast_returns(&train, 0.10);

    let grid = GridSpec::new(0.1, 0.25)?;
    let outcome = tune_weights(&train, &fc, grid)?;
    println!(
        "selected θ = {:.1}, φ = {:.1}, validation variance {:.4e}",
        outcome.weights.theta(),
        outcome.weights.phi(),
        outcome.validation_variance
    );

    let worst = outcome.surface.iter().map(|p| p.validation_variance).fold(f64::NEG_INFINITY, f64::max);
    println!("relative excess over the best point (rows φ, columns θ):");
    print!("{:>5}", "");
    for theta in grid.points().iter().step_by(2) {
        print!("{theta:>7.1}");
    }
    println!();
    for phi in grid.points().iter().step_by(2) {
        print!("{phi:>5.1}");
        for theta in grid.points().iter().step_by(2) {
            let p = outcome.surface.iter().find(|p| p.phi == *phi && p.theta == *theta).expect("grid point");
            print!("{:>7.3}", p.validation_variance / outcome.validation_variance - 1.0);
        }
        println!();
    }
    println!("spread across the grid: {:.1}%", 100.0 * (worst / outcome.validation_variance - 1.0));
    Ok(())
}
