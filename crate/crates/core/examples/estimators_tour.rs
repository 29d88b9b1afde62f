//! Every covariance estimator on one spiked training window, scored by its
//! Frobenius distance to the known population matrix.
//!
//! ```text
//! cargo run --release --example estimators_tour
//! ```

use covcraft::{
    build_population, combine, demean, forecast_returns, frobenius_error, identity_target, linear_shrinkage,
    mp_clean, sample_covariance, sample_panel, shrinkage_intensity, shrinkage_target_f, CombinationWeights,
    SpikeSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SpikeSpec::null(100, 1e-4)
        .with_spike(10.0, None)
        .with_spike(4.0, None)
        .with_random_directions(5);
    let pop = build_population(&spec)?;
    let raw = sample_panel(&pop, 200, &spec, 6)?;
    let (centered, _) = demean(&raw);

    let scm = sample_covariance(&centered)?;
    let f = shrinkage_target_f(&scm);
    let mp = mp_clean(&scm, centered.dimensionality())?;
    let rho = shrinkage_intensity(&raw, &forecast_returns(&raw, 0.10), 0.25)?;
    let shrunk = linear_shrinkage(&scm, &f, rho)?;
    let weights = CombinationWeights::new(0.4, 0.6)?;
    let combined = combine(&f, &mp, &scm, weights)?;
    let (a, b, g) = weights.simplex();

    println!("M = 100, N = 200, c = {:.2}", centered.dimensionality());
    println!("{:<26} {}", "estimator", "‖Σ_pop − Σ̂‖_F");
    for (label, est) in [
        ("scm", &scm),
        ("identity", &identity_target(&scm)),
        ("f", &f),
        (&format!("shrink ρ={rho:.2}") as &str, &shrunk),
        ("mp", &mp),
        (&format!("combined {a:.2}/{b:.2}/{g:.2}"), &combined),
    ] {
        println!("{label:<26} {:.3e}", frobenius_error(&pop, est)?);
    }
    Ok(())
}
