//! With the population matrix known, projects it onto the convex hull of
//! {F, MP, SCM} and reports the best attainable (θ, φ) for several spike
//! strengths.
//!
//! ```text
//! cargo run --release --example oracle_projection
//! ```

use covcraft::{
    build_population, demean, frobenius_error, mp_clean, oracle_weights, sample_covariance, sample_panel,
    shrinkage_target_f, SpikeSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>6} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10}", "spike", "θ", "φ", "oracle", "f", "mp", "scm");
    for (k, spike) in [2.0, 5.0, 10.0, 25.0].into_iter().enumerate() {
        let spec = SpikeSpec::null(100, 1.0).with_spike(spike, None).with_random_directions(k as u64);
        let pop = build_population(&spec)?;
        let (centered, _) = demean(&sample_panel(&pop, 200, &spec, 40 + k as u64)?);
        let scm = sample_covariance(&centered)?;
        let f = shrinkage_target_f(&scm);
        let mp = mp_clean(&scm, centered.dimensionality())?;
        let (w, err) = oracle_weights(&pop, &f, &mp, &scm)?;
        println!(
            "{spike:>6.1} {:>6.3} {:>6.3} {err:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            w.theta(),
            w.phi(),
            frobenius_error(&pop, &f)?,
            frobenius_error(&pop, &mp)?,
            frobenius_error(&pop, &scm)?
        );
    }
    Ok(())
}
