//! Marchenko-Pastur bounds and density, the empirical spectrum of a pure-noise
//! correlation matrix, and eigenvalue clipping.
//!
//! ```text
//! cargo run --release --example marchenko_pastur
//! ```

use covcraft::rmt::mp_cdf;
use covcraft::{
    build_population, clip_eigenvalues, demean, eigh, empirical_spectral_cdf, mp_bounds, mp_density,
    sample_covariance, sample_panel, MpParams, SpikeSpec, SymmetricMatrix,
};
use ndarray::Axis;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = MpParams::new(0.5, 1.0)?;
    let bounds = mp_bounds(params);
    println!("c = 0.5: support [{:.4}, {:.4}]", bounds.lower, bounds.upper);
    for i in 0..=8 {
        let x = bounds.lower + (bounds.upper - bounds.lower) * i as f64 / 8.0;
        let bar = "#".repeat((mp_density(x, params) * 60.0).round() as usize);
        println!("  {x:6.3} {:.4} {bar}", mp_density(x, params));
    }

    // 250 independent assets over 500 days: every correlation eigenvalue is noise
    let spec = SpikeSpec::null(250, 1.0);
    let (centered, _) = demean(&sample_panel(&build_population(&spec)?, 500, &spec, 3)?);
    let s = sample_covariance(&centered)?;
    let sd = s.matrix().as_array().diag().mapv(f64::sqrt);
    let corr = s.matrix().as_array() / &sd.view().insert_axis(Axis(1)) / &sd.view().insert_axis(Axis(0));
    let d = eigh(&SymmetricMatrix::symmetrized(&corr)?)?;
    let values = d.eigenvalues().to_vec();
    let inside = values.iter().filter(|&&v| v >= bounds.lower && v <= bounds.upper).count();
    let ks = empirical_spectral_cdf(&values)?.ks_distance(|x| mp_cdf(x, params));
    println!("null panel: {inside}/250 eigenvalues inside the bounds, KS distance {ks:.4}");

    let clipped = clip_eigenvalues(&d, bounds);
    let replaced = d.eigenvalues().iter().zip(clipped.eigenvalues()).filter(|(a, b)| a != b).count();
    println!(
        "clipping replaced {replaced} eigenvalues by {:.4}; trace {:.6} -> {:.6}",
        clipped.eigenvalues()[125],
        d.eigenvalues().sum(),
        clipped.eigenvalues().sum()
    );
    Ok(())
}
