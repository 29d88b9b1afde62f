//! The spiked population model and its sampling options: Gaussian or
//! Student-t innovations and AR(1) time dependence.
//!
//! ```text
//! cargo run --release --example spike_model
//! ```

use covcraft::{build_population, demean, eigh, sample_covariance, sample_panel, Innovation, SpikeSpec};
use ndarray::ArrayView1;

fn kurtosis(x: ArrayView1<f64>) -> f64 {
    let mean = x.mean().unwrap_or(0.0);
    let m2 = x.mapv(|v| (v - mean).powi(2)).mean().unwrap_or(0.0);
    let m4 = x.mapv(|v| (v - mean).powi(4)).mean().unwrap_or(0.0);
    m4 / (m2 * m2)
}

fn lag1(x: ArrayView1<f64>) -> f64 {
    let mean = x.mean().unwrap_or(0.0);
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = x.iter().zip(x.iter().skip(1)).map(|(a, b)| (a - mean) * (b - mean)).sum();
    cov / var
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SpikeSpec::null(40, 1.0)
        .with_spike(12.0, None)
        .with_spike(5.0, None)
        .with_random_directions(1);
    let pop = build_population(&spec)?;
    let top: Vec<f64> = eigh(pop.matrix())?.eigenvalues().iter().take(4).copied().collect();
    println!("population eigenvalues: {top:.3?} ...");

    for (label, spec) in [
        ("gaussian", spec.clone()),
        ("student-t(3)", spec.clone().with_innovation(Innovation::StudentT { nu: 3.0 })),
        ("gaussian, AR(1) 0.5", spec.clone().with_ar1(0.5)),
    ] {
        let panel = sample_panel(&pop, 2000, &spec, 7)?;
        let (centered, _) = demean(&panel);
        let s = sample_covariance(&centered)?;
        let values = eigh(s.matrix())?.eigenvalues().to_owned();
        let z = panel.returns().row(5);
        println!(
            "{label:<20} top sample eigenvalues {:.2} {:.2}, kurtosis {:.2}, lag-1 autocorrelation {:+.3}",
            values[0],
            values[1],
            kurtosis(z),
            lag1(z)
        );
    }
    Ok(())
}
