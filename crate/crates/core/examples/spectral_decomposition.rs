//! Eigendecomposition of a small covariance matrix, the sign convention on
//! eigenvectors, and reconstruction with a modified spectrum.
//!
//! ```text
//! cargo run --release --example spectral_decomposition
//! ```

use covcraft::{eigh, reconstruct, SymmetricMatrix};
use ndarray::array;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = SymmetricMatrix::new(array![
        [4.0, 1.0, 0.5, 0.0],
        [1.0, 3.0, 0.2, 0.1],
        [0.5, 0.2, 2.0, 0.3],
        [0.0, 0.1, 0.3, 1.0],
    ])?;
    let d = eigh(&a)?;
    println!("eigenvalues (descending): {:.6}", d.eigenvalues());
    for (k, v) in d.eigenvectors().columns().into_iter().enumerate() {
        // the largest-magnitude component of each vector is positive
        println!("  v{k} = {v:+.4}");
    }

    let back = reconstruct(&d);
    let err = (back.as_array() - a.as_array()).mapv(f64::abs).fold(0.0_f64, |m, &v| m.max(v));
    println!("max |VΛVᵀ − A| = {err:.1e}");

    // flatten the two smallest eigenvalues, keeping the trace
    let mut values = d.eigenvalues().to_owned();
    let tail = (values[2] + values[3]) / 2.0;
    values[2] = tail;
    values[3] = tail;
    let flattened = reconstruct(&d.with_eigenvalues(values));
    println!("trace before {:.6}, after {:.6}", a.trace(), flattened.trace());
    Ok(())
}
