//! Marchenko-Pastur law and eigenvalue clipping.
//!
//! For an `M × N` matrix of i.i.d. zero-mean entries with variance `σ²`, the
//! eigenvalue distribution of `X Xᵀ / N` converges (as `M, N → ∞` with
//! `c = M/N ∈ (0, 1)` fixed) to the density
//!
//! ```text
//! g(x) = √((x − λ₋)(λ₊ − x)) / (2π c σ² x),   λ± = σ² (1 ± √c)²
//! ```
//!
//! on `[λ₋, λ₊]`. Sample eigenvalues inside that support are treated as noise.

use std::f64::consts::PI;

use ndarray::Array1;
use thiserror::Error;

use crate::spectral::SpectralDecomposition;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmtError {
    #[error("invalid Marchenko-Pastur parameters: c = {c}, sigma2 = {sigma2} (need 0 < c < 1, sigma2 > 0)")]
    InvalidParams { c: f64, sigma2: f64 },
    #[error("empirical spectral distribution needs at least one eigenvalue")]
    EmptyInput,
    #[error("eigenvalue {0} is not finite")]
    NonFinite(f64),
}

/// Dimensionality constant `c = M/N` and entry variance `σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpParams {
    c: f64,
    sigma2: f64,
}

impl MpParams {
    pub fn new(c: f64, sigma2: f64) -> Result<Self, RmtError> {
        if !(c > 0.0 && c < 1.0 && sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(RmtError::InvalidParams { c, sigma2 });
        }
        Ok(Self { c, sigma2 })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// Support `[λ₋, λ₊]` of the Marchenko-Pastur density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpBounds {
    pub lower: f64,
    pub upper: f64,
}

impl MpBounds {
    /// Strict interior test: values equal to a bound are outside.
    pub fn strictly_contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

pub fn mp_bounds(p: MpParams) -> MpBounds {
    let r = p.c.sqrt();
    MpBounds {
        lower: p.sigma2 * (1.0 - r) * (1.0 - r),
        upper: p.sigma2 * (1.0 + r) * (1.0 + r),
    }
}

/// Marchenko-Pastur probability density; zero outside the open support.
pub fn mp_density(x: f64, p: MpParams) -> f64 {
    let b = mp_bounds(p);
    if !(x > b.lower && x < b.upper) {
        return 0.0;
    }
    ((x - b.lower) * (b.upper - x)).sqrt() / (2.0 * PI * p.c * p.sigma2 * x)
}

/// Marchenko-Pastur CDF, `∫_{λ₋}^{x} g`.
///
/// Integrated in the angle variable `x = λ₋ + (λ₊ − λ₋)(1 − cos u)/2`, which
/// removes the square-root endpoint behaviour, by adaptive Simpson to 1e-12.
pub fn mp_cdf(x: f64, p: MpParams) -> f64 {
    let b = mp_bounds(p);
    if x <= b.lower {
        return 0.0;
    }
    if x >= b.upper {
        return 1.0;
    }
    let half = 0.5 * (b.upper - b.lower);
    let integrand = |u: f64| {
        let s = u.sin();
        let xu = b.lower + half * (1.0 - u.cos());
        half * half * s * s / (2.0 * PI * p.c * p.sigma2 * xu)
    };
    let u_end = (1.0 - (x - b.lower) / half).clamp(-1.0, 1.0).acos();
    adaptive_simpson(&integrand, 0.0, u_end, 1e-12, 50).clamp(0.0, 1.0)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Empirical spectral distribution `G(x) = #{λᵢ ≤ x} / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectralCdf {
    sorted: Vec<f64>,
}

impl EmpiricalSpectralCdf {
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Ascending eigenvalues.
    pub fn support(&self) -> &[f64] {
        &self.sorted
    }

    /// Kolmogorov-Smirnov sup-distance to a continuous CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let m = self.sorted.len() as f64;
        let mut sup: f64 = 0.0;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = cdf(x);
            // G jumps from i/m to (i+1)/m at x; ties are covered because the
            // later copy sees the larger left limit
            sup = sup.max((f - i as f64 / m).abs()).max(((i + 1) as f64 / m - f).abs());
        }
        sup
    }
}

pub fn empirical_spectral_cdf(eigenvalues: &[f64]) -> Result<EmpiricalSpectralCdf, RmtError> {
    if eigenvalues.is_empty() {
        return Err(RmtError::EmptyInput);
    }
    if let Some(&bad) = eigenvalues.iter().find(|v| !v.is_finite()) {
        return Err(RmtError::NonFinite(bad));
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalSpectralCdf { sorted })
}

/// Replaces eigenvalues strictly inside `bounds` by their mean; keeps the rest.
pub fn clip_eigenvalues(d: &SpectralDecomposition, bounds: MpBounds) -> SpectralDecomposition {
    let values = d.eigenvalues();
    let inside: Vec<usize> = (0..values.len())
        .filter(|&i| bounds.strictly_contains(values[i]))
        .collect();
    if inside.is_empty() {
        return d.clone();
    }
    let delta = inside.iter().map(|&i| values[i]).sum::<f64>() / inside.len() as f64;
    let mut clipped: Array1<f64> = values.clone();
    for &i in &inside {
        clipped[i] = delta;
    }
    // every clipped value sits inside the same interval, so descending order
    // is preserved without re-sorting
    d.with_eigenvalues(clipped)
}
