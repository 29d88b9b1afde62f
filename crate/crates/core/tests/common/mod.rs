#![allow(dead_code)]

use std::f64::consts::PI;

use covcraft::{mp_bounds, CovarianceEstimate, EstimatorKind, MpParams, ReturnsPanel, SymmetricMatrix};
use ndarray::Array2;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = Pcg64::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(&mut rng))
}

/// `B Bᵀ / cols` for a Gaussian `B`.
pub fn random_psd(dim: usize, cols: usize, seed: u64) -> Array2<f64> {
    let b = gaussian(dim, cols, seed);
    b.dot(&b.t()) / cols as f64
}

pub fn sym(a: Array2<f64>) -> SymmetricMatrix {
    SymmetricMatrix::symmetrized(&a).unwrap()
}

pub fn cov(a: Array2<f64>) -> CovarianceEstimate {
    CovarianceEstimate::from_array(a, EstimatorKind::Scm).unwrap()
}

pub fn panel(a: Array2<f64>) -> ReturnsPanel {
    ReturnsPanel::from_matrix(a).unwrap()
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn quad3(q: &Array2<f64>, p: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += p[i] * q[[i, j]] * p[j];
        }
    }
    s
}

/// Minimum of `pᵀQp` over `{p ≥ 0, Σp = 1, gᵀp ≥ r}` for `M = 3` by exhaustive
/// grid search at step `1e-3`, followed by pattern-search refinement of the
/// best grid point (steps down to `1e-9`) and a refined 1-D search along the
/// segment where the return constraint is active.
pub fn qp3_grid_oracle(q: &Array2<f64>, g: [f64; 3], r: f64) -> f64 {
    let feasible = |p: [f64; 3]| p.iter().all(|&v| v >= 0.0) && g[0] * p[0] + g[1] * p[1] + g[2] * p[2] >= r;
    let point = |a: f64, b: f64| [a, b, 1.0 - a - b];
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let n = 1000;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            let p = point(a, b);
            if feasible(p) {
                let v = quad3(q, p);
                if v < best.0 {
                    best = (v, a, b);
                }
            }
        }
    }
    if best.0.is_finite() {
        let mut h = 1e-3;
        while h > 1e-9 {
            h /= 10.0;
            for _ in 0..10_000 {
                let mut moved = false;
                for di in -10..=10 {
                    for dj in -10..=10 {
                        let (a, b) = (best.1 + di as f64 * h, best.2 + dj as f64 * h);
                        let p = point(a, b);
                        if feasible(p) {
                            let v = quad3(q, p);
                            if v < best.0 {
                                best = (v, a, b);
                                moved = true;
                            }
                        }
                    }
                }
                if !moved {
                    break;
                }
            }
        }
    }
    best.0.min(active_line_minimum(q, g, r))
}

/// Minimum over the part of `gᵀp = r` inside the simplex (∞ if empty).
fn active_line_minimum(q: &Array2<f64>, g: [f64; 3], r: f64) -> f64 {
    // eliminate p3: a1 p1 + a2 p2 = b
    let (a1, a2, b) = (g[0] - g[2], g[1] - g[2], r - g[2]);
    if a1 == 0.0 && a2 == 0.0 {
        return f64::INFINITY;
    }
    let swap = a1.abs() > a2.abs();
    let (a1, a2) = if swap { (a2, a1) } else { (a1, a2) };
    // parameter t is the free coordinate, s = (b − a1 t)/a2 the other one
    let at = |t: f64| {
        let s = (b - a1 * t) / a2;
        if swap {
            [s, t, 1.0 - s - t]
        } else {
            [t, s, 1.0 - s - t]
        }
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // s ≥ 0 and t + s ≤ 1 as linear inequalities α t ≤ β
    for (alpha, beta) in [(a1 / a2, b / a2), (1.0 - a1 / a2, 1.0 - b / a2)] {
        if alpha > 0.0 {
            hi = hi.min(beta / alpha);
        } else if alpha < 0.0 {
            lo = lo.max(beta / alpha);
        } else if beta < 0.0 {
            return f64::INFINITY;
        }
    }
    if lo > hi {
        return f64::INFINITY;
    }
    let eval = |t: f64| {
        let p = at(t.clamp(lo, hi));
        quad3(q, p.map(|v| v.max(0.0)))
    };
    let n = 1000;
    let mut best = (eval(lo), lo);
    for k in 0..=n {
        let t = lo + (hi - lo) * k as f64 / n as f64;
        let v = eval(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    let mut h = (hi - lo) / n as f64;
    while h > 1e-12 {
        h /= 10.0;
        for _ in 0..10_000 {
            let mut moved = false;
            for d in -10..=10 {
                let t = (best.1 + d as f64 * h).clamp(lo, hi);
                let v = eval(t);
                if v < best.0 {
                    best = (v, t);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
    best.0
}

/// Number of eigenvalues of `a` strictly below `sigma`, from the signs of the
/// pivots of an unpivoted LDLᵀ factorization of `a − σI`.
pub fn count_below(a: &Array2<f64>, sigma: f64) -> usize {
    let n = a.nrows();
    let mut m = a.clone();
    for i in 0..n {
        m[[i, i]] -= sigma;
    }
    let scale = a.iter().fold(1e-300_f64, |s, v| s.max(v.abs()));
    let mut negatives = 0;
    for k in 0..n {
        let mut d = m[[k, k]];
        if d == 0.0 {
            d = -1e-300 * scale;
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in (k + 1)..n {
            let f = m[[i, k]] / d;
            for j in (k + 1)..n {
                m[[i, j]] -= f * m[[k, j]];
            }
        }
    }
    negatives
}

/// Smallest eigenvalue by bisection on the inertia count.
pub fn lambda_min_bisection(a: &Array2<f64>) -> f64 {
    let bound = a.iter().map(|v| v * v).sum::<f64>().sqrt() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(a, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫ x^k g(x) dx` by composite Simpson in `x = mid + half·sin s`, which
/// turns the square-root endpoints into a smooth `cos² s` factor.
pub fn mp_moment(p: MpParams, k: i32, upto: Option<f64>) -> f64 {
    let b = mp_bounds(p);
    let (mid, half) = (0.5 * (b.upper + b.lower), 0.5 * (b.upper - b.lower));
    let s_end = match upto {
        Some(x) => ((x - mid) / half).clamp(-1.0, 1.0).asin(),
        None => PI / 2.0,
    };
    let f = |s: f64| {
        let x = mid + half * s.sin();
        let c = s.cos();
        half * half * c * c / (2.0 * PI * p.c() * p.sigma2() * x) * x.powi(k)
    };
    let n = 20_000;
    let (a, h) = (-PI / 2.0, (s_end + PI / 2.0) / n as f64);
    let mut sum = f(a) + f(s_end);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}
