//! Convex QP over the probability simplex with an optional half-space:
//!
//! ```text
//! minimize ½ xᵀQx + cᵀx   s.t.  1ᵀx = 1,  x ≥ 0,  gᵀx ≥ r
//! ```
//!
//! Solved by accelerated projected gradient (FISTA with fixed-period and
//! gradient-based restarts, step `1/L`). Every few iterations the support of
//! the current iterate is used to solve the equality-constrained KKT system
//! directly; when that candidate passes the projected-gradient test it is
//! returned, which gives machine-precision answers once the active set has
//! been identified.

use crate::linalg::{cholesky, cholesky_solve, lu_solve};

/// Iteration cap.
pub(crate) const MAX_ITER: usize = 50_000;
/// Momentum restart period.
pub(crate) const RESTART_EVERY: usize = 500;
const CHECK_EVERY: usize = 5;
const POLISH_EVERY: usize = 25;

#[derive(Debug, Clone, Copy)]
pub(crate) struct HalfSpace<'a> {
    pub g: &'a [f64],
    pub r: f64,
}

pub(crate) struct SimplexQp<'a> {
    /// Row-major `n × n`, symmetric PSD.
    pub q: &'a [f64],
    /// Linear term; `None` means zero.
    pub c: Option<&'a [f64]>,
    pub halfspace: Option<HalfSpace<'a>>,
    /// Upper bound on the largest eigenvalue of `Q`.
    pub lipschitz: f64,
    /// Absolute stopping tolerance on `L · ‖x − P(x − ∇/L)‖`.
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl SimplexQp<'_> {
    fn n(&self) -> usize {
        self.q.len().isqrt()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.q[i * n..(i + 1) * n];
            let mut s = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            if let Some(c) = self.c {
                s += c[i];
            }
            *o = s;
        }
    }

    pub(crate) fn objective(&self, x: &[f64]) -> f64 {
        let mut grad_q = vec![0.0; x.len()];
        let n = x.len();
        for (i, o) in grad_q.iter_mut().enumerate() {
            *o = self.q[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
        let quad = 0.5 * grad_q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let lin = self.c.map_or(0.0, |c| c.iter().zip(x).map(|(a, b)| a * b).sum());
        quad + lin
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        match self.halfspace {
            Some(h) => project_simplex_halfspace(y, h.g, h.r),
            None => project_simplex(y),
        }
    }

    fn step_size(&self) -> f64 {
        let l = if self.lipschitz.is_finite() && self.lipschitz > 0.0 {
            self.lipschitz
        } else {
            f64::MIN_POSITIVE
        };
        1.0 / l
    }

    /// `L · ‖x − P(x − ∇f(x)/L)‖₂`.
    pub(crate) fn kkt_residual(&self, x: &[f64]) -> f64 {
        let step = self.step_size();
        let mut grad = vec![0.0; x.len()];
        self.gradient(x, &mut grad);
        let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let p = self.project(&trial);
        let d2: f64 = x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        d2.sqrt() / step
    }

    pub(crate) fn solve(&self, start: Option<&[f64]>) -> QpSolution {
        let n = self.n();
        let step = self.step_size();
        let mut x = match start {
            Some(s) => self.project(s),
            None => self.project(&vec![1.0 / n as f64; n]),
        };
        let mut y = x.clone();
        let mut t = 1.0_f64;
        let mut grad = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut last_polish_support: Option<(Vec<usize>, bool)> = None;

        let mut residual = self.kkt_residual(&x);
        if residual <= self.tol {
            return QpSolution {
                x,
                iterations: 0,
                residual,
                converged: true,
            };
        }
        if start.is_some() {
            // a warm start usually sits on the optimal support already
            let key = self.support_key(&x);
            if let Some((xp, res)) = self.polish(&x, &key) {
                return QpSolution {
                    x: xp,
                    iterations: 0,
                    residual: res,
                    converged: true,
                };
            }
            last_polish_support = Some(key);
        }

        for k in 1..=MAX_ITER {
            self.gradient(&y, &mut grad);
            for i in 0..n {
                trial[i] = y[i] - step * grad[i];
            }
            let x_new = self.project(&trial);

            // gradient restart: (y − x⁺)·(x⁺ − x) > 0
            let mut restart_dot = 0.0;
            for i in 0..n {
                restart_dot += (y[i] - x_new[i]) * (x_new[i] - x[i]);
            }
            if restart_dot > 0.0 || k % RESTART_EVERY == 0 {
                t = 1.0;
                y.copy_from_slice(&x_new);
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let beta = (t - 1.0) / t_next;
                for i in 0..n {
                    y[i] = x_new[i] + beta * (x_new[i] - x[i]);
                }
                t = t_next;
            }
            x = x_new;

            if k % CHECK_EVERY == 0 {
                residual = self.kkt_residual(&x);
                if residual <= self.tol {
                    // the iterate is within tolerance; snap to the exact
                    // stationary point of its support when that is tighter
                    let key = self.support_key(&x);
                    if let Some((xp, res)) = self.polish(&x, &key) {
                        if res <= residual {
                            return QpSolution {
                                x: xp,
                                iterations: k,
                                residual: res,
                                converged: true,
                            };
                        }
                    }
                    return QpSolution {
                        x,
                        iterations: k,
                        residual,
                        converged: true,
                    };
                }
            }
            if k % POLISH_EVERY == 0 {
                let key = self.support_key(&x);
                if last_polish_support.as_ref() != Some(&key) {
                    if let Some((xp, res)) = self.polish(&x, &key) {
                        return QpSolution {
                            x: xp,
                            iterations: k,
                            residual: res,
                            converged: true,
                        };
                    }
                    last_polish_support = Some(key);
                }
            }
        }
        residual = self.kkt_residual(&x);
        QpSolution {
            x,
            iterations: MAX_ITER,
            converged: residual <= self.tol,
            residual,
        }
    }

    fn support_key(&self, x: &[f64]) -> (Vec<usize>, bool) {
        let support = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
        let active = self.halfspace.is_some_and(|h| {
            let gx: f64 = h.g.iter().zip(x).map(|(a, b)| a * b).sum();
            let scale = h.g.iter().fold(h.r.abs(), |m, v| m.max(v.abs()));
            gx - h.r <= 1e-6 * scale.max(f64::MIN_POSITIVE)
        });
        (support, active)
    }

    /// Solves the KKT system restricted to the support of `x`, dropping
    /// coordinates that come out negative, and accepts the candidate only if
    /// it passes the projected-gradient test.
    fn polish(&self, x: &[f64], key: &(Vec<usize>, bool)) -> Option<(Vec<f64>, f64)> {
        let n = x.len();
        let (support, active) = key;
        let orders: &[bool] = if self.halfspace.is_none() {
            &[false]
        } else if *active {
            &[true, false]
        } else {
            &[false, true]
        };
        let current = self.objective(x);
        for &with_halfspace in orders {
            let mut set = support.clone();
            for _ in 0..8 {
                if set.is_empty() {
                    break;
                }
                let Some(sol) = self.solve_on_support(&set, with_halfspace) else {
                    break;
                };
                if sol.iter().any(|&v| v < 0.0) {
                    let mut kept = Vec::with_capacity(set.len());
                    for (&i, &v) in set.iter().zip(&sol) {
                        if v >= 0.0 {
                            kept.push(i);
                        }
                    }
                    set = kept;
                    continue;
                }
                let mut candidate = vec![0.0; n];
                for (&i, &v) in set.iter().zip(&sol) {
                    candidate[i] = v;
                }
                // snap onto the feasible set; a no-op up to rounding
                let candidate = self.project(&candidate);
                let res = self.kkt_residual(&candidate);
                let obj = self.objective(&candidate);
                if res <= self.tol && obj <= current + 1e-12 * current.abs().max(1e-300) {
                    return Some((candidate, res));
                }
                break;
            }
        }
        None
    }

    fn solve_on_support(&self, set: &[usize], with_halfspace: bool) -> Option<Vec<f64>> {
        match self.solve_on_support_cholesky(set, with_halfspace) {
            Some(found) => found,
            None => self.solve_on_support_lu(set, with_halfspace),
        }
    }

    /// Eliminates `x = Q⁻¹(−c) + ν Q⁻¹1 + μ Q⁻¹g` and solves the small system
    /// for the multipliers. The outer `None` means the support block is not
    /// numerically positive definite and the caller should fall back to LU.
    fn solve_on_support_cholesky(&self, set: &[usize], with_halfspace: bool) -> Option<Option<Vec<f64>>> {
        let n = self.n();
        let s = set.len();
        let mut a = vec![0.0; s * s];
        for (row, &i) in set.iter().enumerate() {
            for (col, &j) in set.iter().enumerate() {
                a[row * s + col] = self.q[i * n + j];
            }
        }
        let l = cholesky(a, s)?;
        let solve = |rhs: Vec<f64>| {
            let mut rhs = rhs;
            cholesky_solve(&l, s, &mut rhs);
            rhs
        };
        let base = match self.c {
            Some(c) => solve(set.iter().map(|&i| -c[i]).collect()),
            None => vec![0.0; s],
        };
        let ones = solve(vec![1.0; s]);
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        let h = if with_halfspace { self.halfspace } else { None };
        let x = match h {
            None => {
                let denom = sum(&ones);
                if !(denom.abs() > 0.0) {
                    return Some(None);
                }
                let nu = (1.0 - sum(&base)) / denom;
                base.iter().zip(&ones).map(|(b, o)| b + nu * o).collect()
            }
            Some(h) => {
                let gs: Vec<f64> = set.iter().map(|&i| h.g[i]).collect();
                let along = solve(gs.clone());
                let gdot = |v: &[f64]| gs.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                // [1ᵀa 1ᵀb; gᵀa gᵀb] [ν; μ] = [1 − 1ᵀx₀; r − gᵀx₀]
                let (m11, m12, m21, m22) = (sum(&ones), sum(&along), gdot(&ones), gdot(&along));
                let (r1, r2) = (1.0 - sum(&base), h.r - gdot(&base));
                let det = m11 * m22 - m12 * m21;
                let scale = (m11 * m22).abs().max((m12 * m21).abs());
                if !(det.abs() > 1e-13 * scale) {
                    return Some(None);
                }
                let nu = (r1 * m22 - m12 * r2) / det;
                let mu = (m11 * r2 - m21 * r1) / det;
                if mu < 0.0 {
                    return Some(None);
                }
                (0..s).map(|k| base[k] + nu * ones[k] + mu * along[k]).collect()
            }
        };
        Some(Some(x))
    }

    fn solve_on_support_lu(&self, set: &[usize], with_halfspace: bool) -> Option<Vec<f64>> {
        let n = self.n();
        let s = set.len();
        let h = if with_halfspace { self.halfspace } else { None };
        let dim = s + 1 + usize::from(h.is_some());
        let mut a = vec![0.0; dim * dim];
        let mut b = vec![0.0; dim];
        for (row, &i) in set.iter().enumerate() {
            for (col, &j) in set.iter().enumerate() {
                a[row * dim + col] = self.q[i * n + j];
            }
            a[row * dim + s] = -1.0;
            a[s * dim + row] = 1.0;
            if let Some(h) = h {
                a[row * dim + s + 1] = -h.g[i];
                a[(s + 1) * dim + row] = h.g[i];
            }
            b[row] = self.c.map_or(0.0, |c| -c[i]);
        }
        b[s] = 1.0;
        if let Some(h) = h {
            b[s + 1] = h.r;
        }
        let sol = lu_solve(a, b)?;
        if let Some(mu) = h.map(|_| sol[s + 1]) {
            if mu < 0.0 {
                return None;
            }
        }
        Some(sol[..s].to_vec())
    }
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}`.
pub(crate) fn project_simplex(y: &[f64]) -> Vec<f64> {
    let tau = simplex_threshold(y);
    y.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Threshold `τ` with `Σ max(yᵢ − τ, 0) = 1`, by Michelot's fixed-point
/// iteration: average over the current active set, drop entries at or below
/// the new threshold, repeat until the set stops shrinking. The sequence of
/// thresholds is nondecreasing and ends at the exact value.
fn simplex_threshold(y: &[f64]) -> f64 {
    let mut tau = (y.iter().sum::<f64>() - 1.0) / y.len() as f64;
    loop {
        let (mut sum, mut count) = (0.0, 0usize);
        for &v in y {
            if v > tau {
                sum += v;
                count += 1;
            }
        }
        let next = (sum - 1.0) / count as f64;
        if next <= tau {
            return tau.max(next);
        }
        tau = next;
    }
}

/// Closed-form projection onto `{x : gᵀx ≥ r}`.
#[cfg(test)]
pub(crate) fn project_halfspace(y: &[f64], g: &[f64], r: f64) -> Vec<f64> {
    let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if gy >= r || gg == 0.0 {
        return y.to_vec();
    }
    let shift = (r - gy) / gg;
    y.iter().zip(g).map(|(a, b)| a + shift * b).collect()
}

/// Exact projection onto simplex ∩ `{gᵀx ≥ r}`.
///
/// The projection is `P_Δ(y + μg)` for the multiplier `μ ≥ 0` that makes the
/// half-space constraint tight (or `μ = 0` when it is slack). `gᵀP_Δ(y + μg)`
/// is nondecreasing and piecewise linear in `μ`, so the root is bracketed and
/// then located by regula falsi with the Illinois modification, which lands
/// on it exactly once both ends share a linear piece. The upper end of the
/// bracket is returned, so the result is always feasible. Requires
/// `max g ≥ r`.
pub(crate) fn project_simplex_halfspace(y: &[f64], g: &[f64], r: f64) -> Vec<f64> {
    let gx = |x: &[f64]| -> f64 { g.iter().zip(x).map(|(a, b)| a * b).sum() };
    let at = |mu: f64| -> Vec<f64> {
        let shifted: Vec<f64> = y.iter().zip(g).map(|(a, b)| a + mu * b).collect();
        project_simplex(&shifted)
    };
    let x0 = at(0.0);
    let f0 = gx(&x0) - r;
    if f0 >= 0.0 {
        return x0;
    }
    let gmax = g.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let gmin = g.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let spread = gmax - gmin;
    if spread <= 0.0 {
        return x0;
    }
    let yspread = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let (mut lo, mut f_lo) = (0.0, f0);
    let mut hi = (1.0 + yspread) / spread;
    let mut x_hi = at(hi);
    let mut f_hi = gx(&x_hi) - r;
    let mut guard = 0;
    while f_hi < 0.0 && guard < 200 {
        (lo, f_lo) = (hi, f_hi);
        hi *= 2.0;
        x_hi = at(hi);
        f_hi = gx(&x_hi) - r;
        guard += 1;
    }
    let eps = 4.0 * f64::EPSILON * (r.abs() + gmax.abs().max(gmin.abs()));
    let mut kept = 0_i8;
    let mut f_hi_true = f_hi;
    for _ in 0..200 {
        if f_hi_true <= eps || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mut mu = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(mu > lo && mu < hi) {
            mu = 0.5 * (lo + hi);
        }
        let x_mu = at(mu);
        let f_mu = gx(&x_mu) - r;
        if f_mu >= 0.0 {
            (hi, f_hi, f_hi_true, x_hi) = (mu, f_mu, f_mu, x_mu);
            if kept == -1 {
                f_lo *= 0.5;
            }
            kept = -1;
        } else {
            (lo, f_lo) = (mu, f_mu);
            if kept == 1 {
                f_hi *= 0.5;
            }
            kept = 1;
        }
    }
    x_hi
}

/// Dykstra's alternating projections onto the simplex and the half-space.
///
/// Converges to the same point as [`project_simplex_halfspace`]; kept as an
/// independent route for cross-checking.
#[cfg(test)]
pub(crate) fn project_dykstra(y: &[f64], g: &[f64], r: f64, iterations: usize) -> Vec<f64> {
    let n = y.len();
    let mut x = y.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for _ in 0..iterations {
        let a: Vec<f64> = (0..n).map(|i| x[i] + p[i]).collect();
        let z = project_simplex(&a);
        for i in 0..n {
            p[i] = a[i] - z[i];
        }
        let b: Vec<f64> = (0..n).map(|i| z[i] + q[i]).collect();
        let x_next = project_halfspace(&b, g, r);
        for i in 0..n {
            q[i] = b[i] - x_next[i];
        }
        x = x_next;
    }
    project_simplex(&x)
}
