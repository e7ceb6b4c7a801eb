//! Gauss–Legendre quadrature, fixed and adaptive.

use crate::error::{QhError, Result};

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Two-point Gauss rule on `[a, b]`.
pub fn gauss2<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let x = h / 3f64.sqrt();
    h * (f(m - x) + f(m + x))
}

/// Five-point Gauss rule on `[a, b]`.
pub fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(m + h * x))
        .sum::<f64>()
        * h
}

const MAX_DEPTH: u32 = 40;

/// Adaptive bisection on the five-point rule until the whole/halves
/// difference is below `tol` (absolute, distributed over subintervals).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = gauss5(&f, a, b);
    let v = recurse(&f, a, b, whole, tol, 0)?;
    if !v.is_finite() {
        return Err(QhError::Singularity("non-finite integrand".into()));
    }
    Ok(v)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = gauss5(f, a, m);
    let right = gauss5(f, m, b);
    let err = (left + right - whole).abs();
    // stop at the roundoff floor as well as at the target
    if err <= tol || err <= 64.0 * f64::EPSILON * (left + right).abs() || !err.is_finite() {
        return Ok(left + right);
    }
    if depth >= MAX_DEPTH {
        return Err(QhError::Convergence {
            iterations: depth as usize,
            residual: err,
        });
    }
    Ok(recurse(f, a, m, left, 0.5 * tol, depth + 1)? + recurse(f, m, b, right, 0.5 * tol, depth + 1)?)
}
