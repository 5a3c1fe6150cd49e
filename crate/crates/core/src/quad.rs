//! Adaptive Simpson quadrature on a compact interval.
//!
//! The integrands in this crate are smooth bump-like profiles, sometimes
//! modulated by a plane wave, so plain recursive Simpson with Richardson
//! control is accurate and cheap. A forced minimum depth guards against
//! aliasing, where an oscillatory integrand vanishes on every coarse node
//! and the error estimate spuriously reports convergence.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;
/// Subdivision levels always taken before the error test may terminate.
const MIN_DEPTH: u32 = 5;

/// Integrate `f` over `[a, b]` to the given relative tolerance.
///
/// The tolerance is applied against the magnitude of the whole-interval
/// estimate, with a small absolute floor so that integrals that are
/// genuinely zero converge immediately.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = simpson(&f, a, b);
    // An odd or oscillatory integrand can integrate to ~0 while the
    // function itself is O(1); a tolerance relative to the integral alone
    // would then be unattainable. Scale by a coarse trapezoid estimate of
    // the L1 norm so the tolerance tracks the integrand's magnitude.
    const L1_NODES: usize = 32;
    let h = (b - a) / L1_NODES as f64;
    let mut l1 = 0.0;
    for i in 0..=L1_NODES {
        let w = if i == 0 || i == L1_NODES { 0.5 } else { 1.0 };
        l1 += w * f(a + i as f64 * h).abs();
    }
    l1 *= h.abs();
    let scale = whole.abs().max(l1).max(1e-12);
    recurse(&f, a, b, whole, rel_tol * scale, MAX_DEPTH)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    // The interval has shrunk to machine resolution; no further refinement
    // is representable, so accept the current estimate.
    if !(a < m && m < b) {
        return Ok(whole);
    }
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    // Deltas at the rounding noise of the estimates themselves can never
    // shrink further; accept them rather than recursing forever.
    let noise = 64.0 * f64::EPSILON * (whole.abs() + left.abs() + right.abs());
    if depth + MIN_DEPTH <= MAX_DEPTH
        && (delta.abs() <= 15.0 * tol || delta.abs() <= noise)
    {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature { lo: a, hi: b });
    }
    let l = recurse(f, a, m, left, 0.5 * tol, depth - 1)?;
    let r = recurse(f, m, b, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}
