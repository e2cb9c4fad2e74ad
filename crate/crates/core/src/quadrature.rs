//! Adaptive Simpson integration.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` to an absolute tolerance `eps` using adaptive
/// Simpson with Richardson correction. Fails when a panel still misses its
/// share of the tolerance at `max_depth`; the error reports the worst
/// remaining local error relative to `eps`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, eps: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut worst = 0.0_f64;
    let value = recurse(f, a, b, fa, fm, fb, whole, eps, max_depth, &mut worst);
    if worst > 0.0 {
        return Err(Error::Quadrature {
            achieved: worst,
            requested: eps,
        });
    }
    Ok(value)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    worst: &mut f64,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *worst = worst.max(delta.abs() / 15.0 / eps);
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, worst)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, worst)
}
