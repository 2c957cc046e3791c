//! Root finding and quadrature shared by the model modules.

use crate::{Error, Result};

/// Bisection on a bracketing interval: `f(lo)` and `f(hi)` must have opposite
/// signs (a zero endpoint is returned as the root). Runs until the interval
/// is narrower than `tol` or `max_iter` halvings, whichever comes first.
pub(crate) fn bisect<F>(mut lo: f64, mut hi: f64, f: F, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::Numerical(format!(
            "bisection endpoints not finite: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "bisection does not bracket a root: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance
/// `tol`. Deterministic; fails if the integrand produces a non-finite value.
pub(crate) fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Numerical(format!(
                "integrand evaluated to {y} at s = {x}"
            )))
        }
    };
    let m = 0.5 * (a + b);
    let fa = eval(a)?;
    let fm = eval(m)?;
    let fb = eval(b)?;
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(&eval, a, m, b, fa, fm, fb, whole, tol, 48)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    eval: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    let half = 0.5 * tol;
    Ok(simpson_rec(eval, a, lm, m, fa, flm, fm, left, half, depth - 1)?
        + simpson_rec(eval, m, rm, b, fm, frm, fb, right, half, depth - 1)?)
}
