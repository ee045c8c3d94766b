//! Principal branch of the Lambert W function on `[0, inf)`.

use crate::error::{Error, Result};

const HALLEY_TOL: f64 = 1e-14;
const MAX_ITER: usize = 64;

/// `W(z)` with `W e^W = z`, `z >= 0`.
pub fn lambert_w(z: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("lambert_w needs finite z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z >= std::f64::consts::E {
        return lambert_w_log(z.ln());
    }
    let mut w = (1.0 + z).ln();
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= HALLEY_TOL * w.abs().max(f64::MIN_POSITIVE) {
            return Ok(w);
        }
    }
    Ok(w)
}

/// `W(e^lz)` for `lz >= 1`, solving `w + ln w = lz` so that huge
/// arguments such as `a e^{a+b}` never have to be formed.
pub fn lambert_w_log(lz: f64) -> Result<f64> {
    if !lz.is_finite() {
        return Err(Error::Domain(format!("lambert_w_log needs finite log-argument, got {lz}")));
    }
    if lz < 1.0 {
        return lambert_w(lz.exp());
    }
    // log z - log log z; for lz = 1 this gives 1 exactly
    let mut w = lz - lz.ln();
    if w <= 0.0 {
        w = 1.0;
    }
    for _ in 0..MAX_ITER {
        let g = w + w.ln() - lz;
        let g1 = 1.0 + 1.0 / w;
        let g2 = -1.0 / (w * w);
        let step = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2);
        w -= step;
        if step.abs() <= HALLEY_TOL * w {
            return Ok(w);
        }
    }
    Ok(w)
}

/// `W'(z) = W / (z (1 + W))`, with `W'(0) = 1`.
pub fn lambert_w_prime(z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(1.0);
    }
    let w = lambert_w(z)?;
    Ok(w / (z * (1.0 + w)))
}

/// `x = -a - b + W(a e^{a+b})`, the root of `b + x - a (e^{-x} - 1) = 0`.
///
/// The Lambert value is taken in log space and then polished by Newton on
/// `g(x) = b + x - a(e^{-x} - 1)`, which keeps relative accuracy when `x`
/// is small compared with `a`.
pub fn shifted_root(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("shifted_root needs a > 0, got {a}")));
    }
    let lz = a.ln() + a + b;
    let w = lambert_w_log(lz)?;
    let mut x = w - a - b;
    for _ in 0..8 {
        let em1 = (-x).exp_m1();
        let g = b + x - a * em1;
        let dg = 1.0 + a * (em1 + 1.0);
        let dx = g / dg;
        x -= dx;
        if dx.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}
