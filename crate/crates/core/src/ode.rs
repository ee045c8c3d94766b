//! Dormand-Prince 5(4) with the standard fourth-order continuous extension.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Shorten steps so that every output point is a step endpoint
    /// (no interpolation noise between neighbouring outputs).
    pub land_on_outputs: bool,
}

impl Dopri5Options {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h0: 1e-3, h_min: 1e-14, h_max: f64::INFINITY, max_steps: 2_000_000, land_on_outputs: false }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Dopri5Stats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(s, y)` from `s0` to the last entry of `outputs`
/// (increasing, all `>= s0`) and returns the dense-output state at each
/// requested point.
pub fn dopri5<const N: usize, F, G>(
    f: F,
    s0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: Dopri5Options,
    valid: G,
) -> Result<(Vec<[f64; N]>, Dopri5Stats)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> bool,
{
    let s_end = *outputs.last().ok_or_else(|| Error::Precondition("no output points".into()))?;
    let mut out = Vec::with_capacity(outputs.len());
    let mut next = 0usize;
    while next < outputs.len() && outputs[next] <= s0 {
        out.push(y0);
        next += 1;
    }
    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, &y);
    let mut h = opts.h0.min(s_end - s0).max(opts.h_min);
    let mut stats = Dopri5Stats::default();
    let mut err_old: f64 = 1e-4;
    let lin = |y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64| {
        let mut r = *y;
        for (c, k) in terms {
            for i in 0..N {
                r[i] += h * c * k[i];
            }
        }
        r
    };
    while next < outputs.len() {
        if stats.accepted + stats.rejected > opts.max_steps {
            return Err(Error::Integration { s, reason: "step budget exhausted".into() });
        }
        let h_free = h;
        if s + h > s_end {
            h = s_end - s;
        }
        let mut clipped = false;
        if opts.land_on_outputs && s + h > outputs[next] {
            h = outputs[next] - s;
            clipped = true;
        }
        let k2 = f(s + C[1] * h, &lin(&y, &[(A21, &k1)], h));
        let k3 = f(s + C[2] * h, &lin(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(s + C[3] * h, &lin(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(s + C[4] * h, &lin(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(s + C[5] * h, &lin(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let y_new = lin(&y, &[(B[0], &k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)], h);
        let k7 = f(s + h, &y_new);
        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (j, k) in ks.iter().enumerate() {
                e += E[j] * k[i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (h * e / sc).powi(2);
        }
        err = (err / N as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            stats.rejected += 1;
            if h < opts.h_min {
                return Err(Error::Integration { s, reason: "non-finite error estimate".into() });
            }
            continue;
        }
        if err <= 1.0 && valid(&y_new) {
            // dense output coefficients
            let mut r1 = [0.0; N];
            let mut r2 = [0.0; N];
            let mut r3 = [0.0; N];
            let mut r4 = [0.0; N];
            let mut r5 = [0.0; N];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                r1[i] = y[i];
                r2[i] = dy;
                r3[i] = bspl;
                r4[i] = dy - h * k7[i] - bspl;
                let mut d = 0.0;
                for (j, k) in ks.iter().enumerate() {
                    d += D[j] * k[i];
                }
                r5[i] = h * d;
            }
            if clipped {
                out.push(y_new);
                next += 1;
            }
            while next < outputs.len() && outputs[next] <= s + h {
                let th = (outputs[next] - s) / h;
                let th1 = 1.0 - th;
                let mut yo = [0.0; N];
                for i in 0..N {
                    yo[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                }
                out.push(yo);
                next += 1;
            }
            s += h;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            // PI step control
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_old.powf(0.4 / 5.0);
            err_old = err.max(1e-4);
            h *= fac.clamp(0.2, 5.0);
            if clipped {
                h = h.max(h_free.min(h_free * fac.clamp(0.2, 5.0)));
            }
            h = h.min(opts.h_max);
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() && err > 1.0 { 0.9 * err.powf(-0.2) } else { 0.5 };
            h *= fac.clamp(0.1, 0.9);
            if h < opts.h_min {
                return Err(Error::Integration { s, reason: "step size underflow".into() });
            }
        }
    }
    Ok((out, stats))
}
