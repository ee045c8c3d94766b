//! Linearised Jacobi-Toda operator `q'' + alpha q' + beta w~ q` with
//! `w~ = 1 + sqrt2 w0 e^{-sqrt2(v_j - w0)}`: the Emden-Fowler potential
//! `Q`, its regime structure, and the solve with zero axis data.

use super::chain::{log_weighted_sup, w0_value, JtApproximation};
use super::grid::{solve_robin_bvp, JtGrid};
use crate::error::{Error, Result};
use crate::interp::CubicSpline;
use crate::jacobi::EmdenFowlerFrame;
use crate::ode::{dopri5, Dopri5Options};
use crate::profile::ProfileCurve;
use serde::Serialize;
use std::f64::consts::SQRT_2;

/// `v_j` (or any height function close to it) at arbitrary `s`: exact `w0`
/// plus a spline in `x` of the remainder.
#[derive(Clone, Debug)]
pub struct HeightEval {
    pub a_star: f64,
    pub delta: f64,
    pub map_l: f64,
    pub x_max: f64,
    rest: CubicSpline,
}

impl HeightEval {
    pub fn new(grid: &JtGrid, values: &[f64], a_star: f64, delta: f64) -> Result<Self> {
        let rest: Vec<f64> = values
            .iter()
            .zip(&grid.beta)
            .map(|(v, &b)| Ok(v - w0_value(a_star, delta, b)?))
            .collect::<Result<_>>()?;
        Ok(Self { a_star, delta, map_l: grid.map_l, x_max: *grid.x.last().unwrap(), rest: grid.spline(&rest) })
    }

    /// `(w0, v - w0)` at `s` given `beta(s)`.
    pub fn split(&self, s: f64, beta: f64) -> Result<(f64, f64)> {
        let x = (s.abs() / self.map_l).asinh();
        if x > self.x_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("s={s} beyond the height grid")));
        }
        Ok((w0_value(self.a_star, self.delta, beta)?, self.rest.eval(x)))
    }

    /// Value and first two `s`-derivatives of the remainder `v - w0`.
    pub fn rest3(&self, s: f64) -> (f64, f64, f64) {
        let x = (s.abs() / self.map_l).asinh();
        let (r, rx, rxx) = self.rest.eval3(x.min(self.x_max));
        let sx = self.map_l * x.cosh();
        let rs = rx / sx;
        let rss = (rxx - s.abs() * rs) / (sx * sx);
        (r, if s < 0.0 { -rs } else { rs }, rss)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeConstants {
    /// sandwich ratio `(Q + lambda^2)/(c0 sigma e^{2t})` range on `t <= T0`
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub c1: f64,
    pub big_c1: f64,
    pub c2: f64,
    pub big_c2: f64,
    /// `sup |w~ - sigma|` on `t <= T0`
    pub plateau: f64,
    /// `sup |w~ - sigma - 2t| / ln t` on `t >= max(T1, e)`
    pub linear_log: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct JtLinearFrame {
    pub sigma: f64,
    pub t: Vec<f64>,
    pub q_pot: Vec<f64>,
    pub w_tilde: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub m2: f64,
    pub big_m: f64,
    /// `-log(sigma)/2 - M`
    pub t_sigma_small: f64,
    /// root of `Q = m^2`
    pub t_sigma: f64,
    pub t_sigma_predicted: f64,
    pub constants: RegimeConstants,
    /// largest relative increase of the Lyapunov energy on `(T_sigma, T0)`
    pub lyapunov_max_increase: f64,
    pub violations: Vec<f64>,
    /// Robin rate used at `s_max`
    pub kappa: f64,
}

/// Breakpoint and regime options.
#[derive(Clone, Copy, Debug)]
pub struct RegimeOptions {
    pub t0: f64,
    pub t1: f64,
    pub m2: f64,
}

impl Default for RegimeOptions {
    fn default() -> Self {
        Self { t0: -1.0, t1: 1.0, m2: 1.0 }
    }
}

/// `(Q, w~)` at `t`.
pub fn q_potential(frame: &EmdenFowlerFrame, height: &HeightEval, t: f64) -> Result<(f64, f64)> {
    let fp = frame.point(t);
    let beta = fp.beta_tilde / (fp.s * fp.s);
    let (w0, rest) = height.split(fp.s, beta)?;
    let wt = 1.0 + SQRT_2 * w0 * (-SQRT_2 * rest).exp();
    Ok((fp.v_pot + (wt - 1.0) * fp.beta_tilde, wt))
}

pub fn build_jt_linear_frame(
    chain: &JtApproximation,
    grid: &JtGrid,
    frame: &EmdenFowlerFrame,
    opts: RegimeOptions,
) -> Result<JtLinearFrame> {
    let p = &chain.params;
    let params = frame.curve.params;
    let sigma = p.sigma;
    let height = HeightEval::new(grid, &chain.v, p.a_star, p.delta)?;
    let lam2 = params.lambda * params.lambda;
    let c0 = params.c0;
    let qf = |t: f64| q_potential(frame, &height, t);
    let mut q_pot = Vec::with_capacity(frame.len());
    let mut w_tilde = Vec::with_capacity(frame.len());
    for &t in &frame.t {
        let (q, w) = qf(t)?;
        q_pot.push(q);
        w_tilde.push(w);
    }
    let t = frame.t.clone();
    let big_m = 0.5 * (4.0 * c0).ln();
    let t_sigma_small = -0.5 * sigma.ln() - big_m;
    // Q(t_sigma_small) ~ -lambda^2 + 1/4 < m^2 and Q(0) ~ c0 sigma
    let (mut lo, mut hi) = (t_sigma_small, 0.0);
    if !(qf(lo)?.0 < opts.m2 && qf(hi)?.0 > opts.m2) {
        return Err(Error::Diagnostic(format!("Q - m^2 does not change sign on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if qf(mid)?.0 < opts.m2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let t_sigma = 0.5 * (lo + hi);
    let t_sigma_predicted = -0.5 * sigma.ln() + 0.5 * ((lam2 + opts.m2) / c0).ln();

    let mut violations = Vec::new();
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut c1, mut big_c1, mut c2, mut big_c2) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    let (mut plateau, mut linear_log) = (0.0f64, 0.0f64);
    for k in 0..t.len() {
        let (tk, q) = (t[k], q_pot[k]);
        if tk <= opts.t0 {
            let r = (q + lam2) / (c0 * sigma * (2.0 * tk).exp());
            rmin = rmin.min(r);
            rmax = rmax.max(r);
            if k + 1 < t.len() && q_pot[k + 1] <= q {
                violations.push(tk);
            }
            plateau = plateau.max((w_tilde[k] - sigma).abs());
        } else if tk <= opts.t1 {
            c1 = c1.min(q / sigma);
            big_c1 = big_c1.max(q / sigma);
        } else {
            c2 = c2.min(q / (sigma + tk));
            big_c2 = big_c2.max(q / (sigma + tk));
        }
        if tk >= opts.t1.max(std::f64::consts::E) {
            linear_log = linear_log.max((w_tilde[k] - sigma - 2.0 * tk).abs() / tk.ln());
        }
    }
    if !(rmin > 0.0 && rmax <= 2.0 * rmin) {
        violations.push(opts.t0);
    }
    if !(c1 > 0.0) {
        violations.push(opts.t1);
    }
    if !(c2 > 0.0) {
        violations.push(*t.last().unwrap());
    }
    let lyapunov_max_increase = lyapunov_check(&qf, t_sigma, opts.t0)?;

    let t_end = *t.last().unwrap();
    let q_end = *q_pot.last().unwrap();
    let kappa = (0.5 * frame.alpha_tilde.last().unwrap() + q_end.max(0.0).sqrt()) / t_end.exp();
    let lf = JtLinearFrame {
        sigma,
        t,
        q_pot,
        w_tilde,
        t0: opts.t0,
        t1: opts.t1,
        m2: opts.m2,
        big_m,
        t_sigma_small,
        t_sigma,
        t_sigma_predicted,
        constants: RegimeConstants { ratio_min: rmin, ratio_max: rmax, c1, big_c1, c2, big_c2, plateau, linear_log },
        lyapunov_max_increase,
        violations,
        kappa,
    };
    if !lf.violations.is_empty() {
        return Err(Error::Diagnostic(format!("Q regime sandwich fails at t = {:?}", lf.violations)));
    }
    Ok(lf)
}

/// Integrates `v'' + Q v = 0` on `(a, b)` from `(1, 0)` and returns the
/// largest relative increase of `H = v'^2/(2Q) + v^2/2` between samples.
fn lyapunov_check(qf: &dyn Fn(f64) -> Result<(f64, f64)>, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let outs: Vec<f64> = (1..=400).map(|k| a + (b - a) * k as f64 / 400.0).collect();
    let err = std::cell::RefCell::new(None);
    let f = |t: f64, y: &[f64; 2]| {
        let q = match qf(t) {
            Ok((q, _)) => q,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        [y[1], -q * y[0]]
    };
    let opts = Dopri5Options { h0: 1e-3, ..Dopri5Options::with_tol(1e-12) };
    let (ys, _) = dopri5(f, a, [1.0, 0.0], &outs, opts, |_| true)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let mut h_prev = 0.5;
    let mut worst = f64::NEG_INFINITY;
    for (k, y) in ys.iter().enumerate() {
        let q = qf(outs[k])?.0;
        let h = y[1] * y[1] / (2.0 * q) + 0.5 * y[0] * y[0];
        worst = worst.max((h - h_prev) / h_prev);
        h_prev = h;
    }
    Ok(worst)
}

/// Result of the linearised solve.
#[derive(Clone, Debug, Serialize)]
pub struct JtLinearSolution {
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    /// `sup (s^2+2) log(s+2)^rho |residual|` by the five-point oracle
    pub weighted_residual: f64,
    /// `sup |q - q_march| / sup |q|` against the three-point march on the
    /// same grid
    pub march_discrepancy: f64,
    /// `sup |q_robin| / sup |q|` for the Robin-closed boundary-value
    /// problem, i.e. how much regular homogeneous solution the far closure
    /// injects
    pub robin_amplification: f64,
    /// `||q||_{*,0,rho-1/2} / ||f||_{*,2,rho}`
    pub norm_ratio: f64,
    pub refine: usize,
}

/// Zeroth-order coefficient `beta w~` of the linearised operator at `s`.
pub fn linear_coefficient(curve: &ProfileCurve, height: &HeightEval, s: f64) -> Result<f64> {
    let beta = curve.beta(s);
    let (w0, rest) = height.split(s, beta)?;
    Ok(beta * (1.0 + SQRT_2 * w0 * (-SQRT_2 * rest).exp()))
}

/// Forward march of the three-point scheme with `q_0 = 0`: row `i`
/// determines `q_{i+1}`, so every row except the last is satisfied exactly.
pub fn march_cauchy(grid: &JtGrid, c: &[f64], r: &[f64], q0: f64) -> Vec<f64> {
    let n = grid.len();
    let mut q = vec![0.0; n];
    q[0] = q0;
    let st = grid.stencil(0);
    q[1] = (r[0] - (st.diag + c[0]) * q0) / st.right;
    for i in 1..n - 1 {
        let st = grid.stencil(i);
        q[i + 1] = (r[i] - st.left * q[i - 1] - (st.diag + c[i]) * q[i]) / st.right;
    }
    q
}

/// `q'' + alpha q' + beta w~ q = f` with zero Cauchy data at the axis,
/// integrated as an ODE in `s` and sampled on the chain grid refined
/// `refine` times. The regular homogeneous solution decays strongly
/// outward, so any far closure would fix its multiple from tiny end
/// values; the axis data pins the solution without that amplification.
pub fn solve_jt_linearized(
    f: &dyn Fn(f64) -> f64,
    chain: &JtApproximation,
    grid: &JtGrid,
    curve: &ProfileCurve,
    kappa: f64,
    refine: usize,
    rho: f64,
) -> Result<JtLinearSolution> {
    let p = &chain.params;
    let fine = if refine > 1 { grid.refined(curve, refine)? } else { grid.clone() };
    let height = HeightEval::new(grid, &chain.v, p.a_star, p.delta)?;
    let n_axis = curve.params.n as f64;
    let err = std::cell::RefCell::new(None);
    let rhs_ode = |s: f64, y: &[f64; 2]| {
        let c = match linear_coefficient(curve, &height, s) {
            Ok(c) => c,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        [y[1], f(s) - curve.alpha(s) * y[1] - c * y[0]]
    };
    // q = f(0) s^2 / (2n) + O(s^4)
    let s_start = 1e-4f64.min(0.1 * fine.s[1]);
    let f0 = f(0.0);
    let y0 = [f0 * s_start * s_start / (2.0 * n_axis), f0 * s_start / n_axis];
    let opts = Dopri5Options { h0: s_start, land_on_outputs: true, ..Dopri5Options::with_tol(1e-12) };
    let (ys, _) = dopri5(rhs_ode, s_start, y0, &fine.s[1..], opts, |_| true)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let mut q = vec![0.0; fine.len()];
    for (k, y) in ys.iter().enumerate() {
        q[k + 1] = y[0];
    }

    let c: Vec<f64> = fine.s.iter().map(|&s| linear_coefficient(curve, &height, s)).collect::<Result<_>>()?;
    let rhs: Vec<f64> = fine.s.iter().map(|&s| f(s)).collect();
    let lap = fine.laplacian4_with(&q, false);
    let weight = |s: f64| (s * s + 2.0) * (s + 2.0).ln().powf(rho);
    let weighted_residual = (0..fine.len())
        .filter(|&k| lap[k].is_finite())
        .map(|k| weight(fine.s[k]) * (lap[k] + c[k] * q[k] - rhs[k]).abs())
        .fold(0.0, f64::max);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let q_sup = sup(&q);
    let rel = |v: &[f64]| if q_sup > 0.0 { v.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / q_sup } else { sup(v) };
    let march = march_cauchy(&fine, &c, &rhs, 0.0);
    let robin = solve_robin_bvp(&fine, &c, &rhs, kappa, 0.0)?;
    let nf = fine.s.iter().zip(&rhs).map(|(&s, r)| weight(s) * r.abs()).fold(0.0, f64::max);
    let nq = log_weighted_sup(&fine.s, &q, rho - 0.5);
    Ok(JtLinearSolution {
        march_discrepancy: rel(&march),
        robin_amplification: if q_sup > 0.0 { sup(&robin) / q_sup } else { sup(&robin) },
        s: fine.s,
        q,
        weighted_residual,
        norm_ratio: if nf > 0.0 { nq / nf } else { 0.0 },
        refine,
    })
}
