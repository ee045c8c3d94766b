//! Newton solve of `delta (Delta h + beta h) = 2 a* e^{-sqrt2 h}` from the
//! approximate solution `v_j`, and the two-height system built from it.

use super::chain::{envelope_constant, jt_approximation, log_weighted_sup, JtApproximation};
use super::grid::JtGrid;
use super::linear::{march_cauchy, HeightEval};
use super::{make_jt_params, JtParams};
use crate::error::{Error, Result};
use crate::interp::CubicSpline;
use crate::ode::{dopri5, Dopri5Options};
use crate::profile::ProfileCurve;
use serde::Serialize;
use std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// stop when `sup_{i<N} (s^2+2)|F_i| < tol delta`
    pub tol: f64,
    /// path-follow from larger `delta` if the direct iteration stalls
    pub continuation: bool,
    /// the solve runs on the chain grid refined this many times, where the
    /// oscillatory linearisation is resolved
    pub refine: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 30, tol: 1e-11, continuation: true, refine: 4 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JtSolution {
    pub s: Vec<f64>,
    pub h: Vec<f64>,
    /// `v_j` on the solve grid
    pub v_j: Vec<f64>,
    /// `h - v_j`
    pub q: Vec<f64>,
    pub residual: Vec<f64>,
    /// `sup_{i<N} (s^2+2)|F_i| / delta`
    pub residual_weighted: f64,
    /// `sup_{i<N} |F_i| / delta`
    pub residual_sup: f64,
    pub newton_iterations: usize,
    pub history: Vec<f64>,
    pub used_continuation: bool,
    /// `sqrt|log delta| sup |h - envelope|`
    pub envelope_constant: f64,
    /// `||q||_{*,0,(j-1)/2} / (sigma^{7/4-j/2} log sigma)`
    pub ball_constant: f64,
    /// `sup |h - h_ode|` against the same Cauchy problem integrated as an ODE
    pub ode_discrepancy: f64,
}

/// `F_i = delta (Delta h + beta h)_i - 2 a* e^{-sqrt2 h_i}`; the last entry
/// has no full stencil and is reported as zero.
fn nonlinear_residual(params: &JtParams, grid: &JtGrid, h: &[f64]) -> Vec<f64> {
    let lap = grid.laplacian(h);
    let n = h.len();
    let mut f: Vec<f64> = (0..n)
        .map(|k| params.delta * (lap[k] + grid.beta[k] * h[k]) - 2.0 * params.a_star * (-SQRT_2 * h[k]).exp())
        .collect();
    f[n - 1] = 0.0;
    f
}

fn weighted(grid: &JtGrid, f: &[f64]) -> f64 {
    let n = f.len();
    (0..n - 1).map(|k| (grid.s[k] * grid.s[k] + 2.0) * f[k].abs()).fold(0.0, f64::max)
}

/// Damped Newton from `init` with `h_0` held fixed; each linear step is the
/// forward march. Returns `(h, iterations, history, converged)`.
fn newton_core(
    params: &JtParams,
    grid: &JtGrid,
    init: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, usize, Vec<f64>, bool)> {
    let target = opts.tol * params.delta;
    let mut h = init.to_vec();
    let mut f = nonlinear_residual(params, grid, &h);
    let mut res = weighted(grid, &f);
    let mut history = vec![res];
    for it in 0..opts.max_iter {
        if res < target {
            return Ok((h, it, history, true));
        }
        let c: Vec<f64> = h
            .iter()
            .zip(&grid.beta)
            .map(|(&hk, &b)| b + 2.0 * SQRT_2 * params.a_star / params.delta * (-SQRT_2 * hk).exp())
            .collect();
        let rhs: Vec<f64> = f.iter().map(|v| -v / params.delta).collect();
        let dh = march_cauchy(grid, &c, &rhs, 0.0);
        if dh.iter().any(|v| !v.is_finite()) {
            return Ok((h, it, history, false));
        }
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = h.iter().zip(&dh).map(|(a, d)| a + step * d).collect();
            let ft = nonlinear_residual(params, grid, &trial);
            let rt = weighted(grid, &ft);
            if rt < res || step < 1e-3 {
                h = trial;
                f = ft;
                res = rt;
                break;
            }
            step *= 0.5;
        }
        history.push(res);
    }
    Ok((h, opts.max_iter, history, res < target))
}

/// Integrates `delta (h'' + alpha h' + beta h) = 2 a* e^{-sqrt2 h}` from
/// `h(0) = h0`, `h'(0) = 0` and samples it on `grid`.
fn ode_cauchy(params: &JtParams, grid: &JtGrid, curve: &ProfileCurve, h0: f64) -> Result<Vec<f64>> {
    let n_axis = curve.params.n as f64;
    let force = |h: f64| 2.0 * params.a_star / params.delta * (-SQRT_2 * h).exp();
    let rhs = |s: f64, y: &[f64; 2]| {
        let c = curve.coefs(s);
        [y[1], force(y[0]) - c.beta * y[0] - c.alpha * y[1]]
    };
    // h = h0 + k s^2 with n (2k) = force(h0) - beta(0) h0
    let k = (force(h0) - curve.params.c0 * h0) / (2.0 * n_axis);
    let s_start = 1e-4f64.min(0.1 * grid.s[1]);
    let y0 = [h0 + k * s_start * s_start, 2.0 * k * s_start];
    let opts = Dopri5Options { h0: s_start, land_on_outputs: true, ..Dopri5Options::with_tol(1e-12) };
    let (ys, _) = dopri5(rhs, s_start, y0, &grid.s[1..], opts, |y| y[0].is_finite())?;
    let mut out = vec![h0];
    out.extend(ys.iter().map(|y| y[0]));
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    params: &JtParams,
    grid: &JtGrid,
    curve: &ProfileCurve,
    h: Vec<f64>,
    v_j: Vec<f64>,
    iterations: usize,
    history: Vec<f64>,
    used_continuation: bool,
) -> Result<JtSolution> {
    let residual = nonlinear_residual(params, grid, &h);
    let n = h.len();
    let residual_weighted = weighted(grid, &residual) / params.delta;
    let residual_sup = residual[..n - 1].iter().map(|v| v.abs()).fold(0.0, f64::max) / params.delta;
    let q: Vec<f64> = h.iter().zip(&v_j).map(|(a, b)| a - b).collect();
    let j = params.j as f64;
    let rho = (j - 1.0) / 2.0;
    let ball = log_weighted_sup(&grid.s, &q, rho) / (params.sigma.powf(1.75 - j / 2.0) * params.sigma.ln());
    let ode = ode_cauchy(params, grid, curve, h[0])?;
    let ode_discrepancy = h.iter().zip(&ode).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(JtSolution {
        s: grid.s.clone(),
        envelope_constant: envelope_constant(&grid.s, &h, params.delta),
        h,
        v_j,
        q,
        residual,
        residual_weighted,
        residual_sup,
        newton_iterations: iterations,
        history,
        used_continuation,
        ball_constant: ball,
        ode_discrepancy,
    })
}

/// `v_j` of the chain resampled on a finer grid (exact `w0` plus a spline
/// of the remainder).
pub fn resample_height(chain: &JtApproximation, grid: &JtGrid, fine: &JtGrid) -> Result<Vec<f64>> {
    let p = &chain.params;
    let coarse = HeightEval::new(grid, &chain.v, p.a_star, p.delta)?;
    (0..fine.len())
        .map(|k| {
            let (w0, r) = coarse.split(fine.s[k], fine.beta[k])?;
            Ok(w0 + r)
        })
        .collect()
}

/// Newton for `h` with `h(0) = v_j(0)`, `h'(0) = 0`, started from `v_j`
/// on the chain grid refined `opts.refine` times.
pub fn solve_jt_newton(
    chain: &JtApproximation,
    grid: &JtGrid,
    curve: &ProfileCurve,
    opts: NewtonOptions,
) -> Result<JtSolution> {
    let fine = if opts.refine > 1 { grid.refined(curve, opts.refine)? } else { grid.clone() };
    let init = resample_height(chain, grid, &fine)?;
    solve_jt_newton_on(&chain.params, &fine, init, curve, opts)
}

/// Newton on `grid` from `init`; `init[0]` is the axis value kept fixed.
pub fn solve_jt_newton_on(
    params: &JtParams,
    grid: &JtGrid,
    init: Vec<f64>,
    curve: &ProfileCurve,
    opts: NewtonOptions,
) -> Result<JtSolution> {
    let (h, it, hist, ok) = newton_core(params, grid, &init, &opts)?;
    if ok {
        return finish(params, grid, curve, h, init, it, hist, false);
    }
    if !opts.continuation {
        return Err(Error::Solver(format!("Newton did not converge in {} iterations", opts.max_iter)));
    }
    // path-follow from 100 delta: v shifts by log(delta_prev/delta)/sqrt2
    let steps = 8;
    let mut h = init.clone();
    let shift_total = 100f64.ln() / SQRT_2;
    for v in h.iter_mut() {
        *v -= shift_total;
    }
    let mut total = it;
    for k in 0..=steps {
        let d = params.delta * 100f64.powf(1.0 - k as f64 / steps as f64);
        let pk = make_jt_params(d, params.j, params.a_star)?;
        if k > 0 {
            let shift = shift_total / steps as f64;
            for v in h.iter_mut() {
                *v += shift;
            }
        }
        let (hk, it, _, ok) = newton_core(&pk, grid, &h, &opts)?;
        total += it;
        if !ok {
            return Err(Error::Solver(format!("continuation stalled at delta={d}")));
        }
        h = hk;
    }
    let hist = vec![weighted(grid, &nonlinear_residual(params, grid, &h))];
    finish(params, grid, curve, h, init, total, hist, true)
}

/// `(v01, v02)` and the interface heights `h1 = -v02/2`, `h2 = v02/2`.
#[derive(Clone, Debug, Serialize)]
pub struct DecoupledSystem {
    pub eps: f64,
    pub s: Vec<f64>,
    pub v01: Vec<f64>,
    pub v02: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub growth_alpha: f64,
    /// `min` over nodes of the distance of `h2` to the growth band edges
    /// (positive when inside).
    pub growth_margin: f64,
    /// `sup |h2'|(s+1)`
    pub derivative_constant: f64,
    pub newton_iterations: usize,
    pub residual_weighted: f64,
    pub map_l: f64,
    pub x_max: f64,
    #[serde(skip)]
    spline: CubicSpline,
}

impl DecoupledSystem {
    /// `(h2, h2', h2'')` at `s` (even in `s`), from a cubic spline in `x`.
    pub fn h2_eval(&self, s: f64) -> (f64, f64, f64) {
        let sa = s.abs();
        let x = (sa / self.map_l).asinh();
        let (h, hx, hxx) = self.spline.eval3(x.min(self.x_max));
        let sx = self.map_l * x.cosh();
        let hs = hx / sx;
        let hss = (hxx - sa * hs) / (sx * sx);
        (h, if s < 0.0 { -hs } else { hs }, hss)
    }
}

/// Solves the height system for `delta = eps^2` on the chain grid refined
/// `refine` times; `v01 = 0`.
pub fn solve_decoupled_system(
    curve: &ProfileCurve,
    a_star: f64,
    eps: f64,
    j: usize,
    grid: &JtGrid,
    refine: usize,
    growth_alpha: f64,
) -> Result<DecoupledSystem> {
    let params = make_jt_params(eps * eps, j, a_star)?;
    let chain = jt_approximation(&params, grid)?;
    let sol = solve_jt_newton(&chain, grid, curve, NewtonOptions { refine, ..Default::default() })?;
    let fine = if refine > 1 { grid.refined(curve, refine)? } else { grid.clone() };
    let v02 = sol.h.clone();
    let h1: Vec<f64> = v02.iter().map(|v| -0.5 * v).collect();
    let h2: Vec<f64> = v02.iter().map(|v| 0.5 * v).collect();
    let le = 2.0 * eps.ln().abs();
    let mut margin = f64::INFINITY;
    for (k, &s) in fine.s.iter().enumerate() {
        let base = ((s * s + 2.0).ln() + le) / SQRT_2;
        let lo = (0.5 - growth_alpha) * base;
        let hi = (0.5 + growth_alpha) * base;
        margin = margin.min((h2[k] - lo).min(hi - h2[k]));
    }
    let mut sys = DecoupledSystem {
        eps,
        s: fine.s.clone(),
        v01: vec![0.0; fine.len()],
        v02,
        h1,
        h2: h2.clone(),
        growth_alpha,
        growth_margin: margin,
        derivative_constant: 0.0,
        newton_iterations: sol.newton_iterations,
        residual_weighted: sol.residual_weighted,
        map_l: fine.map_l,
        x_max: *fine.x.last().unwrap(),
        spline: fine.spline(&h2),
    };
    let mut dc: f64 = 0.0;
    for &s in &fine.s {
        let (_, d, _) = sys.h2_eval(s);
        dc = dc.max(d.abs() * (s + 1.0));
    }
    sys.derivative_constant = dc;
    if !(margin > 0.0) {
        return Err(Error::Diagnostic(format!("h2 leaves the growth band (margin {margin})")));
    }
    Ok(sys)
}
