//! Lambert-W approximate solutions `v_j = w_0 + ... + w_j` of
//! `delta (Delta h + beta h) = 2 a* e^{-sqrt2 h}` and their error.

use super::grid::JtGrid;
use super::JtParams;
use crate::error::{Error, Result};
use crate::kernels::lambert::{lambert_w_log, shifted_root};
use serde::Serialize;
use std::f64::consts::SQRT_2;

/// `w_0 = W(2 sqrt2 a* / (delta beta)) / sqrt2`, computed in log space.
pub fn w0_value(a_star: f64, delta: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && delta > 0.0) {
        return Err(Error::Domain(format!("w0 needs beta > 0 and delta > 0 (beta={beta}, delta={delta})")));
    }
    let lz = (2.0 * SQRT_2 * a_star).ln() - delta.ln() - beta.ln();
    if lz < 1.0 {
        return Err(Error::Domain(format!("2 sqrt2 a*/(delta beta) = e^{lz} is below e")));
    }
    Ok(lambert_w_log(lz)? / SQRT_2)
}

/// `w_0` on the samples of `beta`.
pub fn jt_w0(params: &JtParams, beta: &[f64]) -> Result<Vec<f64>> {
    beta.iter().map(|&b| w0_value(params.a_star, params.delta, b)).collect()
}

/// Relative residual `|delta beta w0 - 2 a* e^{-sqrt2 w0}| / (delta beta w0)`.
pub fn w0_residual(params: &JtParams, beta: f64, w0: f64) -> f64 {
    let lhs = params.delta * beta * w0;
    (lhs - 2.0 * params.a_star * (-SQRT_2 * w0).exp()).abs() / lhs
}

#[derive(Clone, Debug, Serialize)]
pub struct JtApproximation {
    pub params: JtParams,
    pub s: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    /// `a_i`, `b_i` for `i = 0..j-1`.
    pub a_seq: Vec<Vec<f64>>,
    pub b_seq: Vec<Vec<f64>>,
    /// Max relative residual of the algebraic step identity, per step.
    pub step_residuals: Vec<f64>,
}

impl JtApproximation {
    pub fn depth(&self) -> usize {
        self.w.len() - 1
    }

    /// `v_i` for `i <= j`.
    pub fn partial_sum(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.s.len()];
        for w in &self.w[..=i] {
            for (a, b) in v.iter_mut().zip(w) {
                *a += b;
            }
        }
        v
    }
}

/// Builds `w_0..w_j` by the recursion
/// `a_i = a_{i-1} e^{-sqrt2 w_i}`, `b_i = sqrt2 Delta w_i / beta`,
/// `sqrt2 w_{i+1} = -a_i - b_i + W(a_i e^{a_i + b_i})`.
pub fn jt_approximation(params: &JtParams, grid: &JtGrid) -> Result<JtApproximation> {
    let w0 = jt_w0(params, &grid.beta)?;
    let mut chain = JtApproximation {
        params: params.clone(),
        s: grid.s.clone(),
        w: vec![w0.clone()],
        v: w0.clone(),
        a_seq: vec![],
        b_seq: vec![],
        step_residuals: vec![],
    };
    let mut a: Vec<f64> = w0.iter().map(|w| SQRT_2 * w).collect();
    for _ in 0..params.j {
        jt_recursion_step(&mut chain, grid, &mut a)?;
    }
    Ok(chain)
}

/// One recursion step; `a` holds `a_{i-1}` on entry (or `a_0` for the
/// first step) and `a_i` on exit.
pub fn jt_recursion_step(chain: &mut JtApproximation, grid: &JtGrid, a: &mut [f64]) -> Result<()> {
    let i = chain.w.len() - 1;
    if i > 0 {
        for (ak, wk) in a.iter_mut().zip(&chain.w[i]) {
            *ak *= (-SQRT_2 * wk).exp();
        }
    }
    let lap = grid.laplacian(&chain.w[i]);
    let b: Vec<f64> = lap.iter().zip(&grid.beta).map(|(l, be)| SQRT_2 * l / be).collect();
    let mut next = Vec::with_capacity(a.len());
    let mut worst: f64 = 0.0;
    for k in 0..a.len() {
        let x = shifted_root(a[k], b[k])?;
        if !x.is_finite() {
            return Err(Error::Numerical(format!("recursion step {} failed at s={}", i + 1, grid.s[k])));
        }
        let tail = a[k] * (-x).exp_m1();
        let g = b[k] + x - tail;
        let scale = (b[k].abs() + x.abs() + tail.abs()).max(1e-300);
        worst = worst.max(g.abs() / scale);
        next.push(x / SQRT_2);
    }
    chain.a_seq.push(a.to_vec());
    chain.b_seq.push(b);
    chain.step_residuals.push(worst);
    for (v, w) in chain.v.iter_mut().zip(&next) {
        *v += w;
    }
    chain.w.push(next);
    Ok(())
}

/// `E_delta(v_j)` by definition and by the identity `delta Delta w_j`.
#[derive(Clone, Debug, Serialize)]
pub struct JtError {
    pub by_definition: Vec<f64>,
    pub by_identity: Vec<f64>,
    /// `sup |difference| / delta`
    pub discrepancy: f64,
    /// `sup (1+s)^2 (log(s+2))^{j/2} |log delta|^{j/2} |E| / delta`
    pub weighted_constant: f64,
}

pub fn jt_error_depth(chain: &JtApproximation, grid: &JtGrid, depth: usize) -> JtError {
    let p = &chain.params;
    let v = chain.partial_sum(depth);
    let lap_v = grid.laplacian(&v);
    let by_definition: Vec<f64> = (0..v.len())
        .map(|k| p.delta * (lap_v[k] + grid.beta[k] * v[k]) - 2.0 * p.a_star * (-SQRT_2 * v[k]).exp())
        .collect();
    let by_identity: Vec<f64> = grid.laplacian(&chain.w[depth]).iter().map(|l| p.delta * l).collect();
    let discrepancy =
        by_definition.iter().zip(&by_identity).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / p.delta;
    let half = depth as f64 / 2.0;
    let ld = p.delta.ln().abs();
    let weighted_constant = (0..v.len())
        .map(|k| {
            let s = grid.s[k];
            (1.0 + s).powi(2) * ((s + 2.0).ln() * ld).powf(half) * by_definition[k].abs() / p.delta
        })
        .fold(0.0, f64::max);
    JtError { by_definition, by_identity, discrepancy, weighted_constant }
}

pub fn jt_error(chain: &JtApproximation, grid: &JtGrid) -> JtError {
    jt_error_depth(chain, grid, chain.depth())
}

/// `(log(s^2+2) + |log delta|)/sqrt2`, the leading profile of `v_j`.
pub fn envelope(s: f64, delta: f64) -> f64 {
    ((s * s + 2.0).ln() + delta.ln().abs()) / SQRT_2
}

/// `sup sqrt|log delta| |v - envelope|`.
pub fn envelope_constant(s: &[f64], v: &[f64], delta: f64) -> f64 {
    let r = delta.ln().abs().sqrt();
    s.iter().zip(v).map(|(&s, &v)| r * (v - envelope(s, delta)).abs()).fold(0.0, f64::max)
}

/// `sup (log(s+2))^rho |f|`, the `*,0,rho` norm on samples.
pub fn log_weighted_sup(s: &[f64], f: &[f64], rho: f64) -> f64 {
    s.iter().zip(f).map(|(&s, &f)| (s + 2.0).ln().powf(rho) * f.abs()).fold(0.0, f64::max)
}
