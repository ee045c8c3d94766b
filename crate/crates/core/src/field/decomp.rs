//! Residual of the glued field along normal lines of the Fermi patch, split
//! into its components along `(-1)^{l-1} v'(z - h_l)` and the remainder; and
//! the weighted residual away from the layers.

use super::approx::{AcApproximation, Layer};
use super::quadrant::{residual_point_richardson, AxisymmetricField};
use crate::kernels::heteroclinic::dv;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug)]
pub struct DecompositionOptions {
    /// patch `0 <= s <= s_patch` in the unscaled variable
    pub s_patch: f64,
    pub columns: usize,
    /// half-width beyond the outer layers along each normal line
    pub margin: f64,
    pub dz: f64,
    /// stencil spacing of the Richardson residual
    pub stencil: f64,
    /// exponent in the weight `(s²+2)^{(2+γ)/2}`
    pub gamma: f64,
    pub layer: Layer,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self { s_patch: 4.0, columns: 33, margin: 6.0, dz: 0.05, stencil: 0.1, gamma: 0.15, layer: Layer::U1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ColumnDecomposition {
    pub sb: f64,
    pub s: f64,
    pub projection: [f64; 2],
    pub predicted: [f64; 2],
    pub sup_residual: f64,
    pub sup_orthogonal: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerDecomposition {
    pub eps: f64,
    pub columns: Vec<ColumnDecomposition>,
    /// `sup |P_l|` over columns and layers
    pub sup_projection: f64,
    /// `sup |P_l - predicted_l|`
    pub sup_prediction_gap: f64,
    pub sup_orthogonal: f64,
    /// `sup (s²+2)^{(2+γ)/2} |S⊥|`
    pub weighted_orthogonal: f64,
    pub sup_residual: f64,
}

/// Projects the Richardson residual of the glued layer approximation onto the two layer
/// directions, column by column.
pub fn residual_layer_decomposition(approx: &AcApproximation, opts: &DecompositionOptions) -> LayerDecomposition {
    let eps = approx.eps;
    let m = approx.chart.curve.params.m;
    let n = approx.chart.curve.params.n;
    let f = |x: f64, y: f64| approx.glued(opts.layer, x, y);
    let columns: Vec<ColumnDecomposition> = (0..opts.columns)
        .into_par_iter()
        .map(|k| {
            let s = opts.s_patch * k as f64 / (opts.columns - 1).max(1) as f64;
            let sb = s / eps;
            let [(h1, _, _), (h2, _, _)] = approx.heights.eval(s);
            let mid = 0.5 * (h1 + h2);
            // stay where the cutoff is identically one
            let core = approx.onset(sb) - 1.0;
            let (z_lo, z_hi) = ((h1 - opts.margin).max(-core), (h2 + opts.margin).min(core));
            let nz = ((z_hi - z_lo) / opts.dz).ceil() as usize;
            let dz = (z_hi - z_lo) / nz as f64;
            let zs: Vec<f64> = (0..=nz).map(|i| z_lo + i as f64 * dz).collect();
            let res: Vec<f64> = zs
                .iter()
                .map(|&z| {
                    let (rx, ry) = approx.chart.map(sb, z);
                    residual_point_richardson(&f, m, n, rx, ry, opts.stencil)
                })
                .collect();
            let dir = |l: usize, z: f64| if l == 0 { dv(z - h1) } else { -dv(z - h2) };
            let mut proj = [0.0; 2];
            for (l, p) in proj.iter_mut().enumerate() {
                let (mut num, mut den) = (0.0, 0.0);
                for (i, &z) in zs.iter().enumerate() {
                    let inside = if l == 0 { z <= mid } else { z >= mid };
                    if !inside {
                        continue;
                    }
                    let w = if i == 0 || i == nz { 0.5 } else { 1.0 };
                    let d = dir(l, z);
                    num += w * res[i] * d;
                    den += w * d * d;
                }
                *p = num / den;
            }
            let mut sup_res: f64 = 0.0;
            let mut sup_orth: f64 = 0.0;
            for (i, &z) in zs.iter().enumerate() {
                let orth = res[i] - proj[0] * dir(0, z) - proj[1] * dir(1, z);
                sup_res = sup_res.max(res[i].abs());
                sup_orth = sup_orth.max(orth.abs());
            }
            ColumnDecomposition {
                sb,
                s,
                projection: proj,
                predicted: approx.predicted_coefficients(sb),
                sup_residual: sup_res,
                sup_orthogonal: sup_orth,
            }
        })
        .collect();
    let mut out = LayerDecomposition {
        eps,
        sup_projection: 0.0,
        sup_prediction_gap: 0.0,
        sup_orthogonal: 0.0,
        weighted_orthogonal: 0.0,
        sup_residual: 0.0,
        columns: vec![],
    };
    for c in &columns {
        for l in 0..2 {
            out.sup_projection = out.sup_projection.max(c.projection[l].abs());
            out.sup_prediction_gap = out.sup_prediction_gap.max((c.projection[l] - c.predicted[l]).abs());
        }
        out.sup_orthogonal = out.sup_orthogonal.max(c.sup_orthogonal);
        let w = (c.s * c.s + 2.0).powf(0.5 * (2.0 + opts.gamma));
        out.weighted_orthogonal = out.weighted_orthogonal.max(w * c.sup_orthogonal);
        out.sup_residual = out.sup_residual.max(c.sup_residual);
    }
    out.columns = columns;
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FarFieldReport {
    pub eps: f64,
    pub gamma_bar: f64,
    /// `sup |S(w)| (|εξ|²+2)^{(2+γ̄)/2} / ε^{2+γ̄}` outside the layer cores
    pub constant: f64,
    pub sup_residual: f64,
    /// nodes whose residual is identically zero (the `w = -1` region)
    pub exact_zero_nodes: usize,
    pub nodes: usize,
}

/// `γ̄` from the exponent choice `α`: `min(5/2 - 4α, 5/2 - 9α/2) - 2`.
pub fn gamma_bar(alpha: f64) -> f64 {
    (2.5 - 4.0 * alpha).min(2.5 - 4.5 * alpha) - 2.0
}

/// Weighted residual over grid nodes outside the cores `|z| < onset - 1`
/// where the cutoff is identically one.
pub fn error_far_field(approx: &AcApproximation, field: &AxisymmetricField, gamma_bar: f64) -> FarFieldReport {
    let g = field.grid;
    let eps = approx.eps;
    let scale = eps.powf(2.0 + gamma_bar);
    let rows: Vec<(f64, f64, usize, usize)> = (0..g.ny - 1)
        .into_par_iter()
        .map(|j| {
            let (mut c, mut sup, mut zeros, mut count) = (0.0f64, 0.0f64, 0usize, 0usize);
            for i in 0..g.nx - 1 {
                let (rx, ry) = (g.rx(i), g.ry(j));
                let core = match approx.chart.inverse(rx, ry) {
                    Some(p) => approx.chart.contains(p.sb, p.z) && p.z.abs() < approx.onset(p.sb) - 1.0,
                    None => false,
                };
                if core {
                    continue;
                }
                let r = field.residual_at(i, j);
                if !r.is_finite() {
                    continue;
                }
                count += 1;
                if r == 0.0 {
                    zeros += 1;
                }
                let rho2 = eps * eps * (rx * rx + ry * ry);
                c = c.max(r.abs() * (rho2 + 2.0).powf(0.5 * (2.0 + gamma_bar)) / scale);
                sup = sup.max(r.abs());
            }
            (c, sup, zeros, count)
        })
        .collect();
    let mut rep = FarFieldReport { eps, gamma_bar, constant: 0.0, sup_residual: 0.0, exact_zero_nodes: 0, nodes: 0 };
    for (c, s, z, n) in rows {
        rep.constant = rep.constant.max(c);
        rep.sup_residual = rep.sup_residual.max(s);
        rep.exact_zero_nodes += z;
        rep.nodes += n;
    }
    rep
}
