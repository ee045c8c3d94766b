//! Allen-Cahn energy over balls of `ℝ^{m+n}`, reduced to the quadrant with
//! the weight `ω_{m-1} ω_{n-1} r_x^{m-1} r_y^{n-1}`.

use super::chart::FermiChart;
use super::quadrant::AxisymmetricField;
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::quad::composite_gauss;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Energy per unit area of one layer, `∫ v'² = 2√2/3`.
pub const LAYER_TENSION: f64 = 2.0 * std::f64::consts::SQRT_2 / 3.0;

/// Area of the unit `k`-sphere in `ℝ^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    // Γ((k+1)/2) by recursion from Γ(1) = 1, Γ(1/2) = √π
    let twice = k + 1;
    let mut g = if twice % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if twice % 2 == 0 { 1.0 } else { 0.5 };
    while 2.0 * x < twice as f64 - 0.5 {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(0.5 * twice as f64) / g
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub eps: f64,
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    /// `2 · (2√2/3) · |Σ_ε ∩ B_R|`
    pub interface_bound: Vec<f64>,
    pub slope: f64,
    /// `max E(R)/R^N`
    pub constant: f64,
    /// `max / min` of `E(R)/R^N`
    pub constant_spread: f64,
    pub big_n: usize,
}

/// Energy density `|∇u|²/2 + (1-u²)²/4` times the polynomial weight at every node.
fn weighted_density(field: &AxisymmetricField) -> Vec<f64> {
    let g = field.grid;
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    let (m, n) = (field.m, field.n);
    let w0 = sphere_area(m - 1) * sphere_area(n - 1);
    let mut out = vec![0.0; nx * ny];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let u = |i: usize, jj: usize| field.u[jj * nx + i];
        // even at the axes, second-order one-sided at the far edges
        let d = |at: &dyn Fn(usize) -> f64, k: usize, len: usize| {
            if k == 0 {
                0.0
            } else if k + 1 == len {
                (3.0 * at(k) - 4.0 * at(k - 1) + at(k - 2)) / (2.0 * h)
            } else {
                (at(k + 1) - at(k - 1)) / (2.0 * h)
            }
        };
        for i in 0..nx {
            let c = u(i, j);
            let ux = d(&|k| u(k, j), i, nx);
            let uy = d(&|k| u(i, k), j, ny);
            let e = 0.5 * (ux * ux + uy * uy) + 0.25 * (1.0 - c * c).powi(2);
            row[i] = w0 * e * g.rx(i).powi(m as i32 - 1) * g.ry(j).powi(n as i32 - 1);
        }
    });
    out
}

/// Trapezoid integral of `y` on the uniform grid from 0 to `x` (linear
/// interpolation in the last partial cell).
fn partial_trapezoid(cum: &[f64], y: &[f64], h: f64, x: f64) -> f64 {
    let k = ((x / h).floor() as usize).min(y.len() - 1);
    if k + 1 >= y.len() {
        return cum[y.len() - 1];
    }
    let f = x / h - k as f64;
    let yx = y[k] + f * (y[k + 1] - y[k]);
    cum[k] + 0.5 * f * h * (y[k] + yx)
}

/// `E(R)` for each radius; rows are integrated up to `√(R² - r_y²)` and the
/// row integrals are integrated in `r_y`, both by the trapezoid rule with
/// fractional end cells.
pub fn energy_at_radii(field: &AxisymmetricField, radii: &[f64]) -> Result<Vec<f64>> {
    let g = field.grid;
    let (x_ext, y_ext) = g.extent();
    for &r in radii {
        if r > x_ext.min(y_ext) {
            return Err(Error::Precondition(format!("radius {r} exceeds the quadrant ({x_ext}, {y_ext})")));
        }
    }
    let dens = weighted_density(field);
    let (nx, h) = (g.nx, g.h);
    let cums: Vec<Vec<f64>> = dens
        .par_chunks(nx)
        .map(|row| {
            let mut c = vec![0.0; nx];
            for i in 1..nx {
                c[i] = c[i - 1] + 0.5 * h * (row[i] + row[i - 1]);
            }
            c
        })
        .collect();
    Ok(radii
        .par_iter()
        .map(|&r| {
            let rows: Vec<f64> = (0..g.ny)
                .map(|j| {
                    let y = g.ry(j);
                    if y >= r {
                        0.0
                    } else {
                        partial_trapezoid(&cums[j], &dens[j * nx..(j + 1) * nx], h, (r * r - y * y).sqrt())
                    }
                })
                .collect();
            let mut cum = vec![0.0; rows.len()];
            for j in 1..rows.len() {
                cum[j] = cum[j - 1] + 0.5 * h * (rows[j] + rows[j - 1]);
            }
            partial_trapezoid(&cum, &rows, h, r)
        })
        .collect())
}

/// `|Σ_ε ∩ B_R|`, the weighted length of the dilated profile inside the ball.
pub fn surface_area_in_ball(chart: &FermiChart, radius: f64) -> f64 {
    let eps = chart.eps;
    let (m, n) = (chart.curve.params.m, chart.curve.params.n);
    let w0 = sphere_area(m - 1) * sphere_area(n - 1);
    // |X(s)| is increasing; bisect for the exit point
    let r = |s: f64| {
        let p = chart.curve.point(s);
        p.a.hypot(p.b) / eps
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while r(hi) < radius {
        hi *= 2.0;
    }
    if r(0.0) >= radius {
        return 0.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if r(mid) < radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let f = |s: f64| {
        let p = chart.curve.point(s);
        (p.a / eps).powi(m as i32 - 1) * (p.b / eps).powi(n as i32 - 1) / eps
    };
    w0 * composite_gauss(&f, 0.0, lo, 64, 8)
}

/// Energies on the radii, the fitted log-log slope and the spread of
/// `E(R)/R^N` with `N = m + n - 1`.
pub fn energy_ball(field: &AxisymmetricField, chart: &FermiChart, radii: &[f64]) -> Result<EnergyReport> {
    let eps = field.eps;
    if let Some(&r) = radii.iter().find(|&&r| r < 2.0 / eps * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!("radius {r} below 2/eps = {}", 2.0 / eps)));
    }
    if radii.len() < 2 {
        return Err(Error::Precondition("need at least two radii".into()));
    }
    let energies = energy_at_radii(field, radii)?;
    let big_n = field.m + field.n - 1;
    let slope = loglog_slope(radii, &energies);
    let ratios: Vec<f64> = radii.iter().zip(&energies).map(|(r, e)| e / r.powi(big_n as i32)).collect();
    let cmax = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let cmin = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let interface_bound = radii.iter().map(|&r| 2.0 * LAYER_TENSION * surface_area_in_ball(chart, r)).collect();
    Ok(EnergyReport {
        eps,
        radii: radii.to_vec(),
        energies,
        interface_bound,
        slope,
        constant: cmax,
        constant_spread: if cmin > 0.0 { cmax / cmin } else { f64::INFINITY },
        big_n,
    })
}

/// `count` log-spaced radii on `[lo, hi]`.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let t = k as f64 / (count - 1).max(1) as f64;
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}
