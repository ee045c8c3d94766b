//! Quadrature: adaptive Simpson and composite Gauss-Legendre.

use crate::error::{Error, Result};

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = 2_000_000usize;
    let r = simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50, &mut budget);
    if budget == 0 {
        return Err(Error::Numerical(format!(
            "adaptive Simpson on [{a}, {b}] exhausted its evaluation budget"
        )));
    }
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *budget = budget.saturating_sub(2);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || *budget == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss-Legendre with `panels` equal panels of `order` points.
pub fn composite_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(c + 0.5 * h * xi);
        }
        sum += 0.5 * h * s;
    }
    sum
}

/// Cumulative integral of samples `y` over nodes `x` by the trapezoid rule
/// with an end correction from the supplied derivative samples `dy`
/// (Euler-Maclaurin, fourth order on smooth data).
pub fn cumulative_hermite(x: &[f64], y: &[f64], dy: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in 1..x.len() {
        let h = x[i] - x[i - 1];
        out[i] = out[i - 1] + 0.5 * h * (y[i] + y[i - 1]) + h * h / 12.0 * (dy[i - 1] - dy[i]);
    }
    out
}

/// Gauss-Legendre rule of `order` points together with the partial
/// integration matrix `s[k][l] = int_{-1}^{x_k} L_l`, where `L_l` is the
/// Lagrange basis on the nodes. Lets one integral per cell deliver the
/// running integral at every node of the cell.
#[derive(Clone, Debug)]
pub struct GaussCell {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub partial: Vec<Vec<f64>>,
}

impl GaussCell {
    pub fn new(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let lagrange = |l: usize, t: f64| {
            let mut p = 1.0;
            for (j, &xj) in x.iter().enumerate() {
                if j != l {
                    p *= (t - xj) / (x[l] - xj);
                }
            }
            p
        };
        let partial = x
            .iter()
            .map(|&xk| {
                let half = 0.5 * (xk + 1.0);
                (0..order)
                    .map(|l| (0..order).map(|q| half * w[q] * lagrange(l, -1.0 + half * (x[q] + 1.0))).sum())
                    .collect()
            })
            .collect();
        Self { x, w, partial }
    }

    /// Nodes mapped to `[a, b]`.
    pub fn nodes(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().map(move |&x| a + 0.5 * (b - a) * (x + 1.0))
    }
}
