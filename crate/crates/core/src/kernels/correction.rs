//! Correction kernels: solutions of `psi'' + (1 - 3v^2) psi = rhs` for the
//! three right-hand sides `g0`, `-v''` and `t v'`.
//!
//! `psi0` and `psi2` come from reduction of order around the kernel element
//! `v'`: with `I(tau) = int_tau^inf v' rhs`, the function
//! `-v'(t) int_0^t v'^{-2} I` solves the equation and vanishes at 0.

use super::heteroclinic::{ddv, dv, linearized_potential, tail_product};
use super::interaction::InteractionConstant;
use crate::error::{Error, Result};
use crate::interp::Quintic;
use crate::quad::{adaptive_simpson, gauss_legendre};
use std::f64::consts::SQRT_2;

/// Extra width of the inner-integral grid beyond `T_ker`, so that the
/// integrals from `-inf` are complete to below 1e-24.
const INNER_MARGIN: f64 = 15.0;
/// Limit of `psi0` as `t -> -inf` (the ODE forces `-2 psi0 -> 24`).
pub const PSI0_MINUS_INF: f64 = -12.0;

#[derive(Clone, Debug)]
pub struct CorrectionKernels {
    pub t_ker: f64,
    pub dt: f64,
    pub a_star: f64,
    pub t: Vec<f64>,
    psi0: Quintic,
    psi2: Quintic,
}

/// `g0 = 6(1 - v^2) e^{-sqrt2 t} - a* v'`.
pub fn g0(a_star: f64, t: f64) -> f64 {
    6.0 * tail_product(t) - a_star * dv(t)
}

/// `psi1 = -t v'/2`.
pub fn psi1(t: f64) -> f64 {
    -0.5 * t * dv(t)
}

pub fn psi1_d(t: f64) -> (f64, f64, f64) {
    let (d1, d2) = (dv(t), ddv(t));
    // v''' = -(1 - 3v^2) v'
    let d3 = -linearized_potential(t) * d1;
    (-0.5 * t * d1, -0.5 * (d1 + t * d2), -0.5 * (2.0 * d2 + t * d3))
}

impl CorrectionKernels {
    pub fn psi0(&self, t: f64) -> f64 {
        self.psi0_d(t).0
    }

    /// `(psi0, psi0', psi0'')`.
    pub fn psi0_d(&self, t: f64) -> (f64, f64, f64) {
        if t > self.t_ker {
            // psi0 ~ K v' for large t
            let r = dv(t) / dv(self.t_ker);
            let p = self.psi0.eval(self.t_ker) * r;
            return (p, -SQRT_2 * p, 2.0 * p);
        }
        if t < -self.t_ker {
            return (self.psi0.eval(-self.t_ker), 0.0, 0.0);
        }
        self.psi0.eval3(t)
    }

    pub fn psi2(&self, t: f64) -> f64 {
        self.psi2_d(t).0
    }

    pub fn psi2_d(&self, t: f64) -> (f64, f64, f64) {
        if t.abs() > self.t_ker {
            let edge = self.t_ker.copysign(t);
            let r = dv(t) / dv(edge) * (t / edge).powi(2);
            let p = self.psi2.eval(edge) * r;
            let k = -SQRT_2 * t.signum();
            return (p, k * p, 2.0 * p);
        }
        self.psi2.eval3(t)
    }

    pub fn g0(&self, t: f64) -> f64 {
        g0(self.a_star, t)
    }

    pub fn psi1(&self, t: f64) -> f64 {
        psi1(t)
    }

    /// Node values of `(psi0, psi1, psi2, g0)` on the kernel grid.
    pub fn node_values(&self) -> Vec<[f64; 5]> {
        self.t
            .iter()
            .enumerate()
            .map(|(i, &t)| [t, self.psi0.y[i], psi1(t), self.psi2.y[i], self.g0(t)])
            .collect()
    }
}

/// `sup |psi'' + (1 - 3v^2) psi - rhs|` for `(psi0, psi1, psi2)` over the
/// kernel nodes, with `psi''` from sixth-order differences of the node
/// values (not from the interpolant's own derivatives).
pub fn ode_residuals(k: &CorrectionKernels) -> [f64; 3] {
    let nodes = k.node_values();
    let cols: [Vec<f64>; 3] = [1, 2, 3].map(|c| nodes.iter().map(|r| r[c]).collect());
    let mut out = [0.0f64; 3];
    for i in 0..nodes.len() {
        let t = nodes[i][0];
        let rhs = [nodes[i][4], -ddv(t), t * dv(t)];
        for c in 0..3 {
            if let Some((_, d2)) = crate::jacobi::fd6(&cols[c], k.dt, i) {
                let r = d2 + linearized_potential(t) * cols[c][i] - rhs[c];
                out[c] = out[c].max(r.abs());
            }
        }
    }
    out
}

/// Builds `psi0`, `psi2` on `[-T_ker, T_ker]` with spacing `dt`.
pub fn build_correction_kernels(
    interaction: &InteractionConstant,
    t_ker: f64,
    dt: f64,
    quad_tol: f64,
) -> Result<CorrectionKernels> {
    if t_ker < 10.0 {
        return Err(Error::Precondition(format!("T_ker must be >= 10, got {t_ker}")));
    }
    let a_star = interaction.a_star;
    let rhs0 = move |t: f64| dv(t) * g0(a_star, t);
    let rhs2 = |t: f64| t * dv(t) * dv(t);
    let psi0 = nested_kernel(&rhs0, t_ker, dt, quad_tol, |t| g0(a_star, t))?;
    let psi2 = nested_kernel(&rhs2, t_ker, dt, quad_tol, |t| t * dv(t))?;
    Ok(CorrectionKernels { t_ker, dt, a_star, t: psi0.x.clone(), psi0, psi2 })
}

/// Tail integrals `I(tau) = int_tau^inf w(xi) dxi` of an integrand `w` with
/// zero total mass, tabulated on a uniform grid and stored as cubic
/// Hermite data (`I' = -w`).
struct TailIntegral<'a, W: Fn(f64) -> f64> {
    x0: f64,
    h: f64,
    vals: Vec<f64>,
    w: &'a W,
}

impl<'a, W: Fn(f64) -> f64> TailIntegral<'a, W> {
    fn new(w: &'a W, lo: f64, hi: f64, h: f64) -> Self {
        let n = ((hi - lo) / h).round() as usize;
        let (gx, gw) = gauss_legendre(12);
        let cell = |a: f64| {
            let c = a + 0.5 * h;
            gx.iter().zip(&gw).map(|(x, wt)| wt * w(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        };
        let cells: Vec<f64> = (0..n).map(|k| cell(lo + k as f64 * h)).collect();
        let mid = n / 2; // node at tau = 0 when the grid is symmetric
        let mut vals = vec![0.0; n + 1];
        // tau >= 0: accumulate from the right end; tau < 0: minus the mass from the left end
        for k in (mid..n).rev() {
            vals[k] = vals[k + 1] + cells[k];
        }
        let mut left = 0.0;
        for k in 0..mid {
            vals[k] = -left;
            left += cells[k];
        }
        Self { x0: lo, h, vals, w }
    }

    fn eval(&self, tau: f64) -> f64 {
        let u = (tau - self.x0) / self.h;
        let i = (u.floor() as usize).min(self.vals.len() - 2);
        let s = u - i as f64;
        let (a, b) = (self.x0 + i as f64 * self.h, self.x0 + (i + 1) as f64 * self.h);
        let (p0, p1) = (self.vals[i], self.vals[i + 1]);
        let (m0, m1) = (-(self.w)(a) * self.h, -(self.w)(b) * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1
    }
}

fn nested_kernel<W, R>(w: &W, t_ker: f64, dt: f64, quad_tol: f64, rhs: R) -> Result<Quintic>
where
    W: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    let half = (t_ker / dt).round() as usize;
    let ext = half + (INNER_MARGIN / dt).round() as usize;
    let tail = TailIntegral::new(w, -(ext as f64) * dt, ext as f64 * dt, dt / 4.0);
    let outer = |tau: f64| {
        let d = dv(tau);
        tail.eval(tau) / (d * d)
    };
    let n = 2 * half + 1;
    let t: Vec<f64> = (0..n).map(|k| (k as f64 - half as f64) * dt).collect();
    let mut acc = vec![0.0; n];
    for k in half + 1..n {
        let (a, b) = (t[k - 1], t[k]);
        let scale = outer(0.5 * (a + b)).abs() * dt + 1e-300;
        acc[k] = acc[k - 1] + adaptive_simpson(&outer, a, b, quad_tol * scale)?;
    }
    for k in (0..half).rev() {
        let (a, b) = (t[k], t[k + 1]);
        let scale = outer(0.5 * (a + b)).abs() * dt + 1e-300;
        acc[k] = acc[k + 1] - adaptive_simpson(&outer, a, b, quad_tol * scale)?;
    }
    let mut y = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for k in 0..n {
        let tk = t[k];
        let (vp, vpp) = (dv(tk), ddv(tk));
        y[k] = -vp * acc[k];
        d1[k] = -vpp * acc[k] - tail.eval(tk) / vp;
        d2[k] = rhs(tk) - linearized_potential(tk) * y[k];
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite correction kernel value".into()));
    }
    Ok(Quintic::new(t, y, d1, d2))
}
