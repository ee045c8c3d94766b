//! Graded radial grid `s = L sinh(x)`, uniform in `x`, and the discrete
//! Laplace-Beltrami operator `q'' + alpha q'` of the profile surface on it.

use crate::error::{Error, Result};
use crate::interp::CubicSpline;
use crate::profile::ProfileCurve;
use serde::Serialize;

/// Default axis spacing. The recursion multiplies node-scale content by
/// about `4 / (h^2 beta (1 + a))` per step, so the grid must stay coarser
/// than the local length `1/sqrt(beta (1 + a))` for the chain to contract.
pub const JT_H0: f64 = 0.6;
/// Default spacing in `x = asinh(s/L)`.
pub const JT_DX: f64 = 0.2;

#[derive(Clone, Debug, Serialize)]
pub struct JtGrid {
    pub map_l: f64,
    pub dx: f64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `n`, the factor of the axis limit `Delta q(0) = n q''(0)`.
    pub n_axis: f64,
}

/// Coefficients of one row of the discrete Laplacian.
#[derive(Clone, Copy, Debug, Default)]
pub struct Stencil {
    pub left: f64,
    pub diag: f64,
    pub right: f64,
}

impl JtGrid {
    /// Grid with spacing `h0` at the axis and relative spacing `dx` far
    /// out, ending exactly at `s_max`.
    pub fn new(curve: &ProfileCurve, s_max: f64, h0: f64, dx: f64) -> Result<Self> {
        if !(h0 > 0.0 && dx > 0.0 && s_max > h0) {
            return Err(Error::Precondition(format!("bad grid h0={h0}, dx={dx}, s_max={s_max}")));
        }
        if s_max > curve.s_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("grid end {s_max} beyond the profile s_max {}", curve.s_max)));
        }
        let l0 = h0 / dx;
        let x_max = (s_max / l0).asinh();
        let cells = ((x_max / dx) * (1.0 - 1e-12)).ceil() as usize;
        let dx = x_max / cells as f64;
        let map_l = l0;
        let x: Vec<f64> = (0..=cells).map(|i| i as f64 * dx).collect();
        let mut s: Vec<f64> = x.iter().map(|&x| map_l * x.sinh()).collect();
        s[cells] = s_max;
        let mut alpha = vec![f64::INFINITY; s.len()];
        let mut beta = vec![0.0; s.len()];
        for i in 0..s.len() {
            let c = curve.coefs(s[i]);
            if i > 0 {
                alpha[i] = c.alpha;
            }
            beta[i] = c.beta;
        }
        Ok(Self { map_l, dx, x, s, alpha, beta, n_axis: curve.params.n as f64 })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `(ds/dx, d2s/dx2)` at node `i`.
    fn sx(&self, i: usize) -> (f64, f64) {
        (self.map_l * self.x[i].cosh(), self.s[i])
    }

    /// Row `i` of the Laplacian (even ghost at the axis). Not valid for the
    /// last node, which needs a closure.
    pub fn stencil(&self, i: usize) -> Stencil {
        let dx2 = self.dx * self.dx;
        if i == 0 {
            let c = 2.0 * self.n_axis / (self.map_l * self.map_l * dx2);
            return Stencil { left: 0.0, diag: -c, right: c };
        }
        let (sx, sxx) = self.sx(i);
        let cxx = 1.0 / (sx * sx);
        let cx = (self.alpha[i] - sxx / (sx * sx)) / sx;
        Stencil {
            left: cxx / dx2 - cx / (2.0 * self.dx),
            diag: -2.0 * cxx / dx2,
            right: cxx / dx2 + cx / (2.0 * self.dx),
        }
    }

    /// Discrete `Delta q` at every node; the last node uses the quadratic
    /// extrapolation ghost `q_{N+1} = 3q_N - 3q_{N-1} + q_{N-2}`.
    pub fn laplacian(&self, q: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let st = self.stencil(i);
                let l = if i == 0 { 0.0 } else { q[i - 1] };
                let r = if i + 1 < n { q[i + 1] } else { 3.0 * q[n - 1] - 3.0 * q[n - 2] + q[n - 3] };
                st.left * l + st.diag * q[i] + st.right * r
            })
            .collect()
    }

    /// Fourth-order `Delta q` (five-point stencils in `x`, even reflection
    /// at the axis); `NaN` at the last two nodes. Used as an independent
    /// plug-back oracle for the three-point operator.
    pub fn laplacian4(&self, q: &[f64]) -> Vec<f64> {
        self.laplacian4_with(q, true)
    }

    /// Five-point oracle. With `even = false` the first two rows use
    /// forward stencils instead of the even ghosts, for samples of a
    /// function that is only `C^2` across the axis (odd powers of `|s|`).
    pub fn laplacian4_with(&self, q: &[f64], even: bool) -> Vec<f64> {
        let n = self.len();
        let at = |k: isize| q[k.unsigned_abs()];
        let h = self.dx;
        (0..n)
            .map(|i| {
                if i + 2 >= n {
                    return f64::NAN;
                }
                let k = i as isize;
                let (qx, qxx) = if !even && i == 0 {
                    (
                        0.0,
                        (35.0 * q[0] - 104.0 * q[1] + 114.0 * q[2] - 56.0 * q[3] + 11.0 * q[4]) / (12.0 * h * h),
                    )
                } else if !even && i == 1 {
                    (
                        (-3.0 * q[0] - 10.0 * q[1] + 18.0 * q[2] - 6.0 * q[3] + q[4]) / (12.0 * h),
                        (11.0 * q[0] - 20.0 * q[1] + 6.0 * q[2] + 4.0 * q[3] - q[4]) / (12.0 * h * h),
                    )
                } else {
                    (
                        (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h),
                        (-at(k - 2) + 16.0 * at(k - 1) - 30.0 * at(k) + 16.0 * at(k + 1) - at(k + 2)) / (12.0 * h * h),
                    )
                };
                if i == 0 {
                    return self.n_axis * qxx / (self.map_l * self.map_l);
                }
                let (sx, sxx) = self.sx(i);
                let qs = qx / sx;
                (qxx - sxx * qs) / (sx * sx) + self.alpha[i] * qs
            })
            .collect()
    }

    /// `d/ds` at the last node, second-order one-sided in `x`:
    /// coefficients of `(q_{N-2}, q_{N-1}, q_N)`.
    pub fn end_derivative(&self) -> [f64; 3] {
        let i = self.len() - 1;
        let (sx, _) = self.sx(i);
        let c = 1.0 / (2.0 * self.dx * sx);
        [c, -4.0 * c, 3.0 * c]
    }

    /// Cubic spline of nodal values in `x` (clamped to zero slope at the axis).
    pub fn spline(&self, q: &[f64]) -> CubicSpline {
        CubicSpline::new(self.x.clone(), q.to_vec(), Some(0.0))
    }

    pub fn x_of_s(&self, s: f64) -> f64 {
        (s.abs() / self.map_l).asinh()
    }

    /// Sub-grid with `refine` cells per original cell.
    pub fn refined(&self, curve: &ProfileCurve, refine: usize) -> Result<Self> {
        let s_max = *self.s.last().unwrap();
        Self::new(curve, s_max, self.map_l * self.dx / refine as f64, self.dx / refine as f64)
    }
}

/// Solves `(Delta + c) q = r` on nodes `0..N-1` with the Robin closure
/// `q' + kappa q = g_end` at the last node.
pub fn solve_robin_bvp(grid: &JtGrid, c: &[f64], r: &[f64], kappa: f64, g_end: f64) -> Result<Vec<f64>> {
    let n = grid.len();
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n - 1 {
        let st = grid.stencil(i);
        lo[i] = st.left;
        di[i] = st.diag + c[i];
        up[i] = st.right;
        rhs[i] = r[i];
    }
    // closure row has an entry at N-2; eliminate it with row N-1
    let [e2, e1, e0] = grid.end_derivative();
    let (mut a1, mut a0, mut g) = (e1, e0 + kappa, g_end);
    let f = e2 / lo[n - 2];
    a1 -= f * di[n - 2];
    a0 -= f * up[n - 2];
    g -= f * rhs[n - 2];
    lo[n - 1] = a1;
    di[n - 1] = a0;
    rhs[n - 1] = g;
    crate::linalg::solve_tridiagonal(&lo, &di, &up, &rhs)
}
