//! Fields sampled on the quadrant grid `(r_x, r_y) = (i h, j h)` and the
//! reduced Allen-Cahn operator
//! `S(u) = u_xx + u_yy + (m-1)/r_x u_x + (n-1)/r_y u_y + u - u³`.
//!
//! Invariant functions are even in `r_x` and `r_y`, so the axis rows use a
//! mirrored ghost value and the singular drift becomes `(m-1) u_xx`.

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct QuadrantGrid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl QuadrantGrid {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if nx < 5 || ny < 5 || !(h > 0.0) {
            return Err(Error::Precondition(format!("quadrant grid {nx}x{ny} with spacing {h}")));
        }
        Ok(Self { nx, ny, h })
    }

    pub fn rx(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn ry(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.rx(self.nx - 1), self.ry(self.ny - 1))
    }
}

/// Row-major samples `u[j*nx + i]` with the residual channel.
#[derive(Clone, Debug)]
pub struct AxisymmetricField {
    pub grid: QuadrantGrid,
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub u: Vec<f64>,
    /// `S(u)`; `NaN` on the outer edges, where no centred stencil exists.
    pub residual: Vec<f64>,
}

impl AxisymmetricField {
    /// Samples `f(r_x, r_y)` in parallel over rows and computes the residual.
    pub fn sample<F: Fn(f64, f64) -> f64 + Sync>(grid: QuadrantGrid, m: usize, n: usize, eps: f64, f: F) -> Self {
        let mut u = vec![0.0; grid.nx * grid.ny];
        u.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            let ry = grid.ry(j);
            for (i, x) in row.iter_mut().enumerate() {
                *x = f(grid.rx(i), ry);
            }
        });
        Self::from_values(grid, m, n, eps, u)
    }

    pub fn from_values(grid: QuadrantGrid, m: usize, n: usize, eps: f64, u: Vec<f64>) -> Self {
        let residual = residual_grid(&grid, m, n, &u);
        Self { grid, m, n, eps, u, residual }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[j * self.grid.nx + i]
    }

    pub fn residual_at(&self, i: usize, j: usize) -> f64 {
        self.residual[j * self.grid.nx + i]
    }

    pub fn sup_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |a: f64, &x| a.max(x.abs()))
    }

    /// Sup of `|S|` over interior nodes.
    pub fn sup_residual(&self) -> f64 {
        self.residual.iter().filter(|x| x.is_finite()).fold(0.0, |a: f64, &x| a.max(x.abs()))
    }

    /// Number of connected components of the zero level set, traced by
    /// marching squares: cells with mixed signs are linked through shared
    /// edges that carry a sign change.
    pub fn zero_components(&self) -> usize {
        zero_components(&self.grid, &self.u)
    }
}

/// Centred second-order residual on the grid.
pub fn residual_grid(grid: &QuadrantGrid, m: usize, n: usize, u: &[f64]) -> Vec<f64> {
    let (nx, ny, h) = (grid.nx, grid.ny, grid.h);
    let (m1, n1) = ((m - 1) as f64, (n - 1) as f64);
    let ih2 = 1.0 / (h * h);
    let mut out = vec![f64::NAN; nx * ny];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j + 1 >= ny {
            return;
        }
        let at = |i: usize, jj: usize| u[jj * nx + i];
        for i in 0..nx - 1 {
            let c = at(i, j);
            let (xm, xp) = (if i == 0 { at(1, j) } else { at(i - 1, j) }, at(i + 1, j));
            let (ym, yp) = (if j == 0 { at(i, 1) } else { at(i, j - 1) }, at(i, j + 1));
            let uxx = (xp - 2.0 * c + xm) * ih2;
            let uyy = (yp - 2.0 * c + ym) * ih2;
            let dx = if i == 0 { m1 * uxx } else { m1 / grid.rx(i) * (xp - xm) / (2.0 * h) };
            let dy = if j == 0 { n1 * uyy } else { n1 / grid.ry(j) * (yp - ym) / (2.0 * h) };
            row[i] = uxx + uyy + dx + dy + c - c * c * c;
        }
    });
    out
}

/// Pointwise centred residual of a function evaluated off-grid, stencil
/// spacing `h`; the function is expected to be even in both variables.
pub fn residual_point<F: Fn(f64, f64) -> f64>(f: &F, m: usize, n: usize, rx: f64, ry: f64, h: f64) -> f64 {
    let (m1, n1) = ((m - 1) as f64, (n - 1) as f64);
    let c = f(rx, ry);
    let (xm, xp) = (f(rx - h, ry), f(rx + h, ry));
    let (ym, yp) = (f(rx, ry - h), f(rx, ry + h));
    let uxx = (xp - 2.0 * c + xm) / (h * h);
    let uyy = (yp - 2.0 * c + ym) / (h * h);
    let dx = if rx.abs() < 1e-12 { m1 * uxx } else { m1 / rx * (xp - xm) / (2.0 * h) };
    let dy = if ry.abs() < 1e-12 { n1 * uyy } else { n1 / ry * (yp - ym) / (2.0 * h) };
    uxx + uyy + dx + dy + c - c * c * c
}

/// Richardson combination of [`residual_point`] at `h` and `h/2`
/// (fourth order on smooth functions).
pub fn residual_point_richardson<F: Fn(f64, f64) -> f64>(f: &F, m: usize, n: usize, rx: f64, ry: f64, h: f64) -> f64 {
    let coarse = residual_point(f, m, n, rx, ry, h);
    let fine = residual_point(f, m, n, rx, ry, 0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn zero_components(grid: &QuadrantGrid, u: &[f64]) -> usize {
    let (nx, ny) = (grid.nx, grid.ny);
    let (cx, cy) = (nx - 1, ny - 1);
    let pos = |i: usize, j: usize| u[j * nx + i] > 0.0;
    let mixed = |i: usize, j: usize| {
        let p = pos(i, j);
        p != pos(i + 1, j) || p != pos(i, j + 1) || p != pos(i + 1, j + 1)
    };
    let mut parent: Vec<usize> = (0..cx * cy).collect();
    let mut active = vec![false; cx * cy];
    for j in 0..cy {
        for i in 0..cx {
            active[j * cx + i] = mixed(i, j);
        }
    }
    for j in 0..cy {
        for i in 0..cx {
            let k = j * cx + i;
            if !active[k] {
                continue;
            }
            // right neighbour shares the edge (i+1, j)-(i+1, j+1)
            if i + 1 < cx && active[k + 1] && pos(i + 1, j) != pos(i + 1, j + 1) {
                let (a, b) = (find(&mut parent, k), find(&mut parent, k + 1));
                parent[a] = b;
            }
            // upper neighbour shares the edge (i, j+1)-(i+1, j+1)
            if j + 1 < cy && active[k + cx] && pos(i, j + 1) != pos(i + 1, j + 1) {
                let (a, b) = (find(&mut parent, k), find(&mut parent, k + cx));
                parent[a] = b;
            }
        }
    }
    let mut roots = std::collections::HashSet::new();
    for k in 0..cx * cy {
        if active[k] {
            roots.insert(find(&mut parent, k));
        }
    }
    roots.len()
}
