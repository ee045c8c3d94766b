//! Generating curve `(a(s), b(s))` of the O(m)xO(n)-invariant minimal
//! hypersurface through `(1, 0)`, its curvature and the coefficients
//! `alpha = (m-1)a'/a + (n-1)b'/b`, `beta = |A|^2` of the reduced Jacobi
//! operator.

use crate::error::{Error, Result};
use crate::interp::Quintic;
use crate::ode::{dopri5, Dopri5Options};
use crate::series::AxisSeries;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

const SERIES_ORDER: usize = 14;

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct LawsonConeParams {
    pub m: usize,
    pub n: usize,
    /// `N = m + n - 1`.
    pub big_n: usize,
    pub rho_m: f64,
    pub rho_n: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// `beta(0) = N (m-1)/n`.
    pub c0: f64,
    /// `(n-2)/2`.
    pub lambda: f64,
    /// `sqrt(((N-2)/2)^2 - (N-1))`.
    pub big_lambda: f64,
}

pub fn make_params(m: usize, n: usize) -> Result<LawsonConeParams> {
    if m < 3 || n < 3 || m + n < 8 {
        return Err(Error::UnsupportedDimension { m, n });
    }
    let big_n = m + n - 1;
    let nf = big_n as f64;
    let half = (nf - 2.0) / 2.0;
    let gap = half * half - (nf - 1.0);
    debug_assert!(gap > 0.0);
    let root = gap.sqrt();
    Ok(LawsonConeParams {
        m,
        n,
        big_n,
        rho_m: (((m - 1) as f64) / (nf - 1.0)).sqrt(),
        rho_n: (((n - 1) as f64) / (nf - 1.0)).sqrt(),
        gamma_plus: -half + root,
        gamma_minus: -half - root,
        c0: nf * (m - 1) as f64 / n as f64,
        lambda: (n as f64 - 2.0) / 2.0,
        big_lambda: root,
    })
}

/// Geometric data at one arc-length value.
#[derive(Clone, Copy, Debug, Default)]
pub struct CurvePoint {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub da: f64,
    pub db: f64,
    pub dda: f64,
    pub ddb: f64,
    /// curvature `k = theta'`.
    pub k: f64,
    pub dk: f64,
}

/// `alpha`, `s alpha`, `alpha'`, `beta` at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct Coefs {
    pub alpha: f64,
    pub s_alpha: f64,
    pub dalpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeAsymptoticFit {
    pub c1: f64,
    pub fit_window: (f64, f64),
    pub residual_norm: f64,
    /// Log-log slope of `|deviation|` over the window.
    pub slope: f64,
    /// Sign of the normal deviation (+1 or -1), 0 if it changes sign.
    pub deviation_sign: i32,
    /// Empirical exponent `gamma+ - alpha` of the correction term, read off
    /// the decay of `d/ds (w s^-gamma+)`. Reported, not asserted.
    pub secondary_exponent: f64,
}

#[derive(Clone, Debug)]
pub struct ProfileCurve {
    pub params: LawsonConeParams,
    pub s0: f64,
    pub s_max: f64,
    pub tol: f64,
    pub series: AxisSeries,
    /// Samples are placed at `s = map_l sinh(i dx)`.
    pub map_l: f64,
    pub dx: f64,
    pub s_grid: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub theta: Vec<f64>,
    ia: Quintic,
    ib: Quintic,
    it: Quintic,
    pub tail: Option<ConeAsymptoticFit>,
    pub steps_accepted: usize,
}

fn rhs(m1: f64, n1: f64, y: &[f64; 3]) -> [f64; 3] {
    let (a, b, th) = (y[0], y[1], y[2]);
    let (st, ct) = th.sin_cos();
    [ct, st, n1 * ct / b - m1 * st / a]
}

fn curvature_derivative(m1: f64, n1: f64, a: f64, b: f64, th: f64, k: f64) -> f64 {
    let (st, ct) = th.sin_cos();
    n1 * (-st * k / b - ct * st / (b * b)) - m1 * (ct * k / a - st * ct / (a * a))
}

/// Sample-grid options for [`integrate_profile_with`].
#[derive(Clone, Copy, Debug)]
pub struct SampleGrid {
    /// spacing at the axis
    pub h0: f64,
    /// relative spacing far out
    pub dx: f64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self { h0: 2.5e-4, dx: 2.5e-3 }
    }
}

pub fn integrate_profile(params: LawsonConeParams, s_max: f64, tol: f64) -> Result<ProfileCurve> {
    integrate_profile_with(params, s_max, tol, SampleGrid::default())
}

pub fn integrate_profile_with(
    params: LawsonConeParams,
    s_max: f64,
    tol: f64,
    grid: SampleGrid,
) -> Result<ProfileCurve> {
    if s_max < 10.0 {
        return Err(Error::Precondition(format!("s_max must be >= 10, got {s_max}")));
    }
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::Precondition(format!("tol must lie in [1e-13, 1e-6], got {tol}")));
    }
    let (m1, n1) = ((params.m - 1) as f64, (params.n - 1) as f64);
    let series = AxisSeries::new(params.m, params.n, SERIES_ORDER);
    let s0 = 10.0 * tol.powf(0.25);
    let map_l = grid.h0 / grid.dx;
    let n_pts = ((s_max / map_l).asinh() / grid.dx).ceil() as usize;
    let mut s_grid: Vec<f64> = (0..=n_pts).map(|i| map_l * (i as f64 * grid.dx).sinh()).collect();
    *s_grid.last_mut().unwrap() = s_max;
    let split = s_grid.partition_point(|&s| s < s0);

    let (y0, _, _) = series.eval(s0);
    let opts = Dopri5Options { h_max: 0.5, h0: 1e-3, land_on_outputs: true, ..Dopri5Options::with_tol(tol) };
    let (states, stats) = dopri5(
        |_s, y: &[f64; 3]| rhs(m1, n1, y),
        s0,
        y0,
        &s_grid[split..],
        opts,
        |y| y[0] > 0.0 && y[1] > 0.0,
    )?;

    let n = s_grid.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut th = vec![0.0; n];
    let (mut da, mut db, mut dt) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut dda, mut ddb, mut ddt) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let s = s_grid[i];
        if i < split {
            let (y, d, dd) = series.eval(s);
            a[i] = y[0];
            b[i] = y[1];
            th[i] = y[2];
            da[i] = d[0];
            db[i] = d[1];
            dt[i] = d[2];
            dda[i] = dd[0];
            ddb[i] = dd[1];
            ddt[i] = dd[2];
        } else {
            let y = states[i - split];
            if !(y[0] > 0.0 && y[1] > 0.0) {
                return Err(Error::Integration { s, reason: "a or b lost positivity".into() });
            }
            let f = rhs(m1, n1, &y);
            a[i] = y[0];
            b[i] = y[1];
            th[i] = y[2];
            da[i] = f[0];
            db[i] = f[1];
            dt[i] = f[2];
            dda[i] = -f[1] * f[2];
            ddb[i] = f[0] * f[2];
            ddt[i] = curvature_derivative(m1, n1, y[0], y[1], y[2], f[2]);
        }
    }
    let ia = Quintic::new(s_grid.clone(), a.clone(), da, dda);
    let ib = Quintic::new(s_grid.clone(), b.clone(), db, ddb);
    let it = Quintic::new(s_grid.clone(), th.clone(), dt, ddt);
    let mut curve = ProfileCurve {
        params,
        s0,
        s_max,
        tol,
        series,
        map_l,
        dx: grid.dx,
        s_grid,
        a,
        b,
        theta: th,
        ia,
        ib,
        it,
        tail: None,
        steps_accepted: stats.accepted,
    };
    let fit = fit_cone_asymptotics(&curve, (s_max / 4.0, s_max))?;
    curve.tail = Some(fit);
    Ok(curve)
}

impl ProfileCurve {
    pub fn m1(&self) -> f64 {
        (self.params.m - 1) as f64
    }
    pub fn n1(&self) -> f64 {
        (self.params.n - 1) as f64
    }

    /// Geometric data at `s` (even extension for `s < 0`, cone tail beyond `s_max`).
    pub fn point(&self, s: f64) -> CurvePoint {
        if s < 0.0 {
            let p = self.point(-s);
            // a even, b odd; theta(-s) = pi - theta(s); k even
            return CurvePoint {
                s,
                a: p.a,
                b: -p.b,
                theta: std::f64::consts::PI - p.theta,
                da: -p.da,
                db: p.db,
                dda: p.dda,
                ddb: -p.ddb,
                k: p.k,
                dk: -p.dk,
            };
        }
        let (m1, n1) = (self.m1(), self.n1());
        if s < self.s0 {
            let (y, d, dd) = self.series.eval(s);
            return CurvePoint {
                s,
                a: y[0],
                b: y[1],
                theta: y[2],
                da: d[0],
                db: d[1],
                dda: dd[0],
                ddb: dd[1],
                k: d[2],
                dk: dd[2],
            };
        }
        if s > self.s_max * (1.0 + 1e-12) {
            return self.tail_point(s);
        }
        let a = self.ia.eval(s);
        let b = self.ib.eval(s);
        let th = self.it.eval(s);
        let f = rhs(m1, n1, &[a, b, th]);
        CurvePoint {
            s,
            a,
            b,
            theta: th,
            da: f[0],
            db: f[1],
            dda: -f[1] * f[2],
            ddb: f[0] * f[2],
            k: f[2],
            dk: curvature_derivative(m1, n1, a, b, th, f[2]),
        }
    }

    fn tail_point(&self, s: f64) -> CurvePoint {
        let p = &self.params;
        let c1 = self.tail.as_ref().map(|t| t.c1).unwrap_or(0.0);
        let g = p.gamma_plus;
        let sg = s.powf(g);
        let a = p.rho_m * s + p.rho_n * c1 * sg;
        let b = p.rho_n * s - p.rho_m * c1 * sg;
        let da = p.rho_m + p.rho_n * c1 * g * sg / s;
        let db = p.rho_n - p.rho_m * c1 * g * sg / s;
        let dda = p.rho_n * c1 * g * (g - 1.0) * sg / (s * s);
        let ddb = -p.rho_m * c1 * g * (g - 1.0) * sg / (s * s);
        let nrm = (da * da + db * db).sqrt();
        let k = (da * ddb - dda * db) / nrm.powi(3);
        CurvePoint { s, a, b, theta: db.atan2(da), da, db, dda, ddb, k, dk: -2.0 * k / s }
    }

    /// `alpha`, `s alpha`, `alpha'`, `beta` at `s > 0`.
    pub fn coefs(&self, s: f64) -> Coefs {
        let s = s.abs();
        let (m1, n1) = (self.m1(), self.n1());
        if s == 0.0 {
            return Coefs { alpha: f64::INFINITY, s_alpha: n1, dalpha: f64::NEG_INFINITY, beta: self.params.c0 };
        }
        let p = self.point(s);
        let (ra, rb, a_over_b);
        if s < self.s0 {
            // b'/b and a'/b without the vanishing factor s
            let bs = self.series.b_over_s(s);
            rb = p.db / (s * bs);
            a_over_b = -self.series.da_over_s(s) / bs;
        } else {
            rb = p.db / p.b;
            a_over_b = p.da / p.b;
        }
        ra = p.da / p.a;
        let alpha = m1 * ra + n1 * rb;
        let s_alpha = m1 * ra * s + n1 * rb * s;
        let dalpha = m1 * (p.dda / p.a - ra * ra) + n1 * (p.ddb / p.b - rb * rb);
        let beta = p.k * p.k + m1 * (p.db / p.a).powi(2) + n1 * a_over_b * a_over_b;
        Coefs { alpha, s_alpha, dalpha, beta }
    }

    pub fn alpha(&self, s: f64) -> f64 {
        self.coefs(s).alpha
    }

    pub fn beta(&self, s: f64) -> f64 {
        self.coefs(s).beta
    }

    /// `v+ = a b' - a' b`, the Jacobi field generated by dilations.
    pub fn v_plus(&self, s: f64) -> (f64, f64, f64) {
        let p = self.point(s);
        let v = p.a * p.db - p.da * p.b;
        let dv = p.a * p.ddb - p.dda * p.b;
        // (a b'' - a'' b)' = a' b'' + a b''' - a''' b - a'' b'
        let dddb = -p.db * p.k * p.k + p.da * p.dk;
        let ddda = -p.da * p.k * p.k - p.db * p.dk;
        let ddv = p.da * p.ddb + p.a * dddb - ddda * p.b - p.dda * p.db;
        (v, dv, ddv)
    }

    /// Sampled `alpha`, `beta` on the curve grid (for reports and dumps).
    pub fn coefficients(&self) -> GeometricCoefficients {
        let mut alpha = Vec::with_capacity(self.s_grid.len());
        let mut beta = Vec::with_capacity(self.s_grid.len());
        for &s in &self.s_grid {
            let c = self.coefs(s);
            alpha.push(c.alpha);
            beta.push(c.beta);
        }
        let nm1 = (self.params.big_n - 1) as f64;
        let s_end = self.s_max;
        let c_end = self.coefs(s_end);
        GeometricCoefficients {
            s: self.s_grid.clone(),
            alpha,
            beta,
            beta0: self.coefs(1e-9).beta,
            s_alpha0: self.coefs(1e-9).s_alpha,
            tail_s_alpha: c_end.s_alpha,
            tail_s2_beta: c_end.beta * s_end * s_end,
            target_tail: nm1,
        }
    }

    /// Mean-curvature residual recomputed from the samples.
    pub fn mean_curvature_residual(&self) -> f64 {
        let i0 = self.s_grid.partition_point(|&s| s < self.s0).max(1);
        mean_curvature_residual_samples(self.params, &self.a, &self.b, i0)
    }
}

/// `sup |H|` over interior sample indices `>= i0`, with
/// `H = a'b'' - a''b' + (m-1)b'/a - (n-1)a'/b`. Derivatives are taken by
/// fourth-order central differences in the sample index and converted
/// with the parametrisation-invariant formulas, so samples need not be
/// equispaced in arc length.
pub fn mean_curvature_residual_samples(params: LawsonConeParams, a: &[f64], b: &[f64], i0: usize) -> f64 {
    let (m1, n1) = ((params.m - 1) as f64, (params.n - 1) as f64);
    let d1 = |y: &[f64], i: usize| (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / 12.0;
    let d2 = |y: &[f64], i: usize| {
        (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / 12.0
    };
    let mut sup: f64 = 0.0;
    for i in i0.max(2)..a.len().saturating_sub(2) {
        let (ax, bx, axx, bxx) = (d1(a, i), d1(b, i), d2(a, i), d2(b, i));
        let sx = (ax * ax + bx * bx).sqrt();
        let kappa = (ax * bxx - axx * bx) / (sx * sx * sx);
        let h = kappa + m1 * (bx / sx) / a[i] - n1 * (ax / sx) / b[i];
        sup = sup.max(h.abs());
    }
    sup
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricCoefficients {
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta0: f64,
    pub s_alpha0: f64,
    pub tail_s_alpha: f64,
    pub tail_s2_beta: f64,
    pub target_tail: f64,
}

pub fn fit_cone_asymptotics(curve: &ProfileCurve, window: (f64, f64)) -> Result<ConeAsymptoticFit> {
    let (lo, hi) = window;
    if !(lo >= curve.s_max / 4.0 - 1e-9 && hi <= curve.s_max + 1e-9 && hi > lo * 1.2) {
        return Err(Error::Fit(format!(
            "window ({lo}, {hi}) must lie in [s_max/4, s_max] with hi > 1.2 lo"
        )));
    }
    let p = &curve.params;
    let g = p.gamma_plus;
    let pts: Vec<(f64, f64)> = curve
        .s_grid
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= lo && s <= hi)
        .map(|(i, &s)| (s, -p.rho_n * curve.a[i] + p.rho_m * curve.b[i]))
        .collect();
    if pts.len() < 8 {
        return Err(Error::Fit(format!("only {} samples in the fit window", pts.len())));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(s, w) in &pts {
        let sg = s.powf(g);
        num += w * sg;
        den += sg * sg;
    }
    // deviation w = -c1 s^gamma+
    let c1 = -num / den;
    let (mut r2, mut w2) = (0.0, 0.0);
    for &(s, w) in &pts {
        r2 += (w + c1 * s.powf(g)).powi(2);
        w2 += w * w;
    }
    let sign = if pts.iter().all(|&(_, w)| w > 0.0) {
        1
    } else if pts.iter().all(|&(_, w)| w < 0.0) {
        -1
    } else {
        0
    };
    let log_pts: Vec<(f64, f64)> = pts.iter().map(|&(s, w)| (s.ln(), w.abs().max(1e-300).ln())).collect();
    let slope = crate::fit::linear_fit(&log_pts).slope;
    // g = w s^-gamma -> -c1 + c2 s^-alpha, so |g'| ~ s^(-alpha-1)
    let dg: Vec<(f64, f64)> = pts
        .windows(3)
        .filter_map(|q| {
            let gs = |(s, w): (f64, f64)| w * s.powf(-g);
            let d = (gs(q[2]) - gs(q[0])) / (q[2].0 - q[0].0);
            (d != 0.0).then(|| (q[1].0.ln(), d.abs().ln()))
        })
        .collect();
    let secondary = if dg.len() >= 4 { g + crate::fit::linear_fit(&dg).slope + 1.0 } else { f64::NAN };
    Ok(ConeAsymptoticFit {
        c1,
        fit_window: window,
        residual_norm: (r2 / w2).sqrt(),
        slope,
        deviation_sign: sign,
        secondary_exponent: secondary,
    })
}

/// Even-extension helper: the axis value of theta.
pub const THETA_AXIS: f64 = FRAC_PI_2;
