//! Fermi coordinates `(s̄, z)` around the dilated surface `Σ_ε` in the
//! quadrant `(r_x, r_y)`.
//!
//! `X(s̄, z) = ε⁻¹(a, b)(εs̄) + z ν(εs̄)` with `ν = (-b', a') = (-sin θ, cos θ)`.
//! Internally everything runs in the unscaled variables `s = εs̄`,
//! `ζ_u = εz`, where the chart no longer depends on ε.

use crate::error::{Error, Result};
use crate::profile::ProfileCurve;

/// Lower bound on the volume factor that defines the calibrated neighbourhood.
pub const JACOBIAN_FLOOR: f64 = 0.1;

/// Fraction of `min(ρ_m, ρ_n)` used as the opening slope `η₀`.
pub const ETA0_FRACTION: f64 = 0.4;

#[derive(Clone, Debug)]
pub struct FermiChart {
    pub curve: ProfileCurve,
    pub eps: f64,
    /// neighbourhood `|z| < δ₀/ε + η₀ s̄`
    pub delta0: f64,
    pub eta0: f64,
    /// `(s_k, |X(s_k)|)` for initial guesses of the foot point
    table_s: Vec<f64>,
    table_r: Vec<f64>,
}

/// Foot point of a quadrant point.
#[derive(Clone, Copy, Debug)]
pub struct FermiPoint {
    pub sb: f64,
    pub z: f64,
}

impl FermiChart {
    /// Builds the chart and calibrates `δ₀` so that the volume factor stays
    /// above [`JACOBIAN_FLOOR`] on the neighbourhood, for `s` up to `s_reach`.
    pub fn new(curve: &ProfileCurve, eps: f64, s_reach: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Precondition(format!("eps must lie in (0,1), got {eps}")));
        }
        let p = curve.params;
        let eta0 = ETA0_FRACTION * p.rho_m.min(p.rho_n);
        let mut chart = Self { curve: curve.clone(), eps, delta0: 0.0, eta0, table_s: vec![], table_r: vec![] };
        chart.delta0 = chart.calibrate_delta0(s_reach)?;
        let ds = 0.01;
        let n = (s_reach / ds).ceil() as usize + 1;
        let mut r_max: f64 = 0.0;
        for k in 0..n {
            let s = k as f64 * ds;
            let q = chart.curve.point(s);
            // running max keeps the table monotone for the bisection guess
            r_max = r_max.max(q.a.hypot(q.b));
            chart.table_s.push(s);
            chart.table_r.push(r_max);
        }
        Ok(chart)
    }

    /// Unscaled volume factor `(1 - ζk)(1 - ζ sinθ/a)^{m-1}(1 + ζ cosθ/b)^{n-1}`.
    pub fn volume_factor_unscaled(&self, s: f64, zu: f64) -> f64 {
        let q = self.curve.point(s.abs());
        let ka = q.theta.sin() / q.a;
        // cosθ/b -> -k(0) on the axis
        let kb = if q.b.abs() < 1e-12 { -q.k } else { q.theta.cos() / q.b };
        (1.0 - zu * q.k) * (1.0 - zu * ka).powf(self.curve.m1()) * (1.0 + zu * kb).powf(self.curve.n1())
    }

    /// Volume factor in scaled variables.
    pub fn jacobian(&self, sb: f64, z: f64) -> f64 {
        self.volume_factor_unscaled(self.eps * sb, self.eps * z)
    }

    fn min_factor(&self, delta0: f64, s_reach: f64) -> f64 {
        let mut lo = f64::INFINITY;
        let ns = 400;
        for i in 0..=ns {
            // quadratic spacing resolves the neck
            let s = s_reach * (i as f64 / ns as f64).powi(2);
            let half = delta0 + self.eta0 * s;
            for k in 0..=40 {
                let zu = -half + 2.0 * half * k as f64 / 40.0;
                let j = self.volume_factor_unscaled(s, zu);
                lo = lo.min(if j.is_finite() { j } else { -1.0 });
            }
        }
        lo
    }

    fn calibrate_delta0(&self, s_reach: f64) -> Result<f64> {
        if self.min_factor(0.0, s_reach) <= JACOBIAN_FLOOR {
            return Err(Error::Diagnostic("chart volume factor fails even at delta0 = 0".into()));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        if self.min_factor(hi, s_reach) > JACOBIAN_FLOOR {
            return Ok(hi);
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.min_factor(mid, s_reach) > JACOBIAN_FLOOR {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Half-width of the neighbourhood at `s̄`.
    pub fn reach(&self, sb: f64) -> f64 {
        self.delta0 / self.eps + self.eta0 * sb.abs()
    }

    pub fn contains(&self, sb: f64, z: f64) -> bool {
        z.abs() < self.reach(sb)
    }

    /// `(r_x, r_y)` of the Fermi point `(s̄, z)`.
    pub fn map(&self, sb: f64, z: f64) -> (f64, f64) {
        let q = self.curve.point(self.eps * sb);
        let (sn, cs) = q.theta.sin_cos();
        (q.a / self.eps - z * sn, q.b / self.eps + z * cs)
    }

    /// Nearest-point projection onto the profile curve (foot point with
    /// `s̄ ≥ 0`). Returns `None` when the safeguarded Newton iteration fails.
    pub fn inverse(&self, rx: f64, ry: f64) -> Option<FermiPoint> {
        let (ex, ey) = (self.eps * rx.abs(), self.eps * ry.abs());
        let g = |s: f64| {
            let q = self.curve.point(s);
            let (sn, cs) = q.theta.sin_cos();
            let (dx, dy) = (ex - q.a, ey - q.b);
            let zu = -dx * sn + dy * cs;
            (dx * cs + dy * sn, -1.0 + q.k * zu, zu)
        };
        // g(0) = ey >= 0; bracket a sign change above it
        let rho = ex.hypot(ey);
        let i = self.table_r.partition_point(|&r| r < rho).min(self.table_s.len() - 1);
        let mut s = self.table_s[i];
        let mut lo = 0.0;
        let mut hi = s.max(1e-3);
        let mut gh = g(hi).0;
        let mut expand = 0;
        while gh > 0.0 {
            lo = hi;
            hi *= 2.0;
            gh = g(hi).0;
            expand += 1;
            if expand > 60 {
                return None;
            }
        }
        if g(lo).0 < 0.0 {
            // root below the table guess
            lo = 0.0;
        }
        s = s.clamp(lo, hi);
        for _ in 0..100 {
            let (gv, dg, zu) = g(s);
            if gv == 0.0 {
                return Some(FermiPoint { sb: s / self.eps, z: zu / self.eps });
            }
            if gv > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let mut next = s - gv / dg;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let done = (next - s).abs() <= 1e-15 * (1.0 + s) || hi - lo <= 1e-15 * (1.0 + s);
            s = next;
            if done {
                let (_, _, zu) = g(s);
                return Some(FermiPoint { sb: s / self.eps, z: zu / self.eps });
            }
        }
        None
    }
}
