//! Jacobi operator `q'' + alpha q' + beta q` of the profile surface in
//! Emden-Fowler variables `s = e^t`, `q = p u`, where it becomes
//! `u'' + V u`. Builds both invariant Jacobi fields and solves the forced
//! problem by variation of parameters.

use crate::error::{Error, Result};
use crate::interp::CubicSpline;
use crate::profile::ProfileCurve;
use crate::quad::{composite_gauss, GaussCell};
use serde::Serialize;

const CELL_ORDER: usize = 8;

/// Frame options.
#[derive(Clone, Copy, Debug)]
pub struct FrameOptions {
    /// `None` picks the point where `e^{(n/2+1) t}` drops below 1e-16.
    pub t_min: Option<f64>,
    /// `None` means `ln s_max`.
    pub t_max: Option<f64>,
    pub dt: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self { t_min: None, t_max: None, dt: 0.01 }
    }
}

/// Pointwise frame quantities.
#[derive(Clone, Copy, Debug, Default)]
pub struct FramePoint {
    pub t: f64,
    pub s: f64,
    pub alpha_tilde: f64,
    pub dalpha_tilde: f64,
    pub beta_tilde: f64,
    pub p: f64,
    pub v_pot: f64,
    /// `v+` and its `s`-derivative.
    pub v_plus: f64,
    pub dv_plus: f64,
    pub u_plus: f64,
    pub du_plus: f64,
}

#[derive(Clone, Debug)]
pub struct EmdenFowlerFrame {
    pub curve: ProfileCurve,
    pub t: Vec<f64>,
    pub dt: f64,
    pub alpha_tilde: Vec<f64>,
    pub beta_tilde: Vec<f64>,
    pub p: Vec<f64>,
    pub v_pot: Vec<f64>,
    /// `ln s0` and `ln s_max` of the underlying curve.
    pub t0: f64,
    pub t1: f64,
    ln_a1: f64,
    cell: GaussCell,
    /// Gauss nodes (row per cell) and `u+` there.
    g_t: Vec<Vec<f64>>,
    g_up: Vec<Vec<f64>>,
    g_p: Vec<Vec<f64>>,
}

impl EmdenFowlerFrame {
    /// `ln(a^{m-1} b^{n-1} / s)`, finite as `s -> 0`.
    fn ln_area(&self, s: f64) -> f64 {
        ln_area(&self.curve, s)
    }

    /// Frame data at arbitrary `t`, directly from the curve.
    pub fn point(&self, t: f64) -> FramePoint {
        let s = t.exp();
        let c = self.curve.coefs(s);
        let alpha_tilde = c.s_alpha - 1.0;
        let dalpha_tilde = c.dalpha * s * s + c.s_alpha;
        let beta_tilde = c.beta * s * s;
        // p = exp(-int_0^t alpha~/2) and alpha = (ln a^{m-1} b^{n-1})'
        let p = (-0.5 * (self.ln_area(s) - self.ln_a1)).exp();
        let v_pot = -0.25 * alpha_tilde * alpha_tilde - 0.5 * dalpha_tilde + beta_tilde;
        let (v_plus, dv_plus, _) = self.curve.v_plus(s);
        let u_plus = v_plus / p;
        let du_plus = (s * dv_plus + 0.5 * alpha_tilde * v_plus) / p;
        FramePoint { t, s, alpha_tilde, dalpha_tilde, beta_tilde, p, v_pot, v_plus, dv_plus, u_plus, du_plus }
    }

    /// `p` by direct quadrature of `alpha~/2` (second route, for checks).
    pub fn p_by_quadrature(&self, t: f64) -> f64 {
        let f = |tau: f64| 0.5 * (self.curve.coefs(tau.exp()).s_alpha - 1.0);
        let panels = ((t.abs() / 0.05).ceil() as usize).max(1);
        (-composite_gauss(&f, 0.0, t, panels, 8)).exp()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

fn ln_area(curve: &ProfileCurve, s: f64) -> f64 {
    let (m1, n1) = (curve.m1(), curve.n1());
    let q = curve.point(s);
    let ln_b_over_s = if s < curve.s0 { curve.series.b_over_s(s).ln() } else { (q.b / s).ln() };
    m1 * q.a.ln() + n1 * ln_b_over_s + (n1 - 1.0) * s.ln()
}

pub fn build_ef_frame(curve: &ProfileCurve, opts: FrameOptions) -> Result<EmdenFowlerFrame> {
    let n = curve.params.n as f64;
    let t_min = opts.t_min.unwrap_or(-(16.0 * std::f64::consts::LN_10) / (n / 2.0 + 1.0) - 1.0);
    let t_max = opts.t_max.unwrap_or(curve.s_max.ln());
    if !(t_max > t_min + 1.0) || opts.dt <= 0.0 {
        return Err(Error::Precondition(format!("bad frame range [{t_min}, {t_max}] / dt {}", opts.dt)));
    }
    if t_max > curve.s_max.ln() + 1e-12 {
        return Err(Error::Domain(format!("t_max {t_max} beyond ln s_max")));
    }
    let cells = ((t_max - t_min) / opts.dt).round() as usize;
    let dt = (t_max - t_min) / cells as f64;
    let t: Vec<f64> = (0..=cells).map(|i| t_min + dt * i as f64).collect();
    let mut frame = EmdenFowlerFrame {
        curve: curve.clone(),
        t: t.clone(),
        dt,
        alpha_tilde: vec![],
        beta_tilde: vec![],
        p: vec![],
        v_pot: vec![],
        t0: curve.s0.ln(),
        t1: curve.s_max.ln(),
        ln_a1: ln_area(curve, 1.0),
        cell: GaussCell::new(CELL_ORDER),
        g_t: vec![],
        g_up: vec![],
        g_p: vec![],
    };
    let pts: Vec<FramePoint> = t.iter().map(|&t| frame.point(t)).collect();
    frame.alpha_tilde = pts.iter().map(|q| q.alpha_tilde).collect();
    frame.beta_tilde = pts.iter().map(|q| q.beta_tilde).collect();
    frame.p = pts.iter().map(|q| q.p).collect();
    frame.v_pot = pts.iter().map(|q| q.v_pot).collect();
    for c in 0..cells {
        let nodes: Vec<f64> = frame.cell.nodes(t[c], t[c + 1]).collect();
        let gp: Vec<FramePoint> = nodes.iter().map(|&x| frame.point(x)).collect();
        frame.g_up.push(gp.iter().map(|q| q.u_plus).collect());
        frame.g_p.push(gp.iter().map(|q| q.p).collect());
        frame.g_t.push(nodes);
    }
    Ok(frame)
}

/// The two invariant Jacobi fields on the frame nodes.
#[derive(Clone, Debug, Serialize)]
pub struct JacobiFieldPair {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub du_plus: Vec<f64>,
    pub du_minus: Vec<f64>,
    /// `u+ u-' - u- u+'` (equal to -1 by construction of `u-` before
    /// normalisation, rescaled by the normalisation of `v-`).
    pub wronskian: f64,
    /// Scale applied so that `s^{n-2} v- -> 1` at the axis.
    pub minus_scale: f64,
    /// `I(t) = int_t^inf u+^{-2}` at nodes (before scaling).
    #[serde(skip)]
    pub tail_integral: Vec<f64>,
    #[serde(skip)]
    g_i: Vec<Vec<f64>>,
}

/// `v+ = a b' - a' b` on the frame nodes.
pub fn jacobi_field_plus(frame: &EmdenFowlerFrame) -> Result<Vec<f64>> {
    let v: Vec<f64> = frame.t.iter().map(|&t| frame.curve.v_plus(t.exp()).0).collect();
    if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Numerical(format!("v+ not positive at s={}", frame.t[i].exp())));
    }
    Ok(v)
}

/// `int_T^inf u+^{-2}` for the model `u+ = c e^{L t}(1 + d e^{-t})` matched
/// to the value and slope of `u+` at `T`.
fn closed_tail(frame: &EmdenFowlerFrame, t_end: f64) -> Result<f64> {
    let lam = frame.curve.params.big_lambda;
    let q = frame.point(t_end);
    let r = lam - q.du_plus / q.u_plus;
    if !(r.abs() < 0.5) {
        return Err(Error::Numerical(format!("u+ growth at T={t_end} is far from the plateau (slope defect {r})")));
    }
    let x = r / (1.0 - r);
    let c_scaled = q.u_plus / (1.0 + x); // c e^{L T}
    let f = |sg: f64| (-2.0 * lam * sg).exp() / (1.0 + x * (-sg).exp()).powi(2);
    let span = 40.0 / lam;
    Ok(composite_gauss(&f, 0.0, span, 200, 8) / (c_scaled * c_scaled))
}

pub fn jacobi_field_minus(frame: &EmdenFowlerFrame) -> Result<JacobiFieldPair> {
    let nodes = frame.len();
    let cells = nodes - 1;
    let h2 = 0.5 * frame.dt;
    let cell = &frame.cell;
    let mut i_nodes = vec![0.0; nodes];
    let mut g_i = vec![vec![0.0; CELL_ORDER]; cells];
    i_nodes[cells] = closed_tail(frame, frame.t[cells])?;
    for c in (0..cells).rev() {
        let g: Vec<f64> = frame.g_up[c].iter().map(|u| 1.0 / (u * u)).collect();
        let total: f64 = h2 * cell.w.iter().zip(&g).map(|(w, g)| w * g).sum::<f64>();
        i_nodes[c] = i_nodes[c + 1] + total;
        for k in 0..CELL_ORDER {
            let part: f64 = h2 * cell.partial[k].iter().zip(&g).map(|(w, g)| w * g).sum::<f64>();
            g_i[c][k] = i_nodes[c] - part;
        }
    }
    let pts: Vec<FramePoint> = frame.t.iter().map(|&t| frame.point(t)).collect();
    let u_plus: Vec<f64> = pts.iter().map(|q| q.u_plus).collect();
    let du_plus: Vec<f64> = pts.iter().map(|q| q.du_plus).collect();
    let n2 = frame.curve.params.n as f64 - 2.0;
    // s^{n-2} v- at the first node fixes the normalisation
    let lead = pts[0].s.powf(n2) * pts[0].p * u_plus[0] * i_nodes[0];
    if !(lead > 0.0 && lead.is_finite()) {
        return Err(Error::Numerical(format!("v- axis coefficient {lead}")));
    }
    let scale = 1.0 / lead;
    let u_minus: Vec<f64> = (0..nodes).map(|i| scale * u_plus[i] * i_nodes[i]).collect();
    let du_minus: Vec<f64> =
        (0..nodes).map(|i| scale * (du_plus[i] * i_nodes[i] - 1.0 / u_plus[i])).collect();
    let v_minus: Vec<f64> = (0..nodes).map(|i| pts[i].p * u_minus[i]).collect();
    if let Some(i) = v_minus.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Numerical(format!("v- not positive at s={}", pts[i].s)));
    }
    Ok(JacobiFieldPair {
        t: frame.t.clone(),
        s: pts.iter().map(|q| q.s).collect(),
        v_plus: pts.iter().map(|q| q.v_plus).collect(),
        v_minus,
        u_plus,
        u_minus,
        du_plus,
        du_minus,
        wronskian: -scale,
        minus_scale: scale,
        tail_integral: i_nodes,
        g_i,
    })
}

/// Both fields on one frame.
pub fn jacobi_fields(frame: &EmdenFowlerFrame) -> Result<JacobiFieldPair> {
    jacobi_field_plus(frame)?;
    jacobi_field_minus(frame)
}

/// Sixth-order central first and second derivatives on a uniform grid
/// (`None` within three nodes of either end).
pub fn fd6(y: &[f64], h: f64, i: usize) -> Option<(f64, f64)> {
    if i < 3 || i + 3 >= y.len() {
        return None;
    }
    let d1 = (-y[i - 3] + 9.0 * y[i - 2] - 45.0 * y[i - 1] + 45.0 * y[i + 1] - 9.0 * y[i + 2] + y[i + 3]) / (60.0 * h);
    let d2 = (2.0 * y[i - 3] - 27.0 * y[i - 2] + 270.0 * y[i - 1] - 490.0 * y[i] + 270.0 * y[i + 1] - 27.0 * y[i + 2]
        + 2.0 * y[i + 3])
        / (180.0 * h * h);
    Some((d1, d2))
}

/// `q'' + alpha q' + beta q - f` in `s`, from samples of `q` on the frame
/// nodes by finite differences in `t` (`q_s = e^{-t} q_t`,
/// `q_ss = e^{-2t}(q_tt - q_t)`). Entries within three nodes of an end
/// are `NaN`.
pub fn jacobi_residual_t(frame: &EmdenFowlerFrame, q: &[f64], f: &dyn Fn(f64) -> f64) -> Vec<f64> {
    (0..q.len())
        .map(|i| match fd6(q, frame.dt, i) {
            None => f64::NAN,
            Some((qt, qtt)) => {
                let s = frame.t[i].exp();
                let c = frame.curve.coefs(s);
                let qs = qt / s;
                let qss = (qtt - qt) / (s * s);
                qss + c.alpha * qs + c.beta * q[i] - f(s)
            }
        })
        .collect()
}

/// `u+ u-' - u- u+'` from finite differences of the sampled fields.
pub fn wronskian_fd(frame: &EmdenFowlerFrame, pair: &JacobiFieldPair) -> Vec<f64> {
    (0..pair.t.len())
        .filter_map(|i| {
            let (dp, _) = fd6(&pair.u_plus, frame.dt, i)?;
            let (dm, _) = fd6(&pair.u_minus, frame.dt, i)?;
            Some(pair.u_plus[i] * dm - pair.u_minus[i] * dp)
        })
        .collect()
}

/// Solution of `q'' + alpha q' + beta q = f` with `q ~ s^2` at the axis.
#[derive(Clone, Debug, Serialize)]
pub struct JacobiSolution {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    pub mu: f64,
    pub norm_q: f64,
    pub norm_f: f64,
    /// `||q||_{inf,mu} / ||f||_{inf,2+mu}`
    pub ratio: f64,
}

impl JacobiSolution {
    /// `q(s)` by cubic interpolation in `t`; zero at the axis.
    pub fn spline(&self) -> CubicSpline {
        CubicSpline::new(self.t.clone(), self.q.clone(), None)
    }
}

/// Variation of parameters `u = u+ int u- f~ - u- int u+ f~` (both from
/// the axis), with `f~ = e^{2t} f / p`.
pub fn solve_jacobi(
    frame: &EmdenFowlerFrame,
    pair: &JacobiFieldPair,
    f: &dyn Fn(f64) -> f64,
    mu: f64,
) -> Result<JacobiSolution> {
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
    }
    let nodes = frame.len();
    let cells = nodes - 1;
    let h2 = 0.5 * frame.dt;
    let w = &frame.cell.w;
    let scale = pair.minus_scale;
    let (mut g1, mut g2) = (vec![0.0; nodes], vec![0.0; nodes]);
    let mut norm_f: f64 = 0.0;
    // head below t_min: u- f~ ~ e^{2t}, u+ f~ ~ e^{(2+2 lambda) t} for forcing regular at the axis
    {
        let lam = frame.curve.params.lambda;
        let s0 = frame.t[0].exp();
        let ft = s0 * s0 * f(s0) / frame.p[0];
        g1[0] = pair.u_minus[0] * ft / 2.0;
        g2[0] = pair.u_plus[0] * ft / (2.0 + 2.0 * lam);
    }
    for c in 0..cells {
        let (mut a1, mut a2) = (0.0, 0.0);
        for k in 0..CELL_ORDER {
            let t = frame.g_t[c][k];
            let s = t.exp();
            let fs = f(s);
            if !fs.is_finite() {
                return Err(Error::Precondition(format!("forcing not finite at s={s}")));
            }
            norm_f = norm_f.max((s * s + 2.0).powf((2.0 + mu) / 2.0) * fs.abs());
            let ft = s * s * fs / frame.g_p[c][k];
            let up = frame.g_up[c][k];
            let um = scale * up * pair.g_i[c][k];
            a1 += w[k] * um * ft;
            a2 += w[k] * up * ft;
        }
        g1[c + 1] = g1[c] + h2 * a1;
        g2[c + 1] = g2[c] + h2 * a2;
    }
    if !norm_f.is_finite() {
        return Err(Error::Precondition("weighted forcing norm is infinite".into()));
    }
    // W = -scale after normalisation
    let inv_w = 1.0 / scale;
    let q: Vec<f64> = (0..nodes)
        .map(|i| frame.p[i] * inv_w * (pair.u_plus[i] * g1[i] - pair.u_minus[i] * g2[i]))
        .collect();
    let s: Vec<f64> = frame.t.iter().map(|t| t.exp()).collect();
    let norm_q = weighted_norm(&s, &q, WeightedNorm::InfMu { mu });
    Ok(JacobiSolution {
        t: frame.t.clone(),
        s,
        q,
        mu,
        norm_q,
        norm_f,
        ratio: if norm_f > 0.0 { norm_q / norm_f } else { 0.0 },
    })
}

/// Same as [`solve_jacobi`] for a forcing given by samples, interpolated
/// by a cubic spline in `s`.
pub fn solve_jacobi_sampled(
    frame: &EmdenFowlerFrame,
    pair: &JacobiFieldPair,
    s: &[f64],
    f: &[f64],
    mu: f64,
) -> Result<JacobiSolution> {
    if s.len() != f.len() || s.len() < 4 {
        return Err(Error::Precondition("forcing samples malformed".into()));
    }
    let sp = CubicSpline::new(s.to_vec(), f.to_vec(), None);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let g = move |x: f64| if x < lo || x > hi { 0.0 } else { sp.eval(x) };
    solve_jacobi(frame, pair, &g, mu)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightedNorm {
    InfMu { mu: f64 },
    HolderMu { mu: f64, beta: f64 },
}

/// Discrete weighted norm with weight `(s^2+2)^{mu/2}`. The Holder variant
/// adds the weighted `beta`-seminorm over pairs of samples at distance at
/// most one.
pub fn weighted_norm(s: &[f64], f: &[f64], kind: WeightedNorm) -> f64 {
    let wt = |x: f64, mu: f64| (x * x + 2.0).powf(mu / 2.0);
    match kind {
        WeightedNorm::InfMu { mu } => s.iter().zip(f).map(|(&x, &y)| wt(x, mu) * y.abs()).fold(0.0, f64::max),
        WeightedNorm::HolderMu { mu, beta } => {
            let sup = weighted_norm(s, f, WeightedNorm::InfMu { mu });
            let mut semi: f64 = 0.0;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    let d = s[j] - s[i];
                    if d > 1.0 {
                        break;
                    }
                    if d > 0.0 {
                        semi = semi.max(wt(s[j], mu) * (f[j] - f[i]).abs() / d.powf(beta));
                    }
                }
            }
            sup + semi
        }
    }
}
