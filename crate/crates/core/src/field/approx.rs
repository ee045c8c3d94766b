//! Interface heights, the layer approximations `U₀`, `U₁` in Fermi
//! coordinates and the glued quadrant field `w`.
//!
//! Along a normal line, with `t_l = z - h_l(εs̄)` and `E = e^{-√2(h₂-h₁)}`:
//!
//! `U₀ = v(t₁) - v(t₂) - 1`
//!
//! `U₁ = U₀ + Σ_l (-1)^{l-1} ε² (h_l'² ψ₁(t_l) + β ψ₂(t_l)) + E (ψ₀(-t₁) + ψ₀(t₂) + 12)`.
//!
//! Each interaction term cancels the `e^{∓√2 t}` tail error of its own layer;
//! both tend to `-12E` in the band between the layers, where the error of
//! `U₀` is the single constant `-24E`, so the constant is added back once.

use super::chart::FermiChart;
use crate::error::{Error, Result};
use crate::jt::DecoupledSystem;
use crate::kernels::correction::{psi1_d, PSI0_MINUS_INF};
use crate::kernels::heteroclinic::{dv, v};
use crate::kernels::CorrectionKernels;
use std::f64::consts::SQRT_2;

/// `(h, h', h'')` of both interfaces as functions of the unscaled `s`.
#[derive(Clone, Debug)]
pub struct InterfaceHeights {
    pub system: DecoupledSystem,
    /// rigid offset added to both heights (perturbation runs)
    pub shift: f64,
}

/// Builds the heights `h₁ = -v₀,₂/2`, `h₂ = v₀,₂/2` and re-checks the growth band.
pub fn build_heights(system: &DecoupledSystem) -> Result<InterfaceHeights> {
    if !(system.growth_margin > 0.0) {
        return Err(Error::Diagnostic(format!("heights leave the growth band (margin {})", system.growth_margin)));
    }
    for (k, &s) in system.s.iter().enumerate() {
        if !(system.h1[k] < system.h2[k]) {
            return Err(Error::Diagnostic(format!("interfaces not ordered at s = {s}")));
        }
    }
    Ok(InterfaceHeights { system: system.clone(), shift: 0.0 })
}

impl InterfaceHeights {
    pub fn shifted(&self, shift: f64) -> Self {
        Self { system: self.system.clone(), shift: self.shift + shift }
    }

    /// `[(h₁, h₁', h₁''), (h₂, h₂', h₂'')]` at `s`.
    pub fn eval(&self, s: f64) -> [(f64, f64, f64); 2] {
        let (h, d, dd) = self.system.h2_eval(s);
        [(-h + self.shift, -d, -dd), (h + self.shift, d, dd)]
    }

    /// `e^{-√2(h₂-h₁)}` at `s`.
    pub fn interaction(&self, s: f64) -> f64 {
        (-SQRT_2 * 2.0 * self.system.h2_eval(s).0).exp()
    }
}

/// `C³` smoothstep: 1 on `(-∞, 1]`, 0 on `[2, ∞)`.
pub fn cutoff(x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let t = x - 1.0;
        // 1 - (35t⁴ - 84t⁵ + 70t⁶ - 20t⁷)
        1.0 - t.powi(4) * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
    }
}

/// The assembled approximation on one configuration.
#[derive(Clone, Debug)]
pub struct AcApproximation {
    pub chart: FermiChart,
    pub heights: InterfaceHeights,
    pub kernels: CorrectionKernels,
    pub eps: f64,
}

/// Which layer approximation a field evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    U0,
    U1,
}

impl AcApproximation {
    pub fn new(chart: FermiChart, heights: InterfaceHeights, kernels: CorrectionKernels) -> Self {
        let eps = chart.eps;
        Self { chart, heights, kernels, eps }
    }

    pub fn with_heights(&self, heights: InterfaceHeights) -> Self {
        Self { heights, ..self.clone() }
    }

    pub fn u0(&self, sb: f64, z: f64) -> f64 {
        let [(h1, _, _), (h2, _, _)] = self.heights.eval(self.eps * sb);
        v(z - h1) - v(z - h2) - 1.0
    }

    /// Correction `η = U₁ - U₀`.
    pub fn eta(&self, sb: f64, z: f64) -> f64 {
        let s = self.eps * sb;
        let hs = self.heights.eval(s);
        let beta = self.chart.curve.beta(s);
        let e2 = self.eps * self.eps;
        let mut eta = 0.0;
        for (l, &(h, d, _)) in hs.iter().enumerate() {
            let t = z - h;
            let sign = if l == 0 { 1.0 } else { -1.0 };
            eta += sign * e2 * (d * d * psi1_d(t).0 + beta * self.kernels.psi2(t));
        }
        let e = (-SQRT_2 * (hs[1].0 - hs[0].0)).exp();
        eta + e * (self.kernels.psi0(hs[0].0 - z) + self.kernels.psi0(z - hs[1].0) - PSI0_MINUS_INF)
    }

    pub fn u1(&self, sb: f64, z: f64) -> f64 {
        self.u0(sb, z) + self.eta(sb, z)
    }

    pub fn layer(&self, which: Layer, sb: f64, z: f64) -> f64 {
        match which {
            Layer::U0 => self.u0(sb, z),
            Layer::U1 => self.u1(sb, z),
        }
    }

    /// Unmodified cutoff onset `4/√2 (log(s²+2) + 2|log ε|)`.
    pub fn nominal_onset(&self, sb: f64) -> f64 {
        let s = self.eps * sb;
        4.0 / SQRT_2 * ((s * s + 2.0).ln() + 2.0 * self.eps.ln().abs())
    }

    /// Cutoff onset actually used: the nominal one, capped so that the
    /// transition ring stays inside the chart neighbourhood. The cap
    /// `δ₀/ε + η₀(√(s̄² + ε⁻²) - ε⁻¹)` is smooth and even in `s̄` (the
    /// neighbourhood bound itself has a corner on the axis), and the two are
    /// joined by a smooth minimum that never exceeds either.
    pub fn onset(&self, sb: f64) -> f64 {
        let ie = 1.0 / self.eps;
        let cap = self.chart.delta0 * ie + self.chart.eta0 * ((sb * sb + ie * ie).sqrt() - ie);
        let a = self.nominal_onset(sb);
        let lo = a.min(cap);
        lo - ((lo - a).exp() + (lo - cap).exp()).ln()
    }

    /// `ζ(s̄, z) = χ(|z| - onset + 2)`.
    pub fn zeta(&self, sb: f64, z: f64) -> f64 {
        cutoff(z.abs() - self.onset(sb) + 2.0)
    }

    /// Glued field `w = ζU - (1 - ζ)` at a quadrant point.
    pub fn glued(&self, which: Layer, rx: f64, ry: f64) -> f64 {
        match self.chart.inverse(rx, ry) {
            Some(p) if self.chart.contains(p.sb, p.z) => {
                let zeta = self.zeta(p.sb, p.z);
                if zeta == 0.0 {
                    -1.0
                } else {
                    zeta * self.layer(which, p.sb, p.z) - (1.0 - zeta)
                }
            }
            _ => -1.0,
        }
    }

    /// Predicted coefficients of `(-1)^{l-1} v'(t_l)` in the residual:
    /// `-ε²(h_l'' + α h_l' + β h_l) ± a⋆E`.
    pub fn predicted_coefficients(&self, sb: f64) -> [f64; 2] {
        let s = self.eps * sb;
        let hs = self.heights.eval(s);
        let c = self.chart.curve.coefs(s);
        let e2 = self.eps * self.eps;
        let e = (-SQRT_2 * (hs[1].0 - hs[0].0)).exp();
        let a_star = self.kernels.a_star;
        let jac = |(h, d, dd): (f64, f64, f64)| {
            let drift = if s < 1e-8 { self.chart.curve.n1() * dd } else { c.alpha * d };
            dd + drift + c.beta * h
        };
        [-e2 * jac(hs[0]) - a_star * e, -e2 * jac(hs[1]) + a_star * e]
    }

    /// Leading local profile `(-1)^{l-1} v'(t_l)` used as projection direction.
    pub fn direction(&self, l: usize, sb: f64, z: f64) -> f64 {
        let h = self.heights.eval(self.eps * sb)[l].0;
        let sign = if l == 0 { 1.0 } else { -1.0 };
        sign * dv(z - h)
    }
}

