//! Run configuration: JSON file plus command-line overrides.

use crate::error::{Error, Result};
use crate::profile::make_params;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.into(), reason: reason.into() }
}

/// All tunables of a pipeline run. Unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "d_j")]
    pub j: usize,
    #[serde(default = "d_smax")]
    pub s_max: f64,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "d_t_ker")]
    pub t_ker: f64,
    #[serde(default = "d_kernel_dt")]
    pub kernel_dt: f64,
    #[serde(default = "d_jt_h0")]
    pub jt_h0: f64,
    #[serde(default = "d_jt_dx")]
    pub jt_dx: f64,
    #[serde(default = "d_jt_refine")]
    pub jt_refine: usize,
    /// growth-band exponent `α` for the interface heights
    #[serde(default = "d_alpha")]
    pub growth_alpha: f64,
    #[serde(default = "d_nx")]
    pub grid_nx: usize,
    #[serde(default = "d_ny")]
    pub grid_ny: usize,
    #[serde(default = "d_h")]
    pub grid_h: f64,
    /// keep every k-th node in each direction of the field CSV
    #[serde(default = "d_decimate")]
    pub csv_decimate: usize,
    #[serde(default = "d_radii")]
    pub energy_radii: usize,
    #[serde(default = "d_out")]
    pub out: PathBuf,
    /// seed recorded for the randomized property suites
    #[serde(default = "d_seed")]
    pub seed: u64,
}

fn d_j() -> usize {
    8
}
fn d_smax() -> f64 {
    200.0
}
fn d_tol() -> f64 {
    1e-10
}
fn d_quad_tol() -> f64 {
    1e-12
}
fn d_t_ker() -> f64 {
    25.0
}
fn d_kernel_dt() -> f64 {
    0.01
}
fn d_jt_h0() -> f64 {
    crate::jt::JT_H0
}
fn d_jt_dx() -> f64 {
    crate::jt::JT_DX
}
fn d_jt_refine() -> usize {
    4
}
fn d_alpha() -> f64 {
    0.05
}
fn d_nx() -> usize {
    2048
}
fn d_ny() -> usize {
    1024
}
fn d_h() -> f64 {
    0.2
}
fn d_decimate() -> usize {
    4
}
fn d_radii() -> usize {
    17
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_seed() -> u64 {
    20_241_016
}

/// Default `ε` when neither `eps` nor `delta` is given.
pub const DEFAULT_EPS: f64 = 0.05;

impl RunConfig {
    /// Defaults for dimensions `(m, n)`.
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            eps: None,
            delta: None,
            j: d_j(),
            s_max: d_smax(),
            tol: d_tol(),
            quad_tol: d_quad_tol(),
            t_ker: d_t_ker(),
            kernel_dt: d_kernel_dt(),
            jt_h0: d_jt_h0(),
            jt_dx: d_jt_dx(),
            jt_refine: d_jt_refine(),
            growth_alpha: d_alpha(),
            grid_nx: d_nx(),
            grid_ny: d_ny(),
            grid_h: d_h(),
            csv_decimate: d_decimate(),
            energy_radii: d_radii(),
            out: d_out(),
            seed: d_seed(),
        }
    }

    /// Resolves `eps`/`delta` (`δ = ε²`) and checks every range.
    pub fn validated(mut self) -> Result<Self> {
        make_params(self.m, self.n).map_err(|e| config_err("m,n", e.to_string()))?;
        match (self.eps, self.delta) {
            (Some(e), Some(d)) => {
                if ((e * e - d) / d).abs() > 1e-9 {
                    return Err(config_err("delta", format!("inconsistent with eps: delta = {d} but eps^2 = {}", e * e)));
                }
            }
            (Some(e), None) => self.delta = Some(e * e),
            (None, Some(d)) => self.eps = Some(d.sqrt()),
            (None, None) => {
                self.eps = Some(DEFAULT_EPS);
                self.delta = Some(DEFAULT_EPS * DEFAULT_EPS);
            }
        }
        let eps = self.eps.unwrap_or(f64::NAN);
        if !(eps > 0.0 && eps <= 0.2) {
            return Err(config_err("eps", format!("must lie in (0, 0.2], got {eps}")));
        }
        let checks: [(&str, bool, String); 13] = [
            ("j", self.j <= 16, format!("at most 16, got {}", self.j)),
            ("s_max", self.s_max >= 20.0 && self.s_max <= 1e4, format!("must lie in [20, 1e4], got {}", self.s_max)),
            ("tol", self.tol > 0.0 && self.tol <= 1e-4, format!("must lie in (0, 1e-4], got {}", self.tol)),
            ("quad_tol", self.quad_tol > 0.0 && self.quad_tol <= 1e-6, format!("must lie in (0, 1e-6], got {}", self.quad_tol)),
            ("t_ker", self.t_ker >= 10.0, format!("at least 10, got {}", self.t_ker)),
            ("kernel_dt", self.kernel_dt > 0.0 && self.kernel_dt <= 0.1, format!("must lie in (0, 0.1], got {}", self.kernel_dt)),
            ("jt_h0", self.jt_h0 > 0.0, format!("must be positive, got {}", self.jt_h0)),
            ("jt_dx", self.jt_dx > 0.0 && self.jt_dx <= 1.0, format!("must lie in (0, 1], got {}", self.jt_dx)),
            ("jt_refine", (1..=64).contains(&self.jt_refine), format!("must lie in [1, 64], got {}", self.jt_refine)),
            ("growth_alpha", self.growth_alpha > 0.0 && self.growth_alpha < 0.5, format!("must lie in (0, 1/2), got {}", self.growth_alpha)),
            ("grid_h", self.grid_h > 0.0 && self.grid_h <= 0.2, format!("must lie in (0, 0.2], got {}", self.grid_h)),
            ("grid_nx", self.grid_nx >= 16 && self.grid_ny >= 16, format!("grid {}x{} too small", self.grid_nx, self.grid_ny)),
            ("csv_decimate", self.csv_decimate >= 1 && self.energy_radii >= 2, "decimation >= 1 and at least two radii".into()),
        ];
        for (key, ok, reason) in checks {
            if !ok {
                return Err(config_err(key, reason));
            }
        }
        Ok(self)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(DEFAULT_EPS)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.eps() * self.eps())
    }
}

/// Parses a JSON object, applies defaults and validates.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if !value.is_object() {
        return Err(config_err("<root>", "expected a JSON object"));
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        // serde names the offending field inside backticks
        let key = msg.split('`').nth(1).unwrap_or("<root>").to_string();
        config_err(&key, msg)
    })?;
    cfg.validated()
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}
