//! Stage orchestration behind the command-line tool. Each stage computes
//! its quantities, writes its CSV and records a JSON summary together with
//! named checks; every check carries its tolerance and the grid it was
//! measured on.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{
    build_heights, energy_ball, error_far_field, gamma_bar, log_radii, residual_layer_decomposition, AcApproximation,
    AxisymmetricField, DecompositionOptions, EnergyReport, FarFieldReport, FermiChart, Layer, LayerDecomposition,
    QuadrantGrid,
};
use crate::fit::loglog_slope;
use crate::io::{manifest, write_csv, write_json, ManifestEntry};
use crate::jacobi::{
    build_ef_frame, jacobi_fields, jacobi_residual_t, solve_jacobi, wronskian_fd, EmdenFowlerFrame, FrameOptions,
    JacobiFieldPair,
};
use crate::jt::chain::{envelope_constant, jt_error_depth, w0_residual};
use crate::jt::linear::RegimeOptions;
use crate::jt::{
    build_jt_linear_frame, jt_approximation, jt_error, make_jt_params, solve_decoupled_system, solve_jt_newton,
    JtApproximation, JtGrid, JtSolution, NewtonOptions,
};
use crate::kernels::heteroclinic::{ddv, dv, v};
use crate::kernels::{build_correction_kernels, compute_a_star, lambert_w, ode_residuals, CorrectionKernels};
use crate::profile::{integrate_profile, make_params, ProfileCurve};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One pass/fail claim.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub stage: String,
    pub name: String,
    pub value: f64,
    pub tolerance: String,
    pub grid: String,
    pub passed: bool,
}

impl Check {
    fn make(stage: &str, name: &str, value: f64, tolerance: String, grid: &str, passed: bool) -> Self {
        Self { stage: stage.into(), name: name.into(), value, tolerance, grid: grid.into(), passed: passed && value.is_finite() }
    }

    pub fn below(stage: &str, name: &str, value: f64, bound: f64, grid: &str) -> Self {
        Self::make(stage, name, value, format!("< {bound:e}"), grid, value < bound)
    }

    pub fn at_most(stage: &str, name: &str, value: f64, bound: f64, grid: &str) -> Self {
        Self::make(stage, name, value, format!("<= {bound:e}"), grid, value <= bound)
    }

    pub fn at_least(stage: &str, name: &str, value: f64, bound: f64, grid: &str) -> Self {
        Self::make(stage, name, value, format!(">= {bound:e}"), grid, value >= bound)
    }

    pub fn within(stage: &str, name: &str, value: f64, target: f64, tol: f64, grid: &str) -> Self {
        Self::make(stage, name, value, format!("{target} +/- {tol:e}"), grid, (value - target).abs() <= tol)
    }

    pub fn between(stage: &str, name: &str, value: f64, lo: f64, hi: f64, grid: &str) -> Self {
        Self::make(stage, name, value, format!("in [{lo}, {hi}]"), grid, value >= lo && value <= hi)
    }
}

/// Wall-clock time of a stage against its budget.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub tolerance_scale: f64,
    pub stages: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    /// Wall-clock numbers; the only part of the report that varies between
    /// identical runs.
    pub timings: Vec<Timing>,
    pub files: Vec<ManifestEntry>,
    pub error: Option<String>,
    pub passed: bool,
}

/// Stages in dependency order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Profile,
    Jacobi,
    Kernels,
    JtApprox,
    JtSolve,
    Field,
    Energy,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Profile => "profile",
            Stage::Jacobi => "jacobi",
            Stage::Kernels => "kernels",
            Stage::JtApprox => "jt-approx",
            Stage::JtSolve => "jt-solve",
            Stage::Field => "ac-assemble",
            Stage::Energy => "energy",
        }
    }

    /// Runtime budget in seconds.
    pub fn budget(self) -> f64 {
        match self {
            Stage::Profile | Stage::Jacobi => 10.0,
            Stage::Kernels => 5.0,
            Stage::JtApprox => 30.0,
            Stage::JtSolve => 60.0,
            Stage::Field => 600.0,
            Stage::Energy => 120.0,
        }
    }

    pub const ALL: [Stage; 7] =
        [Stage::Profile, Stage::Jacobi, Stage::Kernels, Stage::JtApprox, Stage::JtSolve, Stage::Field, Stage::Energy];
}

/// Envelope constant allowed for `√|log δ| sup |v_j - (log(s²+2) + |log δ|)/√2|`.
pub const ENVELOPE_C: f64 = 3.0;
/// Shift of both heights in the perturbed residual run.
pub const HEIGHT_PERTURBATION: f64 = 0.5;
/// Number of Lambert W samples.
pub const LAMBERT_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, Serialize)]
pub struct ProfileSummary {
    pub m: usize,
    pub n: usize,
    pub s_max: f64,
    pub tol: f64,
    pub s0: f64,
    pub steps_accepted: usize,
    pub samples: usize,
    pub mean_curvature_residual: f64,
    pub beta0: f64,
    pub beta0_target: f64,
    pub s2_beta_end: f64,
    pub s2_beta_target: f64,
    pub cone_c1: Option<f64>,
    pub cone_fit_residual: Option<f64>,
    pub cone_deviation_slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JacobiSummary {
    pub frame_nodes: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub tail_window: (f64, f64),
    pub slope_plus: f64,
    pub gamma_plus: f64,
    pub slope_minus: f64,
    pub gamma_minus: f64,
    pub axis_window: (f64, f64),
    pub slope_minus_axis: f64,
    pub axis_target: f64,
    /// `sup (1+s)² |J v±|` over `s >= s0`
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub wronskian: f64,
    /// `(max - min)/|W|` of the finite-difference Wronskian
    pub wronskian_drift: f64,
    /// `‖q‖ / ‖f‖` for `f = (s²+2)^{-3/2}`, `μ = 1`
    pub solve_ratio: f64,
    /// `sup (s²+2)^{3/2} |J q - f|`
    pub solve_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelSummary {
    pub a_star: f64,
    pub a_star_closed_form: f64,
    pub a_star_error: f64,
    pub l2_vprime_sq: f64,
    pub lambert_samples: usize,
    /// `max |W e^W - z| / max(1, z)`
    pub lambert_residual: f64,
    /// ODE residuals of `(ψ₀, ψ₁, ψ₂)`
    pub psi_residuals: [f64; 3],
    pub t_ker: f64,
    pub kernel_dt: f64,
    pub kernel_nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct JtApproxSummary {
    pub delta: f64,
    pub sigma: f64,
    pub j: usize,
    pub grid_nodes: usize,
    pub w0_residual: f64,
    pub step_residual: f64,
    /// `sup |E_δ(v_j) - δ Δ w_j| / δ`
    pub identity_discrepancy: f64,
    pub envelope_constant: f64,
    /// weighted error constant of `v_i` for `i = 0..=j`
    pub error_constants: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JtSolveSummary {
    pub delta: f64,
    pub refine: usize,
    pub nodes: usize,
    pub newton_iterations: usize,
    pub used_continuation: bool,
    /// `sup (s²+2)|δ J h - 2a⋆e^{-√2h}| / δ`
    pub residual_weighted: f64,
    pub ball_constant: f64,
    pub companion_delta: f64,
    pub companion_ball_constant: f64,
    /// `max/min` of the two ball constants
    pub ball_ratio: f64,
    pub envelope_constant: f64,
    pub ode_discrepancy: f64,
    pub t_sigma: f64,
    pub t_sigma_predicted: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionSummary {
    pub eps: f64,
    pub sup_projection: f64,
    pub sup_prediction_gap: f64,
    pub sup_orthogonal: f64,
    pub weighted_orthogonal: f64,
    pub sup_residual: f64,
}

impl From<&LayerDecomposition> for DecompositionSummary {
    fn from(d: &LayerDecomposition) -> Self {
        Self {
            eps: d.eps,
            sup_projection: d.sup_projection,
            sup_prediction_gap: d.sup_prediction_gap,
            sup_orthogonal: d.sup_orthogonal,
            weighted_orthogonal: d.weighted_orthogonal,
            sup_residual: d.sup_residual,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldSummary {
    pub eps: f64,
    pub delta0: f64,
    pub eta0: f64,
    pub onset_axis: f64,
    pub nominal_onset_axis: f64,
    pub heights_growth_margin: f64,
    pub heights_newton_iterations: usize,
    pub u0: DecompositionSummary,
    pub u1: DecompositionSummary,
    pub perturbed: DecompositionSummary,
    pub companion: DecompositionSummary,
    /// orthogonal sup at the larger `ε` over the one at the smaller
    pub orthogonal_ratio: f64,
    /// projection sup under perturbed heights over the true one
    pub perturbed_ratio: f64,
    pub grid: QuadrantGrid,
    pub sup_abs: f64,
    pub sup_grid_residual: f64,
    pub zero_components: usize,
    pub far_field: FarFieldReport,
}

/// Owns the configuration, the cached stage products and the growing report.
pub struct Pipeline {
    pub cfg: RunConfig,
    /// multiplies every tolerance (2 for the dimension sweep)
    pub tolerance_scale: f64,
    stages: BTreeMap<String, Value>,
    checks: Vec<Check>,
    timings: Vec<Timing>,
    files: Vec<PathBuf>,
    curve: Option<ProfileCurve>,
    frame: Option<(EmdenFowlerFrame, JacobiFieldPair)>,
    kernels: Option<CorrectionKernels>,
    jt_grid: Option<JtGrid>,
    chain: Option<JtApproximation>,
    solution: Option<JtSolution>,
    approx: Option<AcApproximation>,
    field: Option<AxisymmetricField>,
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn sup_finite(it: impl Iterator<Item = f64>) -> f64 {
    it.filter(|x| x.is_finite()).fold(0.0, |a: f64, x| a.max(x.abs()))
}

/// `count` points of the golden-ratio sequence mapped log-uniformly to
/// `[1e-12, 1e12]`, plus the hand-picked edge cases; `offset` shifts the
/// sequence.
pub fn lambert_samples(count: usize, offset: u64) -> Vec<f64> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut z: Vec<f64> = (0..count.saturating_sub(4))
        .map(|k| {
            let u = ((k as u64 + offset) as f64 * phi).fract();
            10f64.powf(-12.0 + 24.0 * u)
        })
        .collect();
    z.extend([0.0, 1e-300, std::f64::consts::E, 1e300]);
    z
}

/// `max |W e^W - z| / max(1, z)` over the samples.
pub fn lambert_residual(samples: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &z in samples {
        let w = lambert_w(z)?;
        worst = worst.max((w * w.exp() - z).abs() / z.max(1.0));
    }
    Ok(worst)
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let cfg = cfg.validated()?;
        Ok(Self {
            cfg,
            tolerance_scale: 1.0,
            stages: BTreeMap::new(),
            checks: vec![],
            timings: vec![],
            files: vec![],
            curve: None,
            frame: None,
            kernels: None,
            jt_grid: None,
            chain: None,
            solution: None,
            approx: None,
            field: None,
        })
    }

    pub fn with_tolerance_scale(mut self, k: f64) -> Self {
        self.tolerance_scale = k;
        self
    }

    pub fn out_dir(&self) -> &Path {
        &self.cfg.out
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn curve(&self) -> Option<&ProfileCurve> {
        self.curve.as_ref()
    }

    pub fn approximation(&self) -> Option<&AcApproximation> {
        self.approx.as_ref()
    }

    pub fn field(&self) -> Option<&AxisymmetricField> {
        self.field.as_ref()
    }

    pub fn stage_summary(&self, stage: Stage) -> Option<&Value> {
        self.stages.get(stage.name())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let rel = PathBuf::from(name);
        write_csv(&self.cfg.out.join(&rel), header, rows)?;
        if !self.files.contains(&rel) {
            self.files.push(rel);
        }
        Ok(())
    }

    fn record<T: Serialize>(&mut self, stage: Stage, summary: &T, checks: Vec<Check>, started: Instant) -> Result<()> {
        let seconds = started.elapsed().as_secs_f64();
        let limit = stage.budget() * self.tolerance_scale;
        self.stages.insert(stage.name().into(), to_value(summary)?);
        self.checks.retain(|c| c.stage != stage.name());
        self.checks.extend(checks);
        self.timings.retain(|t| t.stage != stage.name());
        self.timings.push(Timing { stage: stage.name().into(), seconds, limit, passed: seconds < limit });
        Ok(())
    }

    /// Runs `stage` and everything it depends on that has not run yet.
    pub fn ensure(&mut self, stage: Stage) -> Result<()> {
        let done = self.stages.contains_key(stage.name());
        if done {
            return Ok(());
        }
        match stage {
            Stage::Profile => self.run_profile(),
            Stage::Jacobi => {
                self.ensure(Stage::Profile)?;
                self.run_jacobi()
            }
            Stage::Kernels => self.run_kernels(),
            Stage::JtApprox => {
                self.ensure(Stage::Profile)?;
                self.ensure(Stage::Kernels)?;
                self.run_jt_approx()
            }
            Stage::JtSolve => {
                self.ensure(Stage::JtApprox)?;
                self.ensure(Stage::Jacobi)?;
                self.run_jt_solve()
            }
            Stage::Field => {
                self.ensure(Stage::JtSolve)?;
                self.run_field()
            }
            Stage::Energy => {
                self.ensure(Stage::Field)?;
                self.run_energy()
            }
        }
    }

    /// Runs the stages, then writes `report.json`. A failing stage stops
    /// the run; the partial report is still written and the error returned.
    pub fn run(&mut self, stages: &[Stage]) -> Result<Report> {
        for &s in stages {
            if let Err(e) = self.ensure(s) {
                let report = self.report(Some(format!("{}: {e}", s.name())))?;
                write_json(&self.cfg.out.join("report.json"), &report)?;
                return Err(e);
            }
        }
        let report = self.report(None)?;
        write_json(&self.cfg.out.join("report.json"), &report)?;
        Ok(report)
    }

    pub fn report(&self, error: Option<String>) -> Result<Report> {
        let files = manifest(&self.cfg.out, &self.files)?;
        let passed = error.is_none() && self.checks.iter().all(|c| c.passed) && self.timings.iter().all(|t| t.passed);
        Ok(Report {
            config: self.cfg.clone(),
            tolerance_scale: self.tolerance_scale,
            stages: self.stages.clone(),
            checks: self.checks.clone(),
            timings: self.timings.clone(),
            files,
            error,
            passed,
        })
    }

    fn run_profile(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let k = self.tolerance_scale;
        let p = make_params(self.cfg.m, self.cfg.n)?;
        let c = integrate_profile(p, self.cfg.s_max, self.cfg.tol)?;
        let target = (p.big_n - 1) as f64;
        let sum = ProfileSummary {
            m: p.m,
            n: p.n,
            s_max: c.s_max,
            tol: c.tol,
            s0: c.s0,
            steps_accepted: c.steps_accepted,
            samples: c.s_grid.len(),
            mean_curvature_residual: c.mean_curvature_residual(),
            beta0: c.coefs(1e-9).beta,
            beta0_target: p.c0,
            s2_beta_end: c.coefs(c.s_max).beta * c.s_max * c.s_max,
            s2_beta_target: target,
            cone_c1: c.tail.as_ref().map(|t| t.c1),
            cone_fit_residual: c.tail.as_ref().map(|t| t.residual_norm),
            cone_deviation_slope: c.tail.as_ref().map(|t| t.slope),
        };
        let grid = format!("{} samples on [0, {}], tol {:e}", sum.samples, sum.s_max, sum.tol);
        let st = Stage::Profile.name();
        let checks = vec![
            Check::below(st, "mean_curvature_residual", sum.mean_curvature_residual, 1e-7 * k, &grid),
            Check::within(st, "s2_beta_end", sum.s2_beta_end, target, 0.02 * target * k, &grid),
            Check::within(st, "beta0", sum.beta0, p.c0, 1e-3 * k, &grid),
        ];
        let rows: Vec<Vec<f64>> = c
            .s_grid
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let co = c.coefs(s);
                vec![s, c.a[i], c.b[i], c.theta[i], c.point(s).k, co.alpha, co.beta]
            })
            .collect();
        self.csv("profile.csv", &["s", "a", "b", "theta", "k", "alpha", "beta"], rows)?;
        self.curve = Some(c);
        self.record(Stage::Profile, &sum, checks, t0)
    }

    fn run_jacobi(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let k = self.tolerance_scale;
        let c = self.curve.as_ref().ok_or_else(|| Error::Precondition("profile stage missing".into()))?;
        let p = c.params;
        let fr = build_ef_frame(c, FrameOptions::default())?;
        let pair = jacobi_fields(&fr)?;
        let slope = |lo: f64, hi: f64, y: &[f64]| {
            let idx: Vec<usize> = (0..pair.s.len()).filter(|&i| pair.s[i] >= lo && pair.s[i] <= hi).collect();
            let x: Vec<f64> = idx.iter().map(|&i| pair.s[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            loglog_slope(&x, &y)
        };
        let tail = (c.s_max / 4.0, c.s_max);
        let axis = (0.045, 0.055);
        let zero = |_s: f64| 0.0;
        let weighted = |r: &[f64]| sup_finite((0..r.len()).filter(|&i| pair.s[i] >= c.s0).map(|i| r[i] * (1.0 + pair.s[i]).powi(2)));
        let res_plus = jacobi_residual_t(&fr, &pair.v_plus, &zero);
        let res_minus = jacobi_residual_t(&fr, &pair.v_minus, &zero);
        let wr = wronskian_fd(&fr, &pair);
        let (lo, hi) = wr.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let f = |s: f64| (s * s + 2.0).powf(-1.5);
        let sol = solve_jacobi(&fr, &pair, &f, 1.0)?;
        let rs = jacobi_residual_t(&fr, &sol.q, &f);
        let sum = JacobiSummary {
            frame_nodes: fr.len(),
            t_min: fr.t[0],
            t_max: fr.t[fr.len() - 1],
            tail_window: tail,
            slope_plus: slope(tail.0, tail.1, &pair.v_plus),
            gamma_plus: p.gamma_plus,
            slope_minus: slope(tail.0, tail.1, &pair.v_minus),
            gamma_minus: p.gamma_minus,
            axis_window: axis,
            slope_minus_axis: slope(axis.0, axis.1, &pair.v_minus),
            axis_target: -(p.n as f64 - 2.0),
            residual_plus: weighted(&res_plus),
            residual_minus: weighted(&res_minus),
            wronskian: pair.wronskian,
            wronskian_drift: (hi - lo) / pair.wronskian.abs(),
            solve_ratio: sol.ratio,
            solve_residual: sup_finite((0..rs.len()).map(|i| rs[i] * (pair.s[i].powi(2) + 2.0).powf(1.5))),
        };
        let grid = format!("{} Emden-Fowler nodes on t in [{:.3}, {:.3}], dt {:e}", sum.frame_nodes, sum.t_min, sum.t_max, fr.dt);
        let st = Stage::Jacobi.name();
        let checks = vec![
            Check::within(st, "slope_plus", sum.slope_plus, p.gamma_plus, 0.05 * k, &grid),
            Check::within(st, "slope_minus", sum.slope_minus, p.gamma_minus, 0.1 * k, &grid),
            Check::within(st, "slope_minus_axis", sum.slope_minus_axis, sum.axis_target, 0.05 * k, &grid),
            Check::below(st, "residual_plus", sum.residual_plus, 1e-4 * k, &grid),
            Check::below(st, "residual_minus", sum.residual_minus, 1e-4 * k, &grid),
            Check::below(st, "wronskian_drift", sum.wronskian_drift, 1e-6 * k, &grid),
        ];
        let rows: Vec<Vec<f64>> =
            (0..pair.s.len()).map(|i| vec![pair.s[i], pair.v_plus[i], pair.v_minus[i], res_plus[i], res_minus[i]]).collect();
        self.csv("jacobi.csv", &["s", "v_plus", "v_minus", "residual_plus", "residual_minus"], rows)?;
        self.frame = Some((fr, pair));
        self.record(Stage::Jacobi, &sum, checks, t0)
    }

    fn run_kernels(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let k = self.tolerance_scale;
        let ic = compute_a_star(self.cfg.quad_tol)?;
        let ker = build_correction_kernels(&ic, self.cfg.t_ker, self.cfg.kernel_dt, 1e-10)?;
        let samples = lambert_samples(LAMBERT_SAMPLES, self.cfg.seed);
        let closed = 12.0 * SQRT_2;
        let sum = KernelSummary {
            a_star: ic.a_star,
            a_star_closed_form: closed,
            a_star_error: (ic.a_star - closed).abs(),
            l2_vprime_sq: ic.l2_vprime_sq,
            lambert_samples: samples.len(),
            lambert_residual: lambert_residual(&samples)?,
            psi_residuals: ode_residuals(&ker),
            t_ker: ker.t_ker,
            kernel_dt: ker.dt,
            kernel_nodes: ker.t.len(),
        };
        let grid = format!("{} kernel nodes on [-{}, {}]", sum.kernel_nodes, sum.t_ker, sum.t_ker);
        let st = Stage::Kernels.name();
        let mut checks = vec![
            Check::at_most(st, "lambert_residual", sum.lambert_residual, 1e-13 * k, &format!("{} samples on [1e-12, 1e12]", sum.lambert_samples)),
            Check::at_most(st, "a_star_error", sum.a_star_error, 1e-10 * k, &format!("adaptive Simpson, tol {:e}", self.cfg.quad_tol)),
        ];
        for (i, r) in sum.psi_residuals.iter().enumerate() {
            checks.push(Check::below(st, &format!("psi{i}_ode_residual"), *r, 1e-8 * k, &grid));
        }
        let rows: Vec<Vec<f64>> = ker
            .node_values()
            .iter()
            .map(|r| vec![r[0], v(r[0]), dv(r[0]), r[1], r[2], r[3], r[4]])
            .collect();
        self.csv("kernels.csv", &["t", "v", "dv", "psi0", "psi1", "psi2", "g0"], rows)?;
        self.kernels = Some(ker);
        self.record(Stage::Kernels, &sum, checks, t0)
    }

    fn a_star(&self) -> Result<f64> {
        self.kernels.as_ref().map(|k| k.a_star).ok_or_else(|| Error::Precondition("kernel stage missing".into()))
    }

    fn run_jt_approx(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let k = self.tolerance_scale;
        let a_star = self.a_star()?;
        let c = self.curve.as_ref().ok_or_else(|| Error::Precondition("profile stage missing".into()))?;
        let delta = self.cfg.delta();
        let grid = JtGrid::new(c, c.s_max, self.cfg.jt_h0, self.cfg.jt_dx)?;
        let jp = make_jt_params(delta, self.cfg.j, a_star)?;
        let chain = jt_approximation(&jp, &grid)?;
        let err = jt_error(&chain, &grid);
        let sum = JtApproxSummary {
            delta,
            sigma: jp.sigma,
            j: jp.j,
            grid_nodes: grid.len(),
            w0_residual: (0..grid.len()).map(|i| w0_residual(&jp, grid.beta[i], chain.w[0][i])).fold(0.0, f64::max),
            step_residual: chain.step_residuals.iter().cloned().fold(0.0, f64::max),
            identity_discrepancy: err.discrepancy,
            envelope_constant: envelope_constant(&grid.s, &chain.v, delta),
            error_constants: (0..=chain.depth()).map(|d| jt_error_depth(&chain, &grid, d).weighted_constant).collect(),
        };
        let g = format!("{} nodes, s = {} sinh(x), dx {}, s in [0, {}]", grid.len(), grid.map_l, grid.dx, c.s_max);
        let st = Stage::JtApprox.name();
        let checks = vec![
            Check::below(st, "w0_residual", sum.w0_residual, 1e-12 * k, &g),
            Check::below(st, "identity_discrepancy", sum.identity_discrepancy, 1e-8 * k, &g),
            Check::at_most(st, "envelope_constant", sum.envelope_constant, ENVELOPE_C * k, &g),
        ];
        let mut header: Vec<String> = vec!["s".into()];
        header.extend((0..=chain.depth()).map(|i| format!("w{i}")));
        header.push(format!("v{}", chain.depth()));
        header.push("Edelta".into());
        let rows: Vec<Vec<f64>> = (0..grid.len())
            .map(|i| {
                let mut r = vec![grid.s[i]];
                r.extend(chain.w.iter().map(|w| w[i]));
                r.push(chain.v[i]);
                r.push(err.by_definition[i]);
                r
            })
            .collect();
        let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
        self.csv("jt_approx.csv", &hdr, rows)?;
        self.jt_grid = Some(grid);
        self.chain = Some(chain);
        self.record(Stage::JtApprox, &sum, checks, t0)
    }

    fn run_jt_solve(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let k = self.tolerance_scale;
        let missing = || Error::Precondition("jt-approx stage missing".into());
        let (c, grid, chain) = (
            self.curve.as_ref().ok_or_else(missing)?,
            self.jt_grid.as_ref().ok_or_else(missing)?,
            self.chain.as_ref().ok_or_else(missing)?,
        );
        let fr = &self.frame.as_ref().ok_or_else(|| Error::Precondition("jacobi stage missing".into()))?.0;
        let opts = NewtonOptions { refine: self.cfg.jt_refine, ..Default::default() };
        let sol = solve_jt_newton(chain, grid, c, opts)?;
        let lf = build_jt_linear_frame(chain, grid, fr, RegimeOptions::default())?;
        let delta = chain.params.delta;
        let companion_delta = delta / 10.0;
        let cp = make_jt_params(companion_delta, chain.params.j, chain.params.a_star)?;
        let cchain = jt_approximation(&cp, grid)?;
        let csol = solve_jt_newton(&cchain, grid, c, opts)?;
        let (b1, b2) = (sol.ball_constant, csol.ball_constant);
        let sum = JtSolveSummary {
            delta,
            refine: opts.refine,
            nodes: sol.s.len(),
            newton_iterations: sol.newton_iterations,
            used_continuation: sol.used_continuation,
            residual_weighted: sol.residual_weighted,
            ball_constant: b1,
            companion_delta,
            companion_ball_constant: b2,
            ball_ratio: b1.max(b2) / b1.min(b2),
            envelope_constant: sol.envelope_constant,
            ode_discrepancy: sol.ode_discrepancy,
            t_sigma: lf.t_sigma,
            t_sigma_predicted: lf.t_sigma_predicted,
            kappa: lf.kappa,
        };
        let g = format!("{} nodes (chain grid refined {}x), s in [0, {}]", sum.nodes, opts.refine, c.s_max);
        let st = Stage::JtSolve.name();
        let checks = vec![
            Check::below(st, "residual_weighted", sum.residual_weighted, 1e-8 * k, &g),
            Check::at_most(st, "newton_iterations", sum.newton_iterations as f64, 12.0 * k, &g),
            Check::at_most(st, "ball_ratio", sum.ball_ratio, 2.0 * k, &g),
        ];
        let rows: Vec<Vec<f64>> = (0..sol.s.len()).map(|i| vec![sol.s[i], sol.h[i], sol.q[i], sol.residual[i]]).collect();
        self.csv("jt_solve.csv", &["s", "h", "q", "residual"], rows)?;
        self.solution = Some(sol);
        self.record(Stage::JtSolve, &sum, checks, t0)
    }

    /// Builds the approximation at `eps` from the cached profile, kernels and chain grid.
    pub fn build_approximation(&self, eps: f64) -> Result<AcApproximation> {
        let missing = || Error::Precondition("profile, kernel and jt-approx stages must run first".into());
        let c = self.curve.as_ref().ok_or_else(missing)?;
        let ker = self.kernels.as_ref().ok_or_else(missing)?;
        let grid = self.jt_grid.as_ref().ok_or_else(missing)?;
        let sys = solve_decoupled_system(c, ker.a_star, eps, self.cfg.j, grid, self.cfg.jt_refine, self.cfg.growth_alpha)?;
        let heights = build_heights(&sys)?;
        let chart = FermiChart::new(c, eps, c.s_max)?;
        Ok(AcApproximation::new(chart, heights, ker.clone()))
    }

    fn run_field(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let eps = self.cfg.eps();
        // the residual-scaling check pairs eps with 2 eps (or eps/2 when 2 eps is too coarse)
        let companion = if 2.0 * eps <= 0.1 + 1e-12 { 2.0 * eps } else { 0.5 * eps };
        let ap = self.build_approximation(eps)?;
        let cap = self.build_approximation(companion)?;
        let opts = DecompositionOptions::default();
        let d1 = residual_layer_decomposition(&ap, &opts);
        let d0 = residual_layer_decomposition(&ap, &DecompositionOptions { layer: Layer::U0, ..opts });
        let dp = residual_layer_decomposition(&ap.with_heights(ap.heights.shifted(HEIGHT_PERTURBATION)), &opts);
        let dc = residual_layer_decomposition(&cap, &opts);
        let (coarse, fine) = if companion > eps { (&dc, &d1) } else { (&d1, &dc) };
        let qg = QuadrantGrid::new(self.cfg.grid_nx, self.cfg.grid_ny, self.cfg.grid_h)?;
        let (m, n) = (self.cfg.m, self.cfg.n);
        let field = AxisymmetricField::sample(qg, m, n, eps, |x, y| ap.glued(Layer::U1, x, y));
        let far = error_far_field(&ap, &field, gamma_bar(self.cfg.growth_alpha));
        let sum = FieldSummary {
            eps,
            delta0: ap.chart.delta0,
            eta0: ap.chart.eta0,
            onset_axis: ap.onset(0.0),
            nominal_onset_axis: ap.nominal_onset(0.0),
            heights_growth_margin: ap.heights.system.growth_margin,
            heights_newton_iterations: ap.heights.system.newton_iterations,
            u0: (&d0).into(),
            u1: (&d1).into(),
            perturbed: (&dp).into(),
            companion: (&dc).into(),
            orthogonal_ratio: coarse.sup_orthogonal / fine.sup_orthogonal,
            perturbed_ratio: dp.sup_projection / d1.sup_projection,
            grid: qg,
            sup_abs: field.sup_abs(),
            sup_grid_residual: field.sup_residual(),
            zero_components: field.zero_components(),
            far_field: far,
        };
        let patch = format!(
            "{} normal lines on s in [0, {}], dz {}, Richardson stencil {}",
            opts.columns, opts.s_patch, opts.dz, opts.stencil
        );
        let quad = format!("quadrant {}x{}, h {}", qg.nx, qg.ny, qg.h);
        let st = Stage::Field.name();
        let checks = vec![
            Check::between(st, "orthogonal_ratio", sum.orthogonal_ratio, 3.0, 6.0, &format!("{patch}, eps {} vs {}", coarse.eps, fine.eps)),
            Check::at_least(st, "perturbed_ratio", sum.perturbed_ratio, 5.0, &format!("{patch}, shift {HEIGHT_PERTURBATION}")),
            Check::within(st, "zero_components", sum.zero_components as f64, 2.0, 0.0, &quad),
        ];
        let dec = self.cfg.csv_decimate;
        let mut rows = Vec::new();
        for j in (0..qg.ny).step_by(dec) {
            for i in (0..qg.nx).step_by(dec) {
                let s = field.residual_at(i, j);
                if s.is_finite() {
                    rows.push(vec![qg.rx(i), qg.ry(j), field.at(i, j), s]);
                }
            }
        }
        self.csv("field.csv", &["rx", "ry", "u", "S"], rows)?;
        self.approx = Some(ap);
        self.field = Some(field);
        self.record(Stage::Field, &sum, checks, t0)
    }

    fn run_energy(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let missing = || Error::Precondition("ac-assemble stage missing".into());
        let field = self.field.as_ref().ok_or_else(missing)?;
        let ap = self.approx.as_ref().ok_or_else(missing)?;
        let eps = field.eps;
        let (xe, ye) = field.grid.extent();
        let hi = (10.0 / eps).min(xe.min(ye));
        let lo = 2.0 / eps;
        if !(hi > lo) {
            return Err(Error::Config { key: "grid_nx".into(), reason: format!("quadrant extent {hi} does not reach past 2/eps = {lo}") });
        }
        let radii = log_radii(lo, hi, self.cfg.energy_radii);
        let rep: EnergyReport = energy_ball(field, &ap.chart, &radii)?;
        let big_n = rep.big_n as f64;
        let g = format!("quadrant {}x{}, h {}, {} radii on [{lo}, {hi}]", field.grid.nx, field.grid.ny, field.grid.h, radii.len());
        let st = Stage::Energy.name();
        let checks = vec![
            Check::within(st, "slope", rep.slope, big_n, 0.3, &g),
            Check::below(st, "constant_spread", rep.constant_spread, 3.0, &g),
        ];
        let rows: Vec<Vec<f64>> = rep.radii.iter().zip(&rep.energies).map(|(&r, &e)| vec![r, e]).collect();
        self.csv("energy.csv", &["R", "E"], rows)?;
        self.record(Stage::Energy, &rep, checks, t0)
    }
}

/// Runs every stage for `cfg` and writes the report.
pub fn run_pipeline(cfg: RunConfig) -> Result<Report> {
    Pipeline::new(cfg)?.run(&Stage::ALL)
}

/// Quick deterministic invariant checks that need no output files.
pub fn selftest(seed: u64) -> Result<Vec<Check>> {
    let st = "selftest";
    let mut out = Vec::new();
    let samples = lambert_samples(2000, seed);
    out.push(Check::at_most(st, "lambert_identity", lambert_residual(&samples)?, 1e-13, "2000 log-uniform samples"));
    let heteroclinic = sup_finite((0..=400).map(|i| {
        let t = -20.0 + 0.1 * i as f64;
        let u = v(t);
        ddv(t) - (u * u * u - u)
    }));
    out.push(Check::below(st, "heteroclinic_ode", heteroclinic, 1e-14, "t in [-20, 20], step 0.1"));
    let ic = compute_a_star(1e-12)?;
    out.push(Check::at_most(st, "a_star_closed_form", (ic.a_star - 12.0 * SQRT_2).abs(), 1e-10, "adaptive Simpson"));
    let chi = crate::field::cutoff;
    let mono = (0..=200).all(|i| chi(1.0 + i as f64 / 200.0) >= chi(1.0 + (i + 1) as f64 / 200.0));
    let ends = (chi(1.0) - 1.0).abs() + chi(2.0).abs();
    out.push(Check::at_most(st, "cutoff_monotone", if mono { 0.0 } else { 1.0 }, 0.0, "201 points on [1, 2]"));
    out.push(Check::at_most(st, "cutoff_ends", ends, 0.0, "x = 1, 2"));
    let g = QuadrantGrid::new(32, 24, 0.2)?;
    for (name, c) in [("residual_minus_one", -1.0), ("residual_plus_one", 1.0)] {
        let f = AxisymmetricField::sample(g, 4, 4, 0.1, |_, _| c);
        out.push(Check::at_most(st, name, f.sup_residual(), 0.0, "quadrant 32x24, h 0.2"));
    }
    out.push(Check::at_most(
        st,
        "rejects_m_plus_n_7",
        if make_params(3, 4).is_err() { 0.0 } else { 1.0 },
        0.0,
        "(m, n) = (3, 4)",
    ));
    Ok(out)
}
