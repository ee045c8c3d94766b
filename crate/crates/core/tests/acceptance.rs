//! Acceptance suite. Each test covers one criterion, prints one
//! PASS/FAIL line per claim with its pinned tolerance, and asserts at the end.

use conelab::config::RunConfig;
use conelab::field::*;
use conelab::fit::loglog_slope;
use conelab::jacobi::*;
use conelab::jt::chain::{envelope_constant, w0_residual};
use conelab::jt::*;
use conelab::kernels::*;
use conelab::pipeline::{lambert_residual, lambert_samples, Pipeline, Stage};
use conelab::profile::*;
use std::f64::consts::SQRT_2;
use std::sync::OnceLock;
use std::time::Instant;

struct Line {
    what: String,
    value: f64,
    rule: String,
    ok: bool,
}

struct Criterion {
    id: &'static str,
    lines: Vec<Line>,
}

impl Criterion {
    fn new(id: &'static str) -> Self {
        Self { id, lines: vec![] }
    }

    fn push(&mut self, what: &str, value: f64, rule: String, ok: bool) {
        self.lines.push(Line { what: what.into(), value, rule, ok: ok && value.is_finite() });
    }

    fn below(&mut self, what: &str, value: f64, bound: f64) {
        self.push(what, value, format!("< {bound:e}"), value < bound);
    }

    fn at_most(&mut self, what: &str, value: f64, bound: f64) {
        self.push(what, value, format!("<= {bound:e}"), value <= bound);
    }

    fn within(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        self.push(what, value, format!("{target} +/- {tol:e}"), (value - target).abs() <= tol);
    }

    fn between(&mut self, what: &str, value: f64, lo: f64, hi: f64) {
        self.push(what, value, format!("in [{lo}, {hi}]"), value >= lo && value <= hi);
    }

    fn runtime(&mut self, what: &str, started: Instant, limit: f64) {
        let t = started.elapsed().as_secs_f64();
        self.push(what, t, format!("< {limit} s"), t < limit);
    }

    fn finish(self) {
        let mut failed = vec![];
        for l in &self.lines {
            let tag = if l.ok { "PASS" } else { "FAIL" };
            println!("criterion {} {tag}: {} = {:.6e} ({})", self.id, l.what, l.value, l.rule);
            if !l.ok {
                failed.push(l.what.clone());
            }
        }
        assert!(failed.is_empty(), "criterion {} failed: {failed:?}", self.id);
    }
}

fn curve44() -> &'static ProfileCurve {
    static C: OnceLock<ProfileCurve> = OnceLock::new();
    C.get_or_init(|| integrate_profile(make_params(4, 4).unwrap(), 200.0, 1e-10).unwrap())
}

fn kernels() -> &'static CorrectionKernels {
    static K: OnceLock<CorrectionKernels> = OnceLock::new();
    K.get_or_init(|| build_correction_kernels(&compute_a_star(1e-12).unwrap(), 25.0, 0.01, 1e-10).unwrap())
}

fn jt_grid44() -> &'static JtGrid {
    static G: OnceLock<JtGrid> = OnceLock::new();
    G.get_or_init(|| JtGrid::new(curve44(), 200.0, JT_H0, JT_DX).unwrap())
}

fn approximation(eps: f64) -> AcApproximation {
    let c = curve44();
    let k = kernels();
    let sys = solve_decoupled_system(c, k.a_star, eps, 8, jt_grid44(), 4, 0.05).unwrap();
    AcApproximation::new(FermiChart::new(c, eps, 200.0).unwrap(), build_heights(&sys).unwrap(), k.clone())
}

/// Decompositions (true, perturbed) and the assembled quadrant field at one `ε`.
struct FieldRun {
    approx: AcApproximation,
    true_heights: LayerDecomposition,
    perturbed: LayerDecomposition,
    field: AxisymmetricField,
    seconds: f64,
}

fn field_run(eps: f64) -> &'static FieldRun {
    static RUNS: OnceLock<[FieldRun; 2]> = OnceLock::new();
    let runs = RUNS.get_or_init(|| {
        [0.1, 0.05].map(|e| {
            let t0 = Instant::now();
            let approx = approximation(e);
            let opts = DecompositionOptions::default();
            let true_heights = residual_layer_decomposition(&approx, &opts);
            let perturbed = residual_layer_decomposition(&approx.with_heights(approx.heights.shifted(0.5)), &opts);
            let qg = QuadrantGrid::new(2048, 1024, 0.2).unwrap();
            let field = AxisymmetricField::sample(qg, 4, 4, e, |x, y| approx.glued(Layer::U1, x, y));
            FieldRun { approx, true_heights, perturbed, field, seconds: t0.elapsed().as_secs_f64() }
        })
    });
    if eps == 0.1 {
        &runs[0]
    } else {
        &runs[1]
    }
}

#[test]
fn criterion_1_profile_geometry() {
    let mut cr = Criterion::new("1");
    let t0 = Instant::now();
    let c = integrate_profile(make_params(4, 4).unwrap(), 200.0, 1e-10).unwrap();
    cr.runtime("runtime", t0, 10.0);
    cr.below("mean-curvature residual sup", c.mean_curvature_residual(), 1e-7);
    cr.between("s^2 beta(200)", c.beta(200.0) * 200.0 * 200.0, 5.88, 6.12);
    cr.within("beta(0+)", c.beta(1e-9), 5.25, 1e-3);
    cr.finish();
}

#[test]
fn criterion_2_jacobi_fields() {
    let mut cr = Criterion::new("2");
    let c = curve44();
    let t0 = Instant::now();
    let fr = build_ef_frame(c, FrameOptions::default()).unwrap();
    let pair = jacobi_fields(&fr).unwrap();
    let slope = |lo: f64, hi: f64, y: &[f64]| {
        let idx: Vec<usize> = (0..pair.s.len()).filter(|&i| pair.s[i] >= lo && pair.s[i] <= hi).collect();
        loglog_slope(&idx.iter().map(|&i| pair.s[i]).collect::<Vec<_>>(), &idx.iter().map(|&i| y[i]).collect::<Vec<_>>())
    };
    let zero = |_s: f64| 0.0;
    let weighted = |r: Vec<f64>| {
        (0..r.len())
            .filter(|&i| pair.s[i] >= c.s0 && r[i].is_finite())
            .map(|i| r[i].abs() * (1.0 + pair.s[i]).powi(2))
            .fold(0.0, f64::max)
    };
    let wr = wronskian_fd(&fr, &pair);
    let (lo, hi) = wr.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    let res_plus = weighted(jacobi_residual_t(&fr, &pair.v_plus, &zero));
    let res_minus = weighted(jacobi_residual_t(&fr, &pair.v_minus, &zero));
    cr.runtime("runtime (frame and fields)", t0, 10.0);
    cr.within("tail exponent of v+ on [50, 200]", slope(50.0, 200.0, &pair.v_plus), -2.0, 0.05);
    cr.within("tail exponent of v- on [50, 200]", slope(50.0, 200.0, &pair.v_minus), -3.0, 0.1);
    cr.within("near-axis exponent of v- on [0.045, 0.055]", slope(0.045, 0.055, &pair.v_minus), -2.0, 0.05);
    cr.below("weighted Jacobi residual of v+", res_plus, 1e-4);
    cr.below("weighted Jacobi residual of v-", res_minus, 1e-4);
    cr.below("Wronskian drift (max-min)/|W|", (hi - lo) / pair.wronskian.abs(), 1e-6);
    cr.finish();
}

#[test]
fn criterion_3_lambert_and_kernels() {
    let mut cr = Criterion::new("3");
    let t0 = Instant::now();
    let samples = lambert_samples(10_000, 0);
    assert_eq!(samples.len(), 10_000);
    let lw = lambert_residual(&samples).unwrap();
    let ic = compute_a_star(1e-12).unwrap();
    let k = build_correction_kernels(&ic, 25.0, 0.01, 1e-10).unwrap();
    let res = ode_residuals(&k);
    cr.runtime("runtime", t0, 5.0);
    cr.at_most("max |W e^W - z| / max(1, z)", lw, 1e-13);
    cr.at_most("|a* - 12 sqrt2|", (ic.a_star - 12.0 * SQRT_2).abs(), 1e-10);
    for (i, r) in res.iter().enumerate() {
        cr.below(&format!("psi{i} ODE residual sup"), *r, 1e-8);
    }
    cr.finish();
}

#[test]
fn criterion_4_jacobi_toda_approximation() {
    let mut cr = Criterion::new("4");
    let c = curve44();
    let a_star = kernels().a_star;
    let t0 = Instant::now();
    let grid = JtGrid::new(c, 200.0, JT_H0, JT_DX).unwrap();
    let p = make_jt_params(1e-4, 8, a_star).unwrap();
    let chain = jt_approximation(&p, &grid).unwrap();
    let w0 = (0..grid.len()).map(|i| w0_residual(&p, grid.beta[i], chain.w[0][i])).fold(0.0, f64::max);
    let err = jt_error(&chain, &grid);
    cr.runtime("runtime (delta = 1e-4, j = 8)", t0, 30.0);
    cr.below("w0 algebraic residual (relative)", w0, 1e-12);
    cr.below("identity |E(v_j) - delta Lap w_j| / delta", err.discrepancy, 1e-8);
    // one constant C for all three delta
    let mut worst: f64 = 0.0;
    for delta in [1e-3, 1e-4, 1e-5] {
        let p = make_jt_params(delta, 8, a_star).unwrap();
        let ch = jt_approximation(&p, &grid).unwrap();
        worst = worst.max(envelope_constant(&grid.s, &ch.v, delta));
    }
    cr.at_most("envelope sqrt|log delta| sup|v_j - envelope| over delta in {1e-3,1e-4,1e-5}", worst, 3.0);
    cr.finish();
}

#[test]
fn criterion_5_jacobi_toda_newton() {
    let mut cr = Criterion::new("5");
    let c = curve44();
    let a_star = kernels().a_star;
    let grid = jt_grid44();
    let mut balls = vec![];
    for delta in [1e-3, 1e-4] {
        let t0 = Instant::now();
        let chain = jt_approximation(&make_jt_params(delta, 8, a_star).unwrap(), grid).unwrap();
        let sol = solve_jt_newton(&chain, grid, c, NewtonOptions::default()).unwrap();
        cr.runtime(&format!("runtime (delta = {delta:e})"), t0, 60.0);
        // residual_weighted is already divided by delta
        cr.below(&format!("sup (s^2+2)|delta J h - 2a* e^(-sqrt2 h)| / delta (delta = {delta:e})"), sol.residual_weighted, 1e-8);
        cr.at_most(&format!("Newton iterations (delta = {delta:e})"), sol.newton_iterations as f64, 12.0);
        balls.push(sol.ball_constant);
    }
    cr.at_most("ball constant ratio across delta in {1e-3, 1e-4}", balls[0].max(balls[1]) / balls[0].min(balls[1]), 2.0);
    cr.finish();
}

#[test]
fn criterion_6_allen_cahn_residual_scaling() {
    let mut cr = Criterion::new("6");
    let (coarse, fine) = (field_run(0.1), field_run(0.05));
    for r in [coarse, fine] {
        cr.below(&format!("runtime (eps = {})", r.approx.eps), r.seconds, 300.0);
    }
    cr.between(
        "orthogonal residual ratio eps 0.1 / eps 0.05",
        coarse.true_heights.sup_orthogonal / fine.true_heights.sup_orthogonal,
        3.0,
        6.0,
    );
    for r in [coarse, fine] {
        let ratio = r.perturbed.sup_projection / r.true_heights.sup_projection;
        cr.push(&format!("projection ratio perturbed / true (eps = {})", r.approx.eps), ratio, ">= 5".into(), ratio >= 5.0);
    }
    cr.finish();
}

#[test]
fn criterion_7_energy_growth() {
    let mut cr = Criterion::new("7");
    let run = field_run(0.05);
    let t0 = Instant::now();
    let radii = log_radii(40.0, 200.0, 17);
    let rep = energy_ball(&run.field, &run.approx.chart, &radii).unwrap();
    cr.runtime("runtime (energy on 17 radii)", t0, 120.0);
    cr.within("log-log slope of E(R) on [2/eps, 10/eps]", rep.slope, 7.0, 0.3);
    cr.below("max/min of E(R)/R^7", rep.constant_spread, 3.0);
    cr.finish();
}

#[test]
fn criterion_8_zero_set() {
    let mut cr = Criterion::new("8");
    for eps in [0.1, 0.05] {
        let n = field_run(eps).field.zero_components() as f64;
        cr.within(&format!("zero-level components (eps = {eps})"), n, 2.0, 0.0);
    }
    cr.finish();
}

#[test]
fn criterion_9_dimension_sweep() {
    let mut cr = Criterion::new("9");
    let dir = tempfile::tempdir().unwrap();
    for (m, n) in [(3, 5), (5, 4)] {
        let mut cfg = RunConfig::new(m, n);
        // delta = 1e-3 pairs with the companion 1e-4 in the ball-constant check
        cfg.delta = Some(1e-3);
        cfg.out = dir.path().join(format!("{m}{n}"));
        let mut pipe = Pipeline::new(cfg).unwrap().with_tolerance_scale(2.0);
        let report = pipe.run(&[Stage::JtSolve]).unwrap();
        for c in &report.checks {
            cr.push(&format!("({m},{n}) {}/{}", c.stage, c.name), c.value, format!("{} [doubled]", c.tolerance), c.passed);
        }
        for t in &report.timings {
            cr.push(&format!("({m},{n}) {} runtime", t.stage), t.seconds, format!("< {} s [doubled]", t.limit), t.passed);
        }
    }
    cr.finish();
}
