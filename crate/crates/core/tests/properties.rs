//! Invariants and independent oracles for each module.

use conelab::config::{parse_config_str, RunConfig};
use conelab::field::*;
use conelab::jacobi::*;
use conelab::jt::*;
use conelab::field::energy::energy_at_radii;
use conelab::field::quadrant::zero_components;
use conelab::kernels::correction::{psi1, psi1_d, PSI0_MINUS_INF};
use conelab::kernels::heteroclinic::{ddv, dv, f_ac, linearized_potential, v};
use conelab::kernels::lambert::lambert_w_prime;
use conelab::kernels::*;
use conelab::pipeline::{Pipeline, Stage};
use conelab::profile::*;
use conelab::Error;
use proptest::prelude::*;
use std::f64::consts::{E, SQRT_2};
use std::sync::OnceLock;

fn curve44() -> &'static ProfileCurve {
    static C: OnceLock<ProfileCurve> = OnceLock::new();
    C.get_or_init(|| integrate_profile(make_params(4, 4).unwrap(), 200.0, 1e-10).unwrap())
}

fn kernels() -> &'static CorrectionKernels {
    static K: OnceLock<CorrectionKernels> = OnceLock::new();
    K.get_or_init(|| build_correction_kernels(&compute_a_star(1e-12).unwrap(), 25.0, 0.01, 1e-10).unwrap())
}

fn approx05() -> &'static AcApproximation {
    static A: OnceLock<AcApproximation> = OnceLock::new();
    A.get_or_init(|| {
        let c = curve44();
        let k = kernels();
        let grid = JtGrid::new(c, 200.0, JT_H0, JT_DX).unwrap();
        let sys = solve_decoupled_system(c, k.a_star, 0.05, 8, &grid, 4, 0.05).unwrap();
        AcApproximation::new(FermiChart::new(c, 0.05, 200.0).unwrap(), build_heights(&sys).unwrap(), k.clone())
    })
}

// ---- Lambert W

proptest! {
    #[test]
    fn lambert_inverts_w_exp_w(lz in -27.6f64..27.6) {
        let z = lz.exp();
        let w = lambert_w(z).unwrap();
        prop_assert!((w * w.exp() - z).abs() <= 1e-14 * z.max(1.0));
    }

    #[test]
    fn lambert_log_form_matches_direct(lz in 1.0f64..600.0) {
        let w = lambert_w_log(lz).unwrap();
        // w + ln w = lz is the log of W e^W = z
        prop_assert!((w + w.ln() - lz).abs() <= 1e-13 * lz);
        if lz < 700.0 {
            let direct = lambert_w(lz.exp()).unwrap();
            prop_assert!((direct - w).abs() <= 1e-13 * w);
        }
    }

    #[test]
    fn shifted_root_solves_its_equation(a in 1e-3f64..50.0, b in -20.0f64..20.0) {
        let x = shifted_root(a, b).unwrap();
        let g = b + x - a * (-x).exp_m1();
        prop_assert!(g.abs() <= 1e-12 * (1.0 + a + b.abs()), "g = {g}");
    }
}

#[test]
fn lambert_special_values() {
    assert_eq!(lambert_w(0.0).unwrap(), 0.0);
    assert!((lambert_w(E).unwrap() - 1.0).abs() < 1e-15);
    assert!((lambert_w_prime(0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!(lambert_w(-1.0).is_err());
    assert!(lambert_w(f64::INFINITY).is_err());
    assert!(shifted_root(0.0, 1.0).is_err());
}

// ---- heteroclinic and kernels

#[test]
fn heteroclinic_solves_allen_cahn_ode() {
    for k in -400..=400 {
        let t = k as f64 * 0.05;
        assert!((ddv(t) + f_ac(v(t))).abs() < 1e-14, "t = {t}");
        assert!((dv(t) - (1.0 - v(t).powi(2)) / SQRT_2).abs() < 1e-15, "t = {t}");
    }
}

#[test]
fn interaction_constant_closed_forms() {
    let ic = compute_a_star(1e-12).unwrap();
    // 48 int_0^inf (1+y)^-4 dy = 16 after y = e^{sqrt2 t}
    assert!((ic.numerator - 16.0).abs() < 1e-10, "numerator {}", ic.numerator);
    assert!((ic.l2_vprime_sq - 2.0 * SQRT_2 / 3.0).abs() < 1e-12);
    assert!((ic.a_star - 12.0 * SQRT_2).abs() < 1e-10);
    assert!(compute_a_star(1e-3).is_err());
}

#[test]
fn psi0_normalisation_limit_and_decay() {
    let k = kernels();
    assert!(k.psi0(0.0).abs() < 1e-12);
    assert!((k.psi0(-24.0) - PSI0_MINUS_INF).abs() < 1e-8);
    let weighted = |lo: f64, hi: f64| {
        (0..=1000).map(|i| lo + (hi - lo) * i as f64 / 1000.0).map(|t| k.psi0(t).abs() * t.exp()).fold(0.0, f64::max)
    };
    // |psi0| <= C e^{-t} on t > 0 with C set by the near region
    assert!(weighted(5.0, 20.0) <= weighted(0.0, 5.0));
    for i in 0..=240 {
        let t = -24.0 + 0.1 * i as f64;
        // bounded; overshoots -12 slightly near t = -3
        assert!(k.psi0(t).abs() <= 12.5);
    }
}

#[test]
fn psi1_closed_form_and_psi2_odd() {
    let k = kernels();
    for i in 0..200 {
        let t = 0.1 * i as f64 + 0.037;
        assert!((k.psi2(-t) + k.psi2(t)).abs() < 1e-8, "t = {t}");
        assert!((psi1(t) + 0.5 * t * dv(t)).abs() < 1e-16);
        // psi1'' + F'(v) psi1 = -v''
        let (p, _, pdd) = psi1_d(t);
        assert!((pdd + linearized_potential(t) * p + ddv(t)).abs() < 1e-13);
    }
}

#[test]
fn kernel_interpolants_solve_their_odes_off_nodes() {
    let k = kernels();
    let res = ode_residuals(k);
    assert!(res.iter().all(|r| *r < 1e-8), "{res:?}");
    for i in 0..400 {
        let t = -19.87 + 0.1 * i as f64;
        let (p0, _, p0dd) = k.psi0_d(t);
        assert!((p0dd + linearized_potential(t) * p0 - k.g0(t)).abs() < 1e-6, "psi0 at {t}");
        let (p2, _, p2dd) = k.psi2_d(t);
        assert!((p2dd + linearized_potential(t) * p2 - t * dv(t)).abs() < 1e-6, "psi2 at {t}");
    }
}

// ---- profile

proptest! {
    #[test]
    fn growth_exponents_are_indicial_roots(m in 3usize..12, n in 3usize..12) {
        prop_assume!(m + n >= 8);
        let p = make_params(m, n).unwrap();
        let nf = p.big_n as f64;
        for g in [p.gamma_plus, p.gamma_minus] {
            prop_assert!((g * g + (nf - 2.0) * g + (nf - 1.0)).abs() < 1e-12 * nf * nf);
        }
        prop_assert!(p.gamma_minus < p.gamma_plus && p.gamma_plus < 0.0);
        prop_assert!((p.rho_m.powi(2) + p.rho_n.powi(2) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn low_dimensions_are_rejected() {
    for (m, n) in [(3, 4), (4, 3), (2, 8), (8, 2), (3, 3)] {
        assert!(matches!(make_params(m, n), Err(Error::UnsupportedDimension { .. })), "({m},{n})");
    }
    assert!(make_params(4, 4).is_ok());
}

#[test]
fn profile_axis_value_and_mean_curvature() {
    let c = curve44();
    assert!((c.beta(0.0) - c.params.c0).abs() < 1e-6);
    assert!(c.mean_curvature_residual() < 1e-7);
}

#[test]
fn cone_has_zero_mean_curvature() {
    let p = make_params(4, 5).unwrap();
    let r: Vec<f64> = (0..2000).map(|i| 1.0 + 0.05 * i as f64).collect();
    let a: Vec<f64> = r.iter().map(|r| p.rho_m * r).collect();
    let b: Vec<f64> = r.iter().map(|r| p.rho_n * r).collect();
    assert!(mean_curvature_residual_samples(p, &a, &b, 0) < 1e-10);
}

#[test]
fn mean_curvature_detector_sees_a_small_perturbation() {
    let c = curve44();
    let i0 = c.s_grid.iter().position(|&s| s >= c.s0).unwrap();
    let clean = mean_curvature_residual_samples(c.params, &c.a, &c.b, i0);
    let a: Vec<f64> = c.a.iter().map(|a| a * (1.0 + 1e-3)).collect();
    let dirty = mean_curvature_residual_samples(c.params, &a, &c.b, i0);
    assert!(clean < 1e-7 && dirty > 1e-4, "clean {clean}, perturbed {dirty}");
}

// ---- Jacobi fields

#[test]
fn jacobi_plus_matches_the_curve_and_homogeneous_solve_is_zero() {
    let c = curve44();
    let fr = build_ef_frame(c, FrameOptions::default()).unwrap();
    let pair = jacobi_fields(&fr).unwrap();
    for (i, &s) in pair.s.iter().enumerate().step_by(97) {
        let exact = c.v_plus(s).0;
        assert!((pair.v_plus[i] - exact).abs() <= 1e-8 * exact.abs().max(1e-12), "s = {s}");
    }
    let sol = solve_jacobi(&fr, &pair, &|_s| 0.0, 1.0).unwrap();
    assert!(sol.q.iter().all(|q| *q == 0.0));
    assert!(solve_jacobi(&fr, &pair, &|_s| 0.0, 0.0).is_err());
}

// ---- cutoff, chart and assembly

#[test]
fn cutoff_is_monotone_and_c3_at_the_joins() {
    let mut prev = cutoff(0.0);
    for i in 0..=3000 {
        let x = i as f64 * 0.001;
        let c = cutoff(x);
        assert!(c <= prev + 1e-16 && (0.0..=1.0).contains(&c));
        prev = c;
    }
    assert_eq!((cutoff(1.0), cutoff(2.0)), (1.0, 0.0));
    // third-order contact: deviation ~ 35 t^4 on both sides
    for h in [1e-2, 1e-3] {
        assert!((1.0 - cutoff(1.0 + h)) <= 40.0 * h.powi(4));
        assert!(cutoff(2.0 - h) <= 40.0 * h.powi(4));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn fermi_chart_round_trip(sb in 0.0f64..60.0, zf in -0.9f64..0.9) {
        let chart = &approx05().chart;
        let z = zf * (chart.reach(sb) - 0.5).min(6.0);
        prop_assume!(chart.contains(sb, z));
        let (rx, ry) = chart.map(sb, z);
        let p = chart.inverse(rx, ry).unwrap();
        prop_assert!((p.sb - sb).abs() < 1e-8 * (1.0 + sb), "sb {} vs {}", p.sb, sb);
        prop_assert!((p.z - z).abs() < 1e-8, "z {} vs {}", p.z, z);
    }
}

#[test]
fn glued_field_equals_layer_inside_the_cutoff() {
    let a = approx05();
    for i in 0..30 {
        let sb = 1.3 * i as f64;
        for z in [-3.0, -1.1, 0.0, 0.7, 2.9] {
            assert_eq!(a.zeta(sb, z), 1.0);
            let (rx, ry) = a.chart.map(sb, z);
            let g = a.glued(Layer::U1, rx, ry);
            let direct = a.u1(sb, z);
            assert!((g - direct).abs() < 1e-9, "({sb}, {z}): {g} vs {direct}");
        }
    }
}

#[test]
fn two_layer_profile_shape() {
    let a = approx05();
    for sb in [0.0, 5.0, 40.0, 100.0] {
        let [(h1, _, _), (h2, _, _)] = a.heights.eval(a.eps * sb);
        assert!((h1 + h2).abs() < 1e-14 && h1 < h2);
        assert!((a.u0(sb, -40.0) + 1.0).abs() < 1e-12);
        assert!((a.u0(sb, 40.0) + 1.0).abs() < 1e-12);
        let mid = a.u0(sb, 0.0);
        assert!((mid - (2.0 * v(h2) - 1.0)).abs() < 1e-15 && mid > 0.5, "sb {sb}: h2 {h2}, mid {mid}");
        // correction decays at least like e^{-|z|} away from the layers
        let tail = |d: f64| a.eta(sb, h2 + d).abs();
        let rate = (tail(10.0) / tail(15.0)).ln() / 5.0;
        assert!(rate >= 1.0, "sb {sb}: rate {rate}");
    }
    let sup = (0..400)
        .flat_map(|i| (0..121).map(move |k| (0.5 * i as f64, -6.0 + 0.1 * k as f64)))
        .map(|(sb, z)| a.eta(sb, z).abs())
        .fold(0.0, f64::max);
    assert!(sup < 0.1, "sup |eta| = {sup}");
}

// ---- quadrant residual, zero set, energy

#[test]
fn constant_states_have_zero_residual() {
    let g = QuadrantGrid::new(32, 24, 0.2).unwrap();
    for c in [1.0, -1.0] {
        let f = AxisymmetricField::from_values(g, 4, 4, 0.05, vec![c; 32 * 24]);
        assert_eq!(f.sup_residual(), 0.0);
        assert_eq!(f.zero_components(), 0);
    }
}

#[test]
fn residual_stencil_is_second_order() {
    // radial bump in R^{m+n}: S = g'' + (N/r) g' + g - g^3 with N = m+n-1
    let (m, n) = (4usize, 5usize);
    let g = |r2: f64| (-r2 / 8.0).exp();
    let exact = |rx: f64, ry: f64| {
        let r2 = rx * rx + ry * ry;
        let u = g(r2);
        let lap = u * (r2 / 16.0 - (m + n) as f64 / 4.0);
        lap + u - u * u * u
    };
    let f = |x: f64, y: f64| g(x * x + y * y);
    for (rx, ry) in [(0.7, 1.3), (2.0, 0.4), (0.0, 1.5), (1.1, 0.0)] {
        let e1 = (residual_point(&f, m, n, rx, ry, 0.1) - exact(rx, ry)).abs();
        let e2 = (residual_point(&f, m, n, rx, ry, 0.05) - exact(rx, ry)).abs();
        let order = (e1 / e2).log2();
        assert!((1.8..=2.2).contains(&order), "({rx},{ry}): order {order}");
        let rich = (residual_point_richardson(&f, m, n, rx, ry, 0.1) - exact(rx, ry)).abs();
        assert!(rich < 0.1 * e2);
    }
}

#[test]
fn two_circles_give_two_zero_components() {
    let g = QuadrantGrid::new(200, 200, 0.2).unwrap();
    let u: Vec<f64> = (0..200 * 200)
        .map(|k| {
            let r = g.rx(k % 200).hypot(g.ry(k / 200));
            (r - 10.0) * (r - 20.0)
        })
        .collect();
    assert_eq!(zero_components(&g, &u), 2);
}

#[test]
fn energy_vanishes_for_minus_one_and_grows_with_radius() {
    let g = QuadrantGrid::new(256, 256, 0.2).unwrap();
    let radii = log_radii(5.0, 45.0, 9);
    let flat = AxisymmetricField::from_values(g, 4, 4, 0.05, vec![-1.0; 256 * 256]);
    assert!(energy_at_radii(&flat, &radii).unwrap().iter().all(|e| *e == 0.0));
    let shell = AxisymmetricField::sample(g, 4, 4, 0.05, |x, y| ((x.hypot(y) - 20.0) / SQRT_2).tanh());
    let e = energy_at_radii(&shell, &radii).unwrap();
    assert!(e.windows(2).all(|w| w[1] >= w[0]), "{e:?}");
    assert!(energy_at_radii(&shell, &[1e3]).is_err());
}

// ---- configuration

#[test]
fn config_fills_defaults_and_derives_delta() {
    let c = parse_config_str(r#"{"m":4,"n":4,"eps":0.05}"#).unwrap();
    let mut want = RunConfig::new(4, 4);
    want.eps = Some(0.05);
    want.delta = Some(0.05 * 0.05);
    assert_eq!(c, want);
    let d = parse_config_str(r#"{"m":4,"n":4,"delta":1e-4}"#).unwrap();
    assert!((d.eps() - 0.01).abs() < 1e-15);
}

#[test]
fn config_errors_name_the_key() {
    let key = |text: &str| match parse_config_str(text) {
        Err(Error::Config { key, .. }) => key,
        other => panic!("expected a config error for {text}, got {other:?}"),
    };
    assert_eq!(key(r#"{"m":4,"n":4,"eps":0.05,"delta":1e-4}"#), "delta");
    assert_eq!(key(r#"{"m":4,"n":4,"colour":1}"#), "colour");
    assert_eq!(key(r#"{"m":3,"n":4}"#), "m,n");
    assert_eq!(key(r#"{"m":4,"n":4,"tol":1.0}"#), "tol");
    assert_eq!(key(r#"{"m":4,"n":4,"eps":0.5}"#), "eps");
    assert_eq!(key("[1,2]"), "<root>");
}

// ---- reports and command line

fn report_without_volatile(dir: &std::path::Path) -> serde_json::Value {
    let mut cfg = RunConfig::new(4, 4);
    cfg.out = dir.to_path_buf();
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run(&[Stage::Profile, Stage::Kernels, Stage::JtApprox]).unwrap();
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.remove("timings");
    obj["config"].as_object_mut().unwrap().remove("out");
    v
}

#[test]
fn reports_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (report_without_volatile(a.path()), report_without_volatile(b.path()));
    assert_eq!(ra, rb);
    assert!(!ra["files"].as_array().unwrap().is_empty());
}

#[test]
fn cli_exit_codes_and_outputs() {
    use std::process::Command;
    let exe = env!("CARGO_BIN_EXE_conelab");
    let st = Command::new(exe).args(["selftest", "--seed", "7"]).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stdout));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"m":4,"n":4,"bogus":true}"#).unwrap();
    let out = Command::new(exe).arg("profile").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let low = Command::new(exe).args(["profile", "--m", "3", "--n", "4"]).output().unwrap();
    assert_eq!(low.status.code(), Some(2));

    let run = dir.path().join("run");
    let ok = Command::new(exe).args(["profile", "--m", "4", "--n", "4", "--out"]).arg(&run).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let (header, rows) = conelab::io::read_csv(&run.join("profile.csv")).unwrap();
    assert_eq!(header, ["s", "a", "b", "theta", "k", "alpha", "beta"]);
    assert!(rows.len() > 100);
    assert!(run.join("report.json").exists());
}
