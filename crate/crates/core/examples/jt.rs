use conelab::jacobi::{build_ef_frame, FrameOptions};
use conelab::jt::chain::*;
use conelab::jt::linear::RegimeOptions;
use conelab::jt::*;
use conelab::kernels::compute_a_star;
use conelab::profile::*;

fn main() -> conelab::Result<()> {
    let p = make_params(4, 4)?;
    let c = integrate_profile(p, 200.0, 1e-10)?;
    let a_star = compute_a_star(1e-12)?.a_star;
    let fr = build_ef_frame(&c, FrameOptions::default())?;
    let grid = JtGrid::new(&c, 200.0, JT_H0, JT_DX)?;
    println!("grid nodes {}", grid.len());
    for delta in [1e-3, 1e-4, 1e-5] {
        let t0 = std::time::Instant::now();
        let jp = make_jt_params(delta, 8, a_star)?;
        let chain = jt_approximation(&jp, &grid)?;
        let w0res = (0..grid.len()).map(|k| w0_residual(&jp, grid.beta[k], chain.w[0][k])).fold(0.0, f64::max);
        let err = jt_error(&chain, &grid);
        let cs: Vec<f64> = (0..=8).map(|d| jt_error_depth(&chain, &grid, d).weighted_constant).collect();
        println!("delta {delta:e} sigma {:.3}: w0res {w0res:e} step {:e} discrepancy {:e} C_j {:?}", jp.sigma,
            chain.step_residuals.iter().cloned().fold(0.0, f64::max), err.discrepancy, cs);
        println!("  envelope C {}", envelope_constant(&grid.s, &chain.v, delta));
        let lf = build_jt_linear_frame(&chain, &grid, &fr, RegimeOptions::default())?;
        println!("  T_sigma {} pred {} t_sigma {} kappa {} lyap {:e}", lf.t_sigma, lf.t_sigma_predicted, lf.t_sigma_small, lf.kappa, lf.lyapunov_max_increase);
        println!("  consts {:?}", lf.constants);
        let sol = solve_jt_newton(&chain, &grid, &c, NewtonOptions::default())?;
        println!("  newton it {} res {:e} hist {:?} ball {} env {} ode {:e} qsup {:e}", sol.newton_iterations, sol.residual_weighted, sol.history, sol.ball_constant, sol.envelope_constant, sol.ode_discrepancy, sol.q.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let f = |s: f64| 1.0 / ((s * s + 2.0) * (s + 2.0).ln());
        for r in [1, 4, 16] {
            let ls = solve_jt_linearized(&f, &chain, &grid, &c, lf.kappa, r, 1.0)?;
            println!("  lin refine {r}: res {:e} ratio {} march {:e} robin {:e}", ls.weighted_residual, ls.norm_ratio, ls.march_discrepancy, ls.robin_amplification);
        }
        println!("  took {:?}", t0.elapsed());
    }
    Ok(())
}
