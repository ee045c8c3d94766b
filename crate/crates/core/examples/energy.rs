//! Allen-Cahn energy on balls for the assembled field, compared with twice
//! the layer tension times the area of the dilated surface.
use conelab::field::*;
use conelab::jt::*;
use conelab::kernels::{build_correction_kernels, compute_a_star};
use conelab::profile::*;

fn main() -> conelab::Result<()> {
    let eps = 0.05;
    let curve = integrate_profile(make_params(4, 4)?, 200.0, 1e-10)?;
    let ic = compute_a_star(1e-12)?;
    let kernels = build_correction_kernels(&ic, 25.0, 0.01, 1e-10)?;
    let grid = JtGrid::new(&curve, 200.0, JT_H0, JT_DX)?;
    let heights = build_heights(&solve_decoupled_system(&curve, ic.a_star, eps, 8, &grid, 4, 0.05)?)?;
    let ap = AcApproximation::new(FermiChart::new(&curve, eps, 200.0)?, heights, kernels);
    // the quadrant must reach 10/eps in both directions
    let qg = QuadrantGrid::new(1024, 1024, 0.2)?;
    let field = AxisymmetricField::sample(qg, 4, 4, eps, |x, y| ap.glued(Layer::U1, x, y));
    let rep = energy_ball(&field, &ap.chart, &log_radii(2.0 / eps, 10.0 / eps, 9))?;
    println!("{:>10} {:>14} {:>14} {:>10}", "R", "E(R)", "2|v'|^2 area", "E/R^7");
    for i in 0..rep.radii.len() {
        let r = rep.radii[i];
        println!("{r:>10.3} {:>14.6e} {:>14.6e} {:>10.3e}", rep.energies[i], rep.interface_bound[i], rep.energies[i] / r.powi(7));
    }
    println!("log-log slope {:.4} (N = {}), spread of E/R^N {:.3}", rep.slope, rep.big_n, rep.constant_spread);
    Ok(())
}
