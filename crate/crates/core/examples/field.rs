//! Assembles the two-layer field at one `ε`, splits its residual along the
//! layers and counts the zero-level components.
use conelab::field::*;
use conelab::jt::*;
use conelab::kernels::{build_correction_kernels, compute_a_star};
use conelab::profile::*;

fn main() -> conelab::Result<()> {
    let eps: f64 = std::env::args().nth(1).map(|s| s.parse().expect("eps")).unwrap_or(0.05);
    let curve = integrate_profile(make_params(4, 4)?, 200.0, 1e-10)?;
    let ic = compute_a_star(1e-12)?;
    let kernels = build_correction_kernels(&ic, 25.0, 0.01, 1e-10)?;
    let grid = JtGrid::new(&curve, 200.0, JT_H0, JT_DX)?;
    let sys = solve_decoupled_system(&curve, ic.a_star, eps, 8, &grid, 4, 0.05)?;
    let heights = build_heights(&sys)?;
    let chart = FermiChart::new(&curve, eps, 200.0)?;
    let ap = AcApproximation::new(chart, heights.clone(), kernels);
    println!("eps {eps}: delta0 {:.4}, h2(0) {:.4}, onset(0) {:.3} (nominal {:.3})", ap.chart.delta0, heights.eval(0.0)[1].0, ap.onset(0.0), ap.nominal_onset(0.0));

    let opts = DecompositionOptions::default();
    for (label, a, layer) in [
        ("U0", ap.clone(), Layer::U0),
        ("U1", ap.clone(), Layer::U1),
        ("U1, heights + 0.5", ap.with_heights(heights.shifted(0.5)), Layer::U1),
    ] {
        let d = residual_layer_decomposition(&a, &DecompositionOptions { layer, ..opts });
        println!("{label:>18}: projection {:.3e}  orthogonal {:.3e}  gap to prediction {:.3e}", d.sup_projection, d.sup_orthogonal, d.sup_prediction_gap);
    }

    let qg = QuadrantGrid::new(2048, 1024, 0.2)?;
    let t0 = std::time::Instant::now();
    let field = AxisymmetricField::sample(qg, 4, 4, eps, |x, y| ap.glued(Layer::U1, x, y));
    println!("quadrant {}x{} sampled in {:?}: sup|u| {}, zero components {}", qg.nx, qg.ny, t0.elapsed(), field.sup_abs(), field.zero_components());
    let far = error_far_field(&ap, &field, gamma_bar(0.05));
    println!("far field: weighted constant {:.3e}, sup|S| {:.3e}, {} of {} nodes exactly zero", far.constant, far.sup_residual, far.exact_zero_nodes, far.nodes);
    Ok(())
}
