use conelab::kernels::*;

fn main() -> conelab::Result<()> {
    let ic = compute_a_star(1e-12)?;
    println!("a* = {:.15} (12 sqrt2 = {:.15})", ic.a_star, 12.0 * 2f64.sqrt());
    println!("|v'|^2 = {:.15} (2 sqrt2/3 = {:.15})", ic.l2_vprime_sq, 2.0 * 2f64.sqrt() / 3.0);
    let t0 = std::time::Instant::now();
    let k = build_correction_kernels(&ic, 25.0, 0.01, 1e-10)?;
    println!("kernels built in {:?}", t0.elapsed());
    println!("ODE residuals (psi0, psi1, psi2): {:?}", ode_residuals(&k));
    for t in [-25.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 25.0] {
        println!("t={t:6.1} psi0={:+.6e} psi2={:+.6e} g0={:+.6e}", k.psi0(t), k.psi2(t), k.g0(t));
    }
    Ok(())
}
