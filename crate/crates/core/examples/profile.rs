use conelab::profile::*;

fn main() -> conelab::Result<()> {
    let p = make_params(4, 4)?;
    let t0 = std::time::Instant::now();
    let c = integrate_profile(p, 200.0, 1e-10)?;
    println!("integrated in {:?}, {} steps, {} samples", t0.elapsed(), c.steps_accepted, c.s_grid.len());
    println!("H residual = {:e}", c.mean_curvature_residual());
    println!("beta(0+) = {}", c.coefs(1e-9).beta);
    println!("s^2 beta(200) = {}", c.coefs(200.0).beta * 4e4);
    println!("s^2 beta(100) = {}", c.coefs(100.0).beta * 1e4);
    println!("s alpha(0.01) = {}", c.coefs(0.01).s_alpha);
    println!("a',b' at 200 = {} {}", c.point(200.0).da, c.point(200.0).db);
    println!("k(0+) = {}  a''(0) = {}", c.point(1e-8).k, c.point(0.0).dda);
    println!("tail {:?}", c.tail);
    Ok(())
}
