use conelab::fit::loglog_slope;
use conelab::jacobi::*;
use conelab::profile::*;

fn main() -> conelab::Result<()> {
    let p = make_params(4, 4)?;
    let c = integrate_profile(p, 200.0, 1e-10)?;
    let t0 = std::time::Instant::now();
    let fr = build_ef_frame(&c, FrameOptions::default())?;
    let pair = jacobi_fields(&fr)?;
    println!("frame {} nodes on [{:.3}, {:.3}] in {:?}", fr.len(), fr.t[0], fr.t[fr.len() - 1], t0.elapsed());
    println!("V(-8) = {}  V(5) = {}", fr.point(-8.0).v_pot, fr.point(5.0).v_pot);
    println!("p(-3) closed {} quad {}", fr.point(-3.0).p, fr.p_by_quadrature(-3.0));
    let win = |lo: f64, hi: f64, v: &[f64]| {
        let idx: Vec<usize> = (0..pair.s.len()).filter(|&i| pair.s[i] >= lo && pair.s[i] <= hi).collect();
        let x: Vec<f64> = idx.iter().map(|&i| pair.s[i]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        loglog_slope(&x, &y)
    };
    println!("v+ slope [50,200] {}  v- slope {}", win(50.0, 200.0, &pair.v_plus), win(50.0, 200.0, &pair.v_minus));
    println!("v- slope near 0.05 {}", win(0.045, 0.055, &pair.v_minus));
    let wr = wronskian_fd(&fr, &pair);
    let (lo, hi) = wr.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    println!("W = {}  fd range [{lo}, {hi}]", pair.wronskian);
    let zero = |_s: f64| 0.0;
    for (name, v) in [("plus", &pair.v_plus), ("minus", &pair.v_minus)] {
        let r = jacobi_residual_t(&fr, v, &zero);
        let m = (0..r.len())
            .filter(|&i| pair.s[i] >= c.s0 && r[i].is_finite())
            .map(|i| r[i].abs() * (1.0 + pair.s[i]).powi(2))
            .fold(0.0, f64::max);
        println!("residual {name}: {m:e}");
    }
    let f = |s: f64| (s * s + 2.0).powf(-1.5);
    let sol = solve_jacobi(&fr, &pair, &f, 1.0)?;
    let r = jacobi_residual_t(&fr, &sol.q, &f);
    let m = (0..r.len()).filter(|&i| r[i].is_finite()).map(|i| r[i].abs() * (pair.s[i].powi(2) + 2.0).powf(1.5)).fold(0.0, f64::max);
    println!("solve: ratio {} plug-back {m:e}  q(s)/s^2 at axis {}", sol.ratio, sol.q[10] / pair.s[10].powi(2));
    Ok(())
}
