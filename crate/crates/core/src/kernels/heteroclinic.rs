//! The one-dimensional heteroclinic `v(t) = tanh(t/sqrt 2)` and the product
//! forms that stay finite for large `|t|`.

use std::f64::consts::SQRT_2;

/// `(v, v', v'')` at `t`.
pub fn heteroclinic_eval(t: f64) -> (f64, f64, f64) {
    let v = (t / SQRT_2).tanh();
    let dv = dv(t);
    // v'' = -v + v^3 = -v (1 - v^2) and (1 - v^2) = sqrt(2) v'
    let ddv = -v * SQRT_2 * dv;
    (v, dv, ddv)
}

pub fn v(t: f64) -> f64 {
    (t / SQRT_2).tanh()
}

/// `v'(t) = sech^2(t/sqrt 2)/sqrt 2` via `y = exp(-sqrt2 |t|)`.
pub fn dv(t: f64) -> f64 {
    let y = (-SQRT_2 * t.abs()).exp();
    4.0 * y / ((1.0 + y) * (1.0 + y)) / SQRT_2
}

pub fn ddv(t: f64) -> f64 {
    heteroclinic_eval(t).2
}

/// `1 - v(t)^2`.
pub fn one_minus_v2(t: f64) -> f64 {
    SQRT_2 * dv(t)
}

/// `(1 - v^2) e^{-sqrt2 t} = 4/(1 + e^{sqrt2 t})^2`, bounded by 4 as `t -> -inf`.
pub fn tail_product(t: f64) -> f64 {
    let e = (SQRT_2 * t).exp();
    4.0 / ((1.0 + e) * (1.0 + e))
}

/// `F'(v(t)) = 1 - 3 v^2`.
pub fn linearized_potential(t: f64) -> f64 {
    let v = v(t);
    1.0 - 3.0 * v * v
}

/// Allen-Cahn nonlinearity `F(u) = u - u^3`.
#[inline]
pub fn f_ac(u: f64) -> f64 {
    u - u * u * u
}
