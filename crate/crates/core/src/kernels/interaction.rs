//! The interaction constant `a*`: projection of the exponential tail
//! interaction `6(1 - v^2) e^{-sqrt2 t}` onto `v'`.

use super::heteroclinic::{dv, tail_product};
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use serde::Serialize;

/// Both integrals decay at least like `e^{-sqrt2 |t|}`; beyond this the
/// tails are below 1e-24.
const TRUNCATION: f64 = 40.0;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InteractionConstant {
    pub a_star: f64,
    /// `int v'^2`.
    pub l2_vprime_sq: f64,
    /// `int 6 (1 - v^2) e^{-sqrt2 t} v'`.
    pub numerator: f64,
}

pub fn compute_a_star(quad_tol: f64) -> Result<InteractionConstant> {
    if !(quad_tol > 0.0 && quad_tol <= 1e-6) {
        return Err(Error::Precondition(format!("quad_tol must lie in (0, 1e-6], got {quad_tol}")));
    }
    let tol = 0.25 * quad_tol;
    let l2 = adaptive_simpson(&|t: f64| dv(t).powi(2), -TRUNCATION, 0.0, tol)?
        + adaptive_simpson(&|t: f64| dv(t).powi(2), 0.0, TRUNCATION, tol)?;
    let num_f = |t: f64| 6.0 * tail_product(t) * dv(t);
    let numerator = adaptive_simpson(&num_f, -TRUNCATION, 0.0, tol)? + adaptive_simpson(&num_f, 0.0, TRUNCATION, tol)?;
    let a_star = numerator / l2;
    if !(a_star > 0.0) || !a_star.is_finite() {
        return Err(Error::Numerical(format!("a_star quadrature produced {a_star}")));
    }
    Ok(InteractionConstant { a_star, l2_vprime_sq: l2, numerator })
}
