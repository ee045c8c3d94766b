//! Jacobi-Toda equation `delta J h = 2 a* e^{-sqrt2 h}` on the profile
//! surface: Lambert-W approximations, the linearised potential and its
//! regimes, linear and Newton solves, and the two-height system.

pub mod chain;
pub mod grid;
pub mod linear;
pub mod newton;

use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::SQRT_2;

pub use chain::{jt_approximation, jt_error, jt_w0, JtApproximation, JtError};
pub use grid::{JtGrid, JT_DX, JT_H0};
pub use linear::{build_jt_linear_frame, solve_jt_linearized, JtLinearFrame};
pub use newton::{solve_decoupled_system, solve_jt_newton, DecoupledSystem, JtSolution, NewtonOptions};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct JtParams {
    pub delta: f64,
    /// `log(2 sqrt2 a* / delta)`
    pub sigma: f64,
    pub j: usize,
    pub a_star: f64,
}

/// Default lower bound on `sigma` accepted by the solvers.
pub const SIGMA0: f64 = 4.0;
/// Largest `delta` accepted.
pub const DELTA_MAX: f64 = 0.1;

pub fn make_jt_params(delta: f64, j: usize, a_star: f64) -> Result<JtParams> {
    if !(delta > 0.0 && delta <= DELTA_MAX) {
        return Err(Error::Precondition(format!("delta must lie in (0, {DELTA_MAX}], got {delta}")));
    }
    let sigma = (2.0 * SQRT_2 * a_star / delta).ln();
    if sigma <= SIGMA0 {
        return Err(Error::Precondition(format!("sigma = {sigma} below threshold {SIGMA0}")));
    }
    Ok(JtParams { delta, sigma, j, a_star })
}
