//! Tridiagonal solve (Thomas algorithm with a pivot guard).

use crate::error::{Error, Result};

/// Solves `a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = r[i]`; `a[0]` and
/// `c[n-1]` are ignored.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut piv = b[0];
    if piv == 0.0 || !piv.is_finite() {
        return Err(Error::Solver("zero pivot in row 0".into()));
    }
    cp[0] = c[0] / piv;
    dp[0] = r[0] / piv;
    for i in 1..n {
        piv = b[i] - a[i] * cp[i - 1];
        if piv.abs() < 1e-300 || !piv.is_finite() {
            return Err(Error::Solver(format!("singular tridiagonal system at row {i}")));
        }
        cp[i] = if i + 1 < n { c[i] / piv } else { 0.0 };
        dp[i] = (r[i] - a[i] * dp[i - 1]) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Ok(x)
}
