//! Truncated power series at the axis point of the profile curve.
//!
//! Writing `theta = pi/2 + phi(s)`, the profile system becomes
//! `phi' = -(n-1) sin(phi)/b - (m-1) cos(phi)/a` with `a = 1 - int sin(phi)`,
//! `b = int cos(phi)`. Since `sin(phi)/b` contributes `c_k s^{k-1}` from the
//! unknown coefficient `c_k`, each order is solved explicitly:
//! `c_k = R_k / (k + n - 1)`.

#[derive(Clone, Debug)]
pub struct AxisSeries {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub phi: Vec<f64>,
}

fn div(x: &[f64], y: &[f64], k: usize) -> Vec<f64> {
    let mut q = vec![0.0; k + 1];
    for i in 0..=k {
        let mut s = if i < x.len() { x[i] } else { 0.0 };
        for j in 1..=i.min(y.len() - 1) {
            s -= y[j] * q[i - j];
        }
        q[i] = s / y[0];
    }
    q
}

fn sin_cos(phi: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; k + 1];
    let mut c = vec![0.0; k + 1];
    c[0] = 1.0;
    for i in 1..=k {
        let (mut si, mut ci) = (0.0, 0.0);
        for j in 1..=i.min(phi.len() - 1) {
            si += j as f64 * phi[j] * c[i - j];
            ci -= j as f64 * phi[j] * s[i - j];
        }
        s[i] = si / i as f64;
        c[i] = ci / i as f64;
    }
    (s, c)
}

fn integrate(x: &[f64], c0: f64, k: usize) -> Vec<f64> {
    let mut r = vec![0.0; k + 1];
    r[0] = c0;
    for i in 1..=k {
        if i - 1 < x.len() {
            r[i] = x[i - 1] / i as f64;
        }
    }
    r
}

impl AxisSeries {
    pub fn new(m: usize, n: usize, order: usize) -> Self {
        let (mf, nf) = ((m - 1) as f64, (n - 1) as f64);
        let k_max = order;
        let mut phi = vec![0.0; k_max + 1];
        for k in 1..=k_max {
            phi[k] = 0.0;
            let (sp, cp) = sin_cos(&phi, k);
            let a = integrate(&sp.iter().map(|v| -v).collect::<Vec<_>>(), 1.0, k);
            let b = integrate(&cp, 0.0, k + 1);
            // sin(phi)/b with the common factor s removed
            let sp_s: Vec<f64> = sp[1..].to_vec();
            let b_s: Vec<f64> = b[1..].to_vec();
            let q1 = div(&sp_s, &b_s, k);
            let q2 = div(&cp, &a, k);
            let r = -nf * q1[k - 1] - mf * q2[k - 1];
            phi[k] = r / (k as f64 + nf);
        }
        let (sp, cp) = sin_cos(&phi, k_max);
        let a = integrate(&sp.iter().map(|v| -v).collect::<Vec<_>>(), 1.0, k_max + 1);
        let b = integrate(&cp, 0.0, k_max + 1);
        Self { a, b, phi }
    }

    fn horner(c: &[f64], s: f64) -> (f64, f64, f64) {
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &ci in c.iter().rev() {
            d2 = d2 * s + 2.0 * d1;
            d1 = d1 * s + v;
            v = v * s + ci;
        }
        (v, d1, d2)
    }

    /// `(a, b, theta)` and their first two derivatives at `s`.
    pub fn eval(&self, s: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let (a, da, dda) = Self::horner(&self.a, s);
        let (b, db, ddb) = Self::horner(&self.b, s);
        let (p, dp, ddp) = Self::horner(&self.phi, s);
        ([a, b, std::f64::consts::FRAC_PI_2 + p], [da, db, dp], [dda, ddb, ddp])
    }

    /// `b(s)/s`, evaluated without the factor s so it stays accurate at 0.
    pub fn b_over_s(&self, s: f64) -> f64 {
        Self::horner(&self.b[1..], s).0
    }

    /// `sin(phi)/s = -a'(s)/s`, finite at 0.
    pub fn da_over_s(&self, s: f64) -> f64 {
        let mut c: Vec<f64> = vec![0.0; self.a.len().saturating_sub(1)];
        for i in 1..self.a.len() {
            c[i - 1] = i as f64 * self.a[i];
        }
        // a' has zero constant term
        Self::horner(&c[1..], s).0
    }
}
