//! Piecewise Hermite interpolation and a natural cubic spline.

/// Index `i` with `x[i] <= t < x[i+1]`, clamped to the valid cell range.
pub fn locate(x: &[f64], t: f64) -> usize {
    let n = x.len();
    debug_assert!(n >= 2);
    let k = x.partition_point(|&xi| xi <= t);
    k.saturating_sub(1).min(n - 2)
}

/// Quintic Hermite data: values, first and second derivatives on nodes.
#[derive(Clone, Debug)]
pub struct Quintic {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Quintic {
    pub fn new(x: Vec<f64>, y: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == d1.len() && d1.len() == d2.len());
        Self { x, y, d1, d2 }
    }

    /// Value and first two derivatives at `t` (extrapolates the end cells).
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let i = locate(&self.x, t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (p0, p1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.d1[i] * h, self.d1[i + 1] * h);
        let (c0, c1) = (self.d2[i] * h * h, self.d2[i + 1] * h * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let u5 = u4 * u;
        let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let h1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let h2 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
        let h3 = 0.5 * (u3 - 2.0 * u4 + u5);
        let h4 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        let h5 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        let v = h0 * p0 + h1 * m0 + h2 * c0 + h3 * c1 + h4 * m1 + h5 * p1;

        let d0 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
        let d1 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
        let d2 = 0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4);
        let d3 = 0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4);
        let d4 = -12.0 * u2 + 28.0 * u3 - 15.0 * u4;
        let d5 = -d0;
        let dv = (d0 * p0 + d1 * m0 + d2 * c0 + d3 * c1 + d4 * m1 + d5 * p1) / h;

        let e0 = -60.0 * u + 180.0 * u2 - 120.0 * u3;
        let e1 = -36.0 * u + 96.0 * u2 - 60.0 * u3;
        let e2 = 0.5 * (2.0 - 18.0 * u + 36.0 * u2 - 20.0 * u3);
        let e3 = 0.5 * (6.0 * u - 24.0 * u2 + 20.0 * u3);
        let e4 = -24.0 * u + 84.0 * u2 - 60.0 * u3;
        let e5 = -e0;
        let ddv = (e0 * p0 + e1 * m0 + e2 * c0 + e3 * c1 + e4 * m1 + e5 * p1) / (h * h);
        (v, dv, ddv)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval3(t).0
    }
}

/// Natural cubic spline through `(x_i, y_i)`.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    /// `left_slope`: `Some(d)` clamps the first derivative at `x[0]`.
    pub fn new(x: Vec<f64>, y: Vec<f64>, left_slope: Option<f64>) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n);
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut r = vec![0.0; n];
        match left_slope {
            Some(d) => {
                let h = x[1] - x[0];
                b[0] = h / 3.0;
                c[0] = h / 6.0;
                r[0] = (y[1] - y[0]) / h - d;
            }
            None => {
                b[0] = 1.0;
            }
        }
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            r[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        b[n - 1] = 1.0;
        let m = crate::linalg::solve_tridiagonal(&a, &b, &c, &r).expect("spline system is diagonally dominant");
        Self { x, y, m }
    }

    /// Value, first and second derivative.
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let i = locate(&self.x, t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (self.y[i + 1] - self.y[i]) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let ddv = a * m0 + b * m1;
        (v, dv, ddv)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval3(t).0
    }
}
