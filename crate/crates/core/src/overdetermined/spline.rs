//! Periodic cubic interpolation on the circle of angles.

use std::f64::consts::TAU;

/// A C² periodic cubic spline through `(xᵢ, yᵢ)` with period `2π`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl PeriodicSpline {
    /// `x` must be strictly increasing with `x[n−1] − x[0] < 2π`; needs at least 3 knots.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n);
        let h: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { x[i + 1] - x[i] } else { x[0] + TAU - x[n - 1] })
            .collect();
        let slope = |i: usize| (y[(i + 1) % n] - y[i]) / h[i];
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let im = (i + n - 1) % n;
            sub[i] = h[im];
            diag[i] = 2.0 * (h[im] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * (slope(i) - slope(im));
        }
        let m = solve_cyclic(&sub, &diag, &sup, &rhs);
        Self { x, y, m }
    }

    fn locate(&self, phi: f64) -> (usize, f64, f64) {
        let n = self.x.len();
        let mut a = (phi - self.x[0]).rem_euclid(TAU) + self.x[0];
        if a >= self.x[0] + TAU {
            a -= TAU;
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&a)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let next = if i + 1 < n { self.x[i + 1] } else { self.x[0] + TAU };
        (i, a - self.x[i], next - self.x[i])
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.eval_with_derivative(phi).0
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        self.eval_with_derivative(phi).1
    }

    pub fn eval_with_derivative(&self, phi: f64) -> (f64, f64) {
        let n = self.x.len();
        let (i, d, h) = self.locate(phi);
        let j = (i + 1) % n;
        let (y0, y1, m0, m1) = (self.y[i], self.y[j], self.m[i], self.m[j]);
        let (a, b) = ((h - d) / h, d / h);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, dv)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }
}

/// Cyclic tridiagonal solve by Sherman–Morrison. Row `i` reads
/// `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]` with indices mod `n`.
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= sub[0] * sup[n - 1] / gamma;
    let x = thomas(sub, &b, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup[n - 1];
    let z = thomas(sub, &b, sup, &u);
    let fact = (x[0] + sub[0] * x[n - 1] / gamma) / (1.0 + z[0] + sub[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / den;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
