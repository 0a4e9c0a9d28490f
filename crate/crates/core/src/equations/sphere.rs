//! Positive functions on the unit sphere, their gnomonic pull-back `W`, and the
//! balance integral `∫ x / f(x) dA`.

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;

use super::EquationError;

type SphereClosure = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

/// A function `f` on `𝕊²`.
#[derive(Clone)]
pub enum SphereFn {
    Constant(f64),
    /// `Σ cₖ x₃ᵏ`, coefficients from degree 0 upwards.
    Zonal(Vec<f64>),
    Custom { name: String, f: SphereClosure },
}

impl fmt::Debug for SphereFn {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SphereFn::Constant(c) => write!(fm, "constant({c})"),
            SphereFn::Zonal(c) => write!(fm, "zonal({c:?})"),
            SphereFn::Custom { name, .. } => write!(fm, "custom({name})"),
        }
    }
}

impl PartialEq for SphereFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SphereFn::Constant(a), SphereFn::Constant(b)) => a == b,
            (SphereFn::Zonal(a), SphereFn::Zonal(b)) => a == b,
            (SphereFn::Custom { f: a, .. }, SphereFn::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl SphereFn {
    pub fn custom(name: impl Into<String>, f: impl Fn([f64; 3]) -> f64 + Send + Sync + 'static) -> Self {
        SphereFn::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            SphereFn::Constant(c) => *c,
            SphereFn::Zonal(c) => horner(c, x[2]),
            SphereFn::Custom { f, .. } => f(x),
        }
    }

    /// `W(p, q) = f((p, q, 1) / √(1 + p² + q²))`.
    pub fn w(&self, p: f64, q: f64) -> f64 {
        let d = (1.0 + p * p + q * q).sqrt();
        self.eval([p / d, q / d, 1.0 / d])
    }

    /// `(W, ∂W/∂p, ∂W/∂q)`.
    pub fn w_with_gradient(&self, p: f64, q: f64) -> (f64, f64, f64) {
        match self {
            SphereFn::Constant(c) => (*c, 0.0, 0.0),
            SphereFn::Zonal(c) => {
                let dd = 1.0 + p * p + q * q;
                let x3 = 1.0 / dd.sqrt();
                let deriv: f64 = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, ck)| k as f64 * ck * x3.powi(k as i32 - 1))
                    .sum();
                // ∂x₃/∂p = −p·D^{−3/2}
                let dx3 = -x3 * x3 * x3;
                (horner(c, x3), deriv * dx3 * p, deriv * dx3 * q)
            }
            SphereFn::Custom { .. } => {
                let e = 1e-6;
                (
                    self.w(p, q),
                    (self.w(p + e, q) - self.w(p - e, q)) / (2.0 * e),
                    (self.w(p, q + e) - self.w(p, q - e)) / (2.0 * e),
                )
            }
        }
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ck| acc * x + ck)
}

/// `∫_{𝕊²} x / f(x) dA` by Gauss–Legendre in `x₃` times the trapezoid rule in azimuth.
/// A vanishing result is the solvability condition for the Minkowski problem.
pub fn minkowski_balance(f: &SphereFn, n_polar: usize, n_azimuth: usize) -> Result<[f64; 3], EquationError> {
    let n_polar = NonZeroUsize::new(n_polar.max(2)).expect("positive");
    let n_azimuth = n_azimuth.max(4);
    let rule = GaussLegendre::new(n_polar);
    let dphi = 2.0 * PI / n_azimuth as f64;
    let mut acc = [0.0; 3];
    for (z, wz) in rule.into_node_weight_pairs().iter() {
        let rho = (1.0 - z * z).max(0.0).sqrt();
        for k in 0..n_azimuth {
            let phi = k as f64 * dphi;
            let x = [rho * phi.cos(), rho * phi.sin(), *z];
            let fx = f.eval(x);
            if !(fx > 0.0) {
                return Err(EquationError::NonPositiveF { point: x, value: fx });
            }
            let w = wz * dphi / fx;
            for i in 0..3 {
                acc[i] += w * x[i];
            }
        }
    }
    Ok(acc)
}

/// Default quadrature order `(polar, azimuth)`.
pub const BALANCE_ORDER: (usize, usize) = (64, 128);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_balanced() {
        let b = minkowski_balance(&SphereFn::Constant(1.0), 64, 128).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn tilted_zonal_matches_closed_form() {
        // ∫ z/(1+z/2) dz over [−1,1] times 2π
        let b = minkowski_balance(&SphereFn::Zonal(vec![1.0, 0.5]), 64, 128).unwrap();
        let exact = 8.0 * PI * (1.0 - 3f64.ln());
        assert!((b[2] - exact).abs() < 1e-12, "{} vs {exact}", b[2]);
        assert!(b[2] < 0.0);
        assert!(b[0].abs() < 1e-13 && b[1].abs() < 1e-13);
    }

    #[test]
    fn even_function_balances() {
        let b = minkowski_balance(&SphereFn::Zonal(vec![1.0, 0.0, 0.5]), 64, 128).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn nonpositive_f_is_rejected() {
        let err = minkowski_balance(&SphereFn::Zonal(vec![0.0, 1.0]), 8, 8);
        assert!(matches!(err, Err(EquationError::NonPositiveF { .. })));
    }

    #[test]
    fn zonal_gradient_matches_differences() {
        let f = SphereFn::Zonal(vec![1.0, 0.3, -0.2, 0.1]);
        let (p, q) = (0.4, -0.7);
        let (_, wp, wq) = f.w_with_gradient(p, q);
        let e = 1e-6;
        assert!((wp - (f.w(p + e, q) - f.w(p - e, q)) / (2.0 * e)).abs() < 1e-8);
        assert!((wq - (f.w(p, q + e) - f.w(p, q - e)) / (2.0 * e)).abs() < 1e-8);
    }
}
