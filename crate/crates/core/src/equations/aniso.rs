//! Planar norms `H` and the Hessian of `V = ½H²`.

use std::fmt;
use std::sync::Arc;

use crate::field::SymForm2;

use super::EquationError;

type NormClosure = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// A positive, 1-homogeneous norm on `ℝ²`, smooth away from the origin.
#[derive(Clone)]
pub enum Anisotropy {
    Euclidean,
    /// `H(ξ) = √(a²ξ₁² + b²ξ₂²)`, so `D²V = diag(a², b²)`.
    Ellipse { a: f64, b: f64 },
    Custom { name: String, h: NormClosure },
}

impl fmt::Debug for Anisotropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anisotropy::Euclidean => write!(f, "euclidean"),
            Anisotropy::Ellipse { a, b } => write!(f, "ellipse({a}, {b})"),
            Anisotropy::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

impl PartialEq for Anisotropy {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Anisotropy::Euclidean, Anisotropy::Euclidean) => true,
            (Anisotropy::Ellipse { a, b }, Anisotropy::Ellipse { a: c, b: d }) => a == c && b == d,
            (Anisotropy::Custom { h: a, .. }, Anisotropy::Custom { h: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

const HESS_STEP: f64 = 2e-3;

impl Anisotropy {
    /// Wraps a user norm after checking positivity, homogeneity and convexity on
    /// sampled directions.
    pub fn custom(
        name: impl Into<String>,
        h: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, EquationError> {
        let a = Anisotropy::Custom {
            name: name.into(),
            h: Arc::new(h),
        };
        a.validate()?;
        Ok(a)
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self, EquationError> {
        let an = Anisotropy::Ellipse { a, b };
        an.validate()?;
        Ok(an)
    }

    pub fn norm(&self, xi: [f64; 2]) -> f64 {
        match self {
            Anisotropy::Euclidean => xi[0].hypot(xi[1]),
            Anisotropy::Ellipse { a, b } => (a * xi[0]).hypot(b * xi[1]),
            Anisotropy::Custom { h, .. } => h(xi),
        }
    }

    pub fn v(&self, xi: [f64; 2]) -> f64 {
        0.5 * self.norm(xi).powi(2)
    }

    /// True when `D²V` does not depend on `ξ`.
    pub fn is_quadratic(&self) -> bool {
        !matches!(self, Anisotropy::Custom { .. })
    }

    /// `D²_ξ V(ξ)`. For non-quadratic norms this is 0-homogeneous and undefined at `ξ = 0`.
    pub fn hessian_v(&self, xi: [f64; 2]) -> Result<SymForm2, EquationError> {
        match self {
            Anisotropy::Euclidean => Ok(SymForm2::IDENTITY),
            Anisotropy::Ellipse { a, b } => Ok(SymForm2::diag(a * a, b * b)),
            Anisotropy::Custom { name, .. } => {
                let n = xi[0].hypot(xi[1]);
                if !(n > 0.0) {
                    return Err(EquationError::InadmissibleJet {
                        id: format!("aniso[{name}]"),
                        reason: "D²V is undefined at a vanishing gradient".into(),
                    });
                }
                let x = [xi[0] / n, xi[1] / n];
                let e = HESS_STEP;
                let v = |i: i32, j: i32| self.v([x[0] + i as f64 * e, x[1] + j as f64 * e]);
                // fourth-order stencils
                const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
                const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
                let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
                for k in 0..5 {
                    let o = k as i32 - 2;
                    a11 += D2[k] * v(o, 0);
                    a22 += D2[k] * v(0, o);
                    for l in 0..5 {
                        if D1[k] != 0.0 && D1[l] != 0.0 {
                            a12 += D1[k] * D1[l] * v(o, l as i32 - 2);
                        }
                    }
                }
                let (a11, a12, a22) = (a11 / (e * e), a12 / (e * e), a22 / (e * e));
                Ok(SymForm2::new(a11, a12, a22))
            }
        }
    }

    /// Sampled check of positivity, 1-homogeneity and positive-definite `D²V`.
    pub fn validate(&self) -> Result<(), EquationError> {
        let bad = |msg: String| Err(EquationError::BadAnisotropy(format!("{self:?}: {msg}")));
        if let Anisotropy::Ellipse { a, b } = self {
            if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) {
                return bad("semi-axes must be positive".into());
            }
        }
        for k in 0..48 {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.31) / 48.0;
            let xi = [ang.cos(), ang.sin()];
            let h1 = self.norm(xi);
            if !(h1 > 0.0 && h1.is_finite()) {
                return bad(format!("H({:.3}, {:.3}) = {h1} is not positive", xi[0], xi[1]));
            }
            for lam in [0.37, 2.0, 5.5] {
                let hl = self.norm([lam * xi[0], lam * xi[1]]);
                if (hl - lam * h1).abs() > 1e-9 * lam * h1 {
                    return bad(format!("H(λξ) ≠ λH(ξ) at λ = {lam}: {hl} vs {}", lam * h1));
                }
            }
            let d2 = self.hessian_v(xi)?;
            if !d2.is_positive_definite() {
                return bad(format!("D²V is not positive definite at angle {ang:.3}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_hessian_is_constant() {
        let a = Anisotropy::ellipse(1.0, 2.0).unwrap();
        assert_eq!(a.hessian_v([0.3, -1.0]).unwrap(), SymForm2::diag(1.0, 4.0));
    }

    #[test]
    fn custom_ellipse_matches_builtin() {
        let c = Anisotropy::custom("ell", |x| (x[0]).hypot(2.0 * x[1])).unwrap();
        let h = c.hessian_v([0.7, 0.2]).unwrap();
        assert!((h.a11 - 1.0).abs() < 1e-6 && (h.a22 - 4.0).abs() < 1e-6 && h.a12.abs() < 1e-6);
    }

    #[test]
    fn non_homogeneous_norm_is_rejected() {
        let err = Anisotropy::custom("square", |x| x[0] * x[0] + x[1] * x[1]);
        assert!(matches!(err, Err(EquationError::BadAnisotropy(_))));
        assert!(matches!(Anisotropy::ellipse(0.0, 1.0), Err(EquationError::BadAnisotropy(_))));
    }

    #[test]
    fn sum_of_norms_is_accepted() {
        let mix = Anisotropy::custom("mix", |x| (x[0].hypot(3.0 * x[1]) + x[0].hypot(x[1])) / 2.0);
        assert!(mix.is_ok());
    }
}
