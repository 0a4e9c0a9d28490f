use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Second-order jet `(z, p, q, r, s, t)` of a function of two variables at a point.
///
/// `z` is the value, `(p, q)` the gradient and `(r, s, t)` the Hessian entries
/// `(u_xx, u_xy, u_yy)`. These are the arguments of a fully nonlinear operator
/// `F(z, p, q, r, s, t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Jet2 {
    pub z: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl Jet2 {
    pub const fn new(z: f64, p: f64, q: f64, r: f64, s: f64, t: f64) -> Self {
        Self { z, p, q, r, s, t }
    }

    pub fn gradient(&self) -> [f64; 2] {
        [self.p, self.q]
    }

    pub fn gradient_norm(&self) -> f64 {
        self.p.hypot(self.q)
    }

    pub fn hessian(&self) -> SymForm2 {
        SymForm2::new(self.r, self.s, self.t)
    }

    pub fn with_hessian(self, h: SymForm2) -> Self {
        Self {
            r: h.a11,
            s: h.a12,
            t: h.a22,
            ..self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.z, self.p, self.q, self.r, self.s, self.t]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }
}

/// A symmetric bilinear form on the plane, stored by its three entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymForm2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymForm2 {
    pub const IDENTITY: SymForm2 = SymForm2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Self::new(a11, 0.0, a22)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Evaluates the form on the pair `(x, y)`.
    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.a11 * x[0] * y[0] + self.a12 * (x[0] * y[1] + x[1] * y[0]) + self.a22 * x[1] * y[1]
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(k * self.a11, k * self.a12, k * self.a22)
    }

    pub fn add(&self, o: &SymForm2) -> Self {
        Self::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }

    pub fn sub(&self, o: &SymForm2) -> Self {
        Self::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }

    /// `Some(+1.0)` for positive definite forms, `Some(-1.0)` for negative
    /// definite ones, `None` otherwise.
    pub fn definite_sign(&self) -> Option<f64> {
        if self.det() > 0.0 {
            Some(self.a11.signum())
        } else {
            None
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.definite_sign() == Some(1.0)
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a11, self.a12, self.a12, self.a22)
    }

    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Self::new(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])
    }

    /// Pulls the form back by a linear map: `(Mᵀ A M)`.
    pub fn congruent(&self, m: &Matrix2<f64>) -> Self {
        Self::from_matrix(&(m.transpose() * self.matrix() * m))
    }

    /// Eigenvalues in decreasing order together with the angle (mod π) of the
    /// eigenline belonging to the larger one.
    pub fn eigen(&self) -> (f64, f64, f64) {
        let half_diff = 0.5 * (self.a11 - self.a22);
        let mean = 0.5 * (self.a11 + self.a22);
        let rad = half_diff.hypot(self.a12);
        let angle = 0.5 * self.a12.atan2(half_diff);
        (mean + rad, mean - rad, super::lines::normalize_line_angle(angle))
    }

    /// Clamps the eigenvalues from below, keeping the eigenvectors.
    pub fn clamp_eigenvalues(&self, floor: f64) -> Self {
        let eig = SymmetricEigen::new(self.matrix());
        let mut vals = eig.eigenvalues;
        for v in vals.iter_mut() {
            *v = v.max(floor);
        }
        let m = eig.eigenvectors * Matrix2::from_diagonal(&vals) * eig.eigenvectors.transpose();
        Self::from_matrix(&m)
    }
}

pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_form() {
        let (l1, l2, ang) = SymForm2::diag(1.0, 2.0).eigen();
        assert_eq!((l1, l2), (2.0, 1.0));
        assert!((ang - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn definite_sign_cases() {
        assert_eq!(SymForm2::diag(2.0, 2.0).definite_sign(), Some(1.0));
        assert_eq!(SymForm2::diag(-0.5, -0.5).definite_sign(), Some(-1.0));
        assert_eq!(SymForm2::diag(1.0, -1.0).definite_sign(), None);
    }

    #[test]
    fn clamping_keeps_definite_forms() {
        let f = SymForm2::new(3.0, 1.0, 2.0);
        let g = f.clamp_eigenvalues(1e-3);
        assert!((f.a11 - g.a11).abs() < 1e-12 && (f.a12 - g.a12).abs() < 1e-12);
        let h = SymForm2::diag(1.0, -1.0).clamp_eigenvalues(0.5);
        assert!((h.a22 - 0.5).abs() < 1e-12);
    }
}
