//! The shape tensor `S = Λ⁻¹D²u`, the deviation form `σ = D²u − Λ`, and the
//! line fields they carry.

use nalgebra::Matrix2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::canonical::CanonicalFamily;
use crate::field::{line_angle_diff, normalize_line_angle, Grid, LineField, LineSource, ScalarField, SymForm2};

use super::IndexError;

/// The four line fields of the index argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum LineKind {
    /// Eigenline of `S` for the larger eigenvalue.
    Z1,
    Z2,
    /// Null lines of `σ`.
    U,
    V,
}

impl LineKind {
    pub const ALL: [LineKind; 4] = [LineKind::Z1, LineKind::Z2, LineKind::U, LineKind::V];

    pub fn name(&self) -> &'static str {
        match self {
            LineKind::Z1 => "Z1",
            LineKind::Z2 => "Z2",
            LineKind::U => "U",
            LineKind::V => "V",
        }
    }
}

/// `D²u` and `Λ` at one point, with the derived frame data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapePoint {
    pub hess: SymForm2,
    /// Signed `Λ` (definite, either sign).
    pub lambda: SymForm2,
    pub sign: f64,
    /// Lower Cholesky factor of `|Λ|`, as `(l11, l21, l22)`.
    chol: [f64; 3],
}

impl ShapePoint {
    pub fn new(hess: SymForm2, lambda: SymForm2) -> Result<Self, IndexError> {
        let sign = lambda.definite_sign().ok_or(IndexError::SingularLambda { at: None })?;
        let a = lambda.scale(sign);
        let l11 = a.a11.sqrt();
        let l21 = a.a12 / l11;
        let l22 = (a.a22 - l21 * l21).sqrt();
        if !(l22 > 0.0 && l11 > 0.0) {
            return Err(IndexError::SingularLambda { at: None });
        }
        Ok(Self {
            hess,
            lambda,
            sign,
            chol: [l11, l21, l22],
        })
    }

    pub fn sigma(&self) -> SymForm2 {
        self.hess.sub(&self.lambda)
    }

    /// `S = Λ⁻¹·D²u`.
    pub fn s_matrix(&self) -> Matrix2<f64> {
        self.lambda.matrix().try_inverse().expect("definite") * self.hess.matrix()
    }

    /// `‖S − Id‖_F`, computed as `‖Λ⁻¹σ‖_F` to avoid cancellation.
    pub fn deviation(&self) -> f64 {
        (self.lambda.matrix().try_inverse().expect("definite") * self.sigma().matrix()).norm()
    }

    fn l_inv(&self) -> Matrix2<f64> {
        let [l11, l21, l22] = self.chol;
        Matrix2::new(1.0 / l11, 0.0, -l21 / (l11 * l22), 1.0 / l22)
    }

    fn l_mat(&self) -> Matrix2<f64> {
        let [l11, l21, l22] = self.chol;
        Matrix2::new(l11, 0.0, l21, l22)
    }

    /// `S` in a `|Λ|`-orthonormal frame, where it is symmetric.
    pub fn s_frame(&self) -> SymForm2 {
        let li = self.l_inv();
        SymForm2::from_matrix(&(li * self.hess.matrix() * li.transpose() * self.sign))
    }

    /// Eigenvalues of `S`, larger first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let (a, b, _) = self.s_frame().eigen();
        (a, b)
    }

    /// Angles of `Z1` and `Z2`, or `None` where the eigenvalue gap is at most `gap_tol`.
    pub fn eigenlines(&self, gap_tol: f64) -> Option<(f64, f64)> {
        let (m1, m2, th) = self.s_frame().eigen();
        if !(m1 - m2 > gap_tol) {
            return None;
        }
        let lit = self.l_inv().transpose();
        let (s, c) = th.sin_cos();
        let e1 = lit * nalgebra::Vector2::new(c, s);
        let e2 = lit * nalgebra::Vector2::new(-s, c);
        Some((
            normalize_line_angle(e1[1].atan2(e1[0])),
            normalize_line_angle(e2[1].atan2(e2[0])),
        ))
    }

    /// Angles of the null lines `(U, V)` of `σ`; `None` unless `det σ < 0`.
    pub fn null_lines(&self) -> Option<(f64, f64)> {
        let sig = self.sigma();
        if !(sig.det() < 0.0) {
            return None;
        }
        let (m1, m2, th) = sig.eigen();
        let psi = (m1 / -m2).sqrt().atan();
        Some((normalize_line_angle(th + psi), normalize_line_angle(th - psi)))
    }

    pub fn line(&self, kind: LineKind, gap_tol: f64) -> Option<f64> {
        match kind {
            LineKind::Z1 => self.eigenlines(gap_tol).map(|z| z.0),
            LineKind::Z2 => self.eigenlines(gap_tol).map(|z| z.1),
            LineKind::U => self.null_lines().map(|n| n.0),
            LineKind::V => self.null_lines().map(|n| n.1),
        }
    }

    /// How far `Z1` is from bisecting `U` and `V` in the `|Λ|` metric: the mod-π
    /// discrepancy between `θ'_U + θ'_V` and `2θ'_Z1` in a `|Λ|`-orthonormal frame.
    pub fn bisection_deviation(&self) -> Option<f64> {
        let (z1, _) = self.eigenlines(0.0)?;
        let (u, v) = self.null_lines()?;
        let lt = self.l_mat().transpose();
        let to_frame = |a: f64| {
            let w = lt * nalgebra::Vector2::new(a.cos(), a.sin());
            w[1].atan2(w[0])
        };
        Some(line_angle_diff(2.0 * to_frame(z1), to_frame(u) + to_frame(v)).abs())
    }

    /// `|Λ|(X, Y)`.
    pub fn metric(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.lambda.scale(self.sign).eval(x, y)
    }
}

/// Evaluates shape data of a candidate `u` against a family at arbitrary points.
#[derive(Clone, Copy)]
pub struct ShapeContext<'a> {
    pub u: &'a ScalarField,
    pub fam: &'a CanonicalFamily,
}

impl<'a> ShapeContext<'a> {
    pub fn new(u: &'a ScalarField, fam: &'a CanonicalFamily) -> Self {
        Self { u, fam }
    }

    pub fn at(&self, x: [f64; 2]) -> Result<ShapePoint, IndexError> {
        let jet = self.u.jet(x[0], x[1])?;
        let lam = self.fam.lambda_at(x, &jet)?;
        ShapePoint::new(jet.hessian(), lam).map_err(|_| IndexError::SingularLambda { at: Some(x) })
    }

    /// A line field of the given kind, evaluated exactly at each query point.
    pub fn lines(&self, kind: LineKind, gap_tol: f64) -> ShapeLines<'a> {
        ShapeLines {
            ctx: *self,
            kind,
            gap_tol,
        }
    }
}

pub struct ShapeLines<'a> {
    ctx: ShapeContext<'a>,
    kind: LineKind,
    gap_tol: f64,
}

impl LineSource for ShapeLines<'_> {
    fn angle_at(&self, p: [f64; 2]) -> Option<f64> {
        self.ctx.at(p).ok()?.line(self.kind, self.gap_tol)
    }
}

/// Shape data on the nodes of a grid.
#[derive(Clone, Debug)]
pub struct ShapeTensorField {
    pub grid: Grid,
    pub points: Vec<Option<ShapePoint>>,
    pub sign: f64,
}

/// Computes `S` at every node of `grid` where `mask` holds and jets are available.
pub fn shape_tensor(
    ctx: &ShapeContext<'_>,
    grid: Grid,
    mask: &dyn Fn([f64; 2]) -> bool,
) -> Result<ShapeTensorField, IndexError> {
    let sign = ctx.fam.signature()?;
    let mut points = vec![None; grid.len()];
    for (k, slot) in points.iter_mut().enumerate() {
        let (i, j) = grid.coords(k);
        let x = grid.point(i, j);
        if !mask(x) || ctx.u.jet(x[0], x[1]).is_err() {
            continue;
        }
        let sp = ctx.at(x)?;
        if sp.sign != sign {
            return Err(crate::canonical::CanonicalError::MixedSignature(format!(
                "Λ has sign {} at ({:.4}, {:.4}), family sign is {sign}",
                sp.sign, x[0], x[1]
            ))
            .into());
        }
        *slot = Some(sp);
    }
    Ok(ShapeTensorField { grid, points, sign })
}

impl ShapeTensorField {
    pub fn deviations(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.map(|p| p.deviation())).collect()
    }

    fn line_field(&self, f: impl Fn(&ShapePoint) -> Option<f64>) -> LineField {
        let mut angles = vec![f64::NAN; self.grid.len()];
        let mut valid = vec![false; self.grid.len()];
        for (k, p) in self.points.iter().enumerate() {
            if let Some(a) = p.as_ref().and_then(&f) {
                angles[k] = a;
                valid[k] = true;
            }
        }
        LineField {
            grid: self.grid,
            angles,
            valid,
        }
    }

    /// Sampled copy of one line field.
    pub fn line_field_of(&self, kind: LineKind, umbilic_tol: f64) -> LineField {
        match kind {
            LineKind::Z1 | LineKind::Z2 => self.line_field(|p| {
                if p.deviation() <= umbilic_tol {
                    None
                } else {
                    p.line(kind, 0.0)
                }
            }),
            _ => self.line_field(|p| p.line(kind, 0.0)),
        }
    }
}

/// `(Z1, Z2)` on the grid, invalid where `‖S − Id‖_F ≤ umbilic_tol`.
pub fn eigenline_fields(field: &ShapeTensorField, umbilic_tol: f64) -> (LineField, LineField) {
    (
        field.line_field_of(LineKind::Z1, umbilic_tol),
        field.line_field_of(LineKind::Z2, umbilic_tol),
    )
}

/// `(U, V)` on the grid, invalid where `det σ ≥ 0`.
pub fn null_line_fields(field: &ShapeTensorField) -> (LineField, LineField) {
    (
        field.line_field_of(LineKind::U, 0.0),
        field.line_field_of(LineKind::V, 0.0),
    )
}

/// Summary of bisection deviations over sampled nodes.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BisectionStats {
    pub samples: usize,
    pub max: f64,
    pub mean: f64,
}

/// Bisection deviation over up to `samples` randomly chosen nodes where all four
/// line fields are defined.
pub fn bisection_check(field: &ShapeTensorField, samples: usize, seed: u64) -> BisectionStats {
    let mut valid: Vec<&ShapePoint> = field
        .points
        .iter()
        .flatten()
        .filter(|p| p.null_lines().is_some() && p.eigenlines(0.0).is_some())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    valid.shuffle(&mut rng);
    valid.truncate(samples);
    bisection_of(valid.into_iter())
}

pub fn bisection_of<'a>(points: impl Iterator<Item = &'a ShapePoint>) -> BisectionStats {
    let mut n = 0;
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for p in points {
        if let Some(d) = p.bisection_deviation() {
            n += 1;
            max = max.max(d);
            sum += d;
        }
    }
    BisectionStats {
        samples: n,
        max,
        mean: if n > 0 { sum / n as f64 } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn diag_shape() {
        let sp = ShapePoint::new(SymForm2::diag(2.0, 4.0), SymForm2::diag(2.0, 2.0)).unwrap();
        let s = sp.s_matrix();
        assert_eq!((s[(0, 0)], s[(1, 1)], s[(0, 1)]), (1.0, 2.0, 0.0));
        let (z1, z2) = sp.eigenlines(1e-12).unwrap();
        assert!((z1 - FRAC_PI_2).abs() < 1e-15 && z2.abs() < 1e-15);
        assert_eq!(sp.sigma(), SymForm2::diag(0.0, 2.0));
    }

    #[test]
    fn sign_flip_invariances() {
        let h = SymForm2::new(-0.7, 0.2, -0.3);
        let l = SymForm2::new(-0.5, 0.1, -0.4);
        let a = ShapePoint::new(h, l).unwrap();
        let b = ShapePoint::new(h.scale(-1.0), l.scale(-1.0)).unwrap();
        assert!((a.s_matrix() - b.s_matrix()).norm() < 1e-14);
        // flipping Λ alone negates S but keeps its eigenlines
        let c = ShapePoint::new(h, l.scale(-1.0)).unwrap();
        assert!((a.s_matrix() + c.s_matrix()).norm() < 1e-14);
        let (za, _) = a.eigenlines(0.0).unwrap();
        let (_, zc) = c.eigenlines(0.0).unwrap();
        assert!(line_angle_diff(za, zc).abs() < 1e-12);
    }

    #[test]
    fn null_lines_of_hyperbolic_form() {
        let sp = ShapePoint::new(SymForm2::diag(2.0, 0.0), SymForm2::diag(1.0, 1.0)).unwrap();
        let (u, v) = sp.null_lines().unwrap();
        assert!((u - FRAC_PI_4).abs() < 1e-15 && (v - 3.0 * FRAC_PI_4).abs() < 1e-15);
        assert!(sp.bisection_deviation().unwrap() < 1e-15);
        let pd = ShapePoint::new(SymForm2::diag(3.0, 2.0), SymForm2::diag(1.0, 1.0)).unwrap();
        assert!(pd.null_lines().is_none());
    }

    #[test]
    fn eigenlines_are_metric_orthogonal() {
        let sp = ShapePoint::new(SymForm2::new(1.0, 0.8, -0.4), SymForm2::new(2.0, 0.7, 0.9)).unwrap();
        let (a, b) = sp.eigenlines(0.0).unwrap();
        let g = sp.metric([a.cos(), a.sin()], [b.cos(), b.sin()]);
        assert!(g.abs() < 1e-14);
        let s = sp.s_matrix();
        let v = nalgebra::Vector2::new(a.cos(), a.sin());
        let sv = s * v;
        assert!((sv[0] * v[1] - sv[1] * v[0]).abs() < 1e-13);
        let (m1, m2) = sp.eigenvalues();
        assert!(((sv.norm()) - m1.abs()).abs() < 1e-12 && m1 > m2);
    }
}
