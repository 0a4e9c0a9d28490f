//! Foliations of meromorphic quadratic differentials `q(ζ) dζ²`, which give line
//! fields with known singularities on the plane and on the sphere.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;

use crate::field::{normalize_line_angle, LevelCurve, LineSource};

use super::audit::{boundary_tangency, ph_audit, IndexReport, PhInput, Singularity, Surface, Tangency};
use super::winding::{line_index_circle, WindingOptions};
use super::IndexError;

/// A Laurent polynomial `Σ cₖ ζᵏ`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadDiff {
    pub terms: Vec<(i32, Complex64)>,
}

/// Which directions of `q` to follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Foliation {
    /// `q(ζ)v² > 0`.
    Horizontal,
    /// `q(ζ)v² < 0`.
    Vertical,
    /// `Re q(ζ)v² = 0`, the two null families.
    NullPlus,
    NullMinus,
}

impl Foliation {
    fn offset(&self) -> f64 {
        match self {
            Foliation::Horizontal => 0.0,
            Foliation::Vertical => FRAC_PI_2,
            Foliation::NullPlus => FRAC_PI_4,
            Foliation::NullMinus => -FRAC_PI_4,
        }
    }
}

impl QuadDiff {
    pub fn new(terms: Vec<(i32, Complex64)>) -> Self {
        Self { terms }
    }

    /// `q = Σ cₖ ζᵏ` with real coefficients.
    pub fn real(terms: &[(i32, f64)]) -> Self {
        Self::new(terms.iter().map(|(k, c)| (*k, Complex64::new(*c, 0.0))).collect())
    }

    pub fn monomial(k: i32) -> Self {
        Self::real(&[(k, 1.0)])
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|(k, c)| c * z.powi(*k)).sum()
    }

    /// The same differential in the chart `w = 1/ζ`: `q(1/w)·w⁻⁴`.
    pub fn at_infinity(&self) -> Self {
        Self::new(self.terms.iter().map(|(k, c)| (-k - 4, *c)).collect())
    }

    pub fn lines(&self, foliation: Foliation) -> QuadDiffLines {
        QuadDiffLines {
            q: self.clone(),
            foliation,
        }
    }
}

/// Line field of a foliation of `q`.
#[derive(Clone, Debug)]
pub struct QuadDiffLines {
    q: QuadDiff,
    foliation: Foliation,
}

impl LineSource for QuadDiffLines {
    fn angle_at(&self, p: [f64; 2]) -> Option<f64> {
        let z = Complex64::new(p[0], p[1]);
        let v = self.q.eval(z);
        if !(v.norm() > 1e-300 && v.is_finite()) {
            return None;
        }
        Some(normalize_line_angle(-0.5 * v.arg() + self.foliation.offset()))
    }
}

/// A line field given in the `ζ` chart, read in the chart `w = 1/ζ` around `∞`.
pub struct ChartAtInfinity<S>(pub S);

impl<S: LineSource> LineSource for ChartAtInfinity<S> {
    fn angle_at(&self, p: [f64; 2]) -> Option<f64> {
        let w = Complex64::new(p[0], p[1]);
        if w.norm() == 0.0 {
            return None;
        }
        let z = w.inv();
        let a = self.0.angle_at([z.re, z.im])?;
        // d(1/ζ) = −dζ/ζ² turns directions by π − 2 arg ζ = π + 2 arg w
        Some(normalize_line_angle(a + 2.0 * w.arg()))
    }
}

/// The field inside the unit disk, continued outside by the reflection `ζ ↦ 1/ζ̄`.
pub struct ReflectedAcrossCircle<S>(pub S);

impl<S: LineSource> LineSource for ReflectedAcrossCircle<S> {
    fn angle_at(&self, p: [f64; 2]) -> Option<f64> {
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2 <= 1.0 {
            return self.0.angle_at(p);
        }
        let a = self.0.angle_at([p[0] / r2, p[1] / r2])?;
        Some(normalize_line_angle(std::f64::consts::PI - a + 2.0 * p[1].atan2(p[0])))
    }
}

/// A singularity of a line field on the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite([f64; 2]),
    Infinity,
}

/// How a fixture is audited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureSurface {
    /// All singularities, including `∞`, on the sphere.
    Sphere,
    /// Singularities inside the unit disk, with tangency measured on the circle.
    Disk,
    /// Singularities inside the unit disk, with tangency taken as a hypothesis.
    DiskAssumingTangency,
}

/// Named fixtures with their singularities and expected indices.
#[derive(Clone, Debug)]
pub struct QuadFixture {
    pub name: &'static str,
    pub q: QuadDiff,
    pub foliation: Foliation,
    pub singularities: Vec<(SpherePoint, f64)>,
    pub surface: FixtureSurface,
}

/// `ζ dζ²`, `ζ² dζ²` and `(ζ² + 0.3) dζ²`, horizontal foliations on the sphere.
pub fn sphere_fixtures() -> Vec<QuadFixture> {
    let s = 0.3f64.sqrt();
    vec![
        QuadFixture {
            name: "zeta",
            q: QuadDiff::monomial(1),
            foliation: Foliation::Horizontal,
            singularities: vec![(SpherePoint::Finite([0.0, 0.0]), -0.5), (SpherePoint::Infinity, 2.5)],
            surface: FixtureSurface::Sphere,
        },
        QuadFixture {
            name: "zeta-squared",
            q: QuadDiff::monomial(2),
            foliation: Foliation::Horizontal,
            singularities: vec![(SpherePoint::Finite([0.0, 0.0]), -1.0), (SpherePoint::Infinity, 3.0)],
            surface: FixtureSurface::Sphere,
        },
        QuadFixture {
            name: "split-zeros",
            q: QuadDiff::real(&[(2, 1.0), (0, 0.3)]),
            foliation: Foliation::Horizontal,
            singularities: vec![
                (SpherePoint::Finite([0.0, s]), -0.5),
                (SpherePoint::Finite([0.0, -s]), -0.5),
                (SpherePoint::Infinity, 3.0),
            ],
            surface: FixtureSurface::Sphere,
        },
    ]
}

/// `(ζ² + 3ζ + 1)/ζ³ dζ²`: its vertical foliation is tangent to the unit circle,
/// with a pole of index `3/2` at 0 and a zero of index `−1/2` at `(√5 − 3)/2` inside.
pub fn tangent_disk_fixture() -> QuadFixture {
    let z_in = (5f64.sqrt() - 3.0) / 2.0;
    let z_out = -(5f64.sqrt() + 3.0) / 2.0;
    QuadFixture {
        name: "tangent-disk",
        q: QuadDiff::real(&[(-1, 1.0), (-2, 3.0), (-3, 1.0)]),
        foliation: Foliation::Vertical,
        singularities: vec![
            (SpherePoint::Finite([0.0, 0.0]), 1.5),
            (SpherePoint::Finite([z_in, 0.0]), -0.5),
            (SpherePoint::Finite([z_out, 0.0]), -0.5),
            (SpherePoint::Infinity, 1.5),
        ],
        surface: FixtureSurface::Disk,
    }
}

/// The vertical foliation of `ζ dζ²` on the unit disk: one interior singularity of
/// index `−1/2`. It is not tangent to the circle; the audit takes tangency as a
/// hypothesis and shows that it cannot hold.
pub fn disk_contradiction_fixture() -> QuadFixture {
    QuadFixture {
        name: "disk-contradiction",
        q: QuadDiff::monomial(1),
        foliation: Foliation::Vertical,
        singularities: vec![(SpherePoint::Finite([0.0, 0.0]), -0.5), (SpherePoint::Infinity, 2.5)],
        surface: FixtureSurface::DiskAssumingTangency,
    }
}

pub fn fixture_by_name(name: &str) -> Option<QuadFixture> {
    sphere_fixtures()
        .into_iter()
        .chain([tangent_disk_fixture(), disk_contradiction_fixture()])
        .find(|f| f.name == name)
}

pub const FIXTURE_NAMES: [&str; 5] = ["zeta", "zeta-squared", "split-zeros", "tangent-disk", "disk-contradiction"];

fn loop_radius(fx: &QuadFixture, at: [f64; 2]) -> f64 {
    let nearest = fx
        .singularities
        .iter()
        .filter_map(|(p, _)| match p {
            SpherePoint::Finite(q) if *q != at => Some((q[0] - at[0]).hypot(q[1] - at[1])),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    (0.25 * nearest).min(0.1)
}

/// Measures every listed singularity of a fixture by winding and audits the sums.
/// The expected indices in the fixture are not used.
pub fn audit_fixture(fx: &QuadFixture, opts: &WindingOptions) -> Result<IndexReport, IndexError> {
    let lines = fx.q.lines(fx.foliation);
    let disk = fx.surface != FixtureSurface::Sphere;
    let mut interior = Vec::new();
    for (pt, _) in &fx.singularities {
        match pt {
            SpherePoint::Finite(c) => {
                if disk && c[0].hypot(c[1]) >= 1.0 {
                    continue;
                }
                let li = line_index_circle(&lines, *c, loop_radius(fx, *c), opts)?;
                interior.push(Singularity::from_index(*c, &li));
            }
            SpherePoint::Infinity if !disk => {
                let li = line_index_circle(&ChartAtInfinity(lines.clone()), [0.0, 0.0], 0.1, opts)?;
                let mut s = Singularity::from_index([0.0, 0.0], &li);
                s.at_infinity = true;
                interior.push(s);
            }
            SpherePoint::Infinity => {}
        }
    }
    let surface = match fx.surface {
        FixtureSurface::Sphere => Surface::Sphere,
        FixtureSurface::DiskAssumingTangency => Surface::Disk(Tangency::Assumed),
        FixtureSurface::Disk => {
            let prof = boundary_tangency(&lines, None, &LevelCurve::circle([0.0, 0.0], 1.0, 512), 0.0);
            Surface::Disk(Tangency::Measured {
                max: prof.max,
                threshold: 1e-6,
            })
        }
    };
    let mut input = PhInput::new(format!("{}:{:?}", fx.name, fx.foliation).to_lowercase(), surface);
    input.interior = interior;
    Ok(ph_audit(input))
}

/// Index sum of the field doubled across the unit circle, measured on the sphere:
/// the singularities inside, their mirror images `1/ζ̄`, and the point at `∞`.
pub fn doubled_sphere_sum(inside: &[[f64; 2]], src: &dyn LineSource, opts: &WindingOptions) -> Result<f64, IndexError> {
    struct Dyn<'a>(&'a dyn LineSource);
    impl LineSource for Dyn<'_> {
        fn angle_at(&self, p: [f64; 2]) -> Option<f64> {
            self.0.angle_at(p)
        }
    }
    let doubled = ReflectedAcrossCircle(Dyn(src));
    let r = 0.05;
    let mut total = 0.0;
    for c in inside {
        let n2 = c[0] * c[0] + c[1] * c[1];
        total += line_index_circle(&doubled, *c, r, opts)?.value();
        if n2 > 0.0 {
            let m = [c[0] / n2, c[1] / n2];
            total += line_index_circle(&doubled, m, r, opts)?.value();
        } else {
            total += line_index_circle(&ChartAtInfinity(Dyn(&doubled)), [0.0, 0.0], r, opts)?.value();
        }
    }
    if inside.iter().all(|c| c[0] != 0.0 || c[1] != 0.0) {
        total += line_index_circle(&ChartAtInfinity(Dyn(&doubled)), [0.0, 0.0], r, opts)?.value();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::line_angle_diff;

    #[test]
    fn fixture_indices() {
        let w = WindingOptions::default();
        for fx in sphere_fixtures().into_iter().chain([tangent_disk_fixture()]) {
            let lines = fx.q.lines(fx.foliation);
            let mut total = 0.0;
            for (pt, expected) in &fx.singularities {
                let i = match pt {
                    SpherePoint::Finite(c) => line_index_circle(&lines, *c, 0.1, &w),
                    SpherePoint::Infinity => line_index_circle(&ChartAtInfinity(lines.clone()), [0.0, 0.0], 0.1, &w),
                }
                .unwrap();
                assert_eq!(i.snapped, Some(*expected), "{} at {pt:?}", fx.name);
                total += expected;
            }
            assert_eq!(total, 2.0, "{}", fx.name);
        }
    }

    #[test]
    fn chart_agrees_with_transformed_differential() {
        let q = QuadDiff::real(&[(2, 1.0), (0, 0.3), (-1, 0.7)]);
        let direct = q.at_infinity().lines(Foliation::Horizontal);
        let charted = ChartAtInfinity(q.lines(Foliation::Horizontal));
        for p in [[0.3, 0.1], [-0.2, 0.5], [0.05, -0.4]] {
            let d = line_angle_diff(direct.angle_at(p).unwrap(), charted.angle_at(p).unwrap());
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_fixture_is_tangent_and_self_reflecting() {
        let fx = tangent_disk_fixture();
        let lines = fx.q.lines(fx.foliation);
        for k in 0..50 {
            let t = 0.1257 * k as f64;
            let a = lines.angle_at([t.cos(), t.sin()]).unwrap();
            assert!(line_angle_diff(a, t + FRAC_PI_2).abs() < 1e-12);
        }
        let refl = ReflectedAcrossCircle(lines.clone());
        for p in [[1.5, 0.2], [-0.3, 2.0], [3.0, -3.0]] {
            let d = line_angle_diff(refl.angle_at(p).unwrap(), lines.angle_at(p).unwrap());
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn fixture_audits() {
        let w = WindingOptions::default();
        for name in FIXTURE_NAMES {
            let fx = fixture_by_name(name).unwrap();
            let r = audit_fixture(&fx, &w).unwrap();
            match fx.surface {
                FixtureSurface::Sphere => assert_eq!((r.sphere_sum, r.contradiction), (2.0, false), "{name}"),
                FixtureSurface::Disk => {
                    assert_eq!(r.disk_sum, Some(1.0));
                    assert!(!r.contradiction && r.not_applicable_reason.is_none(), "{r:?}");
                }
                FixtureSurface::DiskAssumingTangency => {
                    assert_eq!(r.disk_sum, Some(-0.5));
                    assert!(r.contradiction && r.all_negative);
                }
            }
        }
    }

    #[test]
    fn doubling_the_tangent_disk() {
        let fx = tangent_disk_fixture();
        let inside = [[0.0, 0.0], [(5f64.sqrt() - 3.0) / 2.0, 0.0]];
        let total = doubled_sphere_sum(&inside, &fx.q.lines(fx.foliation), &WindingOptions::default()).unwrap();
        assert!((total - 2.0).abs() < 1e-12, "{total}");
    }
}
