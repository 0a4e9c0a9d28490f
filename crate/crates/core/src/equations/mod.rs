//! Fully nonlinear elliptic operators `F(z, p, q, r, s, t)`.

mod aniso;
mod sphere;

pub use aniso::Anisotropy;
pub use sphere::{minkowski_balance, SphereFn, BALANCE_ORDER};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{Jet2, SymForm2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquationError {
    #[error("jet is outside the admissible region of {id}: {reason}")]
    InadmissibleJet { id: String, reason: String },
    #[error("bad anisotropy: {0}")]
    BadAnisotropy(String),
    #[error("f must be positive on the sphere; f({point:?}) = {value}")]
    NonPositiveF { point: [f64; 3], value: f64 },
    #[error("unknown equation `{0}`")]
    Unknown(String),
}

/// First partial derivatives of `F` with respect to each jet slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Partials {
    pub z: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

/// The operators of the catalog. Each is `F(Du, D²u)`; none depends on `z`.
#[derive(Clone, Debug, PartialEq)]
pub enum Equation {
    /// `Δu + constant`.
    SerrinLaplace { constant: f64 },
    /// `a·u_xx + b·u_yy + constant`.
    AnisoLinear { a: f64, b: f64, constant: f64 },
    /// `det D²u − rhs`, on convex jets.
    MongeAmpere { rhs: f64 },
    /// `det D²u − W(Du)(1 + |Du|²)²` with `W` pulled back from `f` on the sphere.
    MinkowskiMa { f: SphereFn },
    /// `div(Du/√(1 + |Du|²)) − 2W(Du)`.
    Pmc { f: SphereFn },
    /// `tr(D²V(Du)·D²u) + constant`.
    AnisoQ { h: Anisotropy, constant: f64 },
    /// `det(D²V(Du)·D²u) − constant`, on convex jets.
    AnisoR { h: Anisotropy, constant: f64 },
}

/// Every catalog entry with its default parameters.
pub fn catalog() -> Vec<Equation> {
    vec![
        Equation::SerrinLaplace { constant: 1.0 },
        Equation::AnisoLinear {
            a: 1.0,
            b: 4.0,
            constant: 1.0,
        },
        Equation::MongeAmpere { rhs: 4.0 },
        Equation::MinkowskiMa {
            f: SphereFn::Constant(1.0),
        },
        Equation::Pmc {
            f: SphereFn::Constant(1.0),
        },
        Equation::AnisoQ {
            h: Anisotropy::Euclidean,
            constant: 1.0,
        },
        Equation::AnisoR {
            h: Anisotropy::Euclidean,
            constant: 1.0,
        },
    ]
}

fn convex_branch(jet: &Jet2) -> Result<(), String> {
    if !(jet.r > 0.0) {
        return Err(format!("u_xx = {} is not positive", jet.r));
    }
    let det = jet.r * jet.t - jet.s * jet.s;
    if !(det > 0.0) {
        return Err(format!("det D²u = {det} is not positive"));
    }
    Ok(())
}

impl Equation {
    pub fn id(&self) -> &'static str {
        match self {
            Equation::SerrinLaplace { .. } => "serrin-laplace",
            Equation::AnisoLinear { .. } => "aniso-linear",
            Equation::MongeAmpere { .. } => "monge-ampere-4",
            Equation::MinkowskiMa { .. } => "minkowski-ma",
            Equation::Pmc { .. } => "pmc",
            Equation::AnisoQ { .. } => "aniso-Q",
            Equation::AnisoR { .. } => "aniso-R",
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Equation::SerrinLaplace { .. } | Equation::AnisoLinear { .. } => "linear",
            Equation::MongeAmpere { .. } => "monge-ampere",
            Equation::MinkowskiMa { .. } => "minkowski",
            Equation::Pmc { .. } => "mean-curvature",
            Equation::AnisoQ { .. } => "anisotropic-trace",
            Equation::AnisoR { .. } => "anisotropic-determinant",
        }
    }

    pub fn admissible_region(&self) -> &'static str {
        match self {
            Equation::SerrinLaplace { .. } | Equation::AnisoLinear { .. } | Equation::Pmc { .. } => {
                "all finite jets"
            }
            Equation::AnisoQ { h, .. } if h.is_quadratic() => "all finite jets",
            Equation::AnisoQ { .. } => "finite jets with Du ≠ 0",
            Equation::MongeAmpere { .. } | Equation::MinkowskiMa { .. } => {
                "convex jets: u_xx > 0 and det D²u > 0"
            }
            Equation::AnisoR { h, .. } if h.is_quadratic() => "convex jets: u_xx > 0 and det D²u > 0",
            Equation::AnisoR { .. } => "convex jets with Du ≠ 0",
        }
    }

    pub fn depends_on_z(&self) -> bool {
        false
    }

    pub fn depends_on_gradient(&self) -> bool {
        match self {
            Equation::MinkowskiMa { .. } | Equation::Pmc { .. } => true,
            Equation::AnisoQ { h, .. } | Equation::AnisoR { h, .. } => !h.is_quadratic(),
            _ => false,
        }
    }

    /// Whether the operator has the convex-branch restriction.
    pub fn is_convex_branch(&self) -> bool {
        matches!(
            self,
            Equation::MongeAmpere { .. } | Equation::MinkowskiMa { .. } | Equation::AnisoR { .. }
        )
    }

    fn inadmissible(&self, reason: String) -> EquationError {
        EquationError::InadmissibleJet {
            id: self.id().to_string(),
            reason,
        }
    }

    pub fn check_admissible(&self, jet: &Jet2) -> Result<(), EquationError> {
        if !jet.is_finite() {
            return Err(self.inadmissible("non-finite jet".into()));
        }
        if self.is_convex_branch() {
            convex_branch(jet).map_err(|r| self.inadmissible(r))?;
        }
        if let Equation::AnisoQ { h, .. } | Equation::AnisoR { h, .. } = self {
            if !h.is_quadratic() && jet.p == 0.0 && jet.q == 0.0 {
                return Err(self.inadmissible("D²V is undefined at Du = 0".into()));
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, jet: &Jet2) -> bool {
        self.check_admissible(jet).is_ok()
    }

    fn aniso_matrix(&self, h: &Anisotropy, jet: &Jet2) -> Result<SymForm2, EquationError> {
        h.hessian_v([jet.p, jet.q]).map_err(|e| match e {
            EquationError::InadmissibleJet { reason, .. } => self.inadmissible(reason),
            other => other,
        })
    }

    /// `F` at the jet.
    pub fn residual(&self, jet: &Jet2) -> Result<f64, EquationError> {
        self.check_admissible(jet)?;
        self.residual_unchecked(jet)
    }

    /// `F` without the admissibility check; still fails where `F` itself is undefined.
    pub fn residual_unchecked(&self, jet: &Jet2) -> Result<f64, EquationError> {
        let Jet2 { p, q, r, s, t, .. } = *jet;
        Ok(match self {
            Equation::SerrinLaplace { constant } => r + t + constant,
            Equation::AnisoLinear { a, b, constant } => a * r + b * t + constant,
            Equation::MongeAmpere { rhs } => r * t - s * s - rhs,
            Equation::MinkowskiMa { f } => {
                let d = 1.0 + p * p + q * q;
                r * t - s * s - f.w(p, q) * d * d
            }
            Equation::Pmc { f } => {
                let d = 1.0 + p * p + q * q;
                ((1.0 + q * q) * r - 2.0 * p * q * s + (1.0 + p * p) * t) / d.powf(1.5) - 2.0 * f.w(p, q)
            }
            Equation::AnisoQ { h, constant } => {
                let a = self.aniso_matrix(h, jet)?;
                a.a11 * r + 2.0 * a.a12 * s + a.a22 * t + constant
            }
            Equation::AnisoR { h, constant } => {
                let a = self.aniso_matrix(h, jet)?;
                a.det() * (r * t - s * s) - constant
            }
        })
    }

    /// Analytic partial derivatives of `F` (gradient slots of custom anisotropies
    /// are differenced numerically).
    pub fn partials(&self, jet: &Jet2) -> Result<Partials, EquationError> {
        self.check_admissible(jet)?;
        let Jet2 { p, q, r, s, t, .. } = *jet;
        Ok(match self {
            Equation::SerrinLaplace { .. } => Partials {
                r: 1.0,
                t: 1.0,
                ..Default::default()
            },
            Equation::AnisoLinear { a, b, .. } => Partials {
                r: *a,
                t: *b,
                ..Default::default()
            },
            Equation::MongeAmpere { .. } => Partials {
                r: t,
                s: -2.0 * s,
                t: r,
                ..Default::default()
            },
            Equation::MinkowskiMa { f } => {
                let d = 1.0 + p * p + q * q;
                let (w, wp, wq) = f.w_with_gradient(p, q);
                Partials {
                    p: -wp * d * d - 4.0 * w * d * p,
                    q: -wq * d * d - 4.0 * w * d * q,
                    r: t,
                    s: -2.0 * s,
                    t: r,
                    ..Default::default()
                }
            }
            Equation::Pmc { f } => {
                let d = 1.0 + p * p + q * q;
                let d32 = d.powf(1.5);
                let n = (1.0 + q * q) * r - 2.0 * p * q * s + (1.0 + p * p) * t;
                let (_, wp, wq) = f.w_with_gradient(p, q);
                Partials {
                    p: (2.0 * p * t - 2.0 * q * s) / d32 - 3.0 * p * n / (d32 * d) - 2.0 * wp,
                    q: (2.0 * q * r - 2.0 * p * s) / d32 - 3.0 * q * n / (d32 * d) - 2.0 * wq,
                    r: (1.0 + q * q) / d32,
                    s: -2.0 * p * q / d32,
                    t: (1.0 + p * p) / d32,
                    ..Default::default()
                }
            }
            Equation::AnisoQ { h, .. } => {
                let a = self.aniso_matrix(h, jet)?;
                let (fp, fq) = self.gradient_partials_numeric(jet)?;
                Partials {
                    p: fp,
                    q: fq,
                    r: a.a11,
                    s: 2.0 * a.a12,
                    t: a.a22,
                    ..Default::default()
                }
            }
            Equation::AnisoR { h, .. } => {
                let d = self.aniso_matrix(h, jet)?.det();
                let (fp, fq) = self.gradient_partials_numeric(jet)?;
                Partials {
                    p: fp,
                    q: fq,
                    r: d * t,
                    s: -2.0 * d * s,
                    t: d * r,
                    ..Default::default()
                }
            }
        })
    }

    fn gradient_partials_numeric(&self, jet: &Jet2) -> Result<(f64, f64), EquationError> {
        if !self.depends_on_gradient() {
            return Ok((0.0, 0.0));
        }
        let e = 1e-3 * (1.0 + jet.gradient_norm());
        let f = |dp: f64, dq: f64| {
            let mut j = *jet;
            j.p += dp;
            j.q += dq;
            self.residual_unchecked(&j)
        };
        let d4 = |dir: [f64; 2]| -> Result<f64, EquationError> {
            let at = |k: f64| f(k * e * dir[0], k * e * dir[1]);
            Ok((at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * e))
        };
        Ok((d4([1.0, 0.0])?, d4([0.0, 1.0])?))
    }

    /// `4·F_r·F_t − F_s²`; positive exactly where the operator is elliptic at the jet.
    pub fn ellipticity_margin(&self, jet: &Jet2) -> Result<f64, EquationError> {
        let d = self.partials(jet)?;
        Ok(4.0 * d.r * d.t - d.s * d.s)
    }

    /// Moves a jet into the admissible region. Convex-branch operators get their
    /// Hessian eigenvalues clamped to at least `floor`; other jets are returned unchanged.
    pub fn project_admissible(&self, jet: &Jet2, floor: f64) -> Jet2 {
        if self.is_convex_branch() {
            jet.with_hessian(jet.hessian().clamp_eigenvalues(floor))
        } else {
            *jet
        }
    }

    /// Draws a jet from the documented admissible region. Values are kept in a
    /// box of size about `spread`.
    pub fn sample_admissible<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Jet2 {
        let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
        let z = u(-spread, spread);
        let mut p = u(-spread, spread);
        let q = u(-spread, spread);
        if self.depends_on_gradient() && p == 0.0 {
            p = 1e-3;
        }
        if self.is_convex_branch() {
            let (l1, l2, ang) = (
                (u(-2.0, 2.0)).exp() * spread.max(1e-3),
                (u(-2.0, 2.0)).exp() * spread.max(1e-3),
                u(0.0, std::f64::consts::PI),
            );
            let (sn, cs) = ang.sin_cos();
            let h = SymForm2::new(
                l1 * cs * cs + l2 * sn * sn,
                (l1 - l2) * cs * sn,
                l1 * sn * sn + l2 * cs * cs,
            );
            Jet2::new(z, p, q, h.a11, h.a12, h.a22)
        } else {
            Jet2::new(z, p, q, u(-spread, spread), u(-spread, spread), u(-spread, spread))
        }
    }

    /// Looks an operator up by identifier with its default parameters.
    pub fn by_id(id: &str) -> Result<Equation, EquationError> {
        catalog()
            .into_iter()
            .find(|e| e.id() == id)
            .ok_or_else(|| EquationError::Unknown(id.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Expr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_shape() {
        let c = catalog();
        assert_eq!(c.len(), 7);
        let mut fam: Vec<&str> = c.iter().map(|e| e.family()).collect();
        fam.dedup();
        assert_eq!(fam.len(), 6);
    }

    #[test]
    fn serrin_and_example_residuals() {
        let j = Expr::serrin(0.25).jet(0.3, -0.7).unwrap();
        assert_eq!(Equation::SerrinLaplace { constant: 1.0 }.residual(&j).unwrap(), 0.0);
        let j = Expr::aniso_serrin(1.0).jet(0.4, 1.1).unwrap();
        let e = Equation::by_id("aniso-linear").unwrap();
        assert_eq!(e.residual(&j).unwrap(), 0.0);
        assert_eq!(e.ellipticity_margin(&j).unwrap(), 16.0);
        let j = Expr::paraboloid(3.0).jet(0.2, 0.1).unwrap();
        let ma = Equation::by_id("monge-ampere-4").unwrap();
        assert_eq!(ma.residual(&j).unwrap(), 0.0);
        assert_eq!(ma.ellipticity_margin(&j).unwrap(), 16.0);
    }

    #[test]
    fn monge_ampere_rejects_saddles() {
        let ma = Equation::MongeAmpere { rhs: 4.0 };
        let j = Jet2::new(0.0, 0.0, 0.0, 2.0, 0.0, -2.0);
        assert!(matches!(ma.residual(&j), Err(EquationError::InadmissibleJet { .. })));
        let fixed = ma.project_admissible(&j, 1e-3);
        assert!(ma.is_admissible(&fixed));
    }

    #[test]
    fn pmc_at_critical_point() {
        let (rho, h0) = (0.8, 0.3);
        let e = Equation::Pmc {
            f: SphereFn::Constant(h0),
        };
        let j = Jet2::new(0.0, 0.0, 0.0, rho, 0.0, rho);
        assert!((e.residual(&j).unwrap() - (2.0 * rho - 2.0 * h0)).abs() < 1e-15);
    }

    #[test]
    fn hemisphere_solves_curvature_equations() {
        let radius = 1.7;
        let e = Expr::hemisphere(radius);
        let mink = Equation::MinkowskiMa {
            f: SphereFn::Constant(1.0 / (radius * radius)),
        };
        let pmc = Equation::Pmc {
            f: SphereFn::Constant(1.0 / radius),
        };
        for (x, y) in [(0.0, 0.0), (0.5, -0.9), (1.2, 0.3)] {
            let j = e.jet(x, y).unwrap();
            assert!(mink.residual(&j).unwrap().abs() < 1e-11);
            assert!(pmc.residual(&j).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_anisotropy_reduces() {
        let q = Equation::AnisoQ {
            h: Anisotropy::Euclidean,
            constant: 1.0,
        };
        let j = Expr::serrin(0.25).jet(0.1, 0.2).unwrap();
        assert_eq!(q.residual(&j).unwrap(), 0.0);
        let q = Equation::AnisoQ {
            h: Anisotropy::ellipse(1.0, 2.0).unwrap(),
            constant: 1.0,
        };
        let j = Expr::aniso_serrin(1.0).jet(0.1, 0.2).unwrap();
        assert_eq!(q.residual(&j).unwrap(), 0.0);
    }

    #[test]
    fn partials_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let custom = Anisotropy::custom("mix", |x| (x[0].hypot(3.0 * x[1]) + x[0].hypot(x[1])) / 2.0).unwrap();
        let mut eqs = catalog();
        eqs.push(Equation::MinkowskiMa {
            f: SphereFn::Zonal(vec![1.0, 0.4, 0.2]),
        });
        eqs.push(Equation::Pmc {
            f: SphereFn::Zonal(vec![1.0, 0.0, 0.3]),
        });
        eqs.push(Equation::AnisoQ {
            h: custom.clone(),
            constant: 1.0,
        });
        eqs.push(Equation::AnisoR { h: custom, constant: 1.0 });
        for e in &eqs {
            for _ in 0..50 {
                let j = e.sample_admissible(&mut rng, 1.5);
                let d = e.partials(&j).unwrap();
                let step = 1e-3;
                let fd = |k: usize| {
                    let at = |m: f64| {
                        let mut a = j.as_array();
                        a[k] += m * step;
                        e.residual_unchecked(&Jet2::from_array(a)).unwrap()
                    };
                    (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * step)
                };
                let scale = 1.0 + d.r.abs() + d.s.abs() + d.t.abs() + d.p.abs() + d.q.abs();
                for (k, v) in [(1, d.p), (2, d.q), (3, d.r), (4, d.s), (5, d.t)] {
                    let tol = if k <= 2 && !e.depends_on_gradient() { 1e-9 } else { 1e-6 };
                    assert!((fd(k) - v).abs() <= tol * scale, "{}: slot {k}: {} vs {v}", e.id(), fd(k));
                }
            }
        }
    }
}
