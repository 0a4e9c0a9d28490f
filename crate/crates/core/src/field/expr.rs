//! Closed-form scalar fields with exact jets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::jet::Jet2;

/// A closed-form function of `(x, y)` whose jets are evaluated exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expr {
    /// `c + px·x + py·y + ½·rxx·x² + rxy·x·y + ½·ryy·y²`.
    Quadratic {
        c: f64,
        px: f64,
        py: f64,
        rxx: f64,
        rxy: f64,
        ryy: f64,
    },
    /// `scale · Re(e^{i·phase} (ζ − (cx + i·cy))ⁿ)` with `ζ = x + iy`.
    HarmonicPower {
        n: u32,
        scale: f64,
        cx: f64,
        cy: f64,
        phase: f64,
    },
    /// `scale · Re(exp(ζ))`, a non-polynomial harmonic function.
    HarmonicExp { scale: f64 },
    /// `sin(kx·x) · sin(ky·y)`.
    SinSin { kx: f64, ky: f64 },
    /// Lower hemisphere `offset − sqrt(R² − |(x, y) − c|²)`, defined on the open disk.
    Hemisphere {
        radius: f64,
        cx: f64,
        cy: f64,
        offset: f64,
    },
    Sum(Vec<Expr>),
    /// `inner(M·(x, y) + b)`.
    Affine {
        inner: Box<Expr>,
        m: [[f64; 2]; 2],
        b: [f64; 2],
    },
}

impl Expr {
    pub fn quadratic(c: f64, rxx: f64, rxy: f64, ryy: f64) -> Self {
        Expr::Quadratic {
            c,
            px: 0.0,
            py: 0.0,
            rxx,
            rxy,
            ryy,
        }
    }

    /// `a − (x² + y²)/4`, the radial solutions of `Δu + 1 = 0`.
    pub fn serrin(a: f64) -> Self {
        Self::quadratic(a, -0.5, 0.0, -0.5)
    }

    /// `a − x²/4 − y²/16`, solutions of `u_xx + 4u_yy + 1 = 0`.
    pub fn aniso_serrin(a: f64) -> Self {
        Self::quadratic(a, -0.5, 0.0, -0.125)
    }

    /// `x² + y² + t`.
    pub fn paraboloid(t: f64) -> Self {
        Self::quadratic(t, 2.0, 0.0, 2.0)
    }

    pub fn harmonic_power(n: u32, scale: f64) -> Self {
        Expr::HarmonicPower {
            n,
            scale,
            cx: 0.0,
            cy: 0.0,
            phase: 0.0,
        }
    }

    pub fn hemisphere(radius: f64) -> Self {
        Expr::Hemisphere {
            radius,
            cx: 0.0,
            cy: 0.0,
            offset: 0.0,
        }
    }

    /// `self + eps · Re(ζⁿ)`.
    pub fn perturbed(self, n: u32, eps: f64) -> Self {
        self.plus(Self::harmonic_power(n, eps))
    }

    pub fn plus(self, other: Expr) -> Self {
        match self {
            Expr::Sum(mut v) => {
                v.push(other);
                Expr::Sum(v)
            }
            e => Expr::Sum(vec![e, other]),
        }
    }

    /// Composition with a rotation of the plane by `angle`:
    /// the returned field at `x` equals `self` at `R(−angle)·x`.
    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Expr::Affine {
            inner: Box::new(self),
            m: [[c, s], [-s, c]],
            b: [0.0, 0.0],
        }
    }

    /// Composition with a translation: the returned field at `x` equals `self` at `x + shift`.
    pub fn shifted(self, shift: [f64; 2]) -> Self {
        Expr::Affine {
            inner: Box::new(self),
            m: [[1.0, 0.0], [0.0, 1.0]],
            b: shift,
        }
    }

    pub fn value(&self, x: f64, y: f64) -> Option<f64> {
        self.jet(x, y).map(|j| j.z)
    }

    /// Exact jet at `(x, y)`; `None` outside the natural domain of the expression.
    pub fn jet(&self, x: f64, y: f64) -> Option<Jet2> {
        match self {
            Expr::Quadratic {
                c,
                px,
                py,
                rxx,
                rxy,
                ryy,
            } => Some(Jet2::new(
                c + px * x + py * y + 0.5 * rxx * x * x + rxy * x * y + 0.5 * ryy * y * y,
                px + rxx * x + rxy * y,
                py + rxy * x + ryy * y,
                *rxx,
                *rxy,
                *ryy,
            )),
            Expr::HarmonicPower {
                n,
                scale,
                cx,
                cy,
                phase,
            } => {
                let zeta = Complex64::new(x - cx, y - cy);
                let a = Complex64::from_polar(*scale, *phase);
                let n = *n as i32;
                let f = a * zeta.powi(n);
                let f1 = if n >= 1 {
                    a * (n as f64) * zeta.powi(n - 1)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let f2 = if n >= 2 {
                    a * ((n * (n - 1)) as f64) * zeta.powi(n - 2)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                Some(holomorphic_real_part(f, f1, f2))
            }
            Expr::HarmonicExp { scale } => {
                let e = Complex64::new(x, y).exp() * *scale;
                Some(holomorphic_real_part(e, e, e))
            }
            Expr::SinSin { kx, ky } => {
                let (sx, cx) = (kx * x).sin_cos();
                let (sy, cy) = (ky * y).sin_cos();
                Some(Jet2::new(
                    sx * sy,
                    kx * cx * sy,
                    ky * sx * cy,
                    -kx * kx * sx * sy,
                    kx * ky * cx * cy,
                    -ky * ky * sx * sy,
                ))
            }
            Expr::Hemisphere {
                radius,
                cx,
                cy,
                offset,
            } => {
                let (dx, dy) = (x - cx, y - cy);
                let w2 = radius * radius - dx * dx - dy * dy;
                if w2 <= 0.0 {
                    return None;
                }
                let w = w2.sqrt();
                let w3 = w2 * w;
                Some(Jet2::new(
                    offset - w,
                    dx / w,
                    dy / w,
                    (radius * radius - dy * dy) / w3,
                    dx * dy / w3,
                    (radius * radius - dx * dx) / w3,
                ))
            }
            Expr::Sum(terms) => {
                let mut acc = [0.0; 6];
                for term in terms {
                    let j = term.jet(x, y)?.as_array();
                    for k in 0..6 {
                        acc[k] += j[k];
                    }
                }
                Some(Jet2::from_array(acc))
            }
            Expr::Affine { inner, m, b } => {
                let xi = m[0][0] * x + m[0][1] * y + b[0];
                let yi = m[1][0] * x + m[1][1] * y + b[1];
                let j = inner.jet(xi, yi)?;
                // chain rule: D(u∘A) = Mᵀ Du, D²(u∘A) = Mᵀ D²u M
                let p = m[0][0] * j.p + m[1][0] * j.q;
                let q = m[0][1] * j.p + m[1][1] * j.q;
                let mm = nalgebra::Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
                let h = j.hessian().congruent(&mm);
                Some(Jet2::new(j.z, p, q, h.a11, h.a12, h.a22))
            }
        }
    }
}

/// Jet of `Re f` for a holomorphic `f` given `f`, `f'`, `f''` at the point.
fn holomorphic_real_part(f: Complex64, f1: Complex64, f2: Complex64) -> Jet2 {
    Jet2::new(f.re, f1.re, -f1.im, f2.re, -f2.im, -f2.re)
}
