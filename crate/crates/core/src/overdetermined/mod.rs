//! Natural Neumann data, boundary identities along level curves, and audits of
//! candidate solutions of the overdetermined problem.

mod spline;

pub use spline::PeriodicSpline;

use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::canonical::{CanonicalError, CanonicalFamily};
use crate::equations::Equation;
use crate::field::{format_value, trace_zero_level, FieldError, LevelCurve, ScalarField};
use crate::index::{audit_candidate, AuditOptions, IndexReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverdeterminedError {
    #[error("level curve is not strictly convex: κ = {kappa:e} at ({:.4}, {:.4})", .at[0], .at[1])]
    NotConvex { kappa: f64, at: [f64; 2] },
    #[error("normal angles do not wind exactly once around the circle (total turn {turn:.6})")]
    IncompleteCoverage { turn: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

/// `g` as a function of the angle `φ` of the inner normal `ν = (cos φ, sin φ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeumannData {
    spline: PeriodicSpline,
    pub source: String,
}

impl NeumannData {
    /// Builds `g` from samples `(φᵢ, gᵢ)` given in any rotation of increasing order.
    pub fn from_samples(angles: &[f64], values: &[f64], source: impl Into<String>) -> Result<Self, OverdeterminedError> {
        let n = angles.len();
        if n < 3 || values.len() != n {
            return Err(OverdeterminedError::IncompleteCoverage { turn: 0.0 });
        }
        let mut turn = 0.0;
        for k in 0..n {
            let d = (angles[(k + 1) % n] - angles[k]).rem_euclid(TAU);
            if !(d > 0.0) || d >= std::f64::consts::PI {
                return Err(OverdeterminedError::IncompleteCoverage { turn: turn + d });
            }
            turn += d;
        }
        if (turn - TAU).abs() > 1e-9 {
            return Err(OverdeterminedError::IncompleteCoverage { turn });
        }
        let start = (0..n)
            .min_by(|&a, &b| angles[a].rem_euclid(TAU).total_cmp(&angles[b].rem_euclid(TAU)))
            .expect("non-empty");
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let base = angles[start].rem_euclid(TAU);
        let mut acc = base;
        for k in 0..n {
            let idx = (start + k) % n;
            if k > 0 {
                let prev = (start + k - 1) % n;
                acc += (angles[idx] - angles[prev]).rem_euclid(TAU);
            }
            x.push(acc);
            y.push(values[idx]);
        }
        Ok(Self {
            spline: PeriodicSpline::new(x, y),
            source: source.into(),
        })
    }

    /// `g ≡ c`.
    pub fn constant(c: f64) -> Self {
        let angles: Vec<f64> = (0..8).map(|k| TAU * k as f64 / 8.0).collect();
        Self::from_samples(&angles, &[c; 8], format!("constant {c}")).expect("uniform knots")
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.spline.eval(phi)
    }

    /// `dg/dφ`.
    pub fn derivative(&self, phi: f64) -> f64 {
        self.spline.derivative(phi)
    }

    /// `g(ν)` for a unit normal.
    pub fn at_normal(&self, nu: [f64; 2]) -> f64 {
        self.eval(nu[1].atan2(nu[0]))
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        self.spline.knots()
    }

    /// CSV with columns `angle,g,dg`, angles in `[0, 2π)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "angle,g,dg")?;
        let (x, y) = self.knots();
        let mut rows: Vec<(f64, f64, f64)> = x
            .iter()
            .zip(y)
            .map(|(a, g)| (a.rem_euclid(TAU), *g, self.derivative(*a)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (a, g, dg) in rows {
            writeln!(w, "{},{},{}", format_value(a), format_value(g), format_value(dg))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, source: impl Into<String>) -> Result<Self, OverdeterminedError> {
        let mut angles = Vec::new();
        let mut values = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| OverdeterminedError::Parse(e.to_string()))?;
            if n == 0 {
                if line.trim() != "angle,g,dg" {
                    return Err(OverdeterminedError::Parse(format!("unexpected header `{}`", line.trim())));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 3 {
                return Err(OverdeterminedError::Parse(format!("line {}: expected 3 columns", n + 1)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| OverdeterminedError::Parse(format!("line {}: `{s}`: {e}", n + 1)))
            };
            angles.push(num(cols[0])?);
            values.push(num(cols[1])?);
        }
        Self::from_samples(&angles, &values, source)
    }
}

/// Default convexity floor for a curve of the given diameter.
pub fn default_kappa_min(diameter: f64) -> f64 {
    1e-6 / diameter.max(f64::MIN_POSITIVE)
}

/// Traces `{u⁰ = 0}` and tabulates `g(ν) = ⟨ν, Du⁰⟩` along it.
pub fn extract_neumann(member: &ScalarField) -> Result<(NeumannData, LevelCurve), OverdeterminedError> {
    let curve = trace_zero_level(member)?;
    let bb = curve.bounding_box();
    let kappa_min = default_kappa_min((bb[1] - bb[0]).max(bb[3] - bb[2]));
    let g = neumann_from_curve(member, &curve, kappa_min)?;
    Ok((g, curve))
}

/// Tabulates `⟨ν, Du⟩` along a strictly convex curve.
pub fn neumann_from_curve(
    u: &ScalarField,
    curve: &LevelCurve,
    kappa_min: f64,
) -> Result<NeumannData, OverdeterminedError> {
    let verts = curve.vertices();
    let mut angles = Vec::with_capacity(verts.len());
    let mut values = Vec::with_capacity(verts.len());
    for v in verts {
        if !(v.curvature > kappa_min) {
            return Err(OverdeterminedError::NotConvex {
                kappa: v.curvature,
                at: v.pos,
            });
        }
        let j = u.jet(v.pos[0], v.pos[1])?;
        angles.push(v.normal[1].atan2(v.normal[0]));
        values.push(v.normal[0] * j.p + v.normal[1] * j.q);
    }
    let source = match &u.expr {
        Some(e) => format!("{e:?}"),
        None => format!("grid field {}x{}", u.grid.nx, u.grid.ny),
    };
    NeumannData::from_samples(&angles, &values, source)
}

/// Residuals of the boundary identities at one vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryRow {
    pub x: f64,
    pub y: f64,
    pub s: f64,
    /// `⟨w, Du⟩`.
    pub be1: f64,
    /// `D²u(w, w) + κ⟨ν, Du⟩`.
    pub be3_intrinsic: f64,
    /// `D²u(w, w) + κ g(ν)`.
    pub be3: Option<f64>,
    /// `D²u(w, ν) − κ g'(φ)`, the derivative of the Neumann condition along the curve.
    pub be5: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryTable {
    pub rows: Vec<BoundaryRow>,
    pub be1_max: f64,
    pub be3_intrinsic_max: f64,
    pub be3_max: Option<f64>,
    pub be5_max: Option<f64>,
}

/// Evaluates the boundary identities at every vertex of `curve` using jets of `u`.
pub fn boundary_identities(
    u: &ScalarField,
    curve: &LevelCurve,
    g: Option<&NeumannData>,
) -> Result<BoundaryTable, OverdeterminedError> {
    let mut rows = Vec::with_capacity(curve.points.len());
    for v in curve.vertices() {
        let j = u.jet(v.pos[0], v.pos[1])?;
        let d2 = j.hessian();
        let (w, nu, k) = (v.tangent, v.normal, v.curvature);
        let dn = nu[0] * j.p + nu[1] * j.q;
        let phi = nu[1].atan2(nu[0]);
        rows.push(BoundaryRow {
            x: v.pos[0],
            y: v.pos[1],
            s: v.s,
            be1: w[0] * j.p + w[1] * j.q,
            be3_intrinsic: d2.eval(w, w) + k * dn,
            be3: g.map(|g| d2.eval(w, w) + k * g.eval(phi)),
            be5: g.map(|g| d2.eval(w, nu) - k * g.derivative(phi)),
        });
    }
    let max = |f: &dyn Fn(&BoundaryRow) -> f64| rows.iter().map(f).fold(0.0f64, |m, v| m.max(v.abs()));
    let be1_max = max(&|r| r.be1);
    let be3_intrinsic_max = max(&|r| r.be3_intrinsic);
    let be3_max = g.map(|_| max(&|r| r.be3.unwrap_or(0.0)));
    let be5_max = g.map(|_| max(&|r| r.be5.unwrap_or(0.0)));
    Ok(BoundaryTable {
        rows,
        be1_max,
        be3_intrinsic_max,
        be3_max,
        be5_max,
    })
}

/// The eigenvalue `λ = κ/κ^ξ` claimed at a boundary vertex and how far the
/// tangent is from being an eigenline of `S` with that eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LambdaRatio {
    pub lambda: f64,
    pub kappa: f64,
    pub kappa_xi: f64,
    /// `λ D²u^ξ(w, w) − D²u(w, w)`.
    pub residual_w: f64,
    /// `λ D²u^ξ(w, ν) − D²u(w, ν)`.
    pub residual_nu: f64,
    pub deviation: f64,
}

/// Matches `u^ξ` with `ξ = (p, 0, Du(p))` at vertex `vertex` of `curve`, reads
/// the curvature of `{u^ξ = 0}` at `p`, and evaluates the eigenvector relation
/// for `Y ∈ {w, ν}`.
pub fn eigen_lambda_ratio(
    u: &ScalarField,
    fam: &CanonicalFamily,
    curve: &LevelCurve,
    vertex: usize,
) -> Result<LambdaRatio, OverdeterminedError> {
    let v = curve.points[vertex];
    let p = v.pos;
    let j = u.jet(p[0], p[1])?;
    let idx = fam.lookup([p[0], p[1], 0.0, j.p, j.q])?;
    let jx = fam
        .member_jet(&idx, p)
        .ok_or(CanonicalError::OutOfRange { alpha: idx.alpha })?;
    // {u^ξ = 0} bounds the region where u^ξ has the sign opposite to its Hessian
    let sign = -fam.signature()?;
    let g = jx.gradient_norm();
    if g == 0.0 {
        return Err(FieldError::DegenerateGradient(p).into());
    }
    let nu_xi = [sign * jx.p / g, sign * jx.q / g];
    let w_xi = [nu_xi[1], -nu_xi[0]];
    let kappa_xi = -jx.hessian().eval(w_xi, w_xi) / (sign * g);
    let lambda = v.curvature / kappa_xi;
    let (w, nu) = (v.tangent, v.normal);
    let residual_w = lambda * jx.hessian().eval(w, w) - j.hessian().eval(w, w);
    let residual_nu = lambda * jx.hessian().eval(w, nu) - j.hessian().eval(w, nu);
    Ok(LambdaRatio {
        lambda,
        kappa: v.curvature,
        kappa_xi,
        residual_w,
        residual_nu,
        deviation: residual_w.abs().max(residual_nu.abs()),
    })
}

/// Pass thresholds for [`check_solution`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerances {
    pub pde: f64,
    pub dirichlet: f64,
    pub neumann: f64,
    pub canonicality: f64,
}

impl Tolerances {
    pub fn uniform(t: f64) -> Self {
        Self {
            pde: t,
            dirichlet: t,
            neumann: t,
            canonicality: t,
        }
    }

    /// `1e−6` for closed forms, `10·h²` for grid data.
    pub fn for_field(u: &ScalarField) -> Self {
        if u.expr.is_some() {
            Self::uniform(1e-6)
        } else {
            Self::uniform(10.0 * u.grid.h * u.grid.h)
        }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self {
            pde: self.pde * k,
            dirichlet: self.dirichlet * k,
            neumann: self.neumann * k,
            canonicality: self.canonicality * k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Canonical,
    CounterexampleCandidate,
    NotASolution,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionReport {
    pub pde_residual_max: f64,
    pub dirichlet_max: f64,
    pub neumann_max: f64,
    pub canonicality_score: f64,
    pub verdict: Verdict,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_audit: Option<IndexReport>,
}

impl SolutionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Canonical
    }
}

/// Inputs for [`check_solution`].
pub struct SolutionCheck<'a> {
    pub u: &'a ScalarField,
    pub curve: &'a LevelCurve,
    pub equation: &'a Equation,
    pub g: &'a NeumannData,
    pub family: &'a CanonicalFamily,
    pub tolerances: Tolerances,
    /// Number of jet matches `u^ξ` used for the canonicality score.
    pub matches: usize,
    pub audit: Option<AuditOptions>,
}

impl<'a> SolutionCheck<'a> {
    pub fn new(
        u: &'a ScalarField,
        curve: &'a LevelCurve,
        equation: &'a Equation,
        g: &'a NeumannData,
        family: &'a CanonicalFamily,
    ) -> Self {
        Self {
            u,
            curve,
            equation,
            g,
            family,
            tolerances: Tolerances::for_field(u),
            matches: 8,
            audit: Some(AuditOptions::default()),
        }
    }
}

/// Scores a candidate pair `(u, Ω)` against the overdetermined problem. Candidates
/// that solve it but differ from every family member get an index audit.
pub fn check_solution(c: &SolutionCheck<'_>) -> Result<SolutionReport, OverdeterminedError> {
    let u = c.u;
    let g = &u.grid;

    // interior nodes of Ω with jets
    let mut interior = Vec::new();
    for k in 0..g.len() {
        let (i, j) = g.coords(k);
        let x = g.point(i, j);
        if u.is_valid(i, j) && c.curve.contains(x) {
            interior.push(x);
        }
    }
    let mut pde_residual_max: f64 = 0.0;
    for x in &interior {
        let Ok(jet) = u.jet(x[0], x[1]) else {
            continue;
        };
        let r = match c.equation.residual(&jet) {
            Ok(r) => r.abs(),
            Err(_) => f64::INFINITY,
        };
        pde_residual_max = pde_residual_max.max(r);
    }

    let mut dirichlet_max: f64 = 0.0;
    let mut neumann_max: f64 = 0.0;
    for v in c.curve.vertices() {
        let j = u.jet(v.pos[0], v.pos[1])?;
        dirichlet_max = dirichlet_max.max(j.z.abs());
        let dn = v.normal[0] * j.p + v.normal[1] * j.q;
        neumann_max = neumann_max.max((dn - c.g.at_normal(v.normal)).abs());
    }

    // ξ-matches spread over the interior
    let mut canonicality_score: f64 = 0.0;
    if !interior.is_empty() {
        let stride = (interior.len() / c.matches.max(1)).max(1);
        let probe_stride = (interior.len() / 400).max(1);
        for x in interior.iter().skip(stride / 2).step_by(stride).take(c.matches.max(1)) {
            let jet = u.jet(x[0], x[1])?;
            let idx = c.family.lookup([x[0], x[1], jet.z, jet.p, jet.q])?;
            for q in interior.iter().step_by(probe_stride) {
                let Ok(uq) = u.jet(q[0], q[1]) else { continue };
                let d = match c.family.member_jet(&idx, *q) {
                    Some(m) => (uq.z - m.z).abs(),
                    None => f64::INFINITY,
                };
                canonicality_score = canonicality_score.max(d);
            }
        }
    } else {
        canonicality_score = f64::INFINITY;
    }

    let t = c.tolerances;
    let verdict = if !(pde_residual_max <= t.pde && dirichlet_max <= t.dirichlet && neumann_max <= t.neumann) {
        Verdict::NotASolution
    } else if canonicality_score <= t.canonicality {
        Verdict::Canonical
    } else {
        Verdict::CounterexampleCandidate
    };
    let index_audit = match (&c.audit, verdict) {
        (Some(opts), Verdict::CounterexampleCandidate) => audit_candidate(u, c.family, c.curve, opts).ok(),
        _ => None,
    };
    Ok(SolutionReport {
        pde_residual_max,
        dirichlet_max,
        neumann_max,
        canonicality_score,
        verdict,
        tolerances: t,
        index_audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Expr, Grid};

    fn closed(e: Expr, r: [f64; 4], h: f64) -> ScalarField {
        ScalarField::from_expr(e, Grid::covering(r[0], r[1], r[2], r[3], h, 4), None)
    }

    #[test]
    fn serrin_gives_constant_g() {
        let u = closed(Expr::serrin(0.25), [-1.2, 1.2, -1.2, 1.2], 1.0 / 32.0);
        let (g, _) = extract_neumann(&u).unwrap();
        for k in 0..100 {
            assert!((g.eval(0.0628 * k as f64) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn ellipse_neumann_values() {
        let u = closed(Expr::aniso_serrin(1.0), [-2.2, 2.2, -4.2, 4.2], 1.0 / 16.0);
        let (g, curve) = extract_neumann(&u).unwrap();
        assert!((g.at_normal([-1.0, 0.0]) - 1.0).abs() < 1e-6);
        assert!((g.at_normal([0.0, -1.0]) - 0.5).abs() < 1e-6);
        let t = boundary_identities(&u, &curve, Some(&g)).unwrap();
        assert!(t.be1_max < 1e-8 && t.be3_intrinsic_max < 1e-8);
        assert!(t.be3_max.unwrap() < 1e-8, "{:?}", t.be3_max);
        assert!(t.be5_max.unwrap() < 1e-6, "{:?}", t.be5_max);
    }

    #[test]
    fn hyperbola_has_no_closed_boundary() {
        let u = closed(Expr::quadratic(1.0, 2.0, 0.0, -2.0), [-2.0, 2.0, -2.0, 2.0], 0.1);
        assert!(matches!(
            extract_neumann(&u),
            Err(OverdeterminedError::Field(FieldError::NotClosed))
        ));
    }

    #[test]
    fn lambda_ratio_is_one_on_own_boundary() {
        let u = closed(Expr::aniso_serrin(1.0), [-2.2, 2.2, -4.2, 4.2], 1.0 / 16.0);
        let (_, curve) = extract_neumann(&u).unwrap();
        let fam = CanonicalFamily::aniso_serrin();
        for k in [0, 7, 40] {
            let r = eigen_lambda_ratio(&u, &fam, &curve, k).unwrap();
            assert!((r.lambda - 1.0).abs() < 1e-9 && r.deviation < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn constant_neumann_round_trip() {
        let g = NeumannData::constant(0.5);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = NeumannData::read_csv(&buf[..], "file").unwrap();
        assert!((back.eval(1.234) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coverage_must_wind_once() {
        let err = NeumannData::from_samples(&[0.0, 0.5, 1.0], &[1.0; 3], "x");
        assert!(matches!(err, Err(OverdeterminedError::IncompleteCoverage { .. })));
    }
}
