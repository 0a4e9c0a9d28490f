//! Canonical families of solutions, jet matching, and the comparison metric `Λ`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::equations::{Equation, EquationError};
use crate::field::{Expr, FieldError, Grid, Jet2, ScalarField, SymForm2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanonicalError {
    #[error("jet matching for α = {alpha:?} left the family domain")]
    OutOfRange { alpha: [f64; 5] },
    #[error("jet matching for α = {alpha:?} did not converge (residual {residual:e})")]
    NoConvergence { alpha: [f64; 5], residual: f64 },
    #[error("Λ changes definiteness: {0}")]
    MixedSignature(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Equation(#[from] EquationError),
}

/// A family `u_t` given by closed forms for `u_t` and `∂_t(u_t, Du_t)`.
pub trait ParametricFamily: Send + Sync + fmt::Debug {
    fn jet(&self, t: f64, x: [f64; 2]) -> Option<Jet2>;
    /// `∂/∂t` of `(u_t, ∂_x u_t, ∂_y u_t)` at `x`.
    fn dt(&self, t: f64, x: [f64; 2]) -> Option<[f64; 3]>;
    fn reference_t(&self) -> f64 {
        0.0
    }
}

/// `u_t(X) = base(X) + t + t·⟨tilt, X⟩`. Every member solves the same
/// gradient-independent equation as `base`, but the matching system generally
/// has two solutions in `t` once `tilt ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedFamily {
    pub base: Expr,
    pub tilt: [f64; 2],
}

impl ParametricFamily for TiltedFamily {
    fn jet(&self, t: f64, x: [f64; 2]) -> Option<Jet2> {
        let j = self.base.jet(x[0], x[1])?;
        Some(Jet2::new(
            j.z + t + t * (self.tilt[0] * x[0] + self.tilt[1] * x[1]),
            j.p + t * self.tilt[0],
            j.q + t * self.tilt[1],
            j.r,
            j.s,
            j.t,
        ))
    }

    fn dt(&self, _t: f64, x: [f64; 2]) -> Option<[f64; 3]> {
        Some([1.0 + self.tilt[0] * x[0] + self.tilt[1] * x[1], self.tilt[0], self.tilt[1]])
    }
}

#[derive(Clone, Debug)]
pub enum FamilyKind {
    /// `u_t = u⁰ + t`.
    Translation,
    Parametric(Arc<dyn ParametricFamily>),
}

/// Matching parameters for a point of `ℝ⁵`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyIndex {
    /// `(x, y, z, p, q)`.
    pub alpha: [f64; 5],
    pub t: f64,
    /// `(a, b)`: the matched member is `X ↦ u_t(X + (a, b))`.
    pub shift: [f64; 2],
    /// The point `X*` of `u_t` whose jet was matched.
    pub matched: [f64; 2],
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CanonicalFamily {
    pub name: String,
    pub base: Expr,
    pub kind: FamilyKind,
    pub equation: Equation,
    /// Newton start for `X*` when no hint is given.
    pub center: [f64; 2],
    pub newton: NewtonOptions,
}

impl CanonicalFamily {
    pub fn translation(name: impl Into<String>, base: Expr, equation: Equation) -> Result<Self, CanonicalError> {
        if equation.depends_on_z() {
            return Err(CanonicalError::InvalidFamily(format!(
                "{} depends on z; translation families need F(Du, D²u)",
                equation.id()
            )));
        }
        Ok(Self {
            name: name.into(),
            base,
            kind: FamilyKind::Translation,
            equation,
            center: [0.0, 0.0],
            newton: NewtonOptions::default(),
        })
    }

    pub fn parametric(
        name: impl Into<String>,
        family: Arc<dyn ParametricFamily>,
        equation: Equation,
    ) -> Result<Self, CanonicalError> {
        let t0 = family.reference_t();
        let base_jet = family
            .jet(t0, [0.0, 0.0])
            .ok_or_else(|| CanonicalError::InvalidFamily("member undefined at the origin".into()))?;
        // the base expression is only used for display and sign detection
        let base = Expr::Quadratic {
            c: base_jet.z,
            px: base_jet.p,
            py: base_jet.q,
            rxx: base_jet.r,
            rxy: base_jet.s,
            ryy: base_jet.t,
        };
        Ok(Self {
            name: name.into(),
            base,
            kind: FamilyKind::Parametric(family),
            equation,
            center: [0.0, 0.0],
            newton: NewtonOptions::default(),
        })
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    /// `{x² + y² + t}` for `det D²u = 4`.
    pub fn paraboloid() -> Self {
        Self::translation("paraboloid", Expr::paraboloid(0.0), Equation::MongeAmpere { rhs: 4.0 })
            .expect("z-independent")
    }

    /// `{a − (x² + y²)/4}` for `Δu + 1 = 0`.
    pub fn serrin() -> Self {
        Self::translation("serrin", Expr::serrin(0.0), Equation::SerrinLaplace { constant: 1.0 })
            .expect("z-independent")
    }

    /// `{a − x²/4 − y²/16}` for `u_xx + 4u_yy + 1 = 0`.
    pub fn aniso_serrin() -> Self {
        Self::translation(
            "aniso-serrin",
            Expr::aniso_serrin(0.0),
            Equation::AnisoLinear {
                a: 1.0,
                b: 4.0,
                constant: 1.0,
            },
        )
        .expect("z-independent")
    }

    /// Jet of `u_t` at `x`.
    pub fn member_jet_t(&self, t: f64, x: [f64; 2]) -> Option<Jet2> {
        match &self.kind {
            FamilyKind::Translation => self.base.jet(x[0], x[1]).map(|mut j| {
                j.z += t;
                j
            }),
            FamilyKind::Parametric(f) => f.jet(t, x),
        }
    }

    /// Jet of the matched member `u^α` at `x`.
    pub fn member_jet(&self, idx: &FamilyIndex, x: [f64; 2]) -> Option<Jet2> {
        self.member_jet_t(idx.t, [x[0] + idx.shift[0], x[1] + idx.shift[1]])
    }

    /// Finds the unique member `u^α` with `u^α(x, y) = z` and `Du^α(x, y) = (p, q)`.
    pub fn lookup(&self, alpha: [f64; 5]) -> Result<FamilyIndex, CanonicalError> {
        self.lookup_from(alpha, None)
    }

    /// As [`lookup`](Self::lookup), starting Newton at `start = (X*, t)` when given.
    pub fn lookup_from(&self, alpha: [f64; 5], start: Option<([f64; 2], f64)>) -> Result<FamilyIndex, CanonicalError> {
        let (x0, t0) = start.unwrap_or((
            self.center,
            match &self.kind {
                FamilyKind::Translation => 0.0,
                FamilyKind::Parametric(f) => f.reference_t(),
            },
        ));
        let (matched, t, iterations, residual) = match &self.kind {
            FamilyKind::Translation => {
                let (m, it, res) = self.newton_gradient(alpha, x0)?;
                let u0 = self.base.value(m[0], m[1]).ok_or(CanonicalError::OutOfRange { alpha })?;
                (m, alpha[2] - u0, it, res)
            }
            FamilyKind::Parametric(f) => self.newton_parametric(f.as_ref(), alpha, x0, t0)?,
        };
        Ok(FamilyIndex {
            alpha,
            t,
            shift: [matched[0] - alpha[0], matched[1] - alpha[1]],
            matched,
            iterations,
            residual,
        })
    }

    fn newton_gradient(&self, alpha: [f64; 5], start: [f64; 2]) -> Result<([f64; 2], usize, f64), CanonicalError> {
        let target = [alpha[3], alpha[4]];
        let scale = 1.0f64.max(target[0].abs()).max(target[1].abs());
        let res_at = |x: [f64; 2]| -> Option<(Jet2, [f64; 2])> {
            let j = self.base.jet(x[0], x[1])?;
            j.is_finite().then_some((j, [j.p - target[0], j.q - target[1]]))
        };
        let mut x = start;
        let (mut jet, mut res) = res_at(x).ok_or(CanonicalError::OutOfRange { alpha })?;
        for it in 0..=self.newton.max_iter {
            let rn = res[0].hypot(res[1]);
            if rn <= self.newton.tol * scale {
                return Ok((x, it, rn));
            }
            if it == self.newton.max_iter {
                return Err(CanonicalError::NoConvergence { alpha, residual: rn });
            }
            let h = jet.hessian();
            let det = h.det();
            if det == 0.0 || !det.is_finite() {
                return Err(CanonicalError::NoConvergence { alpha, residual: rn });
            }
            let dx = -(h.a22 * res[0] - h.a12 * res[1]) / det;
            let dy = -(-h.a12 * res[0] + h.a11 * res[1]) / det;
            let mut lam = 1.0;
            let mut left_domain = true;
            loop {
                let trial = [x[0] + lam * dx, x[1] + lam * dy];
                if let Some((j, r)) = res_at(trial) {
                    left_domain = false;
                    if r[0].hypot(r[1]) < (1.0 - 1e-4 * lam) * rn || lam < 1e-3 {
                        x = trial;
                        jet = j;
                        res = r;
                        break;
                    }
                }
                lam *= 0.5;
                if lam < 1e-12 {
                    return Err(if left_domain {
                        CanonicalError::OutOfRange { alpha }
                    } else {
                        CanonicalError::NoConvergence { alpha, residual: rn }
                    });
                }
            }
        }
        unreachable!()
    }

    fn newton_parametric(
        &self,
        fam: &dyn ParametricFamily,
        alpha: [f64; 5],
        x0: [f64; 2],
        t0: f64,
    ) -> Result<([f64; 2], f64, usize, f64), CanonicalError> {
        let scale = 1.0f64.max(alpha[2].abs()).max(alpha[3].abs()).max(alpha[4].abs());
        let eval = |v: Vector3<f64>| -> Option<(Jet2, [f64; 3], Vector3<f64>)> {
            let x = [v[0], v[1]];
            let j = fam.jet(v[2], x)?;
            let d = fam.dt(v[2], x)?;
            j.is_finite()
                .then_some((j, d, Vector3::new(j.z - alpha[2], j.p - alpha[3], j.q - alpha[4])))
        };
        let mut v = Vector3::new(x0[0], x0[1], t0);
        let (mut j, mut d, mut res) = eval(v).ok_or(CanonicalError::OutOfRange { alpha })?;
        for it in 0..=self.newton.max_iter {
            let rn = res.norm();
            if rn <= self.newton.tol * scale {
                return Ok(([v[0], v[1]], v[2], it, rn));
            }
            if it == self.newton.max_iter {
                return Err(CanonicalError::NoConvergence { alpha, residual: rn });
            }
            let jac = Matrix3::new(j.p, j.q, d[0], j.r, j.s, d[1], j.s, j.t, d[2]);
            let step = jac
                .lu()
                .solve(&(-res))
                .ok_or(CanonicalError::NoConvergence { alpha, residual: rn })?;
            let mut lam = 1.0;
            loop {
                let trial = v + step * lam;
                if let Some((jj, dd, rr)) = eval(trial) {
                    if rr.norm() < (1.0 - 1e-4 * lam) * rn || lam < 1e-3 {
                        v = trial;
                        j = jj;
                        d = dd;
                        res = rr;
                        break;
                    }
                }
                lam *= 0.5;
                if lam < 1e-12 {
                    return Err(CanonicalError::OutOfRange { alpha });
                }
            }
        }
        unreachable!()
    }

    /// `Γ(α)`: the Hessian of `u^α` at `(x, y)`.
    pub fn gamma(&self, alpha: [f64; 5]) -> Result<SymForm2, CanonicalError> {
        let idx = self.lookup(alpha)?;
        self.gamma_of(&idx)
    }

    pub fn gamma_of(&self, idx: &FamilyIndex) -> Result<SymForm2, CanonicalError> {
        self.member_jet(idx, [idx.alpha[0], idx.alpha[1]])
            .map(|j| j.hessian())
            .ok_or(CanonicalError::OutOfRange { alpha: idx.alpha })
    }

    /// `Λ` at a point given the jet of `u` there.
    pub fn lambda_at(&self, x: [f64; 2], jet: &Jet2) -> Result<SymForm2, CanonicalError> {
        self.gamma([x[0], x[1], jet.z, jet.p, jet.q])
    }

    /// Sign of the family's Hessians (`+1` convex, `−1` concave), read at the center.
    pub fn signature(&self) -> Result<f64, CanonicalError> {
        let t0 = match &self.kind {
            FamilyKind::Translation => 0.0,
            FamilyKind::Parametric(f) => f.reference_t(),
        };
        let j = self
            .member_jet_t(t0, self.center)
            .ok_or_else(|| CanonicalError::InvalidFamily("base undefined at its center".into()))?;
        j.hessian()
            .definite_sign()
            .ok_or_else(|| CanonicalError::InvalidFamily("base Hessian is not definite at the center".into()))
    }
}

/// `Λ` sampled on the nodes of a field.
#[derive(Clone, Debug)]
pub struct LambdaField {
    pub grid: Grid,
    pub values: Vec<Option<SymForm2>>,
    /// `+1` or `−1`: the common definiteness sign.
    pub sign: f64,
}

impl LambdaField {
    pub fn at(&self, i: usize, j: usize) -> Option<SymForm2> {
        self.values[self.grid.index(i, j)]
    }
}

/// `Λ(x) = Γ(x, u(x), Du(x))` at every node where `mask` holds and the jet of `u`
/// is available.
pub fn lambda_field(
    fam: &CanonicalFamily,
    u: &ScalarField,
    mask: &dyn Fn([f64; 2]) -> bool,
) -> Result<LambdaField, CanonicalError> {
    let g = u.grid;
    let mut values = vec![None; g.len()];
    let mut sign: Option<(f64, [f64; 2])> = None;
    for (k, slot) in values.iter_mut().enumerate() {
        let (i, j) = g.coords(k);
        let x = g.point(i, j);
        if !mask(x) || !u.is_valid(i, j) {
            continue;
        }
        let Ok(jet) = u.jet(x[0], x[1]) else {
            continue;
        };
        let lam = fam.lambda_at(x, &jet)?;
        let s = lam.definite_sign().ok_or_else(|| {
            CanonicalError::MixedSignature(format!("Λ is indefinite at ({:.4}, {:.4})", x[0], x[1]))
        })?;
        match sign {
            None => sign = Some((s, x)),
            Some((s0, x0)) if s0 != s => {
                return Err(CanonicalError::MixedSignature(format!(
                    "sign {s0} at ({:.4}, {:.4}) but {s} at ({:.4}, {:.4})",
                    x0[0], x0[1], x[0], x[1]
                )))
            }
            _ => {}
        }
        *slot = Some(lam);
    }
    let sign = sign
        .map(|s| s.0)
        .ok_or_else(|| CanonicalError::InvalidFamily("no node of the region has a jet".into()))?;
    Ok(LambdaField { grid: g, values, sign })
}

/// Sampling budget for [`verify_property_star`].
#[derive(Clone, Copy, Debug)]
pub struct PropertyStarOptions {
    pub samples: usize,
    pub injectivity_pairs: usize,
    pub uniqueness_trials: usize,
    pub starts_per_trial: usize,
    /// `[xmin, xmax, ymin, ymax]` for sample points.
    pub sample_box: [f64; 4],
    pub t_range: (f64, f64),
    pub residual_tol: f64,
    pub det_floor: f64,
    pub seed: u64,
}

impl Default for PropertyStarOptions {
    fn default() -> Self {
        Self {
            samples: 400,
            injectivity_pairs: 200,
            uniqueness_trials: 50,
            starts_per_trial: 4,
            sample_box: [-1.0, 1.0, -1.0, 1.0],
            t_range: (-1.0, 1.0),
            residual_tol: 1e-9,
            det_floor: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessChecks {
    pub performed: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyStarReport {
    pub family: String,
    pub equation: String,
    pub det_range: [f64; 2],
    pub residual_max: f64,
    pub injectivity_failures: usize,
    pub uniqueness_checks: UniquenessChecks,
    pub findings: Vec<String>,
    pub pass: bool,
}

/// Samples the defining properties of a canonical family: members solve the
/// equation, `Du_t` is orientation preserving and injective, and jet matching
/// has a single solution.
pub fn verify_property_star(fam: &CanonicalFamily, opts: &PropertyStarOptions) -> PropertyStarReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let [x0, x1, y0, y1] = opts.sample_box;
    let (t0, t1) = opts.t_range;
    let mut findings = Vec::new();
    let mut det_range = [f64::INFINITY, f64::NEG_INFINITY];
    let mut residual_max: f64 = 0.0;
    let mut used = 0usize;

    for _ in 0..opts.samples {
        let x = [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1)];
        let t = rng.gen_range(t0..=t1);
        let Some(j) = fam.member_jet_t(t, x) else {
            continue;
        };
        used += 1;
        let det = j.hessian().det();
        det_range[0] = det_range[0].min(det);
        det_range[1] = det_range[1].max(det);
        match fam.equation.residual(&j) {
            Ok(r) => residual_max = residual_max.max(r.abs()),
            Err(e) => {
                if findings.len() < 8 {
                    findings.push(format!("residual undefined at ({:.3}, {:.3}), t = {t:.3}: {e}", x[0], x[1]));
                }
                residual_max = f64::INFINITY;
            }
        }
    }
    if used == 0 {
        findings.push("no sample point lies in the family domain".into());
        det_range = [f64::NAN, f64::NAN];
    } else if det_range[0] <= opts.det_floor {
        findings.push(format!(
            "det D²u_t reaches {:.6e}: Du_t is not an orientation-preserving local diffeomorphism",
            det_range[0]
        ));
    }
    if residual_max > opts.residual_tol {
        findings.push(format!("members do not solve {}: residual {residual_max:.3e}", fam.equation.id()));
    }

    // injectivity: re-solve Du_t(Y) = Du_t(X) from a random start
    let mut injectivity_failures = 0;
    for _ in 0..opts.injectivity_pairs {
        let x = [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1)];
        let start = [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1)];
        let t = rng.gen_range(t0..=t1);
        let Some(j) = fam.member_jet_t(t, x) else {
            continue;
        };
        if let Some(y) = solve_gradient(fam, t, [j.p, j.q], start) {
            if (y[0] - x[0]).hypot(y[1] - x[1]) > 1e-6 * (1.0 + x[0].hypot(x[1])) {
                injectivity_failures += 1;
                if findings.len() < 16 {
                    findings.push(format!(
                        "Du_t takes the same value at ({:.4}, {:.4}) and ({:.4}, {:.4})",
                        x[0], x[1], y[0], y[1]
                    ));
                }
            }
        }
    }

    // uniqueness of the matching solution from several starts
    let mut performed = 0;
    let mut failures = 0;
    for _ in 0..opts.uniqueness_trials {
        let xs = [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1)];
        let t = rng.gen_range(t0..=t1);
        let Some(j) = fam.member_jet_t(t, xs) else {
            continue;
        };
        let alpha = [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1), j.z, j.p, j.q];
        let mut found: Vec<(f64, [f64; 2])> = Vec::new();
        for _ in 0..opts.starts_per_trial {
            let start = (
                [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1)],
                rng.gen_range(t0..=t1),
            );
            if let Ok(idx) = fam.lookup_from(alpha, Some(start)) {
                found.push((idx.t, idx.matched));
            }
        }
        if found.is_empty() {
            continue;
        }
        performed += 1;
        let (tr, mr) = found[0];
        if found
            .iter()
            .any(|(t, m)| (t - tr).abs() > 1e-6 * (1.0 + tr.abs()) || (m[0] - mr[0]).hypot(m[1] - mr[1]) > 1e-6)
        {
            failures += 1;
            if findings.len() < 24 {
                let ts: Vec<String> = found.iter().map(|(t, _)| format!("{t:.6}")).collect();
                findings.push(format!("jet matching has several solutions: t ∈ {{{}}}", ts.join(", ")));
            }
        }
    }

    let pass = used > 0
        && det_range[0] > opts.det_floor
        && residual_max <= opts.residual_tol
        && injectivity_failures == 0
        && failures == 0;
    PropertyStarReport {
        family: fam.name.clone(),
        equation: fam.equation.id().to_string(),
        det_range,
        residual_max,
        injectivity_failures,
        uniqueness_checks: UniquenessChecks { performed, failures },
        findings,
        pass,
    }
}

fn solve_gradient(fam: &CanonicalFamily, t: f64, target: [f64; 2], start: [f64; 2]) -> Option<[f64; 2]> {
    let mut x = start;
    let scale = 1.0f64.max(target[0].abs()).max(target[1].abs());
    for _ in 0..60 {
        let j = fam.member_jet_t(t, x)?;
        let r = [j.p - target[0], j.q - target[1]];
        let rn = r[0].hypot(r[1]);
        if rn <= 1e-12 * scale {
            return Some(x);
        }
        let h = j.hessian();
        let det = h.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = -(h.a22 * r[0] - h.a12 * r[1]) / det;
        let dy = -(-h.a12 * r[0] + h.a11 * r[1]) / det;
        let mut lam = 1.0;
        loop {
            let trial = [x[0] + lam * dx, x[1] + lam * dy];
            if let Some(jt) = fam.member_jet_t(t, trial) {
                if (jt.p - target[0]).hypot(jt.q - target[1]) < rn || lam < 1e-3 {
                    x = trial;
                    break;
                }
            }
            lam *= 0.5;
            if lam < 1e-10 {
                return None;
            }
        }
    }
    None
}
