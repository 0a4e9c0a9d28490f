//! Newton finite-difference solver for `F[u] = 0` with Dirichlet data on curved
//! domains, used to manufacture grid solutions.
//!
//! Second differences along the axes and both diagonals use Shortley–Weller
//! weights where a stencil arm leaves the domain; the arm is cut at the boundary
//! and the boundary value is used there.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::equations::{Equation, EquationError, Partials};
use crate::field::{Expr, Grid, Jet2, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iterate left the admissible region near ({:.4}, {:.4}) despite damping", .at[0], .at[1])]
    InadmissibleIterate { at: [f64; 2] },
    #[error("bad domain: {0}")]
    Domain(String),
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error(transparent)]
    Equation(#[from] EquationError),
}

type Implicit = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// A domain `{φ < 0}`.
#[derive(Clone)]
pub enum DomainSpec {
    Ellipse { center: [f64; 2], a: f64, b: f64 },
    Implicit { name: String, phi: Implicit, bbox: [f64; 4] },
}

impl fmt::Debug for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Ellipse { center, a, b } => write!(f, "ellipse({center:?}, {a}, {b})"),
            DomainSpec::Implicit { name, bbox, .. } => write!(f, "implicit({name}, {bbox:?})"),
        }
    }
}

impl DomainSpec {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        DomainSpec::Ellipse { center, a: radius, b: radius }
    }

    pub fn implicit(
        name: impl Into<String>,
        bbox: [f64; 4],
        phi: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        DomainSpec::Implicit {
            name: name.into(),
            phi: Arc::new(phi),
            bbox,
        }
    }

    pub fn phi(&self, x: [f64; 2]) -> f64 {
        match self {
            DomainSpec::Ellipse { center, a, b } => {
                let (u, v) = ((x[0] - center[0]) / a, (x[1] - center[1]) / b);
                u * u + v * v - 1.0
            }
            DomainSpec::Implicit { phi, .. } => phi(x),
        }
    }

    /// `[xmin, xmax, ymin, ymax]`.
    pub fn bbox(&self) -> [f64; 4] {
        match self {
            DomainSpec::Ellipse { center, a, b } => [center[0] - a, center[0] + a, center[1] - b, center[1] + b],
            DomainSpec::Implicit { bbox, .. } => *bbox,
        }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.phi(x) < 0.0
    }

    /// Fraction `θ ∈ (0, 1]` along `a → b` where `φ` changes sign; `a` inside, `b` outside.
    fn cut(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let (mut lo, mut hi) = (0.0, 1.0);
        let (mut flo, mut fhi) = (self.phi(a), self.phi(b));
        // regula falsi with bisection fallback (Illinois variant)
        let mut side = 0;
        for _ in 0..100 {
            if hi - lo < 1e-15 {
                break;
            }
            let mut t = lo - flo * (hi - lo) / (fhi - flo);
            if !(t > lo && t < hi) {
                t = 0.5 * (lo + hi);
            }
            let ft = self.phi(at(t));
            if ft == 0.0 {
                return t.max(1e-12);
            }
            if ft < 0.0 {
                lo = t;
                flo = ft;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = t;
                fhi = ft;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        (0.5 * (lo + hi)).max(1e-12)
    }
}

type PointFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Dirichlet data.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    /// Trace of a closed form.
    Trace(Expr),
    /// Trace of an arbitrary function.
    Function { name: String, f: PointFn },
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant(c) => write!(fm, "constant({c})"),
            BoundaryData::Trace(e) => write!(fm, "trace({e:?})"),
            BoundaryData::Function { name, .. } => write!(fm, "function({name})"),
        }
    }
}

impl BoundaryData {
    pub fn function(name: impl Into<String>, f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData::Function {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn at(&self, x: [f64; 2]) -> Result<f64, SolverError> {
        match self {
            BoundaryData::Constant(c) => Ok(*c),
            BoundaryData::Trace(e) => e
                .value(x[0], x[1])
                .ok_or_else(|| SolverError::Domain(format!("boundary data undefined at ({}, {})", x[0], x[1]))),
            BoundaryData::Function { f, .. } => Ok(f(x)),
        }
    }
}

/// Homotopy from an easier operator: stage `k` solves `τF + (1 − τ)F₀`, `τ = k/steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct Continuation {
    pub steps: usize,
    pub start: Equation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverControls {
    /// Stop when the max-norm residual is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest damping factor tried.
    pub min_damping: f64,
    /// Eigenvalue floor for the convex projection used in linearizations.
    pub projection_floor: f64,
    pub continuation: Option<Continuation>,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            min_damping: 1.0 / 1024.0,
            projection_floor: 1e-3,
            continuation: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DirichletProblem {
    pub equation: Equation,
    pub domain: DomainSpec,
    pub boundary: BoundaryData,
    pub h: f64,
    pub controls: SolverControls,
}

impl DirichletProblem {
    pub fn new(equation: Equation, domain: DomainSpec, boundary: BoundaryData, h: f64) -> Self {
        Self {
            equation,
            domain,
            boundary,
            h,
            controls: SolverControls::default(),
        }
    }
}

/// Starting values for the interior unknowns.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialGuess {
    Zero,
    Expr(Expr),
    /// `base + amplitude·noise` where the noise is a random smooth trigonometric sum
    /// bounded by 1, faded out towards the boundary.
    Noisy { base: Expr, amplitude: f64, seed: u64 },
}

/// One Newton stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageLog {
    pub tau: f64,
    pub residuals: Vec<f64>,
    pub damping: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveLog {
    pub stages: Vec<StageLog>,
    pub unknowns: usize,
    pub final_residual: f64,
}

impl SolveLog {
    /// Residuals of the last stage, the convergence log proper.
    pub fn residuals(&self) -> &[f64] {
        self.stages.last().map(|s| s.residuals.as_slice()).unwrap_or(&[])
    }

    /// Largest `r_{k+1}/r_k²` over the last `n` steps of the final stage that end
    /// above `floor` (steps landing at the round-off floor say nothing about the rate).
    pub fn quadratic_constant(&self, n: usize, floor: f64) -> Option<f64> {
        let r = self.residuals();
        let pairs: Vec<f64> = r
            .windows(2)
            .filter(|w| w[1] > floor)
            .map(|w| w[1] / (w[0] * w[0]))
            .collect();
        (pairs.len() >= n).then(|| pairs[pairs.len() - n..].iter().cloned().fold(0.0, f64::max))
    }
}

/// An affine function of the unknowns: `Σ w·u[j] + c`.
#[derive(Clone, Debug, Default, PartialEq)]
struct Affine {
    terms: Vec<(usize, f64)>,
    c: f64,
}

impl Affine {
    fn eval(&self, u: &[f64]) -> f64 {
        self.c + self.terms.iter().map(|(j, w)| w * u[*j]).sum::<f64>()
    }

    fn axpy(&mut self, k: f64, o: &Affine) {
        self.c += k * o.c;
        self.terms.extend(o.terms.iter().map(|(j, w)| (*j, k * w)));
    }
}

/// Value at a stencil arm end: an unknown or boundary data.
#[derive(Clone, Copy, Debug)]
enum Arm {
    Node(usize),
    Boundary(f64),
}

/// Discrete jets as affine maps of the unknowns, with their equation.
pub struct DiscreteOperator {
    pub grid: Grid,
    /// Grid index of each unknown.
    pub nodes: Vec<usize>,
    jets: Vec<[Affine; 6]>,
    equation: Equation,
    blend: Option<(f64, Equation)>,
    floor: f64,
}

impl DiscreteOperator {
    pub fn new(prob: &DirichletProblem) -> Result<Self, SolverError> {
        let h = prob.h;
        if !(h > 0.0) {
            return Err(SolverError::Domain("grid spacing must be positive".into()));
        }
        let bb = prob.domain.bbox();
        let grid = Grid::covering(bb[0], bb[1], bb[2], bb[3], h, 2);
        let mut unknown = vec![usize::MAX; grid.len()];
        let mut nodes = Vec::new();
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            if prob.domain.contains(grid.point(i, j)) {
                unknown[k] = nodes.len();
                nodes.push(k);
            }
        }
        if nodes.is_empty() {
            return Err(SolverError::Domain("no grid nodes inside the domain".into()));
        }
        check_connected(&grid, &unknown, nodes[0], nodes.len())?;

        let mut jets = Vec::with_capacity(nodes.len());
        for (n, &k) in nodes.iter().enumerate() {
            let (i, j) = grid.coords(k);
            let x = grid.point(i, j);
            // arm in direction (di, dj) and its length as a fraction of the full step
            let arm = |di: i64, dj: i64| -> Result<(Arm, f64), SolverError> {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                let y = [x[0] + di as f64 * h, x[1] + dj as f64 * h];
                let inside = ni >= 0 && nj >= 0 && (ni as usize) < grid.nx && (nj as usize) < grid.ny && {
                    let nk = grid.index(ni as usize, nj as usize);
                    unknown[nk] != usize::MAX
                };
                if inside {
                    Ok((Arm::Node(unknown[grid.index(ni as usize, nj as usize)]), 1.0))
                } else {
                    let th = prob.domain.cut(x, y);
                    let b = [x[0] + th * (y[0] - x[0]), x[1] + th * (y[1] - x[1])];
                    Ok((Arm::Boundary(prob.boundary.at(b)?), th))
                }
            };
            let centre = Affine {
                terms: vec![(n, 1.0)],
                c: 0.0,
            };
            let lift = |a: Arm| match a {
                Arm::Node(m) => Affine {
                    terms: vec![(m, 1.0)],
                    c: 0.0,
                },
                Arm::Boundary(v) => Affine { terms: vec![], c: v },
            };
            // (first, second) derivative along a direction of step length `len`
            let line = |d: [i64; 2], len: f64| -> Result<(Affine, Affine), SolverError> {
                let (ap, tp) = arm(d[0], d[1])?;
                let (am, tm) = arm(-d[0], -d[1])?;
                let (hp, hm) = (tp * len, tm * len);
                let (up, um) = (lift(ap), lift(am));
                let mut d1 = Affine::default();
                let den1 = hp * hm * (hp + hm);
                d1.axpy(hm * hm / den1, &up);
                d1.axpy((hp * hp - hm * hm) / den1, &centre);
                d1.axpy(-hp * hp / den1, &um);
                let mut d2 = Affine::default();
                let den2 = 0.5 * (hp + hm);
                d2.axpy(1.0 / (hp * den2), &up);
                d2.axpy(-(1.0 / hp + 1.0 / hm) / den2, &centre);
                d2.axpy(1.0 / (hm * den2), &um);
                Ok((d1, d2))
            };
            let diag = h * std::f64::consts::SQRT_2;
            let (p, r) = line([1, 0], h)?;
            let (q, t) = line([0, 1], h)?;
            let (_, dpp) = line([1, 1], diag)?;
            let (_, dpm) = line([1, -1], diag)?;
            let mut s = Affine::default();
            s.axpy(0.5, &dpp);
            s.axpy(-0.5, &dpm);
            jets.push([centre, p, q, r, s, t]);
        }
        Ok(Self {
            grid,
            nodes,
            jets,
            equation: prob.equation.clone(),
            blend: None,
            floor: prob.controls.projection_floor,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    pub fn point(&self, n: usize) -> [f64; 2] {
        let (i, j) = self.grid.coords(self.nodes[n]);
        self.grid.point(i, j)
    }

    /// Uses `τF + (1 − τ)F₀` instead of `F`.
    pub fn set_blend(&mut self, blend: Option<(f64, Equation)>) {
        self.blend = blend;
    }

    pub fn jet(&self, u: &[f64], n: usize) -> Jet2 {
        let a = &self.jets[n];
        Jet2::new(
            a[0].eval(u),
            a[1].eval(u),
            a[2].eval(u),
            a[3].eval(u),
            a[4].eval(u),
            a[5].eval(u),
        )
    }

    fn f(&self, jet: &Jet2) -> Result<f64, EquationError> {
        let f = self.equation.residual_unchecked(jet)?;
        Ok(match &self.blend {
            Some((tau, e0)) => tau * f + (1.0 - tau) * e0.residual_unchecked(jet)?,
            None => f,
        })
    }

    fn df(&self, jet: &Jet2) -> Result<Partials, EquationError> {
        let pj = |e: &Equation| e.partials(&e.project_admissible(jet, self.floor));
        let d = pj(&self.equation)?;
        Ok(match &self.blend {
            Some((tau, e0)) => {
                let d0 = pj(e0)?;
                let mix = |a: f64, b: f64| tau * a + (1.0 - tau) * b;
                Partials {
                    z: mix(d.z, d0.z),
                    p: mix(d.p, d0.p),
                    q: mix(d.q, d0.q),
                    r: mix(d.r, d0.r),
                    s: mix(d.s, d0.s),
                    t: mix(d.t, d0.t),
                }
            }
            None => d,
        })
    }

    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        (0..self.unknowns())
            .map(|n| Ok(self.f(&self.jet(u, n))?))
            .collect()
    }

    /// Jacobian triplets `(row, col, value)`, linearized at the convex projection of each jet.
    pub fn jacobian(&self, u: &[f64]) -> Result<Vec<(usize, usize, f64)>, SolverError> {
        let mut trip = Vec::with_capacity(self.unknowns() * 10);
        for n in 0..self.unknowns() {
            let d = self.df(&self.jet(u, n))?;
            let coef = [d.z, d.p, d.q, d.r, d.s, d.t];
            for (slot, a) in self.jets[n].iter().enumerate() {
                if coef[slot] != 0.0 {
                    trip.extend(a.terms.iter().map(|(j, w)| (n, *j, coef[slot] * w)));
                }
            }
        }
        Ok(trip)
    }

    /// First node whose jet is outside the equation's admissible region.
    pub fn inadmissible_node(&self, u: &[f64]) -> Option<usize> {
        (0..self.unknowns()).find(|&n| !self.equation.is_admissible(&self.jet(u, n)))
    }

    pub fn to_field(&self, u: &[f64]) -> ScalarField {
        let mut values = vec![f64::NAN; self.grid.len()];
        for (n, &k) in self.nodes.iter().enumerate() {
            values[k] = u[n];
        }
        ScalarField::from_values(self.grid, values).expect("sizes agree")
    }
}

fn check_connected(grid: &Grid, unknown: &[usize], start: usize, count: usize) -> Result<(), SolverError> {
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut n = 0;
    while let Some(k) = queue.pop_front() {
        n += 1;
        let (i, j) = grid.coords(k);
        for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni as usize >= grid.nx || nj as usize >= grid.ny {
                continue;
            }
            let nk = grid.index(ni as usize, nj as usize);
            if unknown[nk] != usize::MAX && !seen[nk] {
                seen[nk] = true;
                queue.push_back(nk);
            }
        }
    }
    if n == count {
        Ok(())
    } else {
        Err(SolverError::Domain(format!(
            "the discrete domain is disconnected ({n} of {count} nodes reachable)"
        )))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

fn linear_solve(n: usize, trip: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    let entries: Vec<Triplet<usize, usize, f64>> = trip.iter().map(|(i, j, v)| Triplet::new(*i, *j, *v)).collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| SolverError::Linear(format!("{e:?}")))?;
    let lu = a.sp_lu().map_err(|e| SolverError::Linear(format!("{e:?}")))?;
    let mut b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    lu.solve_in_place(b.as_mut());
    let x: Vec<f64> = (0..n).map(|i| b[(i, 0)]).collect();
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(SolverError::Linear("singular Jacobian".into()))
    }
}

fn smooth_noise(seed: u64) -> impl Fn([f64; 2]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<[f64; 5]> = (0..6)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    let norm: f64 = modes.iter().map(|m| m[0].abs()).sum();
    move |x| {
        modes
            .iter()
            .map(|m| m[0] * (m[1] * x[0] + m[3]).sin() * (m[2] * x[1] + m[4]).sin())
            .sum::<f64>()
            / norm
    }
}

fn initial_values(op: &DiscreteOperator, dom: &DomainSpec, guess: &InitialGuess) -> Result<Vec<f64>, SolverError> {
    let n = op.unknowns();
    let undefined = |x: [f64; 2]| SolverError::Domain(format!("initial guess undefined at ({}, {})", x[0], x[1]));
    match guess {
        InitialGuess::Zero => Ok(vec![0.0; n]),
        InitialGuess::Expr(e) => (0..n)
            .map(|k| {
                let x = op.point(k);
                e.value(x[0], x[1]).ok_or_else(|| undefined(x))
            })
            .collect(),
        InitialGuess::Noisy { base, amplitude, seed } => {
            let noise = smooth_noise(*seed);
            (0..n)
                .map(|k| {
                    let x = op.point(k);
                    // the factor min(1, −φ) keeps the boundary values undisturbed
                    let fade = (-dom.phi(x)).clamp(0.0, 1.0);
                    Ok(base.value(x[0], x[1]).ok_or_else(|| undefined(x))? + amplitude * fade * noise(x))
                })
                .collect()
        }
    }
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

/// Damped Newton. Converged when the max residual is at most `tol`, or when a
/// full step changes `u` by less than round-off (residuals of rows with tiny cut
/// fractions cannot go below `ε/(θh)²`).
fn newton(
    op: &DiscreteOperator,
    u: &mut [f64],
    ctl: &SolverControls,
    tau: f64,
    enforce_admissible: bool,
) -> Result<StageLog, SolverError> {
    let n = op.unknowns();
    let mut log = StageLog {
        tau,
        residuals: Vec::new(),
        damping: Vec::new(),
    };
    let mut r = op.residual(u)?;
    let mut res = max_abs(&r);
    log.residuals.push(res);
    for _ in 0..ctl.max_iter {
        if res <= ctl.tol {
            return Ok(log);
        }
        let trip = op.jacobian(u)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = linear_solve(n, &trip, &rhs)?;
        let scale = 1.0 + max_abs(u);
        if max_abs(&delta) <= 1e-13 * scale {
            return Ok(log);
        }
        let was_admissible = enforce_admissible && op.inadmissible_node(u).is_none();
        let r2 = rms(&r);
        let mut alpha = 1.0;
        let mut blocked = None;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
            let rt = op.residual(&trial)?;
            let bad = if was_admissible { op.inadmissible_node(&trial) } else { None };
            if bad.is_none() && rms(&rt) < (1.0 - 1e-4 * alpha) * r2 {
                u.copy_from_slice(&trial);
                res = max_abs(&rt);
                r = rt;
                break;
            }
            blocked = bad.or(blocked);
            alpha *= 0.5;
            if alpha < ctl.min_damping {
                if let Some(b) = blocked {
                    return Err(SolverError::InadmissibleIterate { at: op.point(b) });
                }
                if alpha * max_abs(&delta) <= 1e-12 * scale {
                    // the step is at round-off level already
                    return Ok(log);
                }
                return Err(SolverError::NoConvergence {
                    iterations: log.residuals.len(),
                    residual: res,
                });
            }
        }
        log.damping.push(alpha);
        log.residuals.push(res);
    }
    if res <= ctl.tol {
        Ok(log)
    } else {
        Err(SolverError::NoConvergence {
            iterations: log.residuals.len(),
            residual: res,
        })
    }
}

/// Solves the Dirichlet problem. Returns the solution on the solver grid
/// (`NaN` outside the domain) and the Newton log.
pub fn solve_dirichlet(prob: &DirichletProblem, guess: &InitialGuess) -> Result<(ScalarField, SolveLog), SolverError> {
    let mut op = DiscreteOperator::new(prob)?;
    let mut u = initial_values(&op, &prob.domain, guess)?;
    let ctl = &prob.controls;
    let mut stages = Vec::new();
    let convex = prob.equation.is_convex_branch();
    match &ctl.continuation {
        Some(c) if c.steps > 0 => {
            for k in 0..=c.steps {
                let tau = k as f64 / c.steps as f64;
                op.set_blend((k < c.steps).then(|| (tau, c.start.clone())));
                stages.push(newton(&op, &mut u, ctl, tau, convex && k > 0)?);
            }
        }
        _ => stages.push(newton(&op, &mut u, ctl, 1.0, convex)?),
    }
    if let Some(b) = op.inadmissible_node(&u) {
        return Err(SolverError::InadmissibleIterate { at: op.point(b) });
    }
    let final_residual = stages.last().and_then(|s| s.residuals.last().copied()).unwrap_or(f64::NAN);
    Ok((
        op.to_field(&u),
        SolveLog {
            stages,
            unknowns: op.unknowns(),
            final_residual,
        },
    ))
}

/// Max-norm error of a solution against a closed form over the solved nodes.
pub fn max_error(u: &ScalarField, exact: &Expr) -> f64 {
    max_error_fn(u, &|x| exact.value(x[0], x[1]))
}

pub fn max_error_fn(u: &ScalarField, exact: &dyn Fn([f64; 2]) -> Option<f64>) -> f64 {
    let g = u.grid;
    let mut e: f64 = 0.0;
    for k in 0..g.len() {
        let v = u.values[k];
        if v.is_finite() {
            let (i, j) = g.coords(k);
            let x = g.point(i, j);
            if let Some(w) = exact(x) {
                e = e.max((v - w).abs());
            }
        }
    }
    e
}

/// Observed orders `log₂(eᵢ/eᵢ₊₁)` for errors at successively halved spacings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_on_disk_is_second_order() {
        let exact = Expr::serrin(0.25);
        let errs: Vec<f64> = [16.0, 32.0]
            .iter()
            .map(|n| {
                let p = DirichletProblem::new(
                    Equation::SerrinLaplace { constant: 1.0 },
                    DomainSpec::disk([0.0, 0.0], 1.0),
                    BoundaryData::Constant(0.0),
                    1.0 / n,
                );
                let (u, log) = solve_dirichlet(&p, &InitialGuess::Zero).unwrap();
                assert!(log.final_residual <= 1e-10);
                max_error(&u, &exact)
            })
            .collect();
        // quadratics are reproduced by the stencils
        assert!(errs.iter().all(|e| *e < 1e-10), "{errs:?}");
    }

    #[test]
    fn jacobian_matches_differences() {
        let p = DirichletProblem::new(
            Equation::MongeAmpere { rhs: 4.0 },
            DomainSpec::Ellipse {
                center: [0.1, 0.0],
                a: 1.0,
                b: 0.8,
            },
            BoundaryData::Trace(Expr::quadratic(0.0, 2.0, 0.3, 2.4)),
            1.0 / 8.0,
        );
        let op = DiscreteOperator::new(&p).unwrap();
        let n = op.unknowns();
        let u: Vec<f64> = (0..n)
            .map(|k| {
                let x = op.point(k);
                x[0] * x[0] + 1.2 * x[1] * x[1] + 0.3 * x[0] * x[1]
            })
            .collect();
        let trip = op.jacobian(&u).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut jv = vec![0.0; n];
        for (i, j, w) in &trip {
            jv[*i] += w * v[*j];
        }
        let e = 1e-6;
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + e * b).collect();
        let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - e * b).collect();
        let (rp, rm) = (op.residual(&up).unwrap(), op.residual(&um).unwrap());
        for k in 0..n {
            let fd = (rp[k] - rm[k]) / (2.0 * e);
            assert!((fd - jv[k]).abs() < 1e-5 * (1.0 + jv[k].abs()), "{k}: {fd} vs {}", jv[k]);
        }
    }

    #[test]
    fn disconnected_domain_is_rejected() {
        let dom = DomainSpec::implicit("two disks", [-2.0, 2.0, -1.0, 1.0], |x| {
            let a = (x[0] - 1.0).hypot(x[1]) - 0.5;
            let b = (x[0] + 1.0).hypot(x[1]) - 0.5;
            a.min(b)
        });
        let p = DirichletProblem::new(
            Equation::SerrinLaplace { constant: 1.0 },
            dom,
            BoundaryData::Constant(0.0),
            0.1,
        );
        assert!(matches!(DiscreteOperator::new(&p), Err(SolverError::Domain(_))));
    }
}
