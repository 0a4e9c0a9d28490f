//! The `overdet` command line: one scenario file per run, one subcommand per
//! module, reports written atomically into an output directory.
//!
//! Exit codes: 0 when the run completed and its check passed, 1 when a check
//! failed (the report is still written), 2 on bad input or any other error.

pub mod config;
pub mod render;
pub mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::canonical::{verify_property_star, CanonicalError, PropertyStarOptions};
use crate::equations::{Equation, EquationError};
use crate::field::{read_line_samples, trace_zero_level, Expr, FieldError, Grid, LevelCurve, LineField, ScalarField};
use crate::index::quadratic::{audit_fixture, fixture_by_name, FixtureSurface, QuadFixture};
use crate::index::{
    audit_candidate, eigenline_fields, null_line_fields, shape_tensor, AuditOptions, IndexError, IndexReport,
    LineKind, ShapeContext, UmbilicOptions, WindingOptions,
};
use crate::overdetermined::{
    check_solution, extract_neumann, NeumannData, OverdeterminedError, SolutionCheck, Tolerances,
};
use crate::solver::{
    max_error, solve_dirichlet, BoundaryData, Continuation, DirichletProblem, InitialGuess, SolveLog, SolverError,
};

use config::{ExprSpec, ScenarioConfig};
use render::{index_label, render_svg, Marker};
use report::Artifacts;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
    #[error("input error: {0}")]
    Input(String),
    #[error("cannot write {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Equation(#[from] EquationError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Overdetermined(#[from] OverdeterminedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Parser)]
#[command(name = "overdet", version, about = "Canonical families, overdetermined boundary checks, index audits and a Dirichlet solver")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `scenario.out`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Random seed; overrides `scenario.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Multiplies every pass tolerance.
    #[arg(long = "tol-scale", global = true, value_name = "X")]
    pub tol_scale: Option<f64>,
    /// Grid nodes per unit length (`h = 1/N`); overrides `grid.n`.
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample the defining properties of the configured family.
    VerifyFamily,
    /// Read the natural Neumann data off a family member.
    ExtractNeumann,
    /// Score a candidate against the overdetermined problem.
    CheckSolution,
    /// Umbilics, indices and the Poincaré–Hopf sums of a candidate or fixture.
    IndexAudit,
    /// Solve the configured Dirichlet problem.
    Solve,
    /// Draw a line field as SVG.
    Render,
}

/// What a completed run reports back.
#[derive(Debug)]
pub struct Outcome {
    pub exit: i32,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

/// Parses `argv` and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&args) {
        Ok(out) => {
            println!("{}", out.summary);
            out.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(args: &Args) -> Result<Outcome, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Input("--config PATH is required".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = args.seed {
        cfg.scenario.seed = s;
    }
    if let Some(n) = args.grid {
        if n == 0 {
            return Err(CliError::Input("--grid must be positive".into()));
        }
        cfg.grid.get_or_insert_with(Default::default).n = Some(n);
    }
    if let Some(k) = args.tol_scale {
        if !(k > 0.0 && k.is_finite()) {
            return Err(CliError::Input(format!("--tol-scale must be positive, got {k}")));
        }
    }
    let dir = match (&args.out, &cfg.scenario.out) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => cfg.resolve(d),
        (None, None) => PathBuf::from("out").join(&cfg.scenario.name),
    };
    let run = Run {
        cfg,
        tol_scale: args.tol_scale.unwrap_or(1.0),
        out: Artifacts::new(dir),
    };
    run.dispatch(args.command)
}

struct Run {
    cfg: ScenarioConfig,
    tol_scale: f64,
    out: Artifacts,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct NeumannSummary {
    family: String,
    member: f64,
    vertices: usize,
    curve_length: f64,
    enclosed_area: f64,
    g_min: f64,
    g_max: f64,
    /// `g` at the outward normals `(−1, 0)` and `(0, −1)`.
    g_west: f64,
    g_south: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveSummary {
    equation: String,
    h: f64,
    unknowns: usize,
    converged: bool,
    newton_steps: usize,
    final_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log: Option<SolveLog>,
}

fn cfg_err(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        location: format!("key `{key}`"),
        message: msg.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

const COLLAR: usize = 3;

fn pad_box(b: [f64; 4], pad: f64) -> [f64; 4] {
    [b[0] - pad, b[1] + pad, b[2] - pad, b[3] + pad]
}

impl Run {
    fn dispatch(mut self, cmd: Command) -> Result<Outcome, CliError> {
        let (exit, summary) = match cmd {
            Command::VerifyFamily => self.verify_family()?,
            Command::ExtractNeumann => self.extract_neumann()?,
            Command::CheckSolution => self.check_solution()?,
            Command::IndexAudit => self.index_audit()?,
            Command::Solve => self.solve()?,
            Command::Render => self.render()?,
        };
        Ok(Outcome {
            exit,
            summary,
            artifacts: self.out.written,
        })
    }

    fn seed(&self) -> u64 {
        self.cfg.scenario.seed
    }

    fn verify_family(&mut self) -> Result<(i32, String), CliError> {
        let fam = self.cfg.family()?;
        let spec = self.cfg.family.as_ref().expect("family() checked the section");
        let d = PropertyStarOptions::default();
        let opts = PropertyStarOptions {
            samples: spec.samples.unwrap_or(d.samples),
            sample_box: spec.sample_box.unwrap_or(d.sample_box),
            t_range: spec.t_range.map(|r| (r[0], r[1])).unwrap_or(d.t_range),
            seed: self.seed(),
            ..d
        };
        let rep = verify_property_star(&fam, &opts);
        self.out.json("family-report.json", &rep)?;
        let verdict = if rep.pass { "pass" } else { "fail" };
        Ok((i32::from(!rep.pass), format!("verify-family {}: {verdict}", rep.family)))
    }

    /// The member `u_t = base + t` sampled on the scenario grid.
    fn family_member(&self, t: f64) -> Result<ScalarField, CliError> {
        let spec = self
            .cfg
            .family
            .as_ref()
            .ok_or_else(|| cfg_err("family", "section [family] is required"))?;
        let e = spec.base.build("family.base")?.plus(Expr::quadratic(t, 0.0, 0.0, 0.0));
        Ok(ScalarField::from_expr(e, self.cfg.sample_grid(), None))
    }

    fn natural_member(&self) -> f64 {
        self.cfg.neumann.as_ref().and_then(|n| n.member).unwrap_or(0.0)
    }

    fn extract_neumann(&mut self) -> Result<(i32, String), CliError> {
        let fam = self.cfg.family()?;
        let t = self.natural_member();
        let (g, curve) = extract_neumann(&self.family_member(t)?)?;
        let (_, vals) = g.knots();
        let s = NeumannSummary {
            family: fam.name.clone(),
            member: t,
            vertices: curve.vertices().len(),
            curve_length: curve.length(),
            enclosed_area: curve.signed_area().abs(),
            g_min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            g_max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            g_west: g.at_normal([-1.0, 0.0]),
            g_south: g.at_normal([0.0, -1.0]),
        };
        self.out.with_writer("neumann.csv", |w| g.write_csv(w))?;
        self.out.with_writer("curve.csv", |w| curve.write_csv(w))?;
        self.out.json("neumann.json", &s)?;
        Ok((0, format!("extract-neumann: g in [{:.6}, {:.6}] on {} vertices", s.g_min, s.g_max, s.vertices)))
    }

    fn neumann_data(&self) -> Result<NeumannData, CliError> {
        let Some(spec) = &self.cfg.neumann else {
            return Ok(extract_neumann(&self.family_member(0.0)?)?.0);
        };
        match spec.kind.as_str() {
            "natural" => Ok(extract_neumann(&self.family_member(self.natural_member())?)?.0),
            "constant" => Ok(NeumannData::constant(
                spec.value.ok_or_else(|| cfg_err("neumann.value", "missing required value"))?,
            )),
            "file" => {
                let p = spec.file.as_ref().ok_or_else(|| cfg_err("neumann.file", "missing required value"))?;
                let p = self.cfg.resolve(p);
                Ok(NeumannData::read_csv(open(&p)?, p.display().to_string())?)
            }
            other => Err(cfg_err("neumann.kind", format!("unknown kind `{other}`"))),
        }
    }

    /// Grid for closed-form candidates: the domain with a margin, or the scenario grid.
    fn candidate_grid(&self) -> Result<Grid, CliError> {
        let h = self.cfg.grid_h();
        Ok(match self.cfg.domain()? {
            Some(d) if self.cfg.grid.as_ref().and_then(|g| g.bbox).is_none() => {
                let b = pad_box(d.bbox(), 4.0 * h);
                Grid::covering(b[0], b[1], b[2], b[3], h, 0)
            }
            _ => self.cfg.sample_grid(),
        })
    }

    fn candidate(&self) -> Result<ScalarField, CliError> {
        let spec = self
            .cfg
            .candidate
            .as_ref()
            .ok_or_else(|| cfg_err("candidate", "section [candidate] is required"))?;
        match spec.kind.as_str() {
            "closed-form" => {
                let e = spec
                    .expr
                    .as_ref()
                    .ok_or_else(|| cfg_err("candidate.expr", "missing closed form"))?
                    .build("candidate.expr")?;
                Ok(ScalarField::from_expr(e, self.candidate_grid()?, None))
            }
            // masked grids get a collar so that jets on the boundary see both sides
            "grid" => {
                let p = spec.file.as_ref().ok_or_else(|| cfg_err("candidate.file", "missing required value"))?;
                let mut u = ScalarField::read_csv(open(&self.cfg.resolve(p))?)?;
                u.extend_collar(COLLAR);
                Ok(u)
            }
            "solve" => {
                let mut u = solve_dirichlet(&self.problem()?, &self.guess()?)?.0;
                u.extend_collar(COLLAR);
                Ok(u)
            }
            other => Err(cfg_err("candidate.kind", format!("unknown kind `{other}`"))),
        }
    }

    /// `∂Ω`: the configured domain for given candidates. A solved candidate's
    /// domain is only where it was computed, so its zero level is traced instead.
    fn curve(&self, u: &ScalarField) -> Result<LevelCurve, CliError> {
        let solved = self.cfg.candidate.as_ref().is_some_and(|c| c.kind == "solve");
        match self.cfg.domain_curve()? {
            Some(c) if !solved => Ok(c),
            _ => Ok(trace_zero_level(u)?),
        }
    }

    fn audit_options(&self) -> AuditOptions {
        let spec = self.cfg.index.clone().unwrap_or_default();
        let d = AuditOptions::default();
        AuditOptions {
            h: spec.h,
            tangency_threshold: spec.tangency_threshold.unwrap_or(d.tangency_threshold),
            ..d
        }
    }

    fn check_solution(&mut self) -> Result<(i32, String), CliError> {
        let eq = self.cfg.equation()?;
        let fam = self.cfg.family()?;
        let u = self.candidate()?;
        let curve = self.curve(&u)?;
        let g = self.neumann_data()?;
        let mut check = SolutionCheck::new(&u, &curve, &eq, &g, &fam);
        let t = self.cfg.tolerances.clone().unwrap_or_default();
        let base = Tolerances::for_field(&u);
        check.tolerances = Tolerances {
            pde: t.pde.unwrap_or(base.pde),
            dirichlet: t.dirichlet.unwrap_or(base.dirichlet),
            neumann: t.neumann.unwrap_or(base.neumann),
            canonicality: t.canonicality.unwrap_or(base.canonicality),
        }
        .scaled(t.scale.unwrap_or(1.0) * self.tol_scale);
        check.audit = Some(self.audit_options());
        let rep = check_solution(&check)?;
        self.out.json("solution-report.json", &rep)?;
        let verdict = serde_json::to_value(rep.verdict).ok().and_then(|v| v.as_str().map(String::from));
        Ok((
            i32::from(!rep.passed()),
            format!(
                "check-solution: verdict {} (pde {:.3e}, dirichlet {:.3e}, neumann {:.3e})",
                verdict.unwrap_or_default(),
                rep.pde_residual_max,
                rep.dirichlet_max,
                rep.neumann_max
            ),
        ))
    }

    fn fixture(&self) -> Result<Option<QuadFixture>, CliError> {
        let Some(name) = self.cfg.index.as_ref().and_then(|i| i.fixture.clone()) else {
            return Ok(None);
        };
        fixture_by_name(&name)
            .map(Some)
            .ok_or_else(|| cfg_err("index.fixture", format!("unknown fixture `{name}`")))
    }

    /// Tick grid for fixtures: the configured box or `[−2, 2]²`, at the render density.
    fn fixture_lines(&self, fx: &QuadFixture) -> LineField {
        let b = self.cfg.grid.as_ref().and_then(|g| g.bbox).unwrap_or([-2.0, 2.0, -2.0, 2.0]);
        let h = 1.0 / self.density() as f64;
        let disk = fx.surface != FixtureSurface::Sphere;
        let lines = fx.q.lines(fx.foliation);
        LineField::sample(Grid::covering(b[0], b[1], b[2], b[3], h, 0), &lines, &|p| {
            !disk || p[0].hypot(p[1]) <= 1.0
        })
    }

    fn density(&self) -> usize {
        self.cfg.render.as_ref().and_then(|r| r.density).unwrap_or(8).max(1)
    }

    fn umbilic_tol(&self, u: &ScalarField) -> f64 {
        if u.expr.is_some() {
            UmbilicOptions::closed_form().threshold
        } else {
            UmbilicOptions::sampled(u.grid.h).threshold
        }
    }

    fn index_audit(&mut self) -> Result<(i32, String), CliError> {
        let rep = if let Some(fx) = self.fixture()? {
            let rep = audit_fixture(&fx, &WindingOptions::default())?;
            let lines = self.fixture_lines(&fx);
            self.out.with_writer("lines.csv", |w| lines.write_csv(w))?;
            rep
        } else {
            let fam = self.cfg.family()?;
            let u = self.candidate()?;
            let curve = self.curve(&u)?;
            let opts = self.audit_options();
            let rep = audit_candidate(&u, &fam, &curve, &opts)?;
            let h = opts.h.unwrap_or(u.grid.h);
            let b = curve.bounding_box();
            let ctx = ShapeContext::new(&u, &fam);
            let field = shape_tensor(&ctx, Grid::covering(b[0], b[1], b[2], b[3], h, 0), &|p| curve.contains(p))?;
            let (z1, z2) = eigenline_fields(&field, self.umbilic_tol(&u));
            let (nu, nv) = null_line_fields(&field);
            for (name, f) in [("z1.csv", &z1), ("z2.csv", &z2), ("u.csv", &nu), ("v.csv", &nv)] {
                self.out.with_writer(name, |w| f.write_csv(w))?;
            }
            self.out.with_writer("curve.csv", |w| curve.write_csv(w))?;
            rep
        };
        self.out.json("index-report.json", &rep)?;
        let sum = rep.disk_sum.map_or(format!("sphere sum {}", rep.sphere_sum), |d| format!("disk sum {d}"));
        Ok((
            i32::from(rep.contradiction),
            format!(
                "index-audit {}: {} interior, {} boundary, {sum}, contradiction {}",
                rep.field,
                rep.interior.len(),
                rep.boundary.len(),
                rep.contradiction
            ),
        ))
    }

    fn problem(&self) -> Result<DirichletProblem, CliError> {
        let eq = self.cfg.equation()?;
        let domain = self
            .cfg
            .domain()?
            .ok_or_else(|| cfg_err("domain", "section [domain] is required to solve"))?;
        let spec = self
            .cfg
            .solver
            .as_ref()
            .ok_or_else(|| cfg_err("solver", "section [solver] is required to solve"))?;
        let boundary = match (&spec.boundary_trace, spec.boundary_constant) {
            (Some(e), None) => BoundaryData::Trace(e.build("solver.boundary-trace")?),
            (None, c) => BoundaryData::Constant(c.unwrap_or(0.0)),
            (Some(_), Some(_)) => {
                return Err(cfg_err("solver.boundary-constant", "give boundary-constant or boundary-trace, not both"))
            }
        };
        let mut prob = DirichletProblem::new(eq, domain, boundary, self.cfg.grid_h());
        if let Some(t) = spec.tol {
            prob.controls.tol = t;
        }
        if let Some(m) = spec.max_iter {
            prob.controls.max_iter = m;
        }
        if let Some(steps) = spec.continuation_steps {
            prob.controls.continuation = Some(Continuation {
                steps,
                start: Equation::SerrinLaplace {
                    constant: spec.continuation_laplace.unwrap_or(1.0),
                },
            });
        }
        Ok(prob)
    }

    fn guess(&self) -> Result<InitialGuess, CliError> {
        let Some(spec) = &self.cfg.solver else { return Ok(InitialGuess::Zero) };
        let base = spec.guess.as_ref().map(|g| g.build("solver.guess")).transpose()?;
        Ok(match (base, spec.noise_amplitude) {
            (None, None) => InitialGuess::Zero,
            (Some(e), None) => InitialGuess::Expr(e),
            (base, Some(amplitude)) => InitialGuess::Noisy {
                base: base.unwrap_or(Expr::quadratic(0.0, 0.0, 0.0, 0.0)),
                amplitude,
                seed: self.seed(),
            },
        })
    }

    fn solve(&mut self) -> Result<(i32, String), CliError> {
        let prob = self.problem()?;
        let exact: Option<Expr> = self
            .cfg
            .solver
            .as_ref()
            .and_then(|s| s.exact.as_ref())
            .map(|e: &ExprSpec| e.build("solver.exact"))
            .transpose()?;
        let mut s = SolveSummary {
            equation: prob.equation.id().to_string(),
            h: prob.h,
            unknowns: 0,
            converged: false,
            newton_steps: 0,
            final_residual: None,
            max_error: None,
            error: None,
            log: None,
        };
        match solve_dirichlet(&prob, &self.guess()?) {
            Ok((u, log)) => {
                s.converged = true;
                s.unknowns = log.unknowns;
                s.newton_steps = log.stages.iter().map(|st| st.residuals.len().saturating_sub(1)).sum();
                s.final_residual = Some(log.final_residual);
                s.max_error = exact.as_ref().map(|e| max_error(&u, e));
                self.out.with_writer("solution.csv", |w| u.write_csv(w))?;
                self.out.json("convergence.json", log.residuals())?;
                s.log = Some(log);
                self.out.json("solve-report.json", &s)?;
                let err = s.max_error.map(|e| format!(", max error {e:.3e}")).unwrap_or_default();
                Ok((0, format!("solve {}: converged in {} steps{err}", s.equation, s.newton_steps)))
            }
            Err(e @ (SolverError::NoConvergence { .. } | SolverError::InadmissibleIterate { .. })) => {
                s.error = Some(e.to_string());
                self.out.json("solve-report.json", &s)?;
                Ok((1, format!("solve {}: {e}", s.equation)))
            }
            Err(e) => Err(e.into()),
        }
    }

    fn render(&mut self) -> Result<(i32, String), CliError> {
        let spec = self.cfg.render.clone().unwrap_or_default();
        let (samples, curve, markers, legend) = if let Some(lines) = &spec.lines {
            let samples = read_line_samples(open(&self.cfg.resolve(lines))?)?;
            let curve = match &spec.curve {
                Some(c) => Some(LevelCurve::read_csv(open(&self.cfg.resolve(c))?)?),
                None => None,
            };
            let markers = match &spec.report {
                Some(r) => {
                    let p = self.cfg.resolve(r);
                    let v: Value = serde_json::from_reader(open(&p)?)
                        .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                    markers_from_json(&v)?
                }
                None => Vec::new(),
            };
            let legend = (!markers.is_empty()).then(|| sum_legend(&markers));
            (samples, curve, markers, legend)
        } else if let Some(fx) = self.fixture()? {
            let rep = audit_fixture(&fx, &WindingOptions::default())?;
            let markers = markers_from_report(&rep);
            let legend = match rep.disk_sum {
                Some(d) => format!("disk sum {}", index_label(d)),
                None => sum_legend(&markers),
            };
            let curve = (fx.surface != FixtureSurface::Sphere).then(|| LevelCurve::circle([0.0, 0.0], 1.0, 256));
            (self.fixture_lines(&fx).samples(), curve, markers, Some(legend))
        } else {
            let kind = match spec.field.as_deref().unwrap_or("Z1") {
                "Z1" => LineKind::Z1,
                "Z2" => LineKind::Z2,
                "U" => LineKind::U,
                "V" => LineKind::V,
                other => return Err(cfg_err("render.field", format!("expected Z1, Z2, U or V, got `{other}`"))),
            };
            let fam = self.cfg.family()?;
            let u = self.candidate()?;
            let curve = self.curve(&u)?;
            let rep = audit_candidate(&u, &fam, &curve, &self.audit_options())?;
            let ctx = ShapeContext::new(&u, &fam);
            let src = ctx.lines(kind, 0.0);
            let b = curve.bounding_box();
            let grid = Grid::covering(b[0], b[1], b[2], b[3], 1.0 / self.density() as f64, 0);
            let markers = markers_from_report(&rep);
            let near = |p: [f64; 2]| {
                markers
                    .iter()
                    .filter_map(|m| m.at)
                    .any(|m| (m[0] - p[0]).hypot(m[1] - p[1]) < 1e-9)
            };
            let field = LineField::sample(grid, &src, &|p| curve.contains(p) && !near(p));
            let legend = (!markers.is_empty()).then(|| sum_legend(&markers));
            (field.samples(), Some(curve), markers, legend)
        };
        let svg = render_svg(&samples, curve.as_ref(), &markers, legend.as_deref());
        self.out.bytes("render.svg", svg.as_bytes())?;
        Ok((0, format!("render: {} ticks, {} markers", samples.iter().filter(|s| s.valid).count(), markers.len())))
    }
}

fn sum_legend(markers: &[Marker]) -> String {
    format!("index sum {}", index_label(markers.iter().map(|m| m.index).sum()))
}

fn markers_from_report(rep: &IndexReport) -> Vec<Marker> {
    let mut m: Vec<Marker> = rep
        .interior
        .iter()
        .map(|s| Marker {
            at: (!s.at_infinity).then_some([s.x, s.y]),
            index: s.index,
        })
        .collect();
    m.extend(rep.boundary.iter().map(|b| Marker {
        at: Some([b.x, b.y]),
        index: b.boundary_index,
    }));
    m
}

fn markers_from_json(v: &Value) -> Result<Vec<Marker>, CliError> {
    let bad = |what: &str| CliError::Input(format!("index report: {what}"));
    let num = |s: &Value, k: &str| s.get(k).and_then(Value::as_f64).ok_or_else(|| bad(&format!("missing `{k}`")));
    let mut out = Vec::new();
    for (key, index_key) in [("interior", "index"), ("boundary", "boundaryIndex")] {
        let Some(items) = v.get(key) else { continue };
        let items = items.as_array().ok_or_else(|| bad(&format!("`{key}` is not an array")))?;
        for s in items {
            let inf = s.get("atInfinity").and_then(Value::as_bool).unwrap_or(false);
            out.push(Marker {
                at: if inf { None } else { Some([num(s, "x")?, num(s, "y")?]) },
                index: num(s, index_key)?,
            });
        }
    }
    Ok(out)
}
