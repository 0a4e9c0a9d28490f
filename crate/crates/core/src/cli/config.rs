//! Scenario files: TOML with named sections and `key = value` entries.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::canonical::CanonicalFamily;
use crate::equations::{Anisotropy, Equation, SphereFn};
use crate::field::{Expr, Grid, LevelCurve};
use crate::solver::DomainSpec;

use super::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub equation: Option<EquationSpec>,
    pub family: Option<FamilySpec>,
    pub candidate: Option<CandidateSpec>,
    pub domain: Option<DomainSection>,
    pub neumann: Option<NeumannSpec>,
    pub tolerances: Option<ToleranceSpec>,
    pub index: Option<IndexSpec>,
    pub solver: Option<SolverSpec>,
    pub grid: Option<GridSpec>,
    pub render: Option<RenderSpec>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EquationSpec {
    pub id: String,
    pub constant: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub rhs: Option<f64>,
    /// `constant(c)` or `zonal(c0, c1, ...)`.
    pub f: Option<String>,
    /// `euclidean` or `ellipse(a, b)`.
    pub anisotropy: Option<String>,
}

/// A closed-form expression by name, with optional modifiers.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExprSpec {
    pub name: String,
    pub a: Option<f64>,
    pub t: Option<f64>,
    pub c: Option<f64>,
    pub radius: Option<f64>,
    pub n: Option<u32>,
    pub scale: Option<f64>,
    pub rxx: Option<f64>,
    pub rxy: Option<f64>,
    pub ryy: Option<f64>,
    pub perturb_n: Option<u32>,
    pub perturb_eps: Option<f64>,
    pub rotate: Option<f64>,
    pub shift: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FamilySpec {
    #[serde(default = "translation")]
    pub kind: String,
    pub name: Option<String>,
    pub base: ExprSpec,
    pub center: Option<[f64; 2]>,
    pub samples: Option<usize>,
    pub sample_box: Option<[f64; 4]>,
    pub t_range: Option<[f64; 2]>,
}

fn translation() -> String {
    "translation".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CandidateSpec {
    /// `closed-form`, `grid` or `solve`.
    pub kind: String,
    pub expr: Option<ExprSpec>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DomainSection {
    /// `disk` or `ellipse`.
    pub kind: String,
    #[serde(default)]
    pub center: [f64; 2],
    pub radius: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct NeumannSpec {
    /// `natural`, `constant` or `file`.
    pub kind: String,
    pub value: Option<f64>,
    /// Family member `t` whose zero level gives the natural data.
    pub member: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ToleranceSpec {
    pub pde: Option<f64>,
    pub dirichlet: Option<f64>,
    pub neumann: Option<f64>,
    pub canonicality: Option<f64>,
    pub scale: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IndexSpec {
    /// `zeta`, `zeta-squared`, `split-zeros`, `tangent-disk` or `disk-contradiction`.
    pub fixture: Option<String>,
    pub h: Option<f64>,
    pub tangency_threshold: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolverSpec {
    pub boundary_constant: Option<f64>,
    pub boundary_trace: Option<ExprSpec>,
    /// Closed form to measure the error against.
    pub exact: Option<ExprSpec>,
    pub guess: Option<ExprSpec>,
    pub noise_amplitude: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub continuation_steps: Option<usize>,
    /// Continuation starts from `Δu + c = 0`.
    pub continuation_laplace: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridSpec {
    /// Nodes per unit length: `h = 1/n`.
    pub n: Option<usize>,
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 4]>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RenderSpec {
    /// `Z1`, `Z2`, `U` or `V`.
    pub field: Option<String>,
    /// Ticks per unit length.
    pub density: Option<usize>,
    pub lines: Option<PathBuf>,
    pub curve: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn cfg_err(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        location: format!("key `{key}`"),
        message: msg.into(),
    }
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| cfg_err(key, "missing required value"))
}

impl ScenarioConfig {
    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(sp) => {
                    let line = text[..sp.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                }
                None => "config".into(),
            };
            CliError::Config {
                location,
                message: e.message().to_string(),
            }
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &dir)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn equation(&self) -> Result<Equation, CliError> {
        let spec = self
            .equation
            .as_ref()
            .ok_or_else(|| cfg_err("equation", "section [equation] is required"))?;
        spec.build()
    }

    pub fn family(&self) -> Result<CanonicalFamily, CliError> {
        let spec = self
            .family
            .as_ref()
            .ok_or_else(|| cfg_err("family", "section [family] is required"))?;
        if spec.kind != "translation" {
            return Err(cfg_err("family.kind", format!("unknown family kind `{}`", spec.kind)));
        }
        let base = spec.base.build("family.base")?;
        let name = spec.name.clone().unwrap_or_else(|| spec.base.name.clone());
        let fam = CanonicalFamily::translation(name, base, self.equation()?)?;
        Ok(match spec.center {
            Some(c) => fam.with_center(c),
            None => fam,
        })
    }

    pub fn grid_h(&self) -> f64 {
        1.0 / self.grid.as_ref().and_then(|g| g.n).unwrap_or(32).max(1) as f64
    }

    /// Grid for sampling closed forms.
    pub fn sample_grid(&self) -> Grid {
        let b = self.grid.as_ref().and_then(|g| g.bbox).unwrap_or([-3.0, 3.0, -3.0, 3.0]);
        Grid::covering(b[0], b[1], b[2], b[3], self.grid_h(), 0)
    }

    pub fn domain(&self) -> Result<Option<DomainSpec>, CliError> {
        let Some(d) = &self.domain else { return Ok(None) };
        Ok(Some(match d.kind.as_str() {
            "disk" => DomainSpec::disk(d.center, need(d.radius, "domain.radius")?),
            "ellipse" => DomainSpec::Ellipse {
                center: d.center,
                a: need(d.a, "domain.a")?,
                b: need(d.b, "domain.b")?,
            },
            other => return Err(cfg_err("domain.kind", format!("unknown domain `{other}`"))),
        }))
    }

    /// The domain boundary as a polyline, when a domain is configured.
    pub fn domain_curve(&self) -> Result<Option<LevelCurve>, CliError> {
        Ok(self.domain()?.map(|d| match d {
            DomainSpec::Ellipse { center, a, b } => {
                let n = ((a.max(b) * std::f64::consts::TAU) / (0.5 * self.grid_h())).ceil().max(64.0) as usize;
                LevelCurve::ellipse(center, a, b, n)
            }
            DomainSpec::Implicit { .. } => unreachable!("config domains are explicit"),
        }))
    }
}

impl EquationSpec {
    pub fn build(&self) -> Result<Equation, CliError> {
        let mut eq = Equation::by_id(&self.id).map_err(|_| cfg_err("equation.id", format!("unknown operator `{}`", self.id)))?;
        match &mut eq {
            Equation::SerrinLaplace { constant } => set(constant, self.constant),
            Equation::AnisoLinear { a, b, constant } => {
                set(a, self.a);
                set(b, self.b);
                set(constant, self.constant);
            }
            Equation::MongeAmpere { rhs } => set(rhs, self.rhs),
            Equation::MinkowskiMa { f } | Equation::Pmc { f } => {
                if let Some(s) = &self.f {
                    *f = parse_sphere_fn(s)?;
                }
            }
            Equation::AnisoQ { h, constant } | Equation::AnisoR { h, constant } => {
                set(constant, self.constant);
                if let Some(s) = &self.anisotropy {
                    *h = parse_anisotropy(s)?;
                }
            }
        }
        Ok(eq)
    }
}

fn set(slot: &mut f64, v: Option<f64>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// `name(a, b, ...)` → `(name, [a, b, ...])`.
fn call(s: &str, key: &str) -> Result<(String, Vec<f64>), CliError> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s.to_string(), vec![]));
    };
    let inner = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| cfg_err(key, format!("unbalanced parentheses in `{s}`")))?;
    let args = inner
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| cfg_err(key, format!("`{}` is not a number", a.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((s[..open].trim().to_string(), args))
}

pub fn parse_sphere_fn(s: &str) -> Result<SphereFn, CliError> {
    match call(s, "equation.f")? {
        (n, a) if n == "constant" && a.len() == 1 => Ok(SphereFn::Constant(a[0])),
        (n, a) if n == "zonal" && !a.is_empty() => Ok(SphereFn::Zonal(a)),
        _ => Err(cfg_err("equation.f", format!("expected constant(c) or zonal(c0, ...), got `{s}`"))),
    }
}

pub fn parse_anisotropy(s: &str) -> Result<Anisotropy, CliError> {
    match call(s, "equation.anisotropy")? {
        (n, a) if n == "euclidean" && a.is_empty() => Ok(Anisotropy::Euclidean),
        (n, a) if n == "ellipse" && a.len() == 2 => Ok(Anisotropy::ellipse(a[0], a[1])?),
        _ => Err(cfg_err(
            "equation.anisotropy",
            format!("expected euclidean or ellipse(a, b), got `{s}`"),
        )),
    }
}

impl ExprSpec {
    pub fn build(&self, key: &str) -> Result<Expr, CliError> {
        let k = |f: &str| format!("{key}.{f}");
        let base = match self.name.as_str() {
            "serrin" => Expr::serrin(self.a.unwrap_or(0.0)),
            "aniso-serrin" => Expr::aniso_serrin(self.a.unwrap_or(0.0)),
            "paraboloid" => Expr::paraboloid(self.t.unwrap_or(0.0)),
            "hemisphere" => Expr::hemisphere(need(self.radius, &k("radius"))?),
            "harmonic-power" => Expr::harmonic_power(need(self.n, &k("n"))?, self.scale.unwrap_or(1.0)),
            "harmonic-exp" => Expr::HarmonicExp {
                scale: self.scale.unwrap_or(1.0),
            },
            "quadratic" => Expr::quadratic(
                self.c.unwrap_or(0.0),
                self.rxx.unwrap_or(0.0),
                self.rxy.unwrap_or(0.0),
                self.ryy.unwrap_or(0.0),
            ),
            other => return Err(cfg_err(&k("name"), format!("unknown expression `{other}`"))),
        };
        let mut e = base;
        if let Some(c) = self.c.filter(|_| self.name != "quadratic") {
            e = e.plus(Expr::quadratic(c, 0.0, 0.0, 0.0));
        }
        match (self.perturb_n, self.perturb_eps) {
            (Some(n), Some(eps)) => e = e.perturbed(n, eps),
            (None, None) => {}
            _ => return Err(cfg_err(&k("perturb-n"), "perturb-n and perturb-eps go together")),
        }
        if let Some(r) = self.rotate {
            e = e.rotated(r);
        }
        if let Some(s) = self.shift {
            e = e.shifted(s);
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_scenario() {
        let c = ScenarioConfig::from_str(
            "[scenario]\nname = \"x\"\n[equation]\nid = \"aniso-linear\"\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(c.equation().unwrap().id(), "aniso-linear");
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = ScenarioConfig::from_str("[scenario]\nname = \"x\"\nsed = 3\n", Path::new(".")).unwrap_err();
        match e {
            CliError::Config { location, message } => {
                assert_eq!(location, "line 3");
                assert!(message.contains("sed"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parses_named_builtins() {
        assert_eq!(parse_sphere_fn("zonal(1, 0.5)").unwrap(), SphereFn::Zonal(vec![1.0, 0.5]));
        assert!(parse_anisotropy("ellipse(2, 1)").is_ok());
        assert!(parse_anisotropy("ellipse(2)").is_err());
    }
}
