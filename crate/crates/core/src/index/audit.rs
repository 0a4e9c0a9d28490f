//! Boundary tangency of the eigenlines and the Poincaré–Hopf bookkeeping.

use serde::Serialize;

use crate::canonical::CanonicalFamily;
use crate::field::{line_angle_diff, Grid, LevelCurve, LineSource, ScalarField};

use super::shape::{shape_tensor, LineKind, ShapeContext};
use super::umbilic::{detect_umbilics, Umbilic, UmbilicOptions};
use super::IndexError;

/// One vertex of a tangency profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangencyRow {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// Angle between the better-aligned line and the tangent; `None` at umbilic vertices.
    pub deviation: Option<f64>,
    /// 1 or 2: which of the two fields was closer.
    pub field: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TangencyProfile {
    pub rows: Vec<TangencyRow>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    /// "Z1", "Z2" or "mixed".
    pub tangent_field: Option<String>,
    pub umbilic_vertices: usize,
    /// Every vertex is umbilic, so tangency is undefined.
    pub umbilic_boundary: bool,
}

/// Measures how far the lines of `z1` (or of `z2`, whichever is closer) are from
/// the boundary tangent at each vertex. Vertices where neither field is defined
/// are retried at points moved inward by `inset` and `2·inset`.
pub fn boundary_tangency(
    z1: &dyn LineSource,
    z2: Option<&dyn LineSource>,
    curve: &LevelCurve,
    inset: f64,
) -> TangencyProfile {
    let vs = curve.vertices();
    let mut rows = Vec::with_capacity(vs.len());
    for v in vs {
        let tangent = v.tangent[1].atan2(v.tangent[0]);
        let mut row = TangencyRow {
            s: v.s,
            x: v.pos[0],
            y: v.pos[1],
            deviation: None,
            field: None,
        };
        for d in [0.0, inset, 2.0 * inset] {
            let p = [v.pos[0] + d * v.normal[0], v.pos[1] + d * v.normal[1]];
            let a = z1.angle_at(p).map(|a| line_angle_diff(a, tangent).abs());
            let b = z2.and_then(|z| z.angle_at(p)).map(|a| line_angle_diff(a, tangent).abs());
            let best = match (a, b) {
                (Some(a), Some(b)) if b < a => Some((b, 2)),
                (Some(a), _) => Some((a, 1)),
                (None, Some(b)) => Some((b, 2)),
                (None, None) => None,
            };
            if let Some((dev, f)) = best {
                row.deviation = Some(dev);
                row.field = Some(f);
                break;
            }
        }
        rows.push(row);
    }
    let devs: Vec<f64> = rows.iter().filter_map(|r| r.deviation).collect();
    let umbilic_vertices = rows.len() - devs.len();
    let ones = rows.iter().filter(|r| r.field == Some(1)).count();
    let twos = rows.iter().filter(|r| r.field == Some(2)).count();
    TangencyProfile {
        max: (!devs.is_empty()).then(|| devs.iter().cloned().fold(0.0, f64::max)),
        mean: (!devs.is_empty()).then(|| devs.iter().sum::<f64>() / devs.len() as f64),
        tangent_field: match (ones, twos) {
            (0, 0) => None,
            (_, 0) => Some("Z1".into()),
            (0, _) => Some("Z2".into()),
            _ => Some("mixed".into()),
        },
        umbilic_boundary: devs.is_empty(),
        umbilic_vertices,
        rows,
    }
}

/// An interior (or spherical) singularity as reported.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Singularity {
    pub x: f64,
    pub y: f64,
    pub index: f64,
    pub raw: f64,
    pub snapped: bool,
    pub degree_estimate: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub at_infinity: bool,
}

impl Singularity {
    pub fn new(at: [f64; 2], index: f64) -> Self {
        Self {
            x: at[0],
            y: at[1],
            index,
            raw: index,
            snapped: true,
            degree_estimate: 2.0 - 2.0 * index,
            at_infinity: false,
        }
    }

    pub fn at_infinity(index: f64) -> Self {
        Self {
            at_infinity: true,
            ..Self::new([0.0, 0.0], index)
        }
    }

    pub fn from_index(at: [f64; 2], li: &super::LineIndex) -> Self {
        Self {
            raw: li.raw,
            snapped: li.snapped.is_some(),
            ..Self::new(at, li.value())
        }
    }

    fn from_umbilic(u: &Umbilic) -> Self {
        Self::from_index(u.position, &u.z1)
    }
}

/// A singularity on the boundary. `index` is the full-loop index of the
/// continued field; the boundary index is half of it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundarySingularity {
    pub x: f64,
    pub y: f64,
    pub index: f64,
    pub boundary_index: f64,
    pub snapped: bool,
}

impl BoundarySingularity {
    pub fn new(at: [f64; 2], full_index: f64, snapped: bool) -> Self {
        Self {
            x: at[0],
            y: at[1],
            index: full_index,
            boundary_index: 0.5 * full_index,
            snapped,
        }
    }
}

/// How tangency to the boundary is established.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tangency {
    Measured { max: Option<f64>, threshold: f64 },
    /// Taken as a hypothesis; the audit then tests what it would imply.
    Assumed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Surface {
    Disk(Tangency),
    Sphere,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhInput {
    pub field: String,
    pub surface: Surface,
    pub interior: Vec<Singularity>,
    pub boundary: Vec<BoundarySingularity>,
    pub unresolved: Vec<[f64; 2]>,
    pub tangent_field: Option<String>,
    pub identically_canonical: bool,
}

impl PhInput {
    pub fn new(field: impl Into<String>, surface: Surface) -> Self {
        Self {
            field: field.into(),
            surface,
            interior: Vec::new(),
            boundary: Vec::new(),
            unresolved: Vec::new(),
            tangent_field: None,
            identically_canonical: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexReport {
    pub field: String,
    pub interior: Vec<Singularity>,
    pub boundary: Vec<BoundarySingularity>,
    pub unresolved: Vec<[f64; 2]>,
    pub tangency_max: Option<f64>,
    pub tangency_assumed: bool,
    pub tangent_field: Option<String>,
    /// Interior indices plus boundary indices; `None` on the sphere.
    pub disk_sum: Option<f64>,
    pub sphere_sum: f64,
    pub all_negative: bool,
    pub contradiction: bool,
    pub not_applicable_reason: Option<String>,
}

const SUM_TOL: f64 = 1e-9;

/// Sums indices and decides whether the Poincaré–Hopf identity is violated.
/// On a disk with a tangent field the sum must be 1; its double must be 2.
pub fn ph_audit(input: PhInput) -> IndexReport {
    let int_sum: f64 = input.interior.iter().map(|s| s.index).sum();
    let bd_sum: f64 = input.boundary.iter().map(|s| s.boundary_index).sum();
    let all_snapped = input.interior.iter().all(|s| s.snapped) && input.boundary.iter().all(|s| s.snapped);
    let all_negative = input
        .interior
        .iter()
        .map(|s| s.index)
        .chain(input.boundary.iter().map(|s| s.index))
        .all(|i| i < 0.0)
        && !(input.interior.is_empty() && input.boundary.is_empty());

    let mut reason = None;
    if input.identically_canonical {
        reason = Some("identically canonical region: the line fields are undefined".to_string());
    } else if !input.unresolved.is_empty() {
        reason = Some(format!("{} umbilic(s) could not be indexed", input.unresolved.len()));
    } else if !all_snapped {
        reason = Some("an index did not snap to a half-integer".to_string());
    }
    let (tangency_max, tangency_assumed) = match input.surface {
        Surface::Disk(Tangency::Measured { max, threshold }) => {
            if reason.is_none() {
                match max {
                    None => reason = Some("umbilic boundary: tangency is undefined".to_string()),
                    Some(m) if m > threshold => {
                        reason = Some(format!(
                            "the line field is not tangent to the boundary (max deviation {m:.3e} rad)"
                        ))
                    }
                    _ => {}
                }
            }
            (max, false)
        }
        Surface::Disk(Tangency::Assumed) => (None, true),
        Surface::Sphere => (None, false),
    };
    let (disk_sum, sphere_sum, target) = match input.surface {
        Surface::Disk(_) => (Some(int_sum + bd_sum), 2.0 * (int_sum + bd_sum), 2.0),
        Surface::Sphere => (None, int_sum + bd_sum, 2.0),
    };
    let contradiction = reason.is_none() && (sphere_sum - target).abs() > SUM_TOL;
    IndexReport {
        field: input.field,
        interior: input.interior,
        boundary: input.boundary,
        unresolved: input.unresolved,
        tangency_max,
        tangency_assumed,
        tangent_field: input.tangent_field,
        disk_sum,
        sphere_sum,
        all_negative,
        contradiction,
        not_applicable_reason: reason,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditOptions {
    /// Analysis grid spacing; defaults to the spacing of the candidate's grid.
    pub h: Option<f64>,
    /// Umbilic detection settings; chosen from the field type when absent.
    pub umbilic: Option<UmbilicOptions>,
    /// Largest boundary tangency deviation (radians) counted as tangent.
    pub tangency_threshold: f64,
    /// Umbilics within this many grid spacings of the boundary are boundary points.
    pub boundary_band: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            h: None,
            umbilic: None,
            tangency_threshold: 1e-3,
            boundary_band: 3.0,
        }
    }
}

/// Full index audit of a candidate `u` on the domain bounded by `curve`.
pub fn audit_candidate(
    u: &ScalarField,
    fam: &CanonicalFamily,
    curve: &LevelCurve,
    opts: &AuditOptions,
) -> Result<IndexReport, IndexError> {
    let h = opts.h.unwrap_or(u.grid.h);
    let band = opts.boundary_band * h;
    let bb = curve.bounding_box();
    let grid = Grid::covering(bb[0] - band, bb[1] + band, bb[2] - band, bb[3] + band, h, 0);
    let ctx = ShapeContext::new(u, fam);
    let mask = |p: [f64; 2]| curve.contains(p) || curve.distance(p) <= band;
    let field = shape_tensor(&ctx, grid, &mask)?;
    let uopts = opts.umbilic.unwrap_or_else(|| {
        if u.expr.is_some() {
            UmbilicOptions::closed_form()
        } else {
            UmbilicOptions::sampled(u.grid.h)
        }
    });
    let set = detect_umbilics(&field, &ctx, &uopts)?;

    let mut input = PhInput::new("Z1", Surface::Disk(Tangency::Assumed));
    input.identically_canonical = set.canonical_region;
    input.unresolved = set.unresolved.clone();
    for um in &set.points {
        let p = um.position;
        if curve.distance(p) <= band {
            input
                .boundary
                .push(BoundarySingularity::new(p, um.index(), um.z1.snapped.is_some()));
        } else if curve.contains(p) {
            input.interior.push(Singularity::from_umbilic(um));
        }
    }
    let z1 = ctx.lines(LineKind::Z1, 0.0);
    let z2 = ctx.lines(LineKind::Z2, 0.0);
    let prof = boundary_tangency(&z1, Some(&z2), curve, 0.5 * h);
    input.surface = Surface::Disk(Tangency::Measured {
        max: prof.max,
        threshold: opts.tangency_threshold,
    });
    input.tangent_field = prof.tangent_field.clone();
    Ok(ph_audit(input))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_sum_of_one_is_consistent() {
        let mut inp = PhInput::new("Z", Surface::Disk(Tangency::Measured { max: Some(0.0), threshold: 1e-3 }));
        inp.interior = vec![Singularity::new([0.0, 0.0], 1.5), Singularity::new([0.3, 0.0], -0.5)];
        let r = ph_audit(inp);
        assert_eq!((r.disk_sum, r.sphere_sum, r.contradiction), (Some(1.0), 2.0, false));
    }

    #[test]
    fn all_negative_tangent_field_contradicts() {
        let mut inp = PhInput::new("Z", Surface::Disk(Tangency::Assumed));
        inp.interior = vec![Singularity::new([0.0, 0.0], -0.5)];
        let r = ph_audit(inp);
        assert!(r.contradiction && r.all_negative && r.tangency_assumed);
        assert_eq!(r.disk_sum, Some(-0.5));
    }

    #[test]
    fn non_tangent_is_not_applicable() {
        let mut inp = PhInput::new("Z", Surface::Disk(Tangency::Measured { max: Some(0.2), threshold: 1e-3 }));
        inp.interior = vec![Singularity::new([0.0, 0.0], -0.5)];
        let r = ph_audit(inp);
        assert!(!r.contradiction && r.not_applicable_reason.is_some());
    }

    #[test]
    fn boundary_indices_count_half() {
        let mut inp = PhInput::new("Z", Surface::Disk(Tangency::Assumed));
        inp.boundary = vec![BoundarySingularity::new([1.0, 0.0], 1.0, true); 2];
        let r = ph_audit(inp);
        assert_eq!(r.disk_sum, Some(1.0));
        assert!(!r.contradiction);
    }
}
