//! Zero-level curves: marching squares, Newton polishing, and jet-based geometry.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::grid::{format_value, ScalarField};
use super::jet::{dot, norm, Jet2};
use super::FieldError;

/// One vertex of a level curve with its local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub pos: [f64; 2],
    /// Arclength from the first vertex.
    pub s: f64,
    /// Unit tangent, positively oriented.
    pub tangent: [f64; 2],
    /// Inner unit normal.
    pub normal: [f64; 2],
    pub curvature: f64,
}

/// A closed, counter-clockwise polyline. The last point repeats the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub points: Vec<CurvePoint>,
}

impl LevelCurve {
    /// Distinct vertices (the closing duplicate is dropped).
    pub fn vertices(&self) -> &[CurvePoint] {
        &self.points[..self.points.len().saturating_sub(1)]
    }

    pub fn length(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.s)
    }

    pub fn signed_area(&self) -> f64 {
        polygon_area(&self.points.iter().map(|p| p.pos).collect::<Vec<_>>())
    }

    /// Non-zero winding test for a point against the polyline.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let mut winding = 0i32;
        for w in self.points.windows(2) {
            let (a, b) = (w[0].pos, w[1].pos);
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
            if a[1] <= p[1] {
                if b[1] > p[1] && cross > 0.0 {
                    winding += 1;
                }
            } else if b[1] <= p[1] && cross < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Distance from `p` to the polyline.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        self.points
            .windows(2)
            .map(|w| segment_distance(p, w[0].pos, w[1].pos))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> [f64; 4] {
        self.points.iter().fold(
            [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
            |b, p| {
                [
                    b[0].min(p.pos[0]),
                    b[1].max(p.pos[0]),
                    b[2].min(p.pos[1]),
                    b[3].max(p.pos[1]),
                ]
            },
        )
    }

    /// Builds a curve from an exact counter-clockwise parametrisation
    /// `τ ∈ [0, 2π) ↦ (γ, γ', γ'')`.
    pub fn from_parametric(
        n: usize,
        f: impl Fn(f64) -> ([f64; 2], [f64; 2], [f64; 2]),
    ) -> Self {
        let mut points = Vec::with_capacity(n + 1);
        let mut s = 0.0;
        let mut prev: Option<[f64; 2]> = None;
        for k in 0..=n {
            let tau = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
            let (pos, d1, d2) = f(tau);
            let speed = norm(d1);
            let tangent = [d1[0] / speed, d1[1] / speed];
            let normal = [-tangent[1], tangent[0]];
            let curvature = (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3);
            if let Some(q) = prev {
                s += norm([pos[0] - q[0], pos[1] - q[1]]);
            }
            prev = Some(pos);
            points.push(CurvePoint {
                pos,
                s,
                tangent,
                normal,
                curvature,
            });
        }
        Self { points }
    }

    /// Axis-aligned ellipse `((x−cx)/a)² + ((y−cy)/b)² = 1`.
    pub fn ellipse(center: [f64; 2], a: f64, b: f64, n: usize) -> Self {
        Self::from_parametric(n, |t| {
            let (s, c) = t.sin_cos();
            (
                [center[0] + a * c, center[1] + b * s],
                [-a * s, b * c],
                [-a * c, -b * s],
            )
        })
    }

    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Self {
        Self::ellipse(center, radius, radius, n)
    }

    /// CSV dump `x,y,s,wx,wy,nx,ny,kappa`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,s,wx,wy,nx,ny,kappa")?;
        for p in &self.points {
            let row = [
                p.pos[0],
                p.pos[1],
                p.s,
                p.tangent[0],
                p.tangent[1],
                p.normal[0],
                p.normal[1],
                p.curvature,
            ];
            let row: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self, FieldError> {
        let mut points = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| FieldError::Parse(e.to_string()))?;
            if n == 0 || line.trim().is_empty() {
                continue;
            }
            let v: Result<Vec<f64>, _> = line.trim().split(',').map(str::parse::<f64>).collect();
            let v = v.map_err(|e| FieldError::Parse(format!("line {}: {e}", n + 1)))?;
            if v.len() != 8 {
                return Err(FieldError::Parse(format!("line {}: expected 8 columns", n + 1)));
            }
            points.push(CurvePoint {
                pos: [v[0], v[1]],
                s: v[2],
                tangent: [v[3], v[4]],
                normal: [v[5], v[6]],
                curvature: v[7],
            });
        }
        if points.len() < 4 {
            return Err(FieldError::Parse("curve needs at least 4 points".into()));
        }
        Ok(Self { points })
    }
}

/// Tuning for [`trace_zero_level`].
#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    /// Polishing tolerance relative to the field scale.
    pub polish_tol: f64,
    /// Gradient floor relative to `scale / extent`.
    pub gradient_floor: f64,
    pub max_polish_iterations: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            polish_tol: 1e-10,
            gradient_floor: 1e-8,
            max_polish_iterations: 30,
        }
    }
}

/// Traces the zero level of `field` with default options.
pub fn trace_zero_level(field: &ScalarField) -> Result<LevelCurve, FieldError> {
    trace_zero_level_with(field, &TraceOptions::default())
}

/// Traces the longest closed component of `{u = 0}`.
///
/// Marching squares on the grid yields a polyline with vertices on cell edges.
/// Each vertex is then moved onto the zero set by Newton steps along the gradient,
/// the polyline is refined until consecutive vertices are at most `h` apart, and
/// the frame `(w, ν, κ)` is computed from the field's jets.
pub fn trace_zero_level_with(field: &ScalarField, opts: &TraceOptions) -> Result<LevelCurve, FieldError> {
    let loops = march(field)?;
    let h = field.grid.h;
    let scale = field.scale();
    let tol = opts.polish_tol * scale;
    let floor = opts.gradient_floor * scale / field.grid.extent();

    let raw = loops
        .into_iter()
        .max_by(|a, b| polygon_area(a).abs().total_cmp(&polygon_area(b).abs()))
        .expect("march returns at least one loop");

    let polish = |p: [f64; 2]| -> Result<[f64; 2], FieldError> {
        let mut p = p;
        for _ in 0..opts.max_polish_iterations {
            let j = field.jet(p[0], p[1])?;
            let g2 = j.p * j.p + j.q * j.q;
            if g2.sqrt() < floor {
                return Err(FieldError::DegenerateGradient(p));
            }
            if j.z.abs() <= tol {
                return Ok(p);
            }
            let step = j.z / g2;
            p = [p[0] - step * j.p, p[1] - step * j.q];
        }
        let j = field.jet(p[0], p[1])?;
        if j.z.abs() <= 10.0 * tol {
            Ok(p)
        } else {
            Err(FieldError::NonFinite(p))
        }
    };

    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(raw.len());
    for p in raw {
        let q = polish(p)?;
        if pts
            .last()
            .is_none_or(|l: &[f64; 2]| norm([q[0] - l[0], q[1] - l[1]]) > 1e-3 * h)
        {
            pts.push(q);
        }
    }
    while pts.len() > 1 {
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        if norm([a[0] - b[0], a[1] - b[1]]) <= 1e-3 * h {
            pts.pop();
        } else {
            break;
        }
    }
    if pts.len() < 4 {
        return Err(FieldError::NoZeroSet);
    }

    // refine so that consecutive vertices are at most h apart
    let mut refined = Vec::with_capacity(2 * pts.len());
    for k in 0..pts.len() {
        let a = pts[k];
        let b = pts[(k + 1) % pts.len()];
        refined.push(a);
        let d = norm([b[0] - a[0], b[1] - a[1]]);
        let pieces = (d / (0.9 * h)).ceil() as usize;
        for m in 1..pieces {
            let f = m as f64 / pieces as f64;
            refined.push(polish([a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])])?);
        }
    }
    if polygon_area(&refined) < 0.0 {
        refined.reverse();
    }

    // the inner normal is ±Du/|Du|; the sign follows the polygon orientation
    let n = refined.len();
    let jets: Vec<Jet2> = refined
        .iter()
        .map(|p| field.jet(p[0], p[1]))
        .collect::<Result<_, _>>()?;
    let mut vote = 0.0;
    for k in 0..n {
        let (a, b) = (refined[(k + n - 1) % n], refined[(k + 1) % n]);
        let geo_normal = [-(b[1] - a[1]), b[0] - a[0]];
        vote += dot(geo_normal, jets[k].gradient()).signum();
    }
    let sign = if vote >= 0.0 { 1.0 } else { -1.0 };

    let mut points = Vec::with_capacity(n + 1);
    let mut s = 0.0;
    for k in 0..=n {
        let idx = k % n;
        let p = refined[idx];
        let j = jets[idx];
        let g = j.gradient_norm();
        if g < floor {
            return Err(FieldError::DegenerateGradient(p));
        }
        let normal = [sign * j.p / g, sign * j.q / g];
        let tangent = [normal[1], -normal[0]];
        let curvature = -j.hessian().eval(tangent, tangent) / (sign * g);
        if k > 0 {
            let q = refined[k - 1];
            s += norm([p[0] - q[0], p[1] - q[1]]);
        }
        points.push(CurvePoint {
            pos: p,
            s,
            tangent,
            normal,
            curvature,
        });
    }
    Ok(LevelCurve { points })
}

type EdgeKey = (u8, usize, usize);

/// Marching squares over cells whose four corners are inside the mask.
/// Returns the closed loops; errors if only open chains exist.
fn march(field: &ScalarField) -> Result<Vec<Vec<[f64; 2]>>, FieldError> {
    let g = &field.grid;
    let pos = |v: f64| v >= 0.0;
    let mut crossing: HashMap<EdgeKey, [f64; 2]> = HashMap::new();
    let mut adj: HashMap<EdgeKey, Vec<EdgeKey>> = HashMap::new();
    let mut any_sign_change = false;

    let edge_point = |a: (usize, usize), b: (usize, usize)| -> [f64; 2] {
        let (va, vb) = (field.value(a.0, a.1), field.value(b.0, b.1));
        let t = va / (va - vb);
        let (pa, pb) = (g.point(a.0, a.1), g.point(b.0, b.1));
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = c.iter().map(|&(a, b)| field.value(a, b)).collect();
            let valid: Vec<bool> = v.iter().map(|x| x.is_finite()).collect();
            let signs: Vec<bool> = v.iter().map(|&x| pos(x)).collect();
            if valid.iter().any(|x| *x) {
                let finite_signs: Vec<bool> = (0..4).filter(|&k| valid[k]).map(|k| signs[k]).collect();
                if finite_signs.iter().any(|s| *s != finite_signs[0]) {
                    any_sign_change = true;
                }
            }
            if !valid.iter().all(|x| *x) {
                continue;
            }
            let keys: [EdgeKey; 4] = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let ends = [(0, 1), (1, 2), (3, 2), (0, 3)];
            let mut cut = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = ends[e];
                if signs[a] != signs[b] {
                    crossing.entry(keys[e]).or_insert_with(|| edge_point(c[a], c[b]));
                    cut.push(e);
                }
            }
            let pairs: Vec<(usize, usize)> = match cut.len() {
                2 => vec![(cut[0], cut[1])],
                4 => {
                    let center = v.iter().sum::<f64>() / 4.0;
                    if pos(center) == signs[0] {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => vec![],
            };
            for (a, b) in pairs {
                adj.entry(keys[a]).or_default().push(keys[b]);
                adj.entry(keys[b]).or_default().push(keys[a]);
            }
        }
    }
    if !any_sign_change {
        return Err(FieldError::NoZeroSet);
    }

    let mut keys: Vec<EdgeKey> = adj.keys().copied().collect();
    keys.sort_unstable();
    let mut visited: HashMap<EdgeKey, bool> = HashMap::new();
    let mut loops = Vec::new();
    let mut open = 0usize;
    for start in keys {
        if visited.contains_key(&start) {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut prev = start;
        let mut cur = adj[&start][0];
        let mut closed = false;
        loop {
            if cur == start {
                closed = true;
                break;
            }
            if visited.contains_key(&cur) {
                break;
            }
            visited.insert(cur, true);
            chain.push(cur);
            let nb = &adj[&cur];
            let next = nb.iter().copied().find(|k| *k != prev);
            match next {
                Some(n) if nb.len() == 2 => {
                    prev = cur;
                    cur = n;
                }
                _ => break,
            }
        }
        if closed && adj[&start].len() == 2 && chain.len() >= 3 {
            loops.push(chain.iter().map(|k| crossing[k]).collect());
        } else {
            // walk the other way to mark the whole open chain
            let mut prev = start;
            if let Some(&next) = adj[&start].get(1) {
                let mut cur = next;
                while !visited.contains_key(&cur) {
                    visited.insert(cur, true);
                    let nb = &adj[&cur];
                    match nb.iter().copied().find(|k| *k != prev) {
                        Some(n) => {
                            prev = cur;
                            cur = n;
                        }
                        None => break,
                    }
                }
            }
            open += 1;
        }
    }
    if loops.is_empty() {
        return Err(if open > 0 || any_sign_change {
            FieldError::NotClosed
        } else {
            FieldError::NoZeroSet
        });
    }
    Ok(loops)
}

fn polygon_area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for k in 0..n {
        let (p, q) = (pts[k], pts[(k + 1) % n]);
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let l2 = dot(ab, ab);
    let t = if l2 > 0.0 { (dot(ap, ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    norm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}
