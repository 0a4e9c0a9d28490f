//! Umbilic points (`S = Id`) of a candidate against a family, with their indices.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use serde::Serialize;

use super::shape::{LineKind, ShapeContext, ShapeTensorField};
use super::winding::{line_index_circle, LineIndex, WindingOptions};
use super::IndexError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UmbilicOptions {
    /// Nodes with `‖S − Id‖_F` at or below this are umbilic.
    pub threshold: f64,
    /// Smallest loop radius in units of the grid spacing.
    pub min_loop_factor: f64,
    /// An umbilic component wider than this many minimum loop radii is a
    /// canonical region rather than an isolated point.
    pub region_factor: f64,
    /// Samples used to check `det σ < 0` along a loop.
    pub loop_samples: usize,
    pub winding: WindingOptions,
}

impl UmbilicOptions {
    /// Defaults for exact jets.
    pub fn closed_form() -> Self {
        Self {
            threshold: 1e-4,
            min_loop_factor: 3.0,
            region_factor: 10.0,
            loop_samples: 256,
            winding: WindingOptions::default(),
        }
    }

    /// Defaults for jets differenced from a grid of spacing `h`.
    pub fn sampled(h: f64) -> Self {
        Self {
            threshold: (10.0 * h * h).max(1e-3),
            ..Self::closed_form()
        }
    }
}

/// An isolated umbilic and the indices of the four line fields around it.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Umbilic {
    pub position: [f64; 2],
    pub deviation: f64,
    pub loop_radius: f64,
    /// Largest `det σ` seen on the loop; negative when the loop is valid.
    pub det_sigma_max: f64,
    pub z1: LineIndex,
    pub z2: LineIndex,
    pub u: Option<LineIndex>,
    pub v: Option<LineIndex>,
    /// `Z1` index on a loop of twice the radius, when one fits.
    pub cross_check: Option<LineIndex>,
    pub degree_estimate: f64,
}

impl Umbilic {
    pub fn index(&self) -> f64 {
        self.z1.value()
    }

    /// True when the two-radius check ran and disagreed.
    pub fn loop_dependent(&self) -> bool {
        self.cross_check.is_some_and(|c| c.value() != self.z1.value())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UmbilicSet {
    pub points: Vec<Umbilic>,
    /// Points that are umbilic but whose index could not be computed.
    pub unresolved: Vec<[f64; 2]>,
    /// Some umbilic component is too wide to be isolated.
    pub canonical_region: bool,
    /// Fraction of valid nodes below the threshold.
    pub canonical_fraction: f64,
    pub threshold: f64,
}

/// Finds umbilics from the sampled deviations, refines them against exact
/// evaluation, and computes the loop indices.
pub fn detect_umbilics(
    field: &ShapeTensorField,
    ctx: &ShapeContext<'_>,
    opts: &UmbilicOptions,
) -> Result<UmbilicSet, IndexError> {
    let g = field.grid;
    let dev = field.deviations();
    let below: Vec<bool> = dev.iter().map(|d| d.is_some_and(|d| d <= opts.threshold)).collect();
    let n_valid = dev.iter().flatten().count();
    let n_below = below.iter().filter(|b| **b).count();

    // connected components of sub-threshold nodes
    let r_min = opts.min_loop_factor * g.h;
    let mut comp = vec![usize::MAX; g.len()];
    let mut wide = Vec::new();
    let mut ncomp = 0;
    for start in 0..g.len() {
        if !below[start] || comp[start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        comp[start] = ncomp;
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        while let Some(k) = queue.pop_front() {
            let (i, j) = g.coords(k);
            let p = g.point(i, j);
            bb = [bb[0].min(p[0]), bb[1].max(p[0]), bb[2].min(p[1]), bb[3].max(p[1])];
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= g.nx as i64 || nj >= g.ny as i64 {
                    continue;
                }
                let nk = g.index(ni as usize, nj as usize);
                if below[nk] && comp[nk] == usize::MAX {
                    comp[nk] = ncomp;
                    queue.push_back(nk);
                }
            }
        }
        let diam = (bb[1] - bb[0]).hypot(bb[3] - bb[2]);
        wide.push(diam > opts.region_factor * r_min);
        ncomp += 1;
    }
    let canonical_region = wide.iter().any(|w| *w);

    // candidates: local minima of the deviation outside wide components
    let mut found: Vec<([f64; 2], f64)> = Vec::new();
    for k in 0..g.len() {
        let Some(d) = dev[k] else { continue };
        if comp[k] != usize::MAX && wide[comp[k]] {
            continue;
        }
        let (i, j) = g.coords(k);
        let mut is_min = true;
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if (di, dj) == (0, 0) || ni < 0 || nj < 0 || ni >= g.nx as i64 || nj >= g.ny as i64 {
                    continue;
                }
                if let Some(dn) = dev[g.index(ni as usize, nj as usize)] {
                    if dn < d || (dn == d && g.index(ni as usize, nj as usize) < k) {
                        is_min = false;
                    }
                }
            }
        }
        if !is_min {
            continue;
        }
        let (p, dmin) = refine(ctx, g.point(i, j), g.h);
        if dmin <= opts.threshold && !found.iter().any(|(q, _)| (q[0] - p[0]).hypot(q[1] - p[1]) < g.h) {
            found.push((p, dmin));
        }
    }
    found.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));

    let mut points = Vec::new();
    let mut unresolved = Vec::new();
    for (idx, (p, d)) in found.iter().enumerate() {
        let nearest = found
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != idx)
            .map(|(_, (q, _))| (q[0] - p[0]).hypot(q[1] - p[1]))
            .fold(f64::INFINITY, f64::min);
        let r_max = (0.5 * nearest).min(opts.region_factor * r_min);
        match umbilic_at(ctx, *p, *d, r_min, r_max, opts) {
            Ok(u) => points.push(u),
            Err(_) => unresolved.push(*p),
        }
    }
    Ok(UmbilicSet {
        points,
        unresolved,
        canonical_region,
        canonical_fraction: if n_valid > 0 { n_below as f64 / n_valid as f64 } else { 0.0 },
        threshold: opts.threshold,
    })
}

/// Largest `det σ` on `samples` points of a circle; `+∞` if a point cannot be evaluated.
pub fn loop_det_sigma_max(ctx: &ShapeContext<'_>, center: [f64; 2], radius: f64, samples: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..samples {
        let a = TAU * k as f64 / samples as f64;
        let p = [center[0] + radius * a.cos(), center[1] + radius * a.sin()];
        match ctx.at(p) {
            Ok(sp) => worst = worst.max(sp.sigma().det()),
            Err(_) => return f64::INFINITY,
        }
    }
    worst
}

/// Indices around a known umbilic, using the smallest radius in `[r_min, r_max]`
/// on which `det σ < 0`.
pub fn umbilic_at(
    ctx: &ShapeContext<'_>,
    p: [f64; 2],
    deviation: f64,
    r_min: f64,
    r_max: f64,
    opts: &UmbilicOptions,
) -> Result<Umbilic, IndexError> {
    let mut r = r_min;
    let (radius, det_max) = loop {
        let dm = loop_det_sigma_max(ctx, p, r, opts.loop_samples);
        if dm < 0.0 {
            break (r, dm);
        }
        r *= 1.25;
        if r > r_max.max(r_min) {
            return Err(IndexError::NoValidLoop { at: p });
        }
    };
    let w = &opts.winding;
    let z1 = line_index_circle(&ctx.lines(LineKind::Z1, 0.0), p, radius, w)?;
    let z2 = line_index_circle(&ctx.lines(LineKind::Z2, 0.0), p, radius, w)?;
    let u = line_index_circle(&ctx.lines(LineKind::U, 0.0), p, radius, w).ok();
    let v = line_index_circle(&ctx.lines(LineKind::V, 0.0), p, radius, w).ok();
    let cross_check = if loop_det_sigma_max(ctx, p, 2.0 * radius, opts.loop_samples) < 0.0 {
        line_index_circle(&ctx.lines(LineKind::Z1, 0.0), p, 2.0 * radius, w).ok()
    } else {
        None
    };
    Ok(Umbilic {
        position: p,
        deviation,
        loop_radius: radius,
        det_sigma_max: det_max,
        degree_estimate: 2.0 - 2.0 * z1.value(),
        z1,
        z2,
        u,
        v,
        cross_check,
    })
}

/// Minimizes `ln ‖S − Id‖_F` near `start` by Nelder–Mead, staying within `2h`.
fn refine(ctx: &ShapeContext<'_>, start: [f64; 2], h: f64) -> ([f64; 2], f64) {
    let dev = |p: [f64; 2]| -> f64 {
        if (p[0] - start[0]).hypot(p[1] - start[1]) > 2.0 * h {
            return f64::INFINITY;
        }
        ctx.at(p).map(|s| s.deviation()).unwrap_or(f64::INFINITY)
    };
    let cost = |p: [f64; 2]| (dev(p) + 1e-300).ln();
    let s = 0.5 * h;
    let mut simplex = [start, [start[0] + s, start[1]], [start[0], start[1] + s]];
    let mut f = simplex.map(cost);
    for _ in 0..400 {
        let mut order = [0usize, 1, 2];
        order.sort_by(|a, b| f[*a].total_cmp(&f[*b]));
        simplex = order.map(|k| simplex[k]);
        f = order.map(|k| f[k]);
        let size = (simplex[1][0] - simplex[0][0])
            .hypot(simplex[1][1] - simplex[0][1])
            .max((simplex[2][0] - simplex[0][0]).hypot(simplex[2][1] - simplex[0][1]));
        if size < 1e-10 * (1.0 + h) {
            break;
        }
        let c = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let at = |t: f64| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let xr = at(-1.0);
        let fr = cost(xr);
        if fr < f[0] {
            let xe = at(-2.0);
            let fe = cost(xe);
            if fe < fr {
                simplex[2] = xe;
                f[2] = fe;
            } else {
                simplex[2] = xr;
                f[2] = fr;
            }
        } else if fr < f[1] {
            simplex[2] = xr;
            f[2] = fr;
        } else {
            let xc = if fr < f[2] { at(-0.5) } else { at(0.5) };
            let fc = cost(xc);
            if fc < f[2].min(fr) {
                simplex[2] = xc;
                f[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    f[k] = cost(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|a, b| f[*a].total_cmp(&f[*b])).unwrap_or(0);
    (simplex[best], dev(simplex[best]))
}
