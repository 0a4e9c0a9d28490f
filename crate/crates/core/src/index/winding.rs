//! Half-integer indices of line fields around closed loops.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use serde::Serialize;

use crate::field::{line_angle_diff, LineSource};

use super::IndexError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingOptions {
    pub initial_samples: usize,
    pub max_depth: usize,
    /// Increments above this are refined.
    pub refine_above: f64,
    /// Increments at or above this after full refinement are an error.
    pub fail_at: f64,
    /// Snap to the nearest half-integer only within this distance.
    pub snap_tol: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self {
            initial_samples: 64,
            max_depth: 14,
            refine_above: FRAC_PI_4,
            fail_at: FRAC_PI_2,
            snap_tol: 0.1,
        }
    }
}

/// Result of a winding computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LineIndex {
    /// Total turning of the line angle divided by `2π`.
    pub raw: f64,
    /// Nearest multiple of `½`, present only when within the snap tolerance.
    pub snapped: Option<f64>,
    pub snap_distance: f64,
    pub samples: usize,
    pub max_increment: f64,
}

impl LineIndex {
    fn from_raw(raw: f64, samples: usize, max_increment: f64, snap_tol: f64) -> Self {
        let k = (2.0 * raw).round() / 2.0;
        let d = (raw - k).abs();
        Self {
            raw,
            snapped: (d <= snap_tol).then_some(k),
            snap_distance: d,
            samples,
            max_increment,
        }
    }

    /// The snapped index if available, otherwise the raw winding.
    pub fn value(&self) -> f64 {
        self.snapped.unwrap_or(self.raw)
    }
}

struct Walker<'a> {
    src: &'a dyn LineSource,
    path: &'a dyn Fn(f64) -> [f64; 2],
    opts: WindingOptions,
    samples: usize,
    max_inc: f64,
}

impl Walker<'_> {
    fn angle(&mut self, t: f64) -> Result<f64, IndexError> {
        let p = (self.path)(t);
        self.samples += 1;
        self.src.angle_at(p).ok_or(IndexError::InvalidSample { at: p })
    }

    fn segment(&mut self, t0: f64, a0: f64, t1: f64, a1: f64, depth: usize) -> Result<f64, IndexError> {
        let d = line_angle_diff(a0, a1);
        if d.abs() <= self.opts.refine_above {
            self.max_inc = self.max_inc.max(d.abs());
            return Ok(d);
        }
        if depth >= self.opts.max_depth {
            if d.abs() >= self.opts.fail_at {
                return Err(IndexError::InsufficientSampling {
                    at: (self.path)(0.5 * (t0 + t1)),
                    increment: d.abs(),
                });
            }
            self.max_inc = self.max_inc.max(d.abs());
            return Ok(d);
        }
        let tm = 0.5 * (t0 + t1);
        let am = self.angle(tm)?;
        Ok(self.segment(t0, a0, tm, am, depth + 1)? + self.segment(tm, am, t1, a1, depth + 1)?)
    }
}

/// Index of `src` along the closed path `t ∈ [0, 1] ↦ path(t)`, `path(1) = path(0)`.
pub fn line_index_path(
    src: &dyn LineSource,
    path: &dyn Fn(f64) -> [f64; 2],
    opts: &WindingOptions,
) -> Result<LineIndex, IndexError> {
    let mut w = Walker {
        src,
        path,
        opts: *opts,
        samples: 0,
        max_inc: 0.0,
    };
    let n = opts.initial_samples.max(4);
    let a_first = w.angle(0.0)?;
    let mut prev = (0.0, a_first);
    let mut total = 0.0;
    for k in 1..=n {
        let t = k as f64 / n as f64;
        let a = if k == n { a_first } else { w.angle(t)? };
        total += w.segment(prev.0, prev.1, t, a, 0)?;
        prev = (t, a);
    }
    Ok(LineIndex::from_raw(total / TAU, w.samples, w.max_inc, opts.snap_tol))
}

/// Index around the circle of radius `radius` about `center`, traversed counter-clockwise.
pub fn line_index_circle(
    src: &dyn LineSource,
    center: [f64; 2],
    radius: f64,
    opts: &WindingOptions,
) -> Result<LineIndex, IndexError> {
    let path = move |t: f64| {
        let (s, c) = (TAU * t).sin_cos();
        [center[0] + radius * c, center[1] + radius * s]
    };
    line_index_path(src, &path, opts)
}

/// Index along a closed polyline (the closing segment is implied).
pub fn line_index(src: &dyn LineSource, polyline: &[[f64; 2]], opts: &WindingOptions) -> Result<LineIndex, IndexError> {
    let mut pts: Vec<[f64; 2]> = polyline.to_vec();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    let n = pts.len();
    if n < 3 {
        return Err(IndexError::InvalidSample {
            at: pts.first().copied().unwrap_or([0.0, 0.0]),
        });
    }
    let mut cum = vec![0.0; n + 1];
    for k in 0..n {
        let (a, b) = (pts[k], pts[(k + 1) % n]);
        cum[k + 1] = cum[k] + (b[0] - a[0]).hypot(b[1] - a[1]);
    }
    let len = cum[n];
    let path = |t: f64| {
        let s = (t * len).clamp(0.0, len);
        let k = match cum.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(k) => k.min(n - 1),
            Err(k) => k - 1,
        };
        let (a, b) = (pts[k], pts[(k + 1) % n]);
        let seg = cum[k + 1] - cum[k];
        let f = if seg > 0.0 { (s - cum[k]) / seg } else { 0.0 };
        [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
    };
    let opts = WindingOptions {
        initial_samples: opts.initial_samples.max(n),
        ..*opts
    };
    line_index_path(src, &path, &opts)
}
