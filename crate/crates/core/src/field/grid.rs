use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::jet::Jet2;
use super::FieldError;

/// A uniform node grid: node `(i, j)` sits at `origin + h·(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Result<Self, FieldError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(FieldError::BadGrid(format!("spacing must be positive, got {h}")));
        }
        if nx < 2 || ny < 2 {
            return Err(FieldError::BadGrid(format!("need at least 2×2 nodes, got {nx}×{ny}")));
        }
        Ok(Self { origin, h, nx, ny })
    }

    /// Smallest grid with spacing `h` whose nodes cover the box `[xmin, xmax] × [ymin, ymax]`
    /// padded by `margin` node layers. The origin is snapped to a multiple of `h`,
    /// so the point `(0, 0)` is always a node position.
    pub fn covering(xmin: f64, xmax: f64, ymin: f64, ymax: f64, h: f64, margin: usize) -> Self {
        let i0 = (xmin / h).floor() as i64 - margin as i64;
        let i1 = (xmax / h).ceil() as i64 + margin as i64;
        let j0 = (ymin / h).floor() as i64 - margin as i64;
        let j1 = (ymax / h).ceil() as i64 + margin as i64;
        Self {
            origin: [i0 as f64 * h, j0 as f64 * h],
            h,
            nx: (i1 - i0 + 1) as usize,
            ny: (j1 - j0 + 1) as usize,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    /// Continuous node coordinates of a point.
    pub fn locate(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin[0]) / self.h,
            (y - self.origin[1]) / self.h,
        )
    }

    pub fn extent(&self) -> f64 {
        ((self.nx - 1) as f64 * self.h).max((self.ny - 1) as f64 * self.h)
    }
}

/// Scalar values on a masked grid, optionally backed by a closed form.
///
/// Nodes outside the mask hold `NaN`. When `expr` is present, jets are exact;
/// otherwise they come from fourth-order finite differences.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub expr: Option<Expr>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::BadGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            expr: None,
        })
    }

    /// Samples a closed form on the grid, keeping it for exact jets. Nodes where
    /// the expression is undefined or `mask` is false are left out.
    pub fn from_expr(expr: Expr, grid: Grid, mask: Option<&dyn Fn([f64; 2]) -> bool>) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                let pt = grid.point(i, j);
                if mask.is_some_and(|m| !m(pt)) {
                    return f64::NAN;
                }
                expr.value(pt[0], pt[1]).unwrap_or(f64::NAN)
            })
            .collect();
        Self {
            grid,
            values,
            expr: Some(expr),
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.value(i, j).is_finite()
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }

    /// Largest absolute value over the mask; used to scale tolerances.
    pub fn scale(&self) -> f64 {
        let m = self
            .values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    /// Jet at an arbitrary point: exact for closed forms, finite differences otherwise.
    pub fn jet(&self, x: f64, y: f64) -> Result<Jet2, FieldError> {
        super::eval_jet(self, [x, y])
    }

    /// Extends the field outwards by `layers` node layers using quadratic
    /// extrapolation along grid lines. Values added this way are only as good as
    /// the extrapolation; they make zero-level tracing possible up to the mask edge.
    pub fn extend_collar(&mut self, layers: usize) {
        let g = self.grid;
        for _ in 0..layers {
            let mut updates = Vec::new();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    if self.is_valid(i, j) {
                        continue;
                    }
                    let mut acc = 0.0;
                    let mut cnt = 0;
                    for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                        let pick = |k: i64| -> Option<f64> {
                            let ii = i as i64 + di * k;
                            let jj = j as i64 + dj * k;
                            if ii < 0 || jj < 0 || ii >= g.nx as i64 || jj >= g.ny as i64 {
                                return None;
                            }
                            let v = self.value(ii as usize, jj as usize);
                            v.is_finite().then_some(v)
                        };
                        if let (Some(a), Some(b), Some(c)) = (pick(1), pick(2), pick(3)) {
                            acc += 3.0 * a - 3.0 * b + c;
                            cnt += 1;
                        }
                    }
                    if cnt > 0 {
                        updates.push((g.index(i, j), acc / cnt as f64));
                    }
                }
            }
            if updates.is_empty() {
                break;
            }
            for (k, v) in updates {
                self.values[k] = v;
            }
        }
    }

    /// Writes the on-disk format: a header line `nx,ny,h,x0,y0`, one line of
    /// those values, then `ny` rows of `nx` comma-separated values (`NaN` outside).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(w, "nx,ny,h,x0,y0")?;
        writeln!(w, "{},{},{},{},{}", g.nx, g.ny, g.h, g.origin[0], g.origin[1])?;
        for j in 0..g.ny {
            let row: Vec<String> = (0..g.nx).map(|i| format_value(self.value(i, j))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, FieldError> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String, FieldError> {
            lines
                .next()
                .ok_or_else(|| FieldError::Parse(format!("missing {what}")))?
                .map_err(|e| FieldError::Parse(e.to_string()))
        };
        let header = next("header")?;
        if header.trim() != "nx,ny,h,x0,y0" {
            return Err(FieldError::Parse(format!("unexpected header `{}`", header.trim())));
        }
        let spec = next("grid line")?;
        let parts: Vec<&str> = spec.trim().split(',').collect();
        if parts.len() != 5 {
            return Err(FieldError::Parse("grid line needs 5 entries".into()));
        }
        let num = |s: &str| -> Result<f64, FieldError> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| FieldError::Parse(format!("`{s}`: {e}")))
        };
        let nx = num(parts[0])? as usize;
        let ny = num(parts[1])? as usize;
        let grid = Grid::new([num(parts[3])?, num(parts[4])?], num(parts[2])?, nx, ny)?;
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..ny {
            let row = next(&format!("row {j}"))?;
            let vals: Vec<&str> = row.trim().split(',').collect();
            if vals.len() != nx {
                return Err(FieldError::Parse(format!(
                    "row {j}: expected {nx} values, got {}",
                    vals.len()
                )));
            }
            for v in vals {
                values.push(num(v)?);
            }
        }
        Self::from_values(grid, values)
    }
}

pub(crate) fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        "NaN".to_string()
    }
}
