//! Unoriented direction fields (angles mod π).

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};

use super::grid::{format_value, Grid};
use super::FieldError;

/// Maps any angle to its representative in `[0, π)`.
pub fn normalize_line_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Signed angular distance from line `a` to line `b`, as the representative of
/// `b − a (mod π)` in `(−π/2, π/2]`.
pub fn line_angle_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(PI);
    if d > FRAC_PI_2 {
        d - PI
    } else {
        d
    }
}

/// Representative of an angle mod 2π in `(−π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let d = (a + PI).rem_euclid(2.0 * PI) - PI;
    if d <= -PI {
        d + 2.0 * PI
    } else {
        d
    }
}

/// Anything that assigns an unoriented line (angle mod π) to points of the plane.
/// `None` marks points where the field is singular or undefined.
pub trait LineSource {
    fn angle_at(&self, p: [f64; 2]) -> Option<f64>;
}

impl<F> LineSource for F
where
    F: Fn([f64; 2]) -> Option<f64>,
{
    fn angle_at(&self, p: [f64; 2]) -> Option<f64> {
        self(p)
    }
}

/// A line field sampled on grid nodes, with a validity mask.
#[derive(Clone, Debug)]
pub struct LineField {
    pub grid: Grid,
    pub angles: Vec<f64>,
    pub valid: Vec<bool>,
}

impl LineField {
    pub fn sample(grid: Grid, source: &dyn LineSource, mask: &dyn Fn([f64; 2]) -> bool) -> Self {
        let mut angles = vec![f64::NAN; grid.len()];
        let mut valid = vec![false; grid.len()];
        for k in 0..grid.len() {
            let (i, j) = grid.coords(k);
            let pt = grid.point(i, j);
            if !mask(pt) {
                continue;
            }
            if let Some(a) = source.angle_at(pt) {
                angles[k] = normalize_line_angle(a);
                valid[k] = true;
            }
        }
        Self {
            grid,
            angles,
            valid,
        }
    }

    /// The rows of [`LineField::write_csv`], without the round trip through text.
    pub fn samples(&self) -> Vec<LineSample> {
        (0..self.grid.len())
            .map(|k| {
                let (i, j) = self.grid.coords(k);
                let p = self.grid.point(i, j);
                LineSample {
                    x: p[0],
                    y: p[1],
                    theta: self.angles[k],
                    valid: self.valid[k],
                }
            })
            .collect()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// CSV dump with columns `x,y,theta,valid`, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,theta,valid")?;
        for k in 0..self.grid.len() {
            let (i, j) = self.grid.coords(k);
            let [x, y] = self.grid.point(i, j);
            let theta = if self.valid[k] { self.angles[k] } else { f64::NAN };
            writeln!(
                w,
                "{},{},{},{}",
                format_value(x),
                format_value(y),
                format_value(theta),
                u8::from(self.valid[k])
            )?;
        }
        Ok(())
    }
}

impl LineSource for LineField {
    /// Bilinear interpolation of the doubled-angle unit vectors of the four
    /// surrounding nodes; all four must be valid.
    fn angle_at(&self, p: [f64; 2]) -> Option<f64> {
        let (fx, fy) = self.grid.locate(p[0], p[1]);
        let (i0, j0) = (fx.floor(), fy.floor());
        if i0 < 0.0 || j0 < 0.0 {
            return None;
        }
        let (i0, j0) = (i0 as usize, j0 as usize);
        if i0 + 1 >= self.grid.nx || j0 + 1 >= self.grid.ny {
            return None;
        }
        let (ax, ay) = (fx - i0 as f64, fy - j0 as f64);
        let mut v = [0.0, 0.0];
        for (di, dj, w) in [
            (0, 0, (1.0 - ax) * (1.0 - ay)),
            (1, 0, ax * (1.0 - ay)),
            (0, 1, (1.0 - ax) * ay),
            (1, 1, ax * ay),
        ] {
            let k = self.grid.index(i0 + di, j0 + dj);
            if !self.valid[k] {
                return None;
            }
            let (s, c) = (2.0 * self.angles[k]).sin_cos();
            v[0] += w * c;
            v[1] += w * s;
        }
        if v[0].hypot(v[1]) < 1e-9 {
            return None;
        }
        Some(normalize_line_angle(0.5 * v[1].atan2(v[0])))
    }
}

/// Rows of a line-field dump, as read back for rendering.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSample {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub valid: bool,
}

pub fn read_line_samples<R: BufRead>(r: R) -> Result<Vec<LineSample>, FieldError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| FieldError::Parse(e.to_string()))?;
        if n == 0 {
            if line.trim() != "x,y,theta,valid" {
                return Err(FieldError::Parse(format!("unexpected header `{}`", line.trim())));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 4 {
            return Err(FieldError::Parse(format!("line {}: expected 4 columns", n + 1)));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| FieldError::Parse(format!("line {}: `{s}`: {e}", n + 1)))
        };
        out.push(LineSample {
            x: num(cols[0])?,
            y: num(cols[1])?,
            theta: num(cols[2])?,
            valid: cols[3] == "1",
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_diff_examples() {
        assert!((line_angle_diff(0.1, 0.2) - 0.1).abs() < 1e-15);
        assert!((line_angle_diff(3.1, 0.05) - (0.05 - 3.1 + PI)).abs() < 1e-15);
        assert!((line_angle_diff(3.1, 0.05) - 0.0916).abs() < 1e-4);
        assert_eq!(line_angle_diff(0.0, FRAC_PI_2), FRAC_PI_2);
        assert_eq!(line_angle_diff(FRAC_PI_2, 0.0), FRAC_PI_2);
    }

    #[test]
    fn normalize_range() {
        assert_eq!(normalize_line_angle(PI), 0.0);
        assert!((normalize_line_angle(-0.25) - (PI - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn interpolation_handles_wraparound() {
        let grid = Grid::new([0.0, 0.0], 1.0, 2, 2).unwrap();
        let lf = LineField {
            grid,
            angles: vec![0.01, PI - 0.01, 0.01, PI - 0.01],
            valid: vec![true; 4],
        };
        let a = lf.angle_at([0.5, 0.5]).unwrap();
        assert!(line_angle_diff(a, 0.0).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let grid = Grid::new([0.0, 0.0], 0.5, 3, 2).unwrap();
        let lf = LineField::sample(grid, &|p: [f64; 2]| (p[0] > 0.0).then_some(0.3), &|_| true);
        let mut buf = Vec::new();
        lf.write_csv(&mut buf).unwrap();
        let rows = read_line_samples(&buf[..]).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().filter(|r| r.valid).count(), 4);
    }
}
