//! SVG plots of line fields: a tick per node, the boundary, and labelled singularities.

use std::fmt::Write;

use crate::field::{LevelCurve, LineSample};

/// A labelled point. Points at infinity are drawn in the top-right corner.
#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub at: Option<[f64; 2]>,
    pub index: f64,
}

const SIZE: f64 = 600.0;
const PAD: f64 = 30.0;

/// `½`-multiples as fractions with a true minus sign: `−1/2`, `3`, `5/2`.
pub fn index_label(v: f64) -> String {
    let twice = (2.0 * v).round();
    if (2.0 * v - twice).abs() > 1e-9 {
        return format!("{v:.3}").replace('-', "\u{2212}");
    }
    let k = twice as i64;
    let sign = if k < 0 { "\u{2212}" } else { "" };
    if k % 2 == 0 {
        format!("{sign}{}", (k / 2).abs())
    } else {
        format!("{sign}{}/2", k.abs())
    }
}

fn spacing(samples: &[LineSample]) -> f64 {
    let mut xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min)
}

/// Deterministic SVG for a line-field dump.
pub fn render_svg(samples: &[LineSample], curve: Option<&LevelCurve>, markers: &[Marker], legend: Option<&str>) -> String {
    let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    let mut grow = |x: f64, y: f64| {
        bb = [bb[0].min(x), bb[1].max(x), bb[2].min(y), bb[3].max(y)];
    };
    samples.iter().for_each(|s| grow(s.x, s.y));
    if let Some(c) = curve {
        c.points.iter().for_each(|p| grow(p.pos[0], p.pos[1]));
    }
    markers.iter().filter_map(|m| m.at).for_each(|p| grow(p[0], p[1]));
    if !bb[0].is_finite() {
        bb = [-1.0, 1.0, -1.0, 1.0];
    }
    let span = (bb[1] - bb[0]).max(bb[3] - bb[2]).max(1e-12);
    let k = (SIZE - 2.0 * PAD) / span;
    let map = |x: f64, y: f64| (PAD + (x - bb[0]) * k, SIZE - PAD - (y - bb[2]) * k);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let h = spacing(samples);
    let half = if h.is_finite() { 0.4 * h * k } else { 4.0 };
    let _ = writeln!(svg, r#"<g stroke="black" stroke-width="1">"#);
    for s in samples.iter().filter(|s| s.valid) {
        let (cx, cy) = map(s.x, s.y);
        let (dx, dy) = (half * s.theta.cos(), -half * s.theta.sin());
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            cx - dx,
            cy - dy,
            cx + dx,
            cy + dy
        );
    }
    let _ = writeln!(svg, "</g>");

    if let Some(c) = curve {
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|p| {
                let (x, y) = map(p.pos[0], p.pos[1]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
    }

    for m in markers {
        let (x, y, text) = match m.at {
            Some(p) => {
                let (x, y) = map(p[0], p[1]);
                (x, y, index_label(m.index))
            }
            None => (SIZE - PAD, PAD, format!("\u{221e}: {}", index_label(m.index))),
        };
        let _ = writeln!(
            svg,
            r#"<circle class="singularity" cx="{x:.2}" cy="{y:.2}" r="6" fill="crimson"/><text x="{:.2}" y="{:.2}" font-size="14" fill="crimson" text-anchor="end">{text}</text>"#,
            x - 8.0,
            y - 8.0,
        );
    }
    if let Some(l) = legend {
        let _ = writeln!(
            svg,
            r#"<text x="{PAD}" y="{:.2}" font-size="14">{}</text>"#,
            SIZE - 8.0,
            l.replace('&', "&amp;").replace('<', "&lt;")
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_gives_parallel_ticks() {
        let samples: Vec<LineSample> = (0..100)
            .map(|k| LineSample {
                x: (k % 10) as f64 * 0.1,
                y: (k / 10) as f64 * 0.1,
                theta: 0.4,
                valid: true,
            })
            .collect();
        let svg = render_svg(&samples, None, &[], None);
        assert_eq!(svg.matches("<line ").count(), 100);
        assert_eq!(svg.matches("class=\"singularity\"").count(), 0);
        assert_eq!(svg, render_svg(&samples, None, &[], None));
    }

    #[test]
    fn labels() {
        assert_eq!(index_label(-0.5), "\u{2212}1/2");
        assert_eq!(index_label(2.5), "5/2");
        assert_eq!(index_label(-1.0), "\u{2212}1");
        assert_eq!(index_label(0.0), "0");
    }
}
