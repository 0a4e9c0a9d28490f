//! Fourth-order finite-difference jets on grids, with cubic interpolation off-grid.

use super::grid::ScalarField;
use super::jet::Jet2;
use super::FieldError;

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// Jet at node `(i, j)` from centered five-point stencils (mixed term: tensor of
/// first-derivative stencils).
pub fn node_jet(field: &ScalarField, i: i64, j: i64) -> Result<Jet2, FieldError> {
    let g = &field.grid;
    if i < 2 || j < 2 || i + 2 >= g.nx as i64 || j + 2 >= g.ny as i64 {
        return Err(FieldError::OutOfDomain(g.point(i.max(0) as usize, j.max(0) as usize)));
    }
    let at = |a: i64, b: i64| field.value((i + a) as usize, (j + b) as usize);
    let h = g.h;
    let z = at(0, 0);
    let (mut p, mut q, mut r, mut t, mut s) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..5 {
        let o = k as i64 - 2;
        p += D1[k] * at(o, 0);
        q += D1[k] * at(0, o);
        r += D2[k] * at(o, 0);
        t += D2[k] * at(0, o);
        for l in 0..5 {
            if D1[k] != 0.0 && D1[l] != 0.0 {
                s += D1[k] * D1[l] * at(o, l as i64 - 2);
            }
        }
    }
    let jet = Jet2::new(z, p / h, q / h, r / (h * h), s / (h * h), t / (h * h));
    if jet.is_finite() {
        Ok(jet)
    } else {
        // a NaN anywhere in the stencil means the mask cut it
        if [z, p, q, r, s, t].iter().any(|v| v.is_nan()) {
            Err(FieldError::OutOfDomain(g.point(i as usize, j as usize)))
        } else {
            Err(FieldError::NonFinite(g.point(i as usize, j as usize)))
        }
    }
}

fn cubic_weights(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// Jet at an arbitrary point: node jets on the surrounding 4×4 block,
/// combined with tensor-product cubic Lagrange weights.
pub fn grid_jet(field: &ScalarField, x: f64, y: f64) -> Result<Jet2, FieldError> {
    let (fx, fy) = field.grid.locate(x, y);
    if !(fx.is_finite() && fy.is_finite()) {
        return Err(FieldError::OutOfDomain([x, y]));
    }
    let (i0, j0) = (fx.floor() as i64, fy.floor() as i64);
    let (wx, wy) = (cubic_weights(fx - i0 as f64), cubic_weights(fy - j0 as f64));
    let mut acc = [0.0; 6];
    for (b, wyb) in wy.iter().enumerate() {
        for (a, wxa) in wx.iter().enumerate() {
            let w = wxa * wyb;
            let node = node_jet(field, i0 - 1 + a as i64, j0 - 1 + b as i64)
                .map_err(|_| FieldError::OutOfDomain([x, y]))?;
            for (k, v) in node.as_array().iter().enumerate() {
                acc[k] += w * v;
            }
        }
    }
    Ok(Jet2::from_array(acc))
}
