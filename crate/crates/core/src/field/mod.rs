//! Scalar fields on planar domains: jets, grids, closed forms, finite differences,
//! line fields and zero-level curves.

mod expr;
pub mod fd;
mod grid;
mod jet;
mod level;
mod lines;

pub use expr::Expr;
pub use grid::{Grid, ScalarField};
pub use jet::{Jet2, SymForm2};
pub use level::{trace_zero_level, trace_zero_level_with, CurvePoint, LevelCurve, TraceOptions};
pub use lines::{
    line_angle_diff, normalize_line_angle, read_line_samples, wrap_pi, LineField, LineSample,
    LineSource,
};

pub(crate) use grid::format_value;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("point ({}, {}) is outside the sampled domain", .0[0], .0[1])]
    OutOfDomain([f64; 2]),
    #[error("non-finite value near ({}, {})", .0[0], .0[1])]
    NonFinite([f64; 2]),
    #[error("the field has no zero set in the domain")]
    NoZeroSet,
    #[error("the zero set has no closed component")]
    NotClosed,
    #[error("gradient vanishes on the zero set near ({}, {})", .0[0], .0[1])]
    DegenerateGradient([f64; 2]),
}

/// Jet of `field` at `point`. Closed-form fields give exact jets; sampled fields
/// fall back to fourth-order differences with cubic interpolation.
pub fn eval_jet(field: &ScalarField, point: [f64; 2]) -> Result<Jet2, FieldError> {
    match &field.expr {
        Some(e) => {
            let j = e.jet(point[0], point[1]).ok_or(FieldError::OutOfDomain(point))?;
            if j.is_finite() {
                Ok(j)
            } else {
                Err(FieldError::NonFinite(point))
            }
        }
        None => fd::grid_jet(field, point[0], point[1]),
    }
}
