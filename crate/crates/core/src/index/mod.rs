//! Index theory for the line fields of the shape tensor: umbilics, half-integer
//! indices, boundary tangency and the Poincaré–Hopf audit.

mod audit;
pub mod quadratic;
mod shape;
mod umbilic;
mod winding;

pub use audit::{
    audit_candidate, boundary_tangency, ph_audit, AuditOptions, BoundarySingularity, IndexReport, PhInput,
    Singularity, Surface, Tangency, TangencyProfile, TangencyRow,
};
pub use shape::{
    bisection_check, bisection_of, eigenline_fields, null_line_fields, shape_tensor, BisectionStats, LineKind,
    ShapeContext, ShapeLines, ShapePoint, ShapeTensorField,
};
pub use umbilic::{detect_umbilics, loop_det_sigma_max, umbilic_at, Umbilic, UmbilicOptions, UmbilicSet};
pub use winding::{line_index, line_index_circle, line_index_path, LineIndex, WindingOptions};

use thiserror::Error;

use crate::canonical::CanonicalError;
use crate::field::FieldError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("Λ is singular or indefinite{}", fmt_at(.at))]
    SingularLambda { at: Option<[f64; 2]> },
    #[error("line angle jumps by {increment:.3} rad near ({:.4}, {:.4}) even at full refinement", .at[0], .at[1])]
    InsufficientSampling { at: [f64; 2], increment: f64 },
    #[error("line field undefined at ({:.4}, {:.4}) on the loop", .at[0], .at[1])]
    InvalidSample { at: [f64; 2] },
    #[error("no loop with det σ < 0 around ({:.4}, {:.4})", .at[0], .at[1])]
    NoValidLoop { at: [f64; 2] },
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn fmt_at(at: &Option<[f64; 2]>) -> String {
    at.map(|p| format!(" at ({:.4}, {:.4})", p[0], p[1])).unwrap_or_default()
}
