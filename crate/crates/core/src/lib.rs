//! Canonical families, natural Neumann data and line-field index audits for
//! overdetermined fully nonlinear elliptic problems on planar domains.

pub mod canonical;
pub mod cli;
pub mod equations;
pub mod field;
pub mod index;
pub mod overdetermined;
pub mod solver;

// The guide in book/ is compiled here so its snippets run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/equations.md")]
    mod equations {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/neumann.md")]
    mod neumann {}
    #[doc = include_str!("../../../book/src/index.md")]
    mod index {}
    #[doc = include_str!("../../../book/src/fixtures.md")]
    mod fixtures {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
