//! Regularity decompositions of sparse `{0,1}` matrices.

pub mod csp;
pub mod decompose;
pub mod error;
pub mod measure;
pub mod oracle;
pub mod refine;
pub mod regularity;
pub mod tensor;

pub use error::{Error, Result};

/// Absolute tolerance for comparing binary64 quantities against the
/// non-strict inequalities the algorithms guarantee.
pub const TOL: f64 = 1e-9;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cut-norm.md")]
    mod cut_norm {}
    #[doc = include_str!("../../../book/src/regularity.md")]
    mod regularity {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/tensors-and-csp.md")]
    mod tensors_and_csp {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
