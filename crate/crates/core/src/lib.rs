//! Multiple locally linear kernel machines.
//!
//! A classifier built as a sparse, learned combination of locally linear
//! kernels, one family per training sample and bandwidth. Training runs a
//! budgeted active-set ℓ1-MKL solver ([`mkl::sequential_mkl`]) on top of a
//! dual coordinate ascent SVM solver ([`sdca::sdca`]); the result compresses
//! into one linear predictor per selected anchor ([`model::MllkmModel`]), so
//! inference cost depends on the number of selected kernels only.

pub mod bench;
pub mod data;
pub mod error;
pub mod kernels;
pub mod mkl;
pub mod model;
pub mod sdca;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/bench.md")]
    mod bench {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
