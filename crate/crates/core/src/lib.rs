//! Localization-kernel toolkit.
//!
//! Everything here is built around one operation: weighting a sample by a
//! kernel centered at a query and averaging. Local regression, mean shift,
//! density scores, diffusion sampling, embeddings and attention layers are
//! all instances.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adaptive;
pub mod density;
pub mod embedding;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod points;
pub mod sequence;
pub mod shift;
pub mod synth;

pub use error::{Error, Result};
pub use kernel::{Kernel, KernelMatrix, StochasticMatrix};
pub use points::{Dataset, PointSet, Targets};
