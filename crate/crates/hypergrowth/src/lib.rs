//! Growth diagnostics for sparse historical series whose reciprocals run
//! along straight lines: fitting finite-time-singularity models, splitting
//! multi-regime trajectories, locating divergence onsets, testing
//! stagnation hypotheses, and producing a reproducible JSON report with
//! figure-ready data.

// Negated float comparisons like `!(x > 0.0)` are NaN rejections.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hypermodel;
pub mod hypotheses;
pub mod ingest;
pub mod regimes;
pub mod report;

pub use error::{Error, Result};
