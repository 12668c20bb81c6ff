//! Floor-guided hierarchical training of dense feed-forward networks.
//!
//! A *floor stack* arranges networks by structural complexity: the topmost
//! floor is the simplest, and each floor below doubles depth and width.
//! Training proceeds top-down in outer steps — each floor is first trained
//! on labels (cross-entropy), then its stored hidden and output values guide
//! the next floor down through element-wise MSE. Floor 1, the bottom and
//! most complex model, is architecturally identical to a conventionally
//! trained baseline, which makes method comparisons exact.
//!
//! The crate also ships the supporting instrumentation: per-layer
//! gradient-ratio profiles for vanishing-gradient diagnostics, classification
//! metrics, Rademacher/Hoeffding generalization-bound calculators, an IDX
//! dataset loader, stratified subsetting/splitting, and a finite-difference
//! gradient checker.

pub mod bounds;
pub mod data;
pub mod diag;
pub mod engine;
pub mod floors;
pub mod gradcheck;
pub mod nn;
pub mod rng;

mod error;

pub use error::{Error, Result};
