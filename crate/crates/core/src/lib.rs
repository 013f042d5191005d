//! Feature-correlation transformer for tabular data with counterfactual
//! attention regularization.
//!
//! The crate is organised bottom-up:
//!
//! - [`diffcore`]: a small reverse-mode differentiation kernel over vectors and
//!   matrices, plus a central-difference gradient checker.
//! - [`data`]: schemas, CSV ingestion, preprocessing, the synthetic generator
//!   and counterfactual perturbation of the sensitive feature.
//! - [`model`]: the projection-free single-head attention encoder, its
//!   embeddings, the sensitive parameter-sharing layers used for input
//!   augmentation, and attention-trace extraction.
//! - [`training`]: loss assembly, the regularization-weight heuristic, the
//!   adaptive-moment training loop, threshold selection and the λ sweep.
//! - [`metrics`]: performance metrics and pairwise counterfactual fairness
//!   metrics.
//!
//! Batch work (per-sample gradients, dataset scoring, sweeps) runs through
//! [`exec::Exec`], which uses rayon when the `parallel` feature is enabled and
//! always reduces results in input order, so parallel and sequential runs are
//! bitwise identical.

pub mod data;
pub mod diffcore;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod training;

pub use error::{Error, ErrorKind, Result};
