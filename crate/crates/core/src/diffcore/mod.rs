//! Reverse-mode differentiation over small dense vectors and matrices.
//!
//! A [`Graph`] records every primitive applied during a forward pass. Nodes are
//! appended in evaluation order, so reverse creation order is a valid
//! topological order for the backward sweep. Parameters enter a graph as leaf
//! nodes tagged with their slot in a [`ParamSet`]; after
//! [`Graph::backward`] their gradients can be added into a gradient set of the
//! same layout.
//!
//! A graph is single-threaded. [`ParamSet`] snapshots are plain data and can be
//! shared across threads, each thread building its own graph.

mod gradcheck;
mod graph;
mod special;
mod tensor;

pub use gradcheck::{grad_check, GradReport, ParamGradError};
pub use graph::{sigmoid, Graph, Value};
pub use special::{gelu, gelu_derivative, normal_cdf, normal_pdf};
pub use tensor::{ParamEntry, ParamSet, Shape, Tensor};

/// LayerNorm epsilon used throughout the model.
pub const LAYER_NORM_EPS: f64 = 1e-5;
