//! Large-scale multi-view clustering through per-view anchor graphs.
//!
//! Anchor graphs replace the quadratic pairwise similarity matrix with an
//! `n x m` sample-to-anchor similarity matrix, but anchors learned
//! independently per view carry no canonical column order. Fusing such
//! graphs column-by-column mixes unrelated anchors and hurts clustering.
//! This crate learns per-view anchors and anchor graphs, recovers the
//! anchor correspondence between views by solving a relaxed quadratic
//! assignment problem over the doubly-stochastic polytope, fuses the
//! aligned graphs, and clusters the spectral embedding of the result.
//!
//! The pieces are usable on their own:
//!
//! - [`numerics`]: dense-matrix kernels (simplex projection, Jacobi SVD,
//!   optimal assignment, k-means),
//! - [`anchor_graph`]: alternating anchor / anchor-graph learning per view,
//! - [`alignment`]: the anchor-correspondence solver,
//! - [`pipeline`]: the end-to-end clustering run,
//! - [`metrics`]: ACC / NMI / pairwise F-score evaluation,
//! - [`data_io`]: dataset manifests, CSV matrices, and a synthetic
//!   multi-view generator.

// The numeric kernels walk several arrays by index at once, and validation
// guards are written `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod anchor_graph;
pub mod data_io;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod pipeline;

pub use error::{Error, Result};
