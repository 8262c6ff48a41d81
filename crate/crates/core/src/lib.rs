//! Inductive community detection.
//!
//! An adversarial dual graph neural network is trained offline on a
//! collection of historical graphs with known (or baseline-produced)
//! community labels, then applied to unseen graphs with one feedforward pass
//! followed by K-Means. The crate holds the full algorithmic pipeline:
//!
//! - [`graph`]: sparse undirected graphs, modularity / normalized-adjacency
//!   matrices and the set-form quality scores.
//! - [`partition`] and [`metrics`]: partitions, membership indicators, the
//!   label-induced graph, NMI and best-mapping accuracy.
//! - [`coarsen`]: heavy-edge-matching coarsening and fixed-width feature
//!   extraction.
//! - [`synth`]: GN (stochastic block model) and LFR-style benchmark graphs.
//! - [`nn`]: dense matrices, GCN / fully connected layers with hand-written
//!   backward passes, Adam, gradient checking.
//! - [`model`]: generator, discriminator, losses, offline training and
//!   online inference.
//! - [`cluster`]: multi-restart K-Means.
//! - [`tos`]: the quality/runtime trade-off score.
//!
//! The crate is `no_std` (it needs `alloc`); IO lives in the `icd` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cluster;
pub mod coarsen;
pub mod error;
pub mod graph;
pub mod hungarian;
pub mod linalg;
mod math;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod partition;
pub mod synth;
pub mod tos;

pub use error::{Error, Result};
pub use graph::{Graph, StructKind, StructMatrix};
pub use linalg::{CsrMatrix, DenseMatrix};
pub use partition::Partition;
