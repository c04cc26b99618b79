//! Label-noise cleansing for (hyper)spectral pixel-classification training sets.
//!
//! The cleansing method builds a superpixel-constrained affinity graph over the
//! training samples, turns it into a column-stochastic transition matrix, and
//! then repeatedly hides a random subset of the (noisy) labels, propagates the
//! rest through the graph and records the label each sample receives. The
//! recorded labels are fused by majority vote.
//!
//! Module map:
//!
//! - [`datacube`]: cubes, label grids, one-hot label matrices, sample splits,
//!   synthetic cubes and the on-disk formats.
//! - [`noise`]: symmetric label-noise injection.
//! - [`segmentation`]: first principal component, LoG superpixel budgeting and
//!   SLIC superpixels.
//! - [`graph`]: spectral-spatial affinity and transition matrices.
//! - [`cleansing`]: label propagation and the randomized cleansing loop.
//! - [`classify`]: 1-NN and extreme learning machine classifiers.
//! - [`eval`]: metrics, map rendering and the experiment runner.
//!
//! Runnable walkthroughs of each stage live in this crate's `examples/`
//! directory; the `rlpa` binary exposes the same stages on the command line.

pub mod classify;
pub mod cleansing;
pub mod cli;
pub mod datacube;
pub mod error;
pub mod eval;
pub mod graph;
pub mod noise;
pub mod seed;
pub mod segmentation;

pub use error::{Error, Result};
