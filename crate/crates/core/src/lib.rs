//! Coresets for fair k-median and fair k-means clustering.
//!
//! A fair coreset is a small weighted point set `S` such that, for every set
//! of `k` centers and every assignment constraint, the constrained clustering
//! cost computed on `S` is within `1 ± ε` of the cost on the full dataset.
//! Points may belong to several (overlapping) sensitive groups; the set of
//! groups a point belongs to is its *profile*, and constraints are expressed
//! per profile.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: points, profiles, datasets, weighted sets and moments.
//! - [`transport`] / [`fairflow`]: exact evaluation of the constrained
//!   objective as a family of transportation problems, plus a brute-force
//!   oracle.
//! - [`line_coreset`]: greedy batching and the one-dimensional coresets.
//! - [`lines`]: approximate clustering, principal lines, line covers and
//!   projection.
//! - [`pipeline`]: end-to-end construction, the uniform baseline and the
//!   coreset file format.
//! - [`harness`]: CSV ingestion, normalization, random `(F, C)` sampling,
//!   empirical error and the benchmark driver.
//!
//! With the default `parallel` feature, data-parallel loops (per-profile
//! subproblems, benchmark trials, point-to-line assignment) run on rayon.
//! Results are identical with and without the feature.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fairflow;
pub mod geometry;
pub mod harness;
pub mod line_coreset;
pub mod lines;
pub mod par;
pub mod pipeline;
pub mod transport;

pub use error::{Error, Result};
pub use fairflow::{AssignmentPlan, ProfileConstraint};
pub use geometry::{
    CenterSet, CoresetParams, Dataset, GroupProfile, Point, WeightedPointSet,
};
pub use line_coreset::LineDataset;
pub use lines::{Line, ProjectionMap};
pub use pipeline::CoresetArtifact;
