//! Speaker labeling and speaker-exclusive dataset partitioning for
//! clip-based speech corpora.
//!
//! The pipeline runs in stages:
//!
//! 1. [`corpus`] loads clip labels and episode metadata.
//! 2. [`embedding`] stores per-clip speaker embeddings and fits the
//!    standardize + PCA preprocessing.
//! 3. [`clustering`] provides K-Means, silhouette analysis, the variance
//!    ratio criterion and optimal-k selection.
//! 4. [`labeling`] turns per-podcast and per-episode clusterings into
//!    speaker labels with host identification and quality criteria.
//! 5. [`splitting`] builds leave-one-podcast-out, k-fold and fixed
//!    train/dev/test partitions.
//! 6. [`evaluation`] scores prediction files per split.
//!
//! [`synth`] generates corpora with planted speakers for testing.

pub mod clustering;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod labeling;
pub mod metrics;
pub mod seed;
pub mod splitting;
pub mod synth;

pub use error::{Error, Result};

/// Version string recorded in emitted artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
