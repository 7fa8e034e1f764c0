//! Hierarchical agglomerative clustering in linear memory.
//!
//! The engine grows nearest-neighbor chains for every cluster at once and
//! merges all reciprocal nearest-neighbor pairs in bulk-synchronous rounds.
//! Cluster distances are never stored in a matrix; they are computed on the
//! fly for the few candidates found by a kd-tree ball search whose radius is
//! derived from the linkage criterion, optionally backed by small per-cluster
//! distance caches that are carried across merges with the Lance-Williams
//! recurrence.
//!
//! Supported criteria are complete linkage, Ward's linkage, and average
//! linkage under the Euclidean ([`Linkage::Avg1`]) and squared Euclidean
//! ([`Linkage::Avg2`]) metrics.
//!
//! ```
//! use chainhac::{run, Linkage, PointSet, RunOptions};
//!
//! let points = PointSet::new(1, vec![0.0, 1.0, 4.0, 6.0]).unwrap();
//! let out = run(&points, &RunOptions::new(Linkage::Complete)).unwrap();
//! let heights: Vec<f64> = out.dendrogram.merges().iter().map(|m| m.height).collect();
//! assert_eq!(heights, vec![1.0, 2.0, 6.0]);
//! ```

pub mod atomic;
pub mod cache;
pub mod cli;
pub mod engine;
mod error;
pub mod linkage;
pub mod oracle;
pub mod spatial;

pub use engine::dendrogram::{Dendrogram, Merge};
pub use engine::stats::RunStats;
pub use engine::{run, RunOptions, RunOutput};
pub use error::{Error, Result};
pub use linkage::{ClusterStats, Linkage};
pub use spatial::PointSet;
