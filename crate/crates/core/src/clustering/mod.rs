//! K-Means clustering with silhouette and variance-ratio validity indices.
//!
//! Clustering and both indices use Euclidean distance.

mod kmeans;
mod select;
mod validity;

pub use kmeans::{kmeans, ClusterModel, KMeansOptions};
pub use select::{select_k, KSelection, DEFAULT_EPISODE_K_RANGE};
pub use validity::{silhouette, variance_ratio, SilhouetteReport, VarianceRatio};

use crate::error::{Error, Result};

/// Checks an assignment vector against the point count and returns the
/// cluster sizes. Cluster indices must be dense in `[0, k)`.
pub(crate) fn cluster_sizes(n_points: usize, assignments: &[usize]) -> Result<Vec<usize>> {
    if assignments.len() != n_points {
        return Err(Error::DimensionMismatch {
            expected: n_points,
            found: assignments.len(),
        });
    }
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(empty));
    }
    Ok(sizes)
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
