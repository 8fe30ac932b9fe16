use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cluster_sizes, squared_distance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// `s = (b - a) / max(a, b)` per point.
    pub per_sample: Vec<f64>,
    pub mean: f64,
    pub per_cluster_mean: Vec<f64>,
}

/// Silhouette coefficient of every point.
///
/// `a` is the mean distance to the other members of the point's cluster and
/// `b` the smallest mean distance to the members of another cluster. Points
/// in singleton clusters score 0.
pub fn silhouette(points: ArrayView2<'_, f64>, assignments: &[usize]) -> Result<SilhouetteReport> {
    let sizes = cluster_sizes(points.nrows(), assignments)?;
    let k = sizes.len();
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let points = points.as_standard_layout();
    let rows: Vec<&[f64]> = points
        .rows()
        .into_iter()
        .map(|r| r.to_slice().unwrap())
        .collect();

    let per_sample: Vec<f64> = (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, other) in rows.iter().enumerate() {
                if j != i {
                    sums[assignments[j]] += squared_distance(rows[i], other).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();

    let mut cluster_sums = vec![0.0; k];
    for (s, &a) in per_sample.iter().zip(assignments) {
        cluster_sums[a] += s;
    }
    let per_cluster_mean = cluster_sums
        .iter()
        .zip(&sizes)
        .map(|(s, &n)| s / n as f64)
        .collect();
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    Ok(SilhouetteReport {
        per_sample,
        mean,
        per_cluster_mean,
    })
}

/// Calinski–Harabasz variance ratio criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatio {
    /// `[tr(B)/(k-1)] / [tr(W)/(n-k)]`; `+inf` when every cluster is a
    /// single repeated point but clusters differ, 0 when all points coincide.
    pub value: f64,
    pub n: usize,
    pub k: usize,
    pub between_dispersion: f64,
    pub within_dispersion: f64,
}

pub fn variance_ratio(points: ArrayView2<'_, f64>, assignments: &[usize]) -> Result<VarianceRatio> {
    let sizes = cluster_sizes(points.nrows(), assignments)?;
    let k = sizes.len();
    let n = points.nrows();
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    if n <= k {
        return Err(Error::TooFewPoints {
            needed: k + 1,
            found: n,
        });
    }
    let dim = points.ncols();
    let global: Array1<f64> = points.sum_axis(ndarray::Axis(0)) / n as f64;
    let mut means = Array2::<f64>::zeros((k, dim));
    for (p, &a) in points.rows().into_iter().zip(assignments) {
        let mut row = means.row_mut(a);
        row += &p;
    }
    for (c, &size) in sizes.iter().enumerate() {
        means.row_mut(c).mapv_inplace(|v| v / size as f64);
    }
    let between: f64 = means
        .rows()
        .into_iter()
        .zip(&sizes)
        .map(|(m, &size)| {
            size as f64
                * m.iter()
                    .zip(global.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
        })
        .sum();
    let within: f64 = points
        .rows()
        .into_iter()
        .zip(assignments)
        .map(|(p, &a)| {
            p.iter()
                .zip(means.row(a).iter())
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>()
        })
        .sum();
    let value = if within > 0.0 {
        (between / (k - 1) as f64) / (within / (n - k) as f64)
    } else if between > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(VarianceRatio {
        value,
        n,
        k,
        between_dispersion: between,
        within_dispersion: within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_evaluated_silhouette() {
        let x = array![[0.0], [1.0], [10.0], [11.0]];
        let r = silhouette(x.view(), &[0, 0, 1, 1]).unwrap();
        // a = 1, b = (10 + 11) / 2
        assert!((r.per_sample[0] - 9.5 / 10.5).abs() < 1e-15);
        assert!((r.per_sample[0] - 0.904_761_904_761_904_8).abs() < 1e-12);
        assert!((r.mean - r.per_sample.iter().sum::<f64>() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn equidistant_point_scores_zero() {
        // point 1 sits at distance 1 from its clustermate and from the other cluster
        let x = array![[0.0], [1.0], [2.0], [2.0]];
        let r = silhouette(x.view(), &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.per_sample[1], 0.0);
    }

    #[test]
    fn singleton_scores_zero() {
        let x = array![[0.0], [5.0], [5.5]];
        let r = silhouette(x.view(), &[0, 1, 1]).unwrap();
        assert_eq!(r.per_sample[0], 0.0);
        assert_eq!(r.per_cluster_mean.len(), 2);
    }

    #[test]
    fn silhouette_errors() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            silhouette(x.view(), &[0, 0]),
            Err(Error::SingleCluster)
        ));
        assert!(matches!(
            silhouette(x.view(), &[0, 2]),
            Err(Error::EmptyCluster(1))
        ));
        assert!(matches!(
            silhouette(x.view(), &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hand_computed_variance_ratio() {
        let x = array![[0.0], [1.0], [10.0], [11.0]];
        let v = variance_ratio(x.view(), &[0, 0, 1, 1]).unwrap();
        assert_eq!(v.within_dispersion, 1.0);
        assert_eq!(v.between_dispersion, 100.0);
        assert_eq!(v.value, 200.0);
    }

    #[test]
    fn identical_means_give_zero_ratio() {
        let x = array![[-1.0], [1.0], [-2.0], [2.0]];
        let v = variance_ratio(x.view(), &[0, 0, 1, 1]).unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn tight_clusters_give_infinity() {
        let x = array![[0.0], [0.0], [3.0], [3.0]];
        assert_eq!(
            variance_ratio(x.view(), &[0, 0, 1, 1]).unwrap().value,
            f64::INFINITY
        );
        let same = array![[1.0], [1.0], [1.0]];
        assert_eq!(variance_ratio(same.view(), &[0, 1, 1]).unwrap().value, 0.0);
    }

    #[test]
    fn variance_ratio_errors() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            variance_ratio(x.view(), &[0, 0]),
            Err(Error::SingleCluster)
        ));
        assert!(matches!(
            variance_ratio(x.view(), &[0, 1]),
            Err(Error::TooFewPoints { .. })
        ));
    }
}
