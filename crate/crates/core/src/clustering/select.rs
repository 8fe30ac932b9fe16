use std::ops::RangeInclusive;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{kmeans, silhouette, ClusterModel, KMeansOptions, SilhouetteReport};
use crate::error::{Error, Result};
use crate::seed::derive_seed_n;

/// Candidate cluster counts for episodes without a known speaker count.
pub const DEFAULT_EPISODE_K_RANGE: RangeInclusive<usize> = 2..=8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k_opt: usize,
    /// Mean silhouette for every candidate k, ascending in k.
    pub scores: Vec<(usize, f64)>,
    pub model: ClusterModel,
    pub silhouette: SilhouetteReport,
}

/// Picks the k with the highest mean silhouette; ties go to the smaller k.
pub fn select_k(
    points: ArrayView2<'_, f64>,
    k_range: RangeInclusive<usize>,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<KSelection> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "k range [{lo}, {hi}] must satisfy 2 <= m <= n"
        )));
    }
    if points.nrows() <= hi {
        return Err(Error::TooFewPoints {
            needed: hi + 1,
            found: points.nrows(),
        });
    }
    let mut scores = Vec::with_capacity(hi - lo + 1);
    let mut best: Option<(ClusterModel, SilhouetteReport)> = None;
    for k in k_range {
        let model = kmeans(points, k, derive_seed_n(seed, k as u64), opts)?;
        let report = silhouette(points, &model.assignments)?;
        scores.push((k, report.mean));
        if best.as_ref().is_none_or(|(_, b)| report.mean > b.mean) {
            best = Some((model, report));
        }
    }
    let (model, silhouette) = best.expect("non-empty range");
    Ok(KSelection {
        k_opt: model.k,
        scores,
        model,
        silhouette,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    fn blobs(centers: &[[f64; 2]], per: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::seed::rng(seed);
        let mut x = Array2::zeros((centers.len() * per, 2));
        for (c, center) in centers.iter().enumerate() {
            for i in 0..per {
                for d in 0..2 {
                    x[[c * per + i, d]] = center[d] + rng.gen_range(-0.5..0.5);
                }
            }
        }
        x
    }

    #[test]
    fn singleton_range() {
        let x = blobs(&[[0.0, 0.0], [10.0, 0.0]], 10, 1);
        let s = select_k(x.view(), 2..=2, 5, &KMeansOptions::default()).unwrap();
        assert_eq!(s.k_opt, 2);
        assert_eq!(s.scores.len(), 1);
    }

    #[test]
    fn three_blobs() {
        let x = blobs(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], 15, 2);
        let s = select_k(x.view(), 2..=6, 5, &KMeansOptions::default()).unwrap();
        assert_eq!(s.k_opt, 3);
        assert_eq!(
            s.scores.iter().map(|p| p.0).collect::<Vec<_>>(),
            vec![2, 3, 4, 5, 6]
        );
    }

    #[test]
    fn uniform_cloud_reports_every_candidate() {
        let mut rng = crate::seed::rng(9);
        let x = Array2::from_shape_fn((40, 2), |_| rng.gen::<f64>());
        let s = select_k(x.view(), 2..=5, 1, &KMeansOptions::default()).unwrap();
        assert_eq!(s.scores.len(), 4);
        assert!((2..=5).contains(&s.k_opt));
    }

    #[test]
    fn range_errors() {
        let x = blobs(&[[0.0, 0.0]], 4, 0);
        let o = KMeansOptions::default();
        assert!(matches!(
            select_k(x.view(), 1..=3, 0, &o),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            select_k(x.view(), 2..=4, 0, &o),
            Err(Error::TooFewPoints { .. })
        ));
    }
}
