//! Speaker labels from per-podcast host centroids and per-episode
//! clusterings.
//!
//! Every podcast's embeddings are standardized and projected with a
//! preprocessor fit on that podcast alone. The largest cluster of the
//! podcast-level clustering is taken to be the host. Each episode is then
//! clustered on its own, and the episode cluster whose centroid is closest
//! in cosine distance to the host centroid is labeled as the host.

mod dominance;
mod io;
mod pipeline;
mod quality;

use std::ops::RangeInclusive;

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, select_k, silhouette, variance_ratio, KMeansOptions};
use crate::error::{Error, Result};

pub use dominance::{
    dominance_report, DominanceOptions, DominanceReport, DominantSpeaker, EpisodeDominance,
    PodcastHostShare,
};
pub use io::{apply_overrides, load_episode_quality, load_overrides, SpeakerOverride};
pub use pipeline::{label_speakers, LabelingOptions, LabelingResult, PodcastModel};
pub use quality::{
    evaluate_quality, summarize_quality, QualitySummary, QualityThresholds, QualityVerdict,
};

/// Candidate cluster counts for the podcast-level host clustering.
pub const DEFAULT_HOST_K_RANGE: RangeInclusive<usize> = 2..=10;

/// How many clusters the podcast-level clustering uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostK {
    Fixed(usize),
    /// Silhouette-optimal k over the range, capped at `n - 1`.
    Select(RangeInclusive<usize>),
}

impl Default for HostK {
    fn default() -> Self {
        HostK::Select(DEFAULT_HOST_K_RANGE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostCentroid {
    pub podcast: String,
    pub centroid: Vec<f64>,
    /// Fraction of the podcast's embedded clips in the host cluster.
    pub cluster_share: f64,
    /// Cluster count of the podcast-level clustering.
    pub k: usize,
}

/// `1 - cos(a, b)`, in `[0, 2]`. A zero vector is at distance 1 from
/// everything.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
}

/// Centroids of the `n_hosts` largest podcast-level clusters, largest
/// first. Equal sizes go to the lower cluster index.
pub fn build_host_centroids(
    podcast: &str,
    points: ArrayView2<'_, f64>,
    k: &HostK,
    n_hosts: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<Vec<HostCentroid>> {
    let n = points.nrows();
    if n_hosts == 0 {
        return Err(Error::InvalidArgument(
            "host count must be at least 1".into(),
        ));
    }
    let (centroids, assignments, k_used) = match k {
        HostK::Fixed(k) => {
            let k = *k;
            if k == 0 {
                return Err(Error::InvalidArgument("podcast k must be positive".into()));
            }
            if n < k.max(1) {
                return Err(Error::TooFewPoints {
                    needed: k,
                    found: n,
                });
            }
            let model = kmeans(points, k, seed, opts)?;
            (model.centroids, model.assignments, k)
        }
        HostK::Select(range) => {
            let lo = *range.start();
            let hi = (*range.end()).min(n.saturating_sub(1));
            if n <= lo || hi < lo {
                return Err(Error::TooFewPoints {
                    needed: lo + 1,
                    found: n,
                });
            }
            let sel = select_k(points, lo..=hi, seed, opts)?;
            (sel.model.centroids, sel.model.assignments, sel.k_opt)
        }
    };
    if n_hosts > k_used {
        return Err(Error::InvalidArgument(format!(
            "{n_hosts} hosts requested but the podcast clustering has {k_used} clusters"
        )));
    }
    let mut sizes = vec![0usize; k_used];
    for &a in &assignments {
        sizes[a] += 1;
    }
    let mut order: Vec<usize> = (0..k_used).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(n_hosts)
        .map(|c| HostCentroid {
            podcast: podcast.to_string(),
            centroid: centroids.row(c).to_vec(),
            cluster_share: sizes[c] as f64 / n as f64,
            k: k_used,
        })
        .collect())
}

pub fn build_host_centroid(
    podcast: &str,
    points: ArrayView2<'_, f64>,
    k: &HostK,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<HostCentroid> {
    Ok(build_host_centroids(podcast, points, k, 1, seed, opts)?.remove(0))
}

/// Cluster validity figures of a multi-cluster episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub per_clip_silhouette: Vec<f64>,
    pub mean_silhouette: f64,
    pub variance_ratio: f64,
    /// Every cluster holds a clip whose silhouette exceeds the episode mean.
    pub all_above_average: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeClustering {
    pub k_used: usize,
    /// Cluster index per clip, in input order.
    pub assignments: Vec<usize>,
    /// `None` when the episode was not clustered (a single cluster).
    pub metrics: Option<EpisodeMetrics>,
    /// Host clusters, nearest prototype first. Empty without host centroids.
    pub host_clusters: Vec<usize>,
    pub host_cosine_distance: Option<f64>,
}

impl EpisodeClustering {
    pub fn host_cluster(&self) -> Option<usize> {
        self.host_clusters.first().copied()
    }

    pub fn is_host_clip(&self, i: usize) -> bool {
        self.host_clusters.contains(&self.assignments[i])
    }
}

fn all_above_average(per_sample: &[f64], assignments: &[usize], k: usize, mean: f64) -> bool {
    let mut hit = vec![false; k];
    for (&s, &a) in per_sample.iter().zip(assignments) {
        if s > mean {
            hit[a] = true;
        }
    }
    hit.into_iter().all(|h| h)
}

fn centroids_of(points: ArrayView2<'_, f64>, assignments: &[usize], k: usize) -> Vec<Array1<f64>> {
    let mut sums = vec![Array1::zeros(points.ncols()); k];
    let mut counts = vec![0usize; k];
    for (row, &a) in points.axis_iter(Axis(0)).zip(assignments) {
        sums[a] += &row;
        counts[a] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| s / c.max(1) as f64)
        .collect()
}

/// Clusters one episode's preprocessed embeddings.
///
/// `k` is `expected_speakers` when known, otherwise the silhouette-optimal
/// value over `k_range`. Either is capped at `n - 1`; an episode left with
/// fewer than two clusters (one speaker, or too few clips) is kept whole
/// and gets no metrics. The host cluster is the one nearest to the first
/// host prototype; further prototypes mark further host clusters.
pub fn cluster_episode(
    points: ArrayView2<'_, f64>,
    expected_speakers: Option<u32>,
    k_range: RangeInclusive<usize>,
    hosts: &[HostCentroid],
    seed: u64,
    opts: &KMeansOptions,
) -> Result<EpisodeClustering> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::TooFewPoints {
            needed: 1,
            found: 0,
        });
    }
    let cap = n - 1;
    let model = match expected_speakers {
        Some(k) => {
            let k = (k as usize).min(cap);
            if k >= 2 {
                Some(kmeans(points, k, seed, opts)?)
            } else {
                None
            }
        }
        None => {
            let lo = *k_range.start();
            let hi = (*k_range.end()).min(cap);
            if lo >= 2 && hi >= lo {
                Some(select_k(points, lo..=hi, seed, opts)?.model)
            } else {
                None
            }
        }
    };

    let (k_used, assignments, metrics) = match model {
        Some(model) => {
            let sil = silhouette(points, &model.assignments)?;
            let vr = variance_ratio(points, &model.assignments)?;
            let above = all_above_average(&sil.per_sample, &model.assignments, model.k, sil.mean);
            let metrics = EpisodeMetrics {
                mean_silhouette: sil.mean,
                per_clip_silhouette: sil.per_sample,
                variance_ratio: vr.value,
                all_above_average: above,
            };
            (model.k, model.assignments, Some(metrics))
        }
        None => (1, vec![0; n], None),
    };

    let centroids = centroids_of(points, &assignments, k_used);
    let mut host_clusters = Vec::new();
    let mut host_cosine_distance = None;
    for (h, host) in hosts.iter().enumerate() {
        if host.centroid.len() != points.ncols() {
            return Err(Error::DimensionMismatch {
                expected: points.ncols(),
                found: host.centroid.len(),
            });
        }
        let (best, dist) = centroids
            .iter()
            .enumerate()
            .map(|(c, cen)| (c, cosine_distance(cen.as_slice().unwrap(), &host.centroid)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("at least one cluster");
        if h == 0 {
            host_cosine_distance = Some(dist);
        }
        if !host_clusters.contains(&best) {
            host_clusters.push(best);
        }
    }

    Ok(EpisodeClustering {
        k_used,
        assignments,
        metrics,
        host_clusters,
        host_cosine_distance,
    })
}

/// One embedded clip's speaker assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipSpeaker {
    pub show: String,
    pub episode_id: String,
    pub clip_id: String,
    pub speaker_label: String,
    pub is_host: bool,
    pub silhouette: Option<f64>,
}

/// Per-episode quality figures; `None` fields were not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeQuality {
    pub show: String,
    pub episode_id: String,
    /// 0 when the episode had no embedded clips.
    pub k: usize,
    pub mean_silhouette: Option<f64>,
    pub variance_ratio: Option<f64>,
    pub host_cosine_distance: Option<f64>,
    pub all_above_average: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpeakerLabelTable {
    pub clips: Vec<ClipSpeaker>,
    pub episodes: Vec<EpisodeQuality>,
}

impl SpeakerLabelTable {
    pub fn get(&self, clip_id: &str) -> Option<&ClipSpeaker> {
        self.clips.iter().find(|c| c.clip_id == clip_id)
    }

    /// Clip id → speaker label.
    pub fn speaker_map(&self) -> std::collections::BTreeMap<String, String> {
        self.clips
            .iter()
            .map(|c| (c.clip_id.clone(), c.speaker_label.clone()))
            .collect()
    }

    /// Keeps only episodes (and their clips) that `keep` accepts.
    pub fn retain_episodes<F>(&mut self, mut keep: F)
    where
        F: FnMut(&EpisodeQuality) -> bool,
    {
        let mut kept = std::collections::BTreeSet::new();
        self.episodes.retain(|e| {
            let k = keep(e);
            if k {
                kept.insert((e.show.clone(), e.episode_id.clone()));
            }
            k
        });
        self.clips
            .retain(|c| kept.contains(&(c.show.clone(), c.episode_id.clone())));
    }

    /// Drops episodes that do not pass `thresholds`, including episodes
    /// without metrics.
    pub fn filter_by_quality(&mut self, thresholds: &QualityThresholds) {
        self.retain_episodes(|e| e.evaluate(thresholds).is_ok_and(|v| v.combined));
    }
}

/// Label of a non-host cluster: `{show}_{episode}_{cluster}`.
pub fn guest_label(show: &str, episode_id: &str, cluster: usize) -> String {
    format!("{show}_{episode_id}_{cluster}")
}

/// Label of the `rank`-th host (0-based) of a podcast.
pub fn host_label(podcast: &str, rank: usize) -> String {
    if rank == 0 {
        format!("{podcast}_HOST")
    } else {
        format!("{podcast}_HOST{}", rank + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::adjusted_rand_index;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn blobs(centers: &[Vec<f64>], sizes: &[usize], seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = crate::seed::rng(seed);
        let dim = centers[0].len();
        let n: usize = sizes.iter().sum();
        let mut x = Array2::zeros((n, dim));
        let mut truth = Vec::new();
        let mut r = 0;
        for (c, (&size, center)) in sizes.iter().zip(centers).enumerate() {
            for _ in 0..size {
                for d in 0..dim {
                    x[[r, d]] = center[d] + rng.gen_range(-0.5..0.5);
                }
                truth.push(c);
                r += 1;
            }
        }
        (x, truth)
    }

    #[test]
    fn cosine_distance_range() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[2.0, 0.0]), 0.0);
        assert!((cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
    }

    #[test]
    fn host_centroid_is_largest_blob() {
        let (x, _) = blobs(
            &[vec![10.0, 0.0], vec![-10.0, 5.0], vec![0.0, -10.0]],
            &[70, 15, 15],
            1,
        );
        let host = build_host_centroid(
            "P",
            x.view(),
            &HostK::Fixed(3),
            9,
            &KMeansOptions::default(),
        )
        .unwrap();
        assert!((host.cluster_share - 0.7).abs() < 1e-12);
        assert!((host.centroid[0] - 10.0).abs() < 0.2);
        let selected = build_host_centroid(
            "P",
            x.view(),
            &HostK::default(),
            9,
            &KMeansOptions::default(),
        )
        .unwrap();
        assert_eq!(selected.k, 3);
        assert!(cosine_distance(&selected.centroid, &[10.0, 0.0]) < 0.01);
    }

    #[test]
    fn host_centroid_tie_takes_lower_index() {
        let (x, _) = blobs(&[vec![10.0, 0.0], vec![-10.0, 0.0]], &[20, 20], 2);
        let opts = KMeansOptions::default();
        let a = build_host_centroid("P", x.view(), &HostK::Fixed(2), 4, &opts).unwrap();
        let b = build_host_centroid("P", x.view(), &HostK::Fixed(2), 4, &opts).unwrap();
        assert_eq!(a, b);
        let model = kmeans(x.view(), 2, 4, &opts).unwrap();
        assert_eq!(a.centroid, model.centroids.row(0).to_vec());
    }

    #[test]
    fn too_few_podcast_points() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let r = build_host_centroid(
            "P",
            x.view(),
            &HostK::Fixed(3),
            0,
            &KMeansOptions::default(),
        );
        assert!(matches!(r, Err(Error::TooFewPoints { .. })));
        let r = build_host_centroid(
            "P",
            x.view(),
            &HostK::default(),
            0,
            &KMeansOptions::default(),
        );
        assert!(matches!(r, Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn episode_recovers_two_speakers_and_host() {
        let (x, truth) = blobs(&[vec![8.0, 1.0], vec![-3.0, -8.0]], &[30, 12], 3);
        let host = HostCentroid {
            podcast: "P".into(),
            centroid: vec![5.0, 0.5],
            cluster_share: 0.7,
            k: 3,
        };
        let ec = cluster_episode(
            x.view(),
            Some(2),
            2..=8,
            &[host],
            5,
            &KMeansOptions::default(),
        )
        .unwrap();
        assert_eq!(adjusted_rand_index(&ec.assignments, &truth), 1.0);
        let host_cluster = ec.host_cluster().unwrap();
        assert!((0..30).all(|i| ec.assignments[i] == host_cluster));
        assert!(ec.host_cosine_distance.unwrap() < 0.01);
        let m = ec.metrics.unwrap();
        assert!(m.all_above_average);
        assert!(m.mean_silhouette > 0.8);
    }

    #[test]
    fn single_speaker_bypass() {
        let (x, _) = blobs(&[vec![1.0, 1.0]], &[10], 4);
        let host = HostCentroid {
            podcast: "P".into(),
            centroid: vec![1.0, 1.0],
            cluster_share: 1.0,
            k: 2,
        };
        let ec = cluster_episode(
            x.view(),
            Some(1),
            2..=8,
            &[host],
            0,
            &KMeansOptions::default(),
        )
        .unwrap();
        assert_eq!(ec.k_used, 1);
        assert!(ec.metrics.is_none());
        assert_eq!(ec.host_cluster(), Some(0));
        assert!(ec.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn k_capped_by_clip_count() {
        let x = array![[0.0, 0.0], [5.0, 5.0], [5.1, 5.0]];
        let ec =
            cluster_episode(x.view(), Some(4), 2..=8, &[], 0, &KMeansOptions::default()).unwrap();
        assert_eq!(ec.k_used, 2);
        let one = array![[0.0, 0.0]];
        let ec =
            cluster_episode(one.view(), None, 2..=8, &[], 0, &KMeansOptions::default()).unwrap();
        assert_eq!(ec.k_used, 1);
        assert!(ec.host_clusters.is_empty());
    }

    #[test]
    fn unknown_speaker_count_uses_selection() {
        let (x, truth) = blobs(
            &[vec![10.0, 0.0], vec![-10.0, 0.0], vec![0.0, 12.0]],
            &[15, 15, 15],
            6,
        );
        let ec = cluster_episode(x.view(), None, 2..=6, &[], 1, &KMeansOptions::default()).unwrap();
        assert_eq!(ec.k_used, 3);
        assert_eq!(adjusted_rand_index(&ec.assignments, &truth), 1.0);
    }

    #[test]
    fn all_above_average_needs_every_cluster() {
        assert!(all_above_average(
            &[0.9, 0.1, 0.6, 0.2],
            &[0, 0, 1, 1],
            2,
            0.45
        ));
        assert!(!all_above_average(
            &[0.9, 0.8, 0.3, 0.2],
            &[0, 0, 1, 1],
            2,
            0.55
        ));
        // Equal to the mean does not count.
        assert!(!all_above_average(&[0.5, 0.5], &[0, 1], 2, 0.5));
    }

    #[test]
    fn labels() {
        assert_eq!(guest_label("StutterTalk", "12", 1), "StutterTalk_12_1");
        assert_eq!(host_label("StutterTalk", 0), "StutterTalk_HOST");
        assert_eq!(host_label("StutterTalk", 1), "StutterTalk_HOST2");
    }
}
