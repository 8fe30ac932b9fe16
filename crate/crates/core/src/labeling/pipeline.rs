use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_host_centroids, cluster_episode, guest_label, host_label, ClipSpeaker, EpisodeClustering,
    EpisodeQuality, HostCentroid, HostK, SpeakerLabelTable,
};
use crate::clustering::{KMeansOptions, DEFAULT_EPISODE_K_RANGE};
use crate::corpus::{Corpus, EpisodeKey};
use crate::embedding::{fit_preprocessor, EmbeddingStore, Preprocessor, DEFAULT_TARGET_DIM};
use crate::error::Result;
use crate::seed::derive_seed;

/// Embedded clip ids of an episode and their clustering.
type ClusteredEpisode = (Vec<String>, EpisodeClustering);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelingOptions {
    /// PCA dimension; capped at the embedding dimension.
    pub target_dim: usize,
    pub host_k: HostK,
    /// Number of hosts per podcast.
    pub n_hosts: usize,
    /// Candidate k for episodes without a known speaker count.
    pub episode_k_range: RangeInclusive<usize>,
    pub kmeans: KMeansOptions,
}

impl Default for LabelingOptions {
    fn default() -> Self {
        Self {
            target_dim: DEFAULT_TARGET_DIM,
            host_k: HostK::default(),
            n_hosts: 1,
            episode_k_range: DEFAULT_EPISODE_K_RANGE,
            kmeans: KMeansOptions::default(),
        }
    }
}

/// Preprocessing and host prototypes of one podcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodcastModel {
    pub podcast: String,
    pub preprocessor: Preprocessor,
    pub hosts: Vec<HostCentroid>,
}

#[derive(Debug, Clone)]
pub struct LabelingResult {
    pub table: SpeakerLabelTable,
    pub podcasts: BTreeMap<String, PodcastModel>,
    /// Per episode: clustered clip ids (input order) and the clustering.
    pub episodes: BTreeMap<EpisodeKey, (Vec<String>, EpisodeClustering)>,
}

fn fit_podcast(
    podcast: &str,
    rows: &[usize],
    store: &EmbeddingStore,
    opts: &LabelingOptions,
    seed: u64,
) -> Result<PodcastModel> {
    let raw = store.matrix(rows);
    let target_dim = opts.target_dim.min(store.dim());
    let preprocessor = fit_preprocessor(raw.view(), target_dim)?;
    let points = preprocessor.transform(raw.view())?;
    let hosts = build_host_centroids(
        podcast,
        points.view(),
        &opts.host_k,
        opts.n_hosts,
        derive_seed(seed, &format!("host:{podcast}")),
        &opts.kmeans,
    )?;
    Ok(PodcastModel {
        podcast: podcast.to_string(),
        preprocessor,
        hosts,
    })
}

/// Runs host-centroid fitting for every podcast, then clusters every
/// episode against its podcast's model. Both phases run in parallel; all
/// randomness is keyed by podcast or episode name, so results do not depend
/// on scheduling.
pub fn label_speakers(
    corpus: &Corpus,
    store: &EmbeddingStore,
    opts: &LabelingOptions,
    seed: u64,
) -> Result<LabelingResult> {
    let mut podcast_rows: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for clip in corpus.clips() {
        if let Some(row) = store.index_of(&clip.clip_id) {
            podcast_rows
                .entry(clip.podcast.clone())
                .or_default()
                .push(row);
        }
    }

    let podcasts: BTreeMap<String, PodcastModel> = podcast_rows
        .par_iter()
        .map(|(podcast, rows)| {
            fit_podcast(podcast, rows, store, opts, seed).map(|m| (podcast.clone(), m))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    let by_episode: Vec<(EpisodeKey, Vec<usize>)> = corpus.clips_by_episode().into_iter().collect();
    let clustered: Vec<(EpisodeKey, Option<ClusteredEpisode>)> = by_episode
        .par_iter()
        .map(|(key, clip_positions)| {
            let embedded: Vec<(String, usize)> = clip_positions
                .iter()
                .filter_map(|&i| {
                    let id = &corpus.clips()[i].clip_id;
                    store.index_of(id).map(|row| (id.clone(), row))
                })
                .collect();
            if embedded.is_empty() {
                return Ok((key.clone(), None));
            }
            let meta = corpus.episode(key).expect("validated corpus");
            let model = &podcasts[&meta.podcast];
            let rows: Vec<usize> = embedded.iter().map(|(_, r)| *r).collect();
            let points = model.preprocessor.transform(store.matrix(&rows).view())?;
            let ec = cluster_episode(
                points.view(),
                meta.expected_speakers,
                opts.episode_k_range.clone(),
                &model.hosts,
                derive_seed(seed, &format!("episode:{}:{}", key.show, key.episode_id)),
                &opts.kmeans,
            )?;
            let ids = embedded.into_iter().map(|(id, _)| id).collect();
            Ok((key.clone(), Some((ids, ec))))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = SpeakerLabelTable::default();
    let mut episodes = BTreeMap::new();
    for (key, result) in clustered {
        let Some((ids, ec)) = result else {
            table.episodes.push(EpisodeQuality {
                show: key.show.clone(),
                episode_id: key.episode_id.clone(),
                k: 0,
                mean_silhouette: None,
                variance_ratio: None,
                host_cosine_distance: None,
                all_above_average: None,
            });
            continue;
        };
        let podcast = &corpus.episode(&key).expect("validated corpus").podcast;
        for (i, id) in ids.iter().enumerate() {
            let cluster = ec.assignments[i];
            let host_rank = ec.host_clusters.iter().position(|&h| h == cluster);
            table.clips.push(ClipSpeaker {
                show: key.show.clone(),
                episode_id: key.episode_id.clone(),
                clip_id: id.clone(),
                speaker_label: match host_rank {
                    Some(rank) => host_label(podcast, rank),
                    None => guest_label(&key.show, &key.episode_id, cluster),
                },
                is_host: host_rank.is_some(),
                silhouette: ec.metrics.as_ref().map(|m| m.per_clip_silhouette[i]),
            });
        }
        table.episodes.push(EpisodeQuality {
            show: key.show.clone(),
            episode_id: key.episode_id.clone(),
            k: ec.k_used,
            mean_silhouette: ec.metrics.as_ref().map(|m| m.mean_silhouette),
            variance_ratio: ec.metrics.as_ref().map(|m| m.variance_ratio),
            host_cosine_distance: ec.host_cosine_distance,
            all_above_average: ec.metrics.as_ref().map(|m| m.all_above_average),
        });
        episodes.insert(key, (ids, ec));
    }

    Ok(LabelingResult {
        table,
        podcasts,
        episodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn every_embedded_clip_labeled_once() {
        let s = generate(&SynthSpec::default(), 1).unwrap();
        let r = label_speakers(&s.corpus, &s.embeddings, &LabelingOptions::default(), 1).unwrap();
        assert_eq!(r.table.clips.len(), s.embeddings.len());
        let ids: std::collections::BTreeSet<_> = r.table.clips.iter().map(|c| &c.clip_id).collect();
        assert_eq!(ids.len(), s.embeddings.len());
        assert_eq!(r.table.episodes.len(), s.corpus.episodes().len());
    }

    #[test]
    fn unembedded_episode_gets_null_metrics() {
        let s = generate(&SynthSpec::default(), 2).unwrap();
        let mut store = EmbeddingStore::new(s.embeddings.dim());
        for (i, id) in s.embeddings.ids().iter().enumerate() {
            if !id.starts_with("Synth00_0_") {
                store.push(id, s.embeddings.row(i)).unwrap();
            }
        }
        let r = label_speakers(&s.corpus, &store, &LabelingOptions::default(), 2).unwrap();
        let e = r
            .table
            .episodes
            .iter()
            .find(|e| e.show == "Synth00" && e.episode_id == "0")
            .unwrap();
        assert_eq!(e.k, 0);
        assert!(e.mean_silhouette.is_none());
        assert_eq!(r.table.clips.len(), store.len());
    }
}
