use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SpeakerLabelTable;
use crate::corpus::render_aligned;
use crate::corpus::{Corpus, EpisodeKey};

/// Speaking time is estimated as the share of an episode's or podcast's
/// labeled clips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DominanceOptions {
    /// Episode top-speaker share thresholds; an episode counts when its
    /// share is strictly above.
    pub thresholds: Vec<f64>,
    /// Length of the dominant-speaker ranking used for the cumulative share.
    pub top_n: usize,
    /// Podcasts left out of the host analysis.
    pub excluded_podcasts: BTreeSet<String>,
}

impl Default for DominanceOptions {
    fn default() -> Self {
        Self {
            thresholds: vec![0.8, 0.9],
            top_n: 4,
            excluded_podcasts: BTreeSet::new(),
        }
    }
}

/// One row per raw show.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodcastHostShare {
    pub show: String,
    pub podcast: String,
    pub host_label: Option<String>,
    pub clips: usize,
    pub host_clips: usize,
    /// Host clips over the show's labeled clips.
    pub host_share: f64,
    /// Host clips over all labeled clips.
    pub pct_of_total: f64,
    pub cumulative_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDominance {
    pub show: String,
    pub episode_id: String,
    pub top_speaker: String,
    pub top_clips: usize,
    pub clips: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantSpeaker {
    pub speaker: String,
    pub clips: usize,
    pub pct_of_total: f64,
    pub cumulative_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub total_clips: usize,
    pub hosts: Vec<PodcastHostShare>,
    pub episodes: Vec<EpisodeDominance>,
    /// `(threshold, episodes above, percent of episodes)`.
    pub above: Vec<(f64, usize, f64)>,
    /// Host speakers by clip count, largest first.
    pub speakers: Vec<DominantSpeaker>,
    pub top_n: usize,
    /// Cumulative share of the `top_n` largest host speakers.
    pub top_share_pct: f64,
}

pub fn dominance_report(
    labels: &SpeakerLabelTable,
    corpus: &Corpus,
    opts: &DominanceOptions,
) -> DominanceReport {
    let total = labels.clips.len();
    let pct = |n: usize| {
        if total == 0 {
            0.0
        } else {
            100.0 * n as f64 / total as f64
        }
    };

    let mut per_episode: BTreeMap<EpisodeKey, BTreeMap<&str, usize>> = BTreeMap::new();
    // show → (podcast, clips, host clips, host labels)
    let mut per_show: BTreeMap<&str, (String, usize, usize, BTreeSet<&str>)> = BTreeMap::new();
    for c in &labels.clips {
        *per_episode
            .entry(EpisodeKey::new(&c.show, &c.episode_id))
            .or_default()
            .entry(c.speaker_label.as_str())
            .or_default() += 1;
        let podcast = corpus.merge_map().canonical(&c.show).to_string();
        let row = per_show
            .entry(c.show.as_str())
            .or_insert_with(|| (podcast, 0, 0, BTreeSet::new()));
        row.1 += 1;
        if c.is_host {
            row.2 += 1;
            row.3.insert(c.speaker_label.as_str());
        }
    }

    let episodes: Vec<EpisodeDominance> = per_episode
        .into_iter()
        .map(|(key, counts)| {
            let clips: usize = counts.values().sum();
            let (top, top_clips) = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(s, n)| (s.to_string(), *n))
                .expect("non-empty episode");
            EpisodeDominance {
                show: key.show,
                episode_id: key.episode_id,
                top_speaker: top,
                top_clips,
                clips,
                share: top_clips as f64 / clips as f64,
            }
        })
        .collect();
    let above = opts
        .thresholds
        .iter()
        .map(|&t| {
            let n = episodes.iter().filter(|e| e.share > t).count();
            let p = if episodes.is_empty() {
                0.0
            } else {
                100.0 * n as f64 / episodes.len() as f64
            };
            (t, n, p)
        })
        .collect();

    let mut speaker_clips: BTreeMap<String, usize> = BTreeMap::new();
    let mut hosts: Vec<PodcastHostShare> = Vec::new();
    for (show, (podcast, clips, host_clips, host_labels)) in per_show {
        if opts.excluded_podcasts.contains(&podcast) || opts.excluded_podcasts.contains(show) {
            continue;
        }
        hosts.push(PodcastHostShare {
            show: show.to_string(),
            podcast: podcast.clone(),
            host_label: host_labels.iter().next().map(|s| s.to_string()),
            clips,
            host_clips,
            host_share: host_clips as f64 / clips as f64,
            pct_of_total: pct(host_clips),
            cumulative_pct: 0.0,
        });
    }
    for c in labels.clips.iter().filter(|c| c.is_host) {
        let podcast = corpus.merge_map().canonical(&c.show);
        if !opts.excluded_podcasts.contains(podcast) && !opts.excluded_podcasts.contains(&c.show) {
            *speaker_clips.entry(c.speaker_label.clone()).or_default() += 1;
        }
    }

    // Shows of the same podcast stay adjacent, podcasts by host clips.
    let mut podcast_host: BTreeMap<String, usize> = BTreeMap::new();
    for h in &hosts {
        *podcast_host.entry(h.podcast.clone()).or_default() += h.host_clips;
    }
    hosts.sort_by(|a, b| {
        podcast_host[&b.podcast]
            .cmp(&podcast_host[&a.podcast])
            .then(a.podcast.cmp(&b.podcast))
            .then(b.host_clips.cmp(&a.host_clips))
            .then(a.show.cmp(&b.show))
    });
    let mut cumulative = 0;
    for h in &mut hosts {
        cumulative += h.host_clips;
        h.cumulative_pct = pct(cumulative);
    }

    let mut ranked: Vec<(String, usize)> = speaker_clips.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut cumulative = 0;
    let speakers: Vec<DominantSpeaker> = ranked
        .into_iter()
        .map(|(speaker, clips)| {
            cumulative += clips;
            DominantSpeaker {
                speaker,
                clips,
                pct_of_total: pct(clips),
                cumulative_pct: pct(cumulative),
            }
        })
        .collect();
    let top_share_pct = pct(speakers.iter().take(opts.top_n).map(|s| s.clips).sum());

    DominanceReport {
        total_clips: total,
        hosts,
        episodes,
        above,
        speakers,
        top_n: opts.top_n,
        top_share_pct,
    }
}

impl DominanceReport {
    pub fn to_text(&self) -> String {
        let mut rows = vec![[
            "Podcast",
            "Host",
            "Clips",
            "Host Share",
            "% of total clips",
            "Cumulative",
        ]
        .map(String::from)
        .to_vec()];
        for h in &self.hosts {
            rows.push(vec![
                h.show.clone(),
                h.host_label.clone().unwrap_or_else(|| "-".into()),
                h.clips.to_string(),
                format!("{:.1}%", 100.0 * h.host_share),
                format!("{:.2}%", h.pct_of_total),
                format!("{:.2}%", h.cumulative_pct),
            ]);
        }
        let mut out = render_aligned(&rows);
        out.push('\n');
        for (t, n, p) in &self.above {
            let _ = writeln!(
                out,
                "episodes with top-speaker share above {:.0}%: {n} ({p:.1}%)",
                100.0 * t
            );
        }
        let _ = writeln!(
            out,
            "top-{} host speakers hold {:.2}% of {} clips",
            self.top_n.min(self.speakers.len()),
            self.top_share_pct,
            self.total_clips
        );
        out
    }
}
