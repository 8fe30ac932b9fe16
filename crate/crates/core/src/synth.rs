//! Synthetic corpora with planted speakers, hosts and label confounds.
//!
//! Each podcast has one host who appears in every episode with a fixed
//! share of the clips; the remaining clips are split evenly among guests
//! unique to the episode. Speaker embeddings are isotropic unit-variance
//! Gaussians around speaker centroids placed `centroid_separation` apart.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    save_corpus, Clip, Corpus, DysfluencyType, EpisodeMeta, Gender, LabelCounts, MergeMap,
};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::labeling::SpeakerLabelTable;
use crate::metrics::{adjusted_rand_index, matched_accuracy};
use crate::seed::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_podcasts: usize,
    pub episodes_per_podcast: usize,
    pub clips_per_episode: usize,
    /// Host plus guests in every episode.
    pub speakers_per_episode: usize,
    pub host_share: f64,
    pub embedding_dim: usize,
    /// Minimum distance between speaker centroids within an episode, in
    /// units of the within-speaker standard deviation.
    pub centroid_separation: f64,
    pub label_rates: BTreeMap<DysfluencyType, f64>,
    /// Each speaker shifts each label rate by `±speaker_label_bias`.
    pub speaker_label_bias: f64,
    /// Whether `ExpectedSpeakers` is filled in the episode metadata.
    pub expected_speakers_known: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let label_rates = [0.12, 0.21, 0.11, 0.10, 0.08, 0.56];
        Self {
            n_podcasts: 3,
            episodes_per_podcast: 10,
            clips_per_episode: 60,
            speakers_per_episode: 3,
            host_share: 0.6,
            embedding_dim: 8,
            centroid_separation: 8.0,
            label_rates: DysfluencyType::ALL.into_iter().zip(label_rates).collect(),
            speaker_label_bias: 0.0,
            expected_speakers_known: true,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.n_podcasts == 0 || self.episodes_per_podcast == 0 || self.clips_per_episode == 0 {
            return fail("podcast, episode and clip counts must be positive".into());
        }
        if self.speakers_per_episode == 0 {
            return fail("speakers_per_episode must be at least 1".into());
        }
        if !(self.host_share > 0.0 && self.host_share <= 1.0) {
            return fail(format!("host_share {} outside (0, 1]", self.host_share));
        }
        if self.embedding_dim == 0 {
            return fail("embedding_dim must be positive".into());
        }
        if !(self.centroid_separation >= 0.0 && self.centroid_separation.is_finite()) {
            return fail("centroid_separation must be finite and non-negative".into());
        }
        if !(self.speaker_label_bias >= 0.0 && self.speaker_label_bias.is_finite()) {
            return fail("speaker_label_bias must be finite and non-negative".into());
        }
        for (t, r) in &self.label_rates {
            if !(0.0..=1.0).contains(r) {
                return fail(format!("label rate for {t} outside [0, 1]"));
            }
        }
        let (_, guest_clips) = self.clip_split();
        if self.speakers_per_episode > 1 && guest_clips.contains(&0) {
            return fail("host_share leaves no clips for some guests".into());
        }
        Ok(())
    }

    fn rate(&self, t: DysfluencyType) -> f64 {
        self.label_rates.get(&t).copied().unwrap_or(0.0)
    }

    /// Clips per episode for the host and for each guest.
    fn clip_split(&self) -> (usize, Vec<usize>) {
        let n = self.clips_per_episode;
        let guests = self.speakers_per_episode - 1;
        if guests == 0 {
            return (n, Vec::new());
        }
        let host = ((self.host_share * n as f64).round() as usize).min(n);
        let rest = n - host;
        let guest_clips = (0..guests)
            .map(|g| rest / guests + usize::from(g < rest % guests))
            .collect();
        (host, guest_clips)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub speaker_of: BTreeMap<String, String>,
    /// Canonical podcast → host speaker id.
    pub hosts: BTreeMap<String, String>,
}

impl GroundTruth {
    pub fn is_host(&self, clip_id: &str) -> bool {
        self.speaker_of
            .get(clip_id)
            .is_some_and(|s| self.hosts.values().any(|h| h == s))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["ClipId", "Speaker", "IsHost"])?;
        for (clip, speaker) in &self.speaker_of {
            let host = self.hosts.values().any(|h| h == speaker);
            w.write_record([
                clip.as_str(),
                speaker.as_str(),
                if host { "1" } else { "0" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `ground_truth.csv`; host ids are recovered per podcast from the
    /// host speaker naming `{podcast}_host`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut truth = GroundTruth::default();
        for record in reader.records() {
            let record = record?;
            if record.len() < 3 {
                return Err(Error::format(
                    path,
                    record.position().map_or(0, |p| p.line()),
                    "expected 3 columns",
                ));
            }
            let speaker = record[1].to_string();
            if &record[2] == "1" {
                let podcast = speaker
                    .strip_suffix("_host")
                    .unwrap_or(&speaker)
                    .to_string();
                truth.hosts.insert(podcast, speaker.clone());
            }
            truth.speaker_of.insert(record[0].to_string(), speaker);
        }
        Ok(truth)
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub embeddings: EmbeddingStore,
    pub truth: GroundTruth,
}

impl SynthCorpus {
    /// Writes `labels.csv`, `episodes.csv`, `embeddings.bin` and
    /// `ground_truth.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        save_corpus(
            &self.corpus,
            &dir.join("labels.csv"),
            &dir.join("episodes.csv"),
        )?;
        self.embeddings.save_binary(&dir.join("embeddings.bin"))?;
        self.truth.save(&dir.join("ground_truth.csv"))
    }
}

struct Speaker {
    id: String,
    centroid: Vec<f64>,
    bias: [f64; 6],
}

fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Draws a centroid on the sphere of radius `separation` that keeps at least
/// `separation` from every centroid in `others` (best effort after a bounded
/// number of draws).
fn place_centroid<R: Rng>(rng: &mut R, dim: usize, separation: f64, others: &[&[f64]]) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..500 {
        let c: Vec<f64> = random_direction(rng, dim)
            .into_iter()
            .map(|x| x * separation)
            .collect();
        let gap = others
            .iter()
            .map(|o| distance(&c, o))
            .fold(f64::INFINITY, f64::min);
        if gap >= separation {
            return c;
        }
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            best = Some((gap, c));
        }
    }
    best.expect("at least one draw").1
}

fn make_speaker<R: Rng>(rng: &mut R, id: String, centroid: Vec<f64>, bias: f64) -> Speaker {
    let mut shift = [0.0; 6];
    for s in shift.iter_mut() {
        *s = if rng.gen_bool(0.5) { bias } else { -bias };
    }
    Speaker {
        id,
        centroid,
        bias: shift,
    }
}

pub fn generate(spec: &SynthSpec, seed: u64) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = rng(seed);
    let dim = spec.embedding_dim;
    let sep = spec.centroid_separation;
    let (host_clips, guest_clips) = spec.clip_split();

    let mut clips = Vec::new();
    let mut episodes = Vec::new();
    let mut store = EmbeddingStore::new(dim);
    let mut truth = GroundTruth::default();

    for p in 0..spec.n_podcasts {
        let show = format!("Synth{p:02}");
        let host_centroid = place_centroid(&mut rng, dim, sep, &[]);
        let host = make_speaker(
            &mut rng,
            format!("{show}_host"),
            host_centroid,
            spec.speaker_label_bias,
        );
        truth.hosts.insert(show.clone(), host.id.clone());

        for e in 0..spec.episodes_per_podcast {
            let episode_id = e.to_string();
            let mut guests: Vec<Speaker> = Vec::new();
            let mut guest_genders = Vec::new();
            for g in 0..guest_clips.len() {
                let others: Vec<&[f64]> = std::iter::once(host.centroid.as_slice())
                    .chain(guests.iter().map(|s| s.centroid.as_slice()))
                    .collect();
                let centroid = place_centroid(&mut rng, dim, sep, &others);
                guests.push(make_speaker(
                    &mut rng,
                    format!("{show}_e{e}_g{g}"),
                    centroid,
                    spec.speaker_label_bias,
                ));
                guest_genders.push(if rng.gen_bool(0.5) {
                    Gender::Female
                } else {
                    Gender::Male
                });
            }

            let mut order: Vec<usize> = std::iter::repeat_n(0, host_clips)
                .chain(
                    guest_clips
                        .iter()
                        .enumerate()
                        .flat_map(|(g, &n)| std::iter::repeat_n(g + 1, n)),
                )
                .collect();
            order.shuffle(&mut rng);

            for (idx, &who) in order.iter().enumerate() {
                let speaker = if who == 0 { &host } else { &guests[who - 1] };
                let mut counts = LabelCounts::default();
                for t in DysfluencyType::ALL {
                    let rate = (spec.rate(t) + speaker.bias[t.index()]).clamp(0.0, 1.0);
                    counts[t] = if rng.gen_bool(rate) {
                        2 + u32::from(rng.gen_bool(0.5))
                    } else {
                        u32::from(rng.gen_bool(0.2))
                    };
                }
                let vector: Vec<f32> = speaker
                    .centroid
                    .iter()
                    .map(|c| {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        (c + noise) as f32
                    })
                    .collect();
                let clip_index = idx as u64;
                let clip_id = Clip::make_id(&show, &episode_id, clip_index);
                let row = store.push(&clip_id, &vector)?;
                truth.speaker_of.insert(clip_id.clone(), speaker.id.clone());
                clips.push(Clip {
                    clip_id,
                    show: show.clone(),
                    podcast: show.clone(),
                    episode_id: episode_id.clone(),
                    clip_index,
                    start_ms: clip_index * 3000,
                    stop_ms: clip_index * 3000 + 3000,
                    label_counts: counts,
                    embedding_ref: Some(row),
                });
            }
            episodes.push(EpisodeMeta {
                show: show.clone(),
                podcast: show.clone(),
                episode_id,
                expected_speakers: spec
                    .expected_speakers_known
                    .then_some(spec.speakers_per_episode as u32),
                host_name: Some(host.id.clone()),
                guest_genders,
            });
        }
    }

    let corpus = Corpus::new(clips, episodes, MergeMap::identity())?;
    Ok(SynthCorpus {
        corpus,
        embeddings: store,
        truth,
    })
}

/// Agreement of a speaker-label table with the planted truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub clips: usize,
    pub episodes: usize,
    /// Episodes whose host-flagged clips are mostly the planted host.
    pub host_identification: f64,
    /// Clips whose host flag matches the truth.
    pub host_flag_accuracy: f64,
    /// Speaker-label accuracy after optimal one-to-one relabeling.
    pub speaker_accuracy: f64,
    pub adjusted_rand_index: f64,
}

/// Scores every labeled clip that has a planted speaker.
pub fn score_recovery(table: &SpeakerLabelTable, truth: &GroundTruth) -> RecoveryReport {
    let mut pred = Vec::new();
    let mut actual = Vec::new();
    let mut flags_right = 0usize;
    let mut per_episode: BTreeMap<(&str, &str), BTreeMap<&str, usize>> = BTreeMap::new();
    let mut seen_episodes: std::collections::BTreeSet<(&str, &str)> =
        std::collections::BTreeSet::new();
    for c in &table.clips {
        let Some(speaker) = truth.speaker_of.get(&c.clip_id) else {
            continue;
        };
        pred.push(c.speaker_label.as_str());
        actual.push(speaker.as_str());
        flags_right += usize::from(c.is_host == truth.is_host(&c.clip_id));
        let key = (c.show.as_str(), c.episode_id.as_str());
        seen_episodes.insert(key);
        if c.is_host {
            *per_episode
                .entry(key)
                .or_default()
                .entry(speaker.as_str())
                .or_default() += 1;
        }
    }
    let identified = per_episode
        .values()
        .filter(|counts| {
            let top = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(s, _)| *s);
            top.is_some_and(|s| truth.hosts.values().any(|h| h == s))
        })
        .count();
    let n = pred.len();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    RecoveryReport {
        clips: n,
        episodes: seen_episodes.len(),
        host_identification: ratio(identified, seen_episodes.len()),
        host_flag_accuracy: ratio(flags_right, n),
        speaker_accuracy: if n == 0 {
            0.0
        } else {
            matched_accuracy(&pred, &actual)
        },
        adjusted_rand_index: if n == 0 {
            0.0
        } else {
            adjusted_rand_index(&pred, &actual)
        },
    }
}
