//! Clip-level corpus: labels, provenance and episode metadata.
//!
//! The labels file has one row per clip with annotator vote counts per
//! dysfluency type. Its `ClipId` column is the clip's index within the
//! episode; the corpus-wide identifier is `{Show}_{EpId}_{ClipId}`.

mod distribution;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use distribution::render_aligned;
pub use distribution::{label_distribution, DistributionTable, GroupBy, GroupStats};
pub use io::{load_corpus, load_labels_only, save_corpus};

/// Stuttering event types in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DysfluencyType {
    Block,
    Interjection,
    Prolongation,
    SoundRepetition,
    WordRepetition,
    NoStutteredWords,
}

impl DysfluencyType {
    pub const ALL: [DysfluencyType; 6] = [
        DysfluencyType::Block,
        DysfluencyType::Interjection,
        DysfluencyType::Prolongation,
        DysfluencyType::SoundRepetition,
        DysfluencyType::WordRepetition,
        DysfluencyType::NoStutteredWords,
    ];

    /// The five event types, without the fluent class.
    pub const EVENTS: [DysfluencyType; 5] = [
        DysfluencyType::Block,
        DysfluencyType::Interjection,
        DysfluencyType::Prolongation,
        DysfluencyType::SoundRepetition,
        DysfluencyType::WordRepetition,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name in CSV files.
    pub fn column(self) -> &'static str {
        match self {
            DysfluencyType::Block => "Block",
            DysfluencyType::Interjection => "Interjection",
            DysfluencyType::Prolongation => "Prolongation",
            DysfluencyType::SoundRepetition => "SoundRep",
            DysfluencyType::WordRepetition => "WordRep",
            DysfluencyType::NoStutteredWords => "NoStutteredWords",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DysfluencyType::Block => "Block",
            DysfluencyType::Interjection => "Interjection",
            DysfluencyType::Prolongation => "Prolongation",
            DysfluencyType::SoundRepetition => "Sound repetition",
            DysfluencyType::WordRepetition => "Word repetition",
            DysfluencyType::NoStutteredWords => "No stuttered words",
        }
    }

    pub fn from_column(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.column() == name)
    }
}

impl fmt::Display for DysfluencyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Annotator vote counts, one slot per [`DysfluencyType`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts(pub [u32; 6]);

impl Index<DysfluencyType> for LabelCounts {
    type Output = u32;
    fn index(&self, t: DysfluencyType) -> &u32 {
        &self.0[t.index()]
    }
}

impl IndexMut<DysfluencyType> for LabelCounts {
    fn index_mut(&mut self, t: DysfluencyType) -> &mut u32 {
        &mut self.0[t.index()]
    }
}

/// Binary per-type labels for one clip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(pub [bool; 6]);

impl LabelVector {
    pub fn positives(&self) -> impl Iterator<Item = DysfluencyType> + '_ {
        DysfluencyType::ALL.into_iter().filter(|t| self[*t])
    }
}

impl Index<DysfluencyType> for LabelVector {
    type Output = bool;
    fn index(&self, t: DysfluencyType) -> &bool {
        &self.0[t.index()]
    }
}

impl IndexMut<DysfluencyType> for LabelVector {
    fn index_mut(&mut self, t: DysfluencyType) -> &mut bool {
        &mut self.0[t.index()]
    }
}

/// Binarized labels keyed by clip id.
pub type BinaryLabels = BTreeMap<String, LabelVector>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::Female => "f",
            Gender::Male => "m",
            Gender::Unknown => "u",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token.trim() {
            "f" | "F" => Some(Gender::Female),
            "m" | "M" => Some(Gender::Male),
            "u" | "U" => Some(Gender::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    pub clip_id: String,
    /// Show name as it appears in the labels file.
    pub show: String,
    /// Show name after merge-map resolution.
    pub podcast: String,
    pub episode_id: String,
    pub clip_index: u64,
    pub start_ms: u64,
    pub stop_ms: u64,
    pub label_counts: LabelCounts,
    pub embedding_ref: Option<usize>,
}

impl Clip {
    pub fn make_id(show: &str, episode_id: &str, clip_index: u64) -> String {
        format!("{show}_{episode_id}_{clip_index}")
    }

    pub fn episode_key(&self) -> EpisodeKey {
        EpisodeKey::new(&self.show, &self.episode_id)
    }
}

/// Identifies an episode by its raw show name, so that merged shows with
/// overlapping episode numbers stay distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EpisodeKey {
    pub show: String,
    pub episode_id: String,
}

impl EpisodeKey {
    pub fn new(show: &str, episode_id: &str) -> Self {
        Self {
            show: show.to_string(),
            episode_id: episode_id.to_string(),
        }
    }
}

impl fmt::Display for EpisodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.show, self.episode_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub show: String,
    pub podcast: String,
    pub episode_id: String,
    pub expected_speakers: Option<u32>,
    pub host_name: Option<String>,
    pub guest_genders: Vec<Gender>,
}

impl EpisodeMeta {
    pub fn key(&self) -> EpisodeKey {
        EpisodeKey::new(&self.show, &self.episode_id)
    }

    /// Gender shared by every listed guest, if they agree.
    pub fn uniform_guest_gender(&self) -> Gender {
        let known: BTreeSet<Gender> = self
            .guest_genders
            .iter()
            .copied()
            .filter(|g| *g != Gender::Unknown)
            .collect();
        if known.len() == 1 && !self.guest_genders.contains(&Gender::Unknown) {
            *known.iter().next().unwrap()
        } else {
            Gender::Unknown
        }
    }
}

/// Raw show name to canonical podcast name. Unlisted names map to themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeMap(pub BTreeMap<String, String>);

impl Default for MergeMap {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert("HeStutters".to_string(), "WomenWhoStutter".to_string());
        MergeMap(map)
    }
}

impl MergeMap {
    pub fn identity() -> Self {
        MergeMap(BTreeMap::new())
    }

    pub fn canonical<'a>(&'a self, show: &'a str) -> &'a str {
        self.0.get(show).map(String::as_str).unwrap_or(show)
    }

    /// Parses `RAW=CANONICAL` pairs.
    pub fn parse_rules<S: AsRef<str>>(rules: &[S]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for rule in rules {
            let rule = rule.as_ref();
            let (raw, canon) = rule.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("merge rule `{rule}` is not RAW=CANONICAL"))
            })?;
            map.insert(raw.trim().to_string(), canon.trim().to_string());
        }
        Ok(MergeMap(map))
    }
}

/// Short show names used in report headers.
pub fn show_abbreviation(show: &str) -> &str {
    match show {
        "HVSA" => "HVSA",
        "IStutterSoWhat" => "ISW",
        "MyStutteringLife" => "MSL",
        "StrongVoices" => "SV",
        "StutterTalk" => "ST",
        "StutteringIsCool" => "SIC",
        "WomenWhoStutter" => "WWS",
        "HeStutters" => "HS",
        other => other,
    }
}

/// Display name for a canonical podcast, given the raw shows merged into it.
pub fn podcast_abbreviation(podcast: &str, members: &BTreeSet<String>) -> String {
    let he_she: BTreeSet<String> = ["HeStutters", "WomenWhoStutter"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if *members == he_she {
        "HeShe".to_string()
    } else if members.len() <= 1 {
        show_abbreviation(podcast).to_string()
    } else {
        podcast.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    clips: Vec<Clip>,
    episodes: Vec<EpisodeMeta>,
    merge_map: MergeMap,
    clip_index: HashMap<String, usize>,
    episode_index: HashMap<EpisodeKey, usize>,
}

impl Corpus {
    /// Builds a validated corpus. Podcast names of clips and episodes are
    /// recomputed from `merge_map`.
    pub fn new(
        mut clips: Vec<Clip>,
        mut episodes: Vec<EpisodeMeta>,
        merge_map: MergeMap,
    ) -> Result<Self> {
        let mut episode_index = HashMap::with_capacity(episodes.len());
        for (i, ep) in episodes.iter_mut().enumerate() {
            if ep.expected_speakers == Some(0) {
                return Err(Error::Integrity(format!(
                    "episode {} expects zero speakers",
                    ep.key()
                )));
            }
            ep.podcast = merge_map.canonical(&ep.show).to_string();
            if episode_index.insert(ep.key(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate episode {}", ep.key())));
            }
        }
        let mut clip_index = HashMap::with_capacity(clips.len());
        for (i, clip) in clips.iter_mut().enumerate() {
            if clip.stop_ms <= clip.start_ms {
                return Err(Error::Integrity(format!(
                    "clip {} stops ({}) before it starts ({})",
                    clip.clip_id, clip.stop_ms, clip.start_ms
                )));
            }
            if !episode_index.contains_key(&clip.episode_key()) {
                return Err(Error::Integrity(format!(
                    "clip {} references unknown episode {}",
                    clip.clip_id,
                    clip.episode_key()
                )));
            }
            clip.podcast = merge_map.canonical(&clip.show).to_string();
            if clip_index.insert(clip.clip_id.clone(), i).is_some() {
                return Err(Error::Integrity(format!(
                    "duplicate clip id {}",
                    clip.clip_id
                )));
            }
        }
        Ok(Self {
            clips,
            episodes,
            merge_map,
            clip_index,
            episode_index,
        })
    }

    pub fn clips(&self) -> &[Clip] {
        &self.clips
    }

    pub fn episodes(&self) -> &[EpisodeMeta] {
        &self.episodes
    }

    pub fn merge_map(&self) -> &MergeMap {
        &self.merge_map
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn clip(&self, clip_id: &str) -> Option<&Clip> {
        self.clip_index.get(clip_id).map(|&i| &self.clips[i])
    }

    pub fn episode(&self, key: &EpisodeKey) -> Option<&EpisodeMeta> {
        self.episode_index.get(key).map(|&i| &self.episodes[i])
    }

    pub fn episode_of(&self, clip: &Clip) -> &EpisodeMeta {
        // Construction guarantees every clip resolves.
        &self.episodes[self.episode_index[&clip.episode_key()]]
    }

    /// Canonical podcast names, sorted.
    pub fn podcasts(&self) -> BTreeSet<String> {
        self.clips.iter().map(|c| c.podcast.clone()).collect()
    }

    /// Raw shows that map onto each canonical podcast.
    pub fn podcast_members(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for clip in &self.clips {
            out.entry(clip.podcast.clone())
                .or_default()
                .insert(clip.show.clone());
        }
        out
    }

    /// Clip positions grouped by episode, in clip order.
    pub fn clips_by_episode(&self) -> BTreeMap<EpisodeKey, Vec<usize>> {
        let mut out: BTreeMap<EpisodeKey, Vec<usize>> = BTreeMap::new();
        for (i, clip) in self.clips.iter().enumerate() {
            out.entry(clip.episode_key()).or_default().push(i);
        }
        out
    }

    /// Sets `embedding_ref` from a clip-id lookup; returns the number linked.
    pub fn link_embeddings<F>(&mut self, lookup: F) -> usize
    where
        F: Fn(&str) -> Option<usize>,
    {
        let mut linked = 0;
        for clip in &mut self.clips {
            clip.embedding_ref = lookup(&clip.clip_id);
            linked += usize::from(clip.embedding_ref.is_some());
        }
        linked
    }

    /// Clip gender projected from episode metadata: non-host clips take the
    /// guests' gender when all guests agree.
    pub fn clip_gender(&self, clip: &Clip, is_host: bool) -> Gender {
        if is_host {
            Gender::Unknown
        } else {
            self.episode_of(clip).uniform_guest_gender()
        }
    }
}

/// A label is set iff its vote count reaches `threshold`.
pub fn binarize_labels(corpus: &Corpus, threshold: u32) -> BinaryLabels {
    assert!(threshold >= 1, "binarization threshold must be at least 1");
    corpus
        .clips()
        .iter()
        .map(|clip| {
            let mut v = LabelVector::default();
            for t in DysfluencyType::ALL {
                v[t] = clip.label_counts[t] >= threshold;
            }
            (clip.clip_id.clone(), v)
        })
        .collect()
}

pub const DEFAULT_BINARIZE_THRESHOLD: u32 = 2;
