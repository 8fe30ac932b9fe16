//! Train/dev/test and cross-validation partitions, with speaker
//! exclusivity where the scheme requires it.

mod balance;
mod io;
mod schemes;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryLabels, Corpus, DysfluencyType, Gender};
use crate::error::{Error, Result};
use crate::labeling::SpeakerLabelTable;

pub use balance::{
    balance_partition, evaluate_assignment, Balance, BalanceTargets, Objective, SpeakerStats,
};
pub use io::{load_splits, save_split_report, save_splits, SplitReport};
pub use schemes::{
    dominant_speakers, fixed_tdt_split, kfold_agnostic, kfold_speaker_exclusive, lopo_splits,
    sep12k_exclusions, DEFAULT_CV_RUNS, LOPO_TRAIN_SHARE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Dev, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Partition::Train),
            "dev" | "devel" | "development" | "val" | "valid" | "validation" => Ok(Partition::Dev),
            "test" => Ok(Partition::Test),
            _ => Err(Error::InvalidArgument(format!("unknown partition `{s}`"))),
        }
    }
}

/// Fixed train/dev/test variants built around the dominant speakers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TdtVariant {
    /// Dominant speakers train; the rest split into dev and test.
    E,
    /// Dominant speakers test; the rest split into train and dev.
    T,
    /// `T` with dev and test exchanged.
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Scheme {
    Lopo,
    KFoldAgnostic,
    KFoldSpeakerExclusive,
    FixedTdt(TdtVariant),
    /// Loaded from a file that names partitions only.
    External,
}

impl Scheme {
    pub fn is_speaker_exclusive(self) -> bool {
        matches!(self, Scheme::KFoldSpeakerExclusive | Scheme::FixedTdt(_))
    }

    pub fn is_fold_scheme(self) -> bool {
        matches!(self, Scheme::KFoldAgnostic | Scheme::KFoldSpeakerExclusive)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Lopo => f.write_str("lopo"),
            Scheme::KFoldAgnostic => f.write_str("kfold-agnostic"),
            Scheme::KFoldSpeakerExclusive => f.write_str("kfold-exclusive"),
            Scheme::FixedTdt(v) => write!(f, "tdt-{v:?}"),
            Scheme::External => f.write_str("external"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lopo" => Scheme::Lopo,
            "kfold-agnostic" => Scheme::KFoldAgnostic,
            "kfold-exclusive" => Scheme::KFoldSpeakerExclusive,
            "tdt-E" => Scheme::FixedTdt(TdtVariant::E),
            "tdt-T" => Scheme::FixedTdt(TdtVariant::T),
            "tdt-D" => Scheme::FixedTdt(TdtVariant::D),
            "external" | "" => Scheme::External,
            _ => return Err(Error::InvalidArgument(format!("unknown scheme `{s}`"))),
        })
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Where one clip goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Part(Partition),
    Fold(usize),
}

impl Slot {
    pub fn name(self) -> String {
        match self {
            Slot::Part(p) => p.to_string(),
            Slot::Fold(f) => format!("fold{f}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub scheme: Scheme,
    /// Repetition for fold schemes, held-out podcast index for
    /// leave-one-podcast-out, 0 otherwise.
    pub run: usize,
    /// Held-out podcast for leave-one-podcast-out, otherwise a run tag.
    pub name: String,
    pub seed: u64,
    pub slots: BTreeMap<String, Slot>,
    pub report: Option<ConstraintReport>,
}

impl SplitAssignment {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn count(&self, slot: Slot) -> usize {
        self.slots.values().filter(|&&s| s == slot).count()
    }

    pub fn n_folds(&self) -> usize {
        self.slots
            .values()
            .filter_map(|s| match s {
                Slot::Fold(f) => Some(f + 1),
                Slot::Part(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Train/test view of cross-validation fold `fold`: that fold is test,
    /// every other fold is train. Partition schemes are returned as is.
    pub fn fold_view(&self, fold: usize) -> BTreeMap<String, Partition> {
        self.slots
            .iter()
            .map(|(clip, slot)| {
                let part = match *slot {
                    Slot::Part(p) => p,
                    Slot::Fold(f) if f == fold => Partition::Test,
                    Slot::Fold(_) => Partition::Train,
                };
                (clip.clone(), part)
            })
            .collect()
    }

    /// Clip id → slot name, for distribution tables.
    pub fn slot_names(&self) -> BTreeMap<String, String> {
        self.slots
            .iter()
            .map(|(c, s)| (c.clone(), s.name()))
            .collect()
    }
}

/// Inputs shared by every scheme.
#[derive(Debug, Clone)]
pub struct SplitContext<'a> {
    pub corpus: &'a Corpus,
    pub labels: &'a BinaryLabels,
    /// Clip id → speaker label. Clips without a label get a per-episode
    /// placeholder speaker.
    pub speakers: BTreeMap<String, String>,
    pub genders: BTreeMap<String, Gender>,
    pub has_speaker_labels: bool,
}

impl<'a> SplitContext<'a> {
    pub fn new(
        corpus: &'a Corpus,
        labels: &'a BinaryLabels,
        table: Option<&SpeakerLabelTable>,
    ) -> Result<Self> {
        for clip in corpus.clips() {
            if !labels.contains_key(&clip.clip_id) {
                return Err(Error::Integrity(format!(
                    "no binary labels for clip {}",
                    clip.clip_id
                )));
            }
        }
        let known: BTreeMap<&str, (&str, bool)> = table
            .map(|t| {
                t.clips
                    .iter()
                    .map(|c| (c.clip_id.as_str(), (c.speaker_label.as_str(), c.is_host)))
                    .collect()
            })
            .unwrap_or_default();
        let mut speakers = BTreeMap::new();
        let mut genders = BTreeMap::new();
        for clip in corpus.clips() {
            let (speaker, is_host) = match known.get(clip.clip_id.as_str()) {
                Some(&(s, h)) => (s.to_string(), h),
                None => (
                    format!("{}_{}_UNLABELED", clip.show, clip.episode_id),
                    false,
                ),
            };
            let gender = if table.is_some() {
                corpus.clip_gender(clip, is_host)
            } else {
                Gender::Unknown
            };
            speakers.insert(clip.clip_id.clone(), speaker);
            genders.insert(clip.clip_id.clone(), gender);
        }
        Ok(Self {
            corpus,
            labels,
            speakers,
            genders,
            has_speaker_labels: table.is_some(),
        })
    }

    /// Per-speaker clip statistics over the given clips, in speaker order.
    pub fn speaker_stats<'c, I>(&self, clips: I) -> Vec<SpeakerStats>
    where
        I: IntoIterator<Item = &'c str>,
    {
        let mut by_speaker: BTreeMap<&str, SpeakerStats> = BTreeMap::new();
        for clip in clips {
            let speaker = self.speakers[clip].as_str();
            let s = by_speaker.entry(speaker).or_insert_with(|| SpeakerStats {
                speaker: speaker.to_string(),
                clips: 0,
                positives: [0; 6],
                female: 0,
                male: 0,
            });
            s.clips += 1;
            for t in self.labels[clip].positives() {
                s.positives[t.index()] += 1;
            }
            match self.genders[clip] {
                Gender::Female => s.female += 1,
                Gender::Male => s.male += 1,
                Gender::Unknown => {}
            }
        }
        by_speaker.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartStats {
    pub name: String,
    pub clips: usize,
    pub label_rates_pct: [f64; 6],
    pub female: usize,
    pub male: usize,
    pub unknown_gender: usize,
}

impl PartStats {
    /// Female share among clips of known gender, in percent.
    pub fn female_pct(&self) -> Option<f64> {
        let known = self.female + self.male;
        (known > 0).then(|| 100.0 * self.female as f64 / known as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Speakers whose clips land in more than one part.
    pub speaker_overlap_count: usize,
    pub parts: Vec<PartStats>,
    /// Rates over all assigned clips.
    pub overall_rates_pct: [f64; 6],
    /// Largest absolute gap, in percentage points, between any part's
    /// label rate and the overall rate.
    pub max_label_deviation: f64,
    /// Same for the female share among clips of known gender.
    pub max_gender_deviation: f64,
}

/// Recomputes every figure from the clip → slot mapping.
pub fn constraint_report(
    ctx: &SplitContext<'_>,
    slots: &BTreeMap<String, Slot>,
) -> Result<ConstraintReport> {
    let mut parts: BTreeMap<Slot, PartStats> = BTreeMap::new();
    let mut overall = [0usize; 6];
    let mut total_female = 0;
    let mut total_male = 0;
    let mut speaker_slots: BTreeMap<&str, BTreeSet<Slot>> = BTreeMap::new();
    for (clip, &slot) in slots {
        let labels = ctx
            .labels
            .get(clip)
            .ok_or_else(|| Error::Integrity(format!("split names unknown clip {clip}")))?;
        let p = parts.entry(slot).or_insert_with(|| PartStats {
            name: slot.name(),
            clips: 0,
            label_rates_pct: [0.0; 6],
            female: 0,
            male: 0,
            unknown_gender: 0,
        });
        p.clips += 1;
        for t in labels.positives() {
            p.label_rates_pct[t.index()] += 1.0;
            overall[t.index()] += 1;
        }
        match ctx.genders.get(clip).copied().unwrap_or(Gender::Unknown) {
            Gender::Female => {
                p.female += 1;
                total_female += 1;
            }
            Gender::Male => {
                p.male += 1;
                total_male += 1;
            }
            Gender::Unknown => p.unknown_gender += 1,
        }
        if let Some(s) = ctx.speakers.get(clip) {
            speaker_slots.entry(s.as_str()).or_default().insert(slot);
        }
    }
    let total = slots.len();
    let mut overall_rates_pct = [0.0; 6];
    for t in DysfluencyType::ALL {
        if total > 0 {
            overall_rates_pct[t.index()] = 100.0 * overall[t.index()] as f64 / total as f64;
        }
    }
    let overall_female = (total_female + total_male > 0)
        .then(|| 100.0 * total_female as f64 / (total_female + total_male) as f64);

    let mut max_label_deviation: f64 = 0.0;
    let mut max_gender_deviation: f64 = 0.0;
    let parts: Vec<PartStats> = parts
        .into_values()
        .map(|mut p| {
            for (rate, overall) in p.label_rates_pct.iter_mut().zip(&overall_rates_pct) {
                *rate *= 100.0 / p.clips as f64;
                max_label_deviation = max_label_deviation.max((*rate - overall).abs());
            }
            if let (Some(f), Some(all)) = (p.female_pct(), overall_female) {
                max_gender_deviation = max_gender_deviation.max((f - all).abs());
            }
            p
        })
        .collect();

    Ok(ConstraintReport {
        speaker_overlap_count: speaker_slots.values().filter(|s| s.len() > 1).count(),
        parts,
        overall_rates_pct,
        max_label_deviation,
        max_gender_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in [
            Scheme::Lopo,
            Scheme::KFoldAgnostic,
            Scheme::KFoldSpeakerExclusive,
            Scheme::FixedTdt(TdtVariant::E),
            Scheme::FixedTdt(TdtVariant::T),
            Scheme::FixedTdt(TdtVariant::D),
            Scheme::External,
        ] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        for p in Partition::ALL {
            assert_eq!(p.as_str().parse::<Partition>().unwrap(), p);
        }
        assert_eq!("Devel".parse::<Partition>().unwrap(), Partition::Dev);
    }

    #[test]
    fn fold_view_marks_one_fold_test() {
        let a = SplitAssignment {
            scheme: Scheme::KFoldAgnostic,
            run: 0,
            name: "run0".into(),
            seed: 0,
            slots: [("a", 0), ("b", 1), ("c", 2)]
                .into_iter()
                .map(|(c, f)| (c.to_string(), Slot::Fold(f)))
                .collect(),
            report: None,
        };
        assert_eq!(a.n_folds(), 3);
        let v = a.fold_view(1);
        assert_eq!(v["b"], Partition::Test);
        assert_eq!(v["a"], Partition::Train);
    }
}
