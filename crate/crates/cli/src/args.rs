use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use splitforge::splitting::Scheme;

#[derive(Debug, Parser)]
#[command(
    name = "splitforge",
    version,
    about = "Speaker labeling and speaker-exclusive splits for clip corpora"
)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Validate a corpus and write normalized files and label distributions.
    Ingest(IngestArgs),
    /// Generate a synthetic corpus with planted speakers.
    Synth(SynthArgs),
    /// Cluster embeddings into per-clip speaker labels with host detection.
    LabelSpeakers(LabelArgs),
    /// Per-episode quality criteria and combined pass counts.
    QualityReport(QualityArgs),
    /// Build leave-one-podcast-out, k-fold and fixed train/dev/test splits.
    MakeSplits(SplitArgs),
    /// Score predictions, or a reference classifier, on split files.
    Evaluate(EvaluateArgs),
    /// Re-run a `config.json` written by an earlier run.
    #[serde(skip)]
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed for every random choice.
    #[arg(long, env = "SPLITFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CorpusArgs {
    /// Labels CSV, one row per clip.
    #[arg(long)]
    pub labels: PathBuf,
    /// Episodes CSV; without it every episode has unknown metadata.
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    /// Show merge rule `RAW=CANONICAL`; replaces the default
    /// HeStutters=WomenWhoStutter rule. Repeatable.
    #[arg(long = "merge")]
    pub merge: Vec<String>,
    /// Keep every show separate.
    #[arg(long, conflicts_with = "merge")]
    pub no_merge: bool,
    /// Minimum annotator votes for a positive label.
    #[arg(long, default_value_t = 2)]
    pub binarize_threshold: u32,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// `default` or a JSON file with synthesis parameters.
    #[arg(long, default_value = "default")]
    pub spec: String,
    #[arg(long)]
    pub podcasts: Option<usize>,
    #[arg(long)]
    pub episodes_per_podcast: Option<usize>,
    #[arg(long)]
    pub clips_per_episode: Option<usize>,
    #[arg(long)]
    pub speakers_per_episode: Option<usize>,
    #[arg(long)]
    pub host_share: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
    /// Per-speaker shift of every label rate.
    #[arg(long)]
    pub speaker_label_bias: Option<f64>,
    /// Leave `ExpectedSpeakers` empty in the episodes file.
    #[arg(long)]
    pub hide_speaker_counts: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Inclusive cluster-count range written `MIN-MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| format!("`{s}` is not a range like 2-8"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{v}` is not a count"))
        };
        let (min, max) = (parse(a)?, parse(b)?);
        if min < 2 || max < min {
            return Err(format!("range {min}-{max} must satisfy 2 <= min <= max"));
        }
        Ok(Self { min, max })
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LabelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    /// Embeddings, binary or CSV.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// PCA dimension.
    #[arg(long, default_value_t = 4)]
    pub target_dim: usize,
    /// Fixed cluster count for the podcast-level host clustering.
    #[arg(long, conflicts_with = "host_k_range")]
    pub host_k: Option<usize>,
    #[arg(long, default_value = "2-10")]
    pub host_k_range: KRange,
    /// Candidate k for episodes without a known speaker count.
    #[arg(long, default_value = "2-8")]
    pub episode_k_range: KRange,
    /// Hosts per podcast.
    #[arg(long, default_value_t = 1)]
    pub n_hosts: usize,
    /// `ClipId,SpeakerLabel,IsHost` corrections applied after clustering.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    /// Planted `ground_truth.csv` to score the labels against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Thresholds {
    /// Mean silhouette must be strictly above this.
    #[arg(long, default_value_t = 0.20)]
    pub silhouette: f64,
    /// Variance ratio must be strictly above this.
    #[arg(long, default_value_t = 10.0)]
    pub vr: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QualityArgs {
    /// `episode_quality.csv` from label-speakers.
    #[arg(long)]
    pub quality: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub thresholds: Thresholds,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: splitforge::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SplitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    /// `speaker_labels.csv`; required by speaker-exclusive schemes.
    #[arg(long)]
    pub speaker_labels: Option<PathBuf>,
    /// `episode_quality.csv`; when given, clips of episodes failing the
    /// thresholds lose their speaker labels.
    #[arg(long, requires = "speaker_labels")]
    pub quality: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub thresholds: Thresholds,
    /// Comma-separated: lopo, kfold-agnostic, kfold-exclusive, tdt-E,
    /// tdt-T, tdt-D.
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme, default_value = "lopo,kfold-agnostic")]
    pub schemes: Vec<Scheme>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Repetitions of each k-fold scheme.
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// Dominant host speakers fixed to one part of the tdt splits.
    #[arg(long, default_value_t = 4)]
    pub n_dominant: usize,
    /// Drop the dominant speakers from speaker-exclusive k-fold.
    #[arg(long)]
    pub exclude_dominant: bool,
    /// Podcast left out of the dominant-speaker ranking. Repeatable.
    #[arg(long)]
    pub exclude_podcast: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    /// Split CSV.
    #[arg(long)]
    pub splits: PathBuf,
    /// Predictions CSV.
    #[arg(
        long,
        required_unless_present = "reference",
        conflicts_with = "reference"
    )]
    pub predictions: Option<PathBuf>,
    /// Train and score the nearest-centroid reference classifier.
    #[arg(long, requires = "embeddings")]
    pub reference: bool,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Comma-separated label columns to score.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "Block,Interjection,Prolongation,SoundRep,WordRep"
    )]
    pub classes: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RerunArgs {
    /// `config.json` of an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
