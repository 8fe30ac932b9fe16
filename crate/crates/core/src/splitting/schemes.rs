use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use super::{
    balance_partition, constraint_report, BalanceTargets, Partition, Scheme, Slot, SplitAssignment,
    SplitContext, TdtVariant,
};
use crate::corpus::{podcast_abbreviation, Corpus};
use crate::error::{Error, Result};
use crate::labeling::{dominance_report, DominanceOptions, SpeakerLabelTable};
use crate::seed::{derive_seed, derive_seed_n, rng};

/// Repetitions of every cross-validation scheme.
pub const DEFAULT_CV_RUNS: usize = 5;
/// Share of the non-test clips that go to train in leave-one-podcast-out.
pub const LOPO_TRAIN_SHARE: f64 = 0.8;
/// Fold size tolerance of the speaker-exclusive k-fold balancer.
const FOLD_SIZE_TOLERANCE: f64 = 0.1;
/// Size tolerance for the two balanced parts of the fixed splits.
const TDT_SIZE_TOLERANCE: f64 = 0.02;

fn finish(ctx: &SplitContext<'_>, mut a: SplitAssignment) -> Result<SplitAssignment> {
    a.report = Some(constraint_report(ctx, &a.slots)?);
    Ok(a)
}

/// One split per canonical podcast, in name order. The held-out podcast is
/// test; the remaining clips are shuffled and divided 80/20 into train and
/// dev.
pub fn lopo_splits(ctx: &SplitContext<'_>, seed: u64) -> Result<Vec<SplitAssignment>> {
    let members = ctx.corpus.podcast_members();
    if members.len() < 2 {
        return Err(Error::SinglePodcast(members.len()));
    }
    members
        .iter()
        .enumerate()
        .map(|(run, (podcast, shows))| {
            let mut rest: Vec<&str> = Vec::new();
            let mut slots = BTreeMap::new();
            for clip in ctx.corpus.clips() {
                if &clip.podcast == podcast {
                    slots.insert(clip.clip_id.clone(), Slot::Part(Partition::Test));
                } else {
                    rest.push(&clip.clip_id);
                }
            }
            rest.sort_unstable();
            let split_seed = derive_seed(seed, &format!("lopo:{podcast}"));
            rest.shuffle(&mut rng(split_seed));
            let n_train = (LOPO_TRAIN_SHARE * rest.len() as f64).round() as usize;
            for (i, clip) in rest.into_iter().enumerate() {
                let part = if i < n_train {
                    Partition::Train
                } else {
                    Partition::Dev
                };
                slots.insert(clip.to_string(), Slot::Part(part));
            }
            finish(
                ctx,
                SplitAssignment {
                    scheme: Scheme::Lopo,
                    run,
                    name: podcast_abbreviation(podcast, shows),
                    seed: split_seed,
                    slots,
                    report: None,
                },
            )
        })
        .collect()
}

/// `runs` independent shuffles of all clips into `k` folds whose sizes
/// differ by at most one.
pub fn kfold_agnostic(
    ctx: &SplitContext<'_>,
    k: usize,
    seed: u64,
    runs: usize,
) -> Result<Vec<SplitAssignment>> {
    if k < 2 {
        return Err(Error::InvalidArgument("k-fold needs k >= 2".into()));
    }
    let mut ids: Vec<&str> = ctx
        .corpus
        .clips()
        .iter()
        .map(|c| c.clip_id.as_str())
        .collect();
    if ids.len() < k {
        return Err(Error::TooFewClips {
            needed: k,
            found: ids.len(),
        });
    }
    ids.sort_unstable();
    let base = derive_seed(seed, "kfold-agnostic");
    (0..runs)
        .map(|run| {
            let run_seed = derive_seed_n(base, run as u64);
            let mut order = ids.clone();
            order.shuffle(&mut rng(run_seed));
            let slots = order
                .into_iter()
                .enumerate()
                .map(|(i, c)| (c.to_string(), Slot::Fold(i % k)))
                .collect();
            finish(
                ctx,
                SplitAssignment {
                    scheme: Scheme::KFoldAgnostic,
                    run,
                    name: format!("run{run}"),
                    seed: run_seed,
                    slots,
                    report: None,
                },
            )
        })
        .collect()
}

/// `runs` balanced assignments of whole speakers to `k` folds. Clips of
/// `exclude` speakers are left out entirely.
pub fn kfold_speaker_exclusive(
    ctx: &SplitContext<'_>,
    k: usize,
    seed: u64,
    runs: usize,
    exclude: &[String],
) -> Result<Vec<SplitAssignment>> {
    if k < 2 {
        return Err(Error::InvalidArgument("k-fold needs k >= 2".into()));
    }
    let excluded: BTreeSet<&str> = exclude.iter().map(String::as_str).collect();
    let eligible: Vec<&str> = ctx
        .corpus
        .clips()
        .iter()
        .map(|c| c.clip_id.as_str())
        .filter(|c| !excluded.contains(ctx.speakers[*c].as_str()))
        .collect();
    let stats = ctx.speaker_stats(eligible.iter().copied());
    if stats.len() < k {
        return Err(Error::TooFewSpeakers {
            needed: k,
            found: stats.len(),
        });
    }
    let index: BTreeMap<&str, usize> = stats
        .iter()
        .enumerate()
        .map(|(i, s)| (s.speaker.as_str(), i))
        .collect();
    let base = derive_seed(seed, "kfold-exclusive");
    (0..runs)
        .map(|run| {
            let run_seed = derive_seed_n(base, run as u64);
            let balance = balance_partition(
                &stats,
                &BalanceTargets::equal(k, FOLD_SIZE_TOLERANCE),
                run_seed,
            );
            let slots = eligible
                .iter()
                .map(|&c| {
                    let fold = balance.assignment[index[ctx.speakers[c].as_str()]];
                    (c.to_string(), Slot::Fold(fold))
                })
                .collect();
            finish(
                ctx,
                SplitAssignment {
                    scheme: Scheme::KFoldSpeakerExclusive,
                    run,
                    name: format!("run{run}"),
                    seed: run_seed,
                    slots,
                    report: None,
                },
            )
        })
        .collect()
}

/// The `n` host speakers with the most clips, largest first.
pub fn dominant_speakers(
    table: &SpeakerLabelTable,
    corpus: &Corpus,
    n: usize,
    excluded_podcasts: &BTreeSet<String>,
) -> Result<Vec<String>> {
    let opts = DominanceOptions {
        top_n: n,
        excluded_podcasts: excluded_podcasts.clone(),
        ..DominanceOptions::default()
    };
    let report = dominance_report(table, corpus, &opts);
    if report.speakers.len() < n {
        return Err(Error::InsufficientDominantSpeakers {
            needed: n,
            found: report.speakers.len(),
        });
    }
    Ok(report
        .speakers
        .into_iter()
        .take(n)
        .map(|s| s.speaker)
        .collect())
}

/// Speakers dropped from the reduced k-fold corpus: the four dominant hosts.
pub fn sep12k_exclusions(
    table: &SpeakerLabelTable,
    corpus: &Corpus,
    excluded_podcasts: &BTreeSet<String>,
) -> Result<Vec<String>> {
    dominant_speakers(table, corpus, 4, excluded_podcasts)
}

/// Fixed train/dev/test split around the `dominant` speakers. The two
/// parts that share the remaining speakers are balanced to equal size and
/// similar label and gender distributions.
pub fn fixed_tdt_split(
    ctx: &SplitContext<'_>,
    variant: TdtVariant,
    dominant: &[String],
    seed: u64,
) -> Result<SplitAssignment> {
    let dominant_set: BTreeSet<&str> = dominant.iter().map(String::as_str).collect();
    let present: BTreeSet<&str> = ctx.speakers.values().map(String::as_str).collect();
    let found = dominant_set
        .iter()
        .filter(|s| present.contains(**s))
        .count();
    if dominant_set.is_empty() || found < dominant_set.len() {
        return Err(Error::InsufficientDominantSpeakers {
            needed: dominant_set.len().max(1),
            found,
        });
    }
    let (fixed, pair, tag) = match variant {
        TdtVariant::E => (Partition::Train, [Partition::Dev, Partition::Test], "tdt-E"),
        TdtVariant::T | TdtVariant::D => {
            (Partition::Test, [Partition::Train, Partition::Dev], "tdt-T")
        }
    };
    let split_seed = derive_seed(seed, tag);

    let mut slots = BTreeMap::new();
    let mut rest = Vec::new();
    for clip in ctx.corpus.clips() {
        if dominant_set.contains(ctx.speakers[&clip.clip_id].as_str()) {
            slots.insert(clip.clip_id.clone(), Slot::Part(fixed));
        } else {
            rest.push(clip.clip_id.as_str());
        }
    }
    let stats = ctx.speaker_stats(rest.iter().copied());
    if stats.len() < 2 {
        return Err(Error::TooFewSpeakers {
            needed: 2,
            found: stats.len(),
        });
    }
    let index: BTreeMap<&str, usize> = stats
        .iter()
        .enumerate()
        .map(|(i, s)| (s.speaker.as_str(), i))
        .collect();
    let balance = balance_partition(
        &stats,
        &BalanceTargets::equal(2, TDT_SIZE_TOLERANCE),
        split_seed,
    );
    for clip in rest {
        let part = pair[balance.assignment[index[ctx.speakers[clip].as_str()]]];
        slots.insert(clip.to_string(), Slot::Part(part));
    }
    if variant == TdtVariant::D {
        for slot in slots.values_mut() {
            *slot = match *slot {
                Slot::Part(Partition::Dev) => Slot::Part(Partition::Test),
                Slot::Part(Partition::Test) => Slot::Part(Partition::Dev),
                other => other,
            };
        }
    }
    finish(
        ctx,
        SplitAssignment {
            scheme: Scheme::FixedTdt(variant),
            run: 0,
            name: format!("{variant:?}"),
            seed: split_seed,
            slots,
            report: None,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::binarize_labels;
    use crate::labeling::ClipSpeaker;
    use crate::synth::{generate, SynthCorpus, SynthSpec};

    fn small() -> SynthCorpus {
        let spec = SynthSpec {
            n_podcasts: 5,
            episodes_per_podcast: 4,
            clips_per_episode: 20,
            ..SynthSpec::default()
        };
        generate(&spec, 8).unwrap()
    }

    fn truth_table(s: &SynthCorpus) -> SpeakerLabelTable {
        SpeakerLabelTable {
            clips: s
                .corpus
                .clips()
                .iter()
                .map(|c| ClipSpeaker {
                    show: c.show.clone(),
                    episode_id: c.episode_id.clone(),
                    clip_id: c.clip_id.clone(),
                    speaker_label: s.truth.speaker_of[&c.clip_id].clone(),
                    is_host: s.truth.is_host(&c.clip_id),
                    silhouette: None,
                })
                .collect(),
            episodes: vec![],
        }
    }

    #[test]
    fn lopo_holds_out_each_podcast() {
        let s = small();
        let labels = binarize_labels(&s.corpus, 2);
        let ctx = SplitContext::new(&s.corpus, &labels, None).unwrap();
        let splits = lopo_splits(&ctx, 1).unwrap();
        assert_eq!(splits.len(), 5);
        for split in &splits {
            for clip in s.corpus.clips() {
                let is_test = split.slots[&clip.clip_id] == Slot::Part(Partition::Test);
                assert_eq!(is_test, clip.podcast == split.name);
            }
            let train = split.count(Slot::Part(Partition::Train));
            let dev = split.count(Slot::Part(Partition::Dev));
            assert_eq!(train, ((train + dev) as f64 * 0.8).round() as usize);
        }
    }

    #[test]
    fn single_podcast_rejected() {
        let spec = SynthSpec {
            n_podcasts: 1,
            ..SynthSpec::default()
        };
        let s = generate(&spec, 1).unwrap();
        let labels = binarize_labels(&s.corpus, 2);
        let ctx = SplitContext::new(&s.corpus, &labels, None).unwrap();
        assert!(matches!(lopo_splits(&ctx, 0), Err(Error::SinglePodcast(1))));
    }

    #[test]
    fn agnostic_fold_sizes() {
        let s = small();
        let labels = binarize_labels(&s.corpus, 2);
        let ctx = SplitContext::new(&s.corpus, &labels, None).unwrap();
        let runs = kfold_agnostic(&ctx, 7, 3, DEFAULT_CV_RUNS).unwrap();
        assert_eq!(runs.len(), 5);
        for r in &runs {
            let sizes: Vec<usize> = (0..7).map(|f| r.count(Slot::Fold(f))).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert_ne!(runs[0].slots, runs[1].slots);
        assert_eq!(
            kfold_agnostic(&ctx, 7, 3, 1).unwrap()[0].slots,
            runs[0].slots
        );
        assert!(matches!(
            kfold_agnostic(&ctx, 1000, 3, 1),
            Err(Error::TooFewClips { .. })
        ));
    }

    #[test]
    fn exclusive_folds_have_no_overlap() {
        let s = small();
        let labels = binarize_labels(&s.corpus, 2);
        let table = truth_table(&s);
        let ctx = SplitContext::new(&s.corpus, &labels, Some(&table)).unwrap();
        let exclude = sep12k_exclusions(&table, &s.corpus, &BTreeSet::new()).unwrap();
        let runs = kfold_speaker_exclusive(&ctx, 5, 2, 2, &exclude).unwrap();
        for r in &runs {
            assert_eq!(r.report.as_ref().unwrap().speaker_overlap_count, 0);
            assert!(r.slots.keys().all(|c| !exclude.contains(&ctx.speakers[c])));
            let mean = r.len() as f64 / 5.0;
            for f in 0..5 {
                assert!((r.count(Slot::Fold(f)) as f64 - mean).abs() <= 0.2 * mean);
            }
        }
        assert!(matches!(
            kfold_speaker_exclusive(&ctx, 500, 2, 1, &[]),
            Err(Error::TooFewSpeakers { .. })
        ));
    }

    #[test]
    fn tdt_variants() {
        let s = small();
        let labels = binarize_labels(&s.corpus, 2);
        let table = truth_table(&s);
        let ctx = SplitContext::new(&s.corpus, &labels, Some(&table)).unwrap();
        let dominant = dominant_speakers(&table, &s.corpus, 4, &BTreeSet::new()).unwrap();
        let e = fixed_tdt_split(&ctx, TdtVariant::E, &dominant, 5).unwrap();
        for (clip, slot) in &e.slots {
            let dom = dominant.contains(&ctx.speakers[clip]);
            assert_eq!(dom, *slot == Slot::Part(Partition::Train));
        }
        assert_eq!(e.report.as_ref().unwrap().speaker_overlap_count, 0);
        let t = fixed_tdt_split(&ctx, TdtVariant::T, &dominant, 5).unwrap();
        let d = fixed_tdt_split(&ctx, TdtVariant::D, &dominant, 5).unwrap();
        for (clip, slot) in &t.slots {
            let swapped = match slot {
                Slot::Part(Partition::Dev) => Slot::Part(Partition::Test),
                Slot::Part(Partition::Test) => Slot::Part(Partition::Dev),
                s => *s,
            };
            assert_eq!(d.slots[clip], swapped);
        }
        let train = t.count(Slot::Part(Partition::Train)) as f64;
        let dev = t.count(Slot::Part(Partition::Dev)) as f64;
        assert!((train - dev).abs() / (train + dev) < 0.05);
        assert!(matches!(
            dominant_speakers(&table, &s.corpus, 6, &BTreeSet::new()),
            Err(Error::InsufficientDominantSpeakers {
                needed: 6,
                found: 5
            })
        ));
    }
}
