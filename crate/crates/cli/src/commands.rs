use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use splitforge::corpus::{
    binarize_labels, label_distribution, load_corpus, load_labels_only, render_aligned,
    save_corpus, Corpus, DysfluencyType, GroupBy, MergeMap,
};
use splitforge::embedding::EmbeddingStore;
use splitforge::evaluation::{
    cross_validate_reference, evaluate_split, load_predictions, save_predictions, FoldScore,
    PredictionKey, ScoreTable,
};
use splitforge::labeling::{
    apply_overrides, dominance_report, label_speakers, load_episode_quality, load_overrides,
    summarize_quality, DominanceOptions, HostK, LabelingOptions, QualityThresholds,
    SpeakerLabelTable,
};
use splitforge::splitting::{
    dominant_speakers, fixed_tdt_split, kfold_agnostic, kfold_speaker_exclusive, load_splits,
    lopo_splits, save_split_report, save_splits, Scheme, Slot, SplitAssignment, SplitContext,
    SplitReport,
};
use splitforge::synth::{generate, score_recovery, GroundTruth, SynthSpec};
use splitforge::Error;

use crate::args::{
    Command, CorpusArgs, EvaluateArgs, IngestArgs, LabelArgs, QualityArgs, SplitArgs, SynthArgs,
    Thresholds,
};
use crate::output::{OutDir, RunConfig};
use crate::CliError;

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Rerun(args) => {
            let mut config = RunConfig::load(&args.config)?;
            if let Some(out) = args.out {
                common_mut(&mut config.command).out = out;
            }
            execute(config.command)
        }
        other => {
            let config = RunConfig::new(other.clone());
            let (name, seed, out) = {
                let c = common(&other);
                (command_name(&other), c.seed, c.out.clone())
            };
            let mut dir = OutDir::create(&out)?;
            match &other {
                Command::Ingest(a) => ingest(a, &mut dir)?,
                Command::Synth(a) => synth(a, &mut dir)?,
                Command::LabelSpeakers(a) => label(a, &mut dir)?,
                Command::QualityReport(a) => quality_report(a, &mut dir)?,
                Command::MakeSplits(a) => make_splits(a, &mut dir)?,
                Command::Evaluate(a) => evaluate(a, &mut dir)?,
                Command::Rerun(_) => unreachable!(),
            }
            dir.finish(&config, name, seed)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest(_) => "ingest",
        Command::Synth(_) => "synth",
        Command::LabelSpeakers(_) => "label-speakers",
        Command::QualityReport(_) => "quality-report",
        Command::MakeSplits(_) => "make-splits",
        Command::Evaluate(_) => "evaluate",
        Command::Rerun(_) => "rerun",
    }
}

fn common(c: &Command) -> &crate::args::Common {
    match c {
        Command::Ingest(a) => &a.common,
        Command::Synth(a) => &a.common,
        Command::LabelSpeakers(a) => &a.common,
        Command::QualityReport(a) => &a.common,
        Command::MakeSplits(a) => &a.common,
        Command::Evaluate(a) => &a.common,
        Command::Rerun(_) => unreachable!("rerun has no common arguments"),
    }
}

fn common_mut(c: &mut Command) -> &mut crate::args::Common {
    match c {
        Command::Ingest(a) => &mut a.common,
        Command::Synth(a) => &mut a.common,
        Command::LabelSpeakers(a) => &mut a.common,
        Command::QualityReport(a) => &mut a.common,
        Command::MakeSplits(a) => &mut a.common,
        Command::Evaluate(a) => &mut a.common,
        Command::Rerun(_) => unreachable!("rerun has no common arguments"),
    }
}

fn merge_map(args: &CorpusArgs) -> Result<MergeMap, CliError> {
    if args.no_merge {
        Ok(MergeMap::identity())
    } else if args.merge.is_empty() {
        Ok(MergeMap::default())
    } else {
        Ok(MergeMap::parse_rules(&args.merge)?)
    }
}

fn open_corpus(args: &CorpusArgs, dir: &mut OutDir) -> Result<Corpus, CliError> {
    if args.binarize_threshold == 0 {
        return Err(CliError::Usage(
            "--binarize-threshold must be at least 1".into(),
        ));
    }
    let merge = merge_map(args)?;
    dir.input(&args.labels);
    let corpus = match &args.episodes {
        Some(episodes) => {
            dir.input(episodes);
            load_corpus(&args.labels, episodes, merge)?
        }
        None => load_labels_only(&args.labels, merge)?,
    };
    Ok(corpus)
}

fn thresholds(t: &Thresholds) -> Result<QualityThresholds, CliError> {
    Ok(QualityThresholds::new(t.silhouette, t.vr)?)
}

fn ingest(args: &IngestArgs, dir: &mut OutDir) -> Result<(), CliError> {
    let corpus = open_corpus(&args.corpus, dir)?;
    let labels = binarize_labels(&corpus, args.corpus.binarize_threshold);
    save_corpus(&corpus, &dir.file("labels.csv"), &dir.file("episodes.csv"))?;
    for (name, group) in [("show", GroupBy::Show), ("podcast", GroupBy::Podcast)] {
        let table = label_distribution(&corpus, &labels, group)?;
        dir.write(&format!("distribution_{name}.csv"), table.to_csv())?;
        dir.write(&format!("distribution_{name}.txt"), table.to_text())?;
        if name == "podcast" {
            print!("{}", table.to_text());
        }
    }
    println!(
        "{} clips, {} episodes, {} podcasts",
        corpus.len(),
        corpus.episodes().len(),
        corpus.podcasts().len()
    );
    Ok(())
}

fn synth(args: &SynthArgs, dir: &mut OutDir) -> Result<(), CliError> {
    let mut spec = if args.spec == "default" {
        SynthSpec::default()
    } else {
        let path = Path::new(&args.spec);
        dir.input(path);
        let text = fs::read_to_string(path).map_err(Error::from)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
    };
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut spec.n_podcasts, args.podcasts);
    set(&mut spec.episodes_per_podcast, args.episodes_per_podcast);
    set(&mut spec.clips_per_episode, args.clips_per_episode);
    set(&mut spec.speakers_per_episode, args.speakers_per_episode);
    if let Some(v) = args.host_share {
        spec.host_share = v;
    }
    if let Some(v) = args.separation {
        spec.centroid_separation = v;
    }
    if let Some(v) = args.speaker_label_bias {
        spec.speaker_label_bias = v;
    }
    if args.hide_speaker_counts {
        spec.expected_speakers_known = false;
    }
    let s = generate(&spec, args.common.seed)?;
    save_corpus(
        &s.corpus,
        &dir.file("labels.csv"),
        &dir.file("episodes.csv"),
    )?;
    s.embeddings.save_binary(&dir.file("embeddings.bin"))?;
    s.truth.save(&dir.file("ground_truth.csv"))?;
    dir.write_json("synth_spec.json", &spec)?;
    println!(
        "{} clips, {} episodes, {} podcasts, {}-dim embeddings",
        s.corpus.len(),
        s.corpus.episodes().len(),
        spec.n_podcasts,
        spec.embedding_dim
    );
    Ok(())
}

fn label(args: &LabelArgs, dir: &mut OutDir) -> Result<(), CliError> {
    let corpus = open_corpus(&args.corpus, dir)?;
    dir.input(&args.embeddings);
    let store = EmbeddingStore::load(&args.embeddings)?;
    let opts = LabelingOptions {
        target_dim: args.target_dim,
        host_k: match args.host_k {
            Some(k) => HostK::Fixed(k),
            None => HostK::Select(args.host_k_range.min..=args.host_k_range.max),
        },
        n_hosts: args.n_hosts,
        episode_k_range: args.episode_k_range.min..=args.episode_k_range.max,
        ..LabelingOptions::default()
    };
    if opts.target_dim == 0 || opts.n_hosts == 0 {
        return Err(CliError::Usage(
            "--target-dim and --n-hosts must be positive".into(),
        ));
    }
    let mut table = label_speakers(&corpus, &store, &opts, args.common.seed)?.table;
    if let Some(path) = &args.overrides {
        dir.input(path);
        let n = apply_overrides(&mut table, &load_overrides(path)?)?;
        println!("applied {n} overrides");
    }
    table.save_clips(&dir.file("speaker_labels.csv"))?;
    table.save_episodes(
        &dir.file("episode_quality.csv"),
        &QualityThresholds::presets(),
    )?;
    let dominance = dominance_report(&table, &corpus, &DominanceOptions::default());
    dir.write("dominance.txt", dominance.to_text())?;
    dir.write_json("dominance.json", &dominance)?;
    let hosts = table.clips.iter().filter(|c| c.is_host).count();
    println!(
        "{} clips labeled in {} episodes; {} host clips",
        table.clips.len(),
        table.episodes.len(),
        hosts
    );
    if let Some(path) = &args.truth {
        dir.input(path);
        let truth = GroundTruth::load(path)?;
        let report = score_recovery(&table, &truth);
        dir.write_json("recovery.json", &report)?;
        println!(
            "host identification {:.4}, speaker accuracy {:.4}, adjusted Rand index {:.4}",
            report.host_identification, report.speaker_accuracy, report.adjusted_rand_index
        );
    }
    Ok(())
}

fn quality_report(args: &QualityArgs, dir: &mut OutDir) -> Result<(), CliError> {
    let chosen = thresholds(&args.thresholds)?;
    dir.input(&args.quality);
    let episodes = load_episode_quality(&args.quality)?;
    let fmt_opt =
        |v: Option<f64>, digits: usize| v.map_or_else(String::new, |x| format!("{x:.digits$}"));
    let yes_no = |b: bool| if b { "yes" } else { "no" }.to_string();

    let mut csv = String::from("Show,EpId,K,MeanSilhouette,VarianceRatio,AllAboveAvg,Criterion1,Criterion2,Criterion3,Combined\n");
    let mut rows = vec![[
        "Show",
        "Episode",
        "K",
        "Silhouette",
        "VR",
        "C1",
        "C2",
        "C3",
        "Combined",
    ]
    .map(String::from)
    .to_vec()];
    for e in &episodes {
        let verdict = e.evaluate(&chosen).ok();
        let cells: [String; 4] = match verdict {
            Some(v) => [v.criterion1, v.criterion2, v.criterion3, v.combined].map(yes_no),
            None => ["NA", "NA", "NA", "NA"].map(String::from),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.show,
            e.episode_id,
            e.k,
            fmt_opt(e.mean_silhouette, 6),
            fmt_opt(e.variance_ratio, 6),
            e.all_above_average
                .map_or_else(String::new, |b| u8::from(b).to_string()),
            cells.join(",")
        ));
        let mut row = vec![
            e.show.clone(),
            e.episode_id.clone(),
            e.k.to_string(),
            fmt_opt(e.mean_silhouette, 3),
            fmt_opt(e.variance_ratio, 1),
        ];
        row.extend(cells);
        rows.push(row);
    }

    let mut pairs = QualityThresholds::presets();
    if !pairs.iter().any(|p| p.tag() == chosen.tag()) {
        pairs.push(chosen);
    }
    let mut summary_csv =
        String::from("Thresholds,Episodes,Criterion1,Criterion2,Criterion3,Combined,CombinedPct\n");
    let mut summary = vec![[
        "Thresholds",
        "Episodes",
        "C1",
        "C2",
        "C3",
        "Combined",
        "Combined %",
    ]
    .map(String::from)
    .to_vec()];
    for t in &pairs {
        let s = summarize_quality(&episodes, t);
        summary_csv.push_str(&format!(
            "{},{},{},{},{},{},{:.2}\n",
            t.tag(),
            s.episodes,
            s.criterion1,
            s.criterion2,
            s.criterion3,
            s.combined,
            s.pct(s.combined)
        ));
        summary.push(vec![
            t.tag(),
            s.episodes.to_string(),
            s.criterion1.to_string(),
            s.criterion2.to_string(),
            s.criterion3.to_string(),
            s.combined.to_string(),
            format!("{:.2}", s.pct(s.combined)),
        ]);
    }
    let s = summarize_quality(&episodes, &chosen);
    let combined_line = format!(
        "Combined Fulfilled at {}: {} of {} episodes ({:.2}%)\n",
        chosen.tag(),
        s.combined,
        s.episodes,
        s.pct(s.combined)
    );
    let text = format!(
        "{}\n{}\n{}",
        render_aligned(&rows),
        render_aligned(&summary),
        combined_line
    );
    dir.write("quality_report.csv", csv)?;
    dir.write("quality_summary.csv", summary_csv)?;
    dir.write("quality_report.txt", &text)?;
    print!("{}\n{}", render_aligned(&summary), combined_line);
    Ok(())
}

fn slot_counts(split: &SplitAssignment) -> String {
    let mut counts: BTreeMap<Slot, usize> = BTreeMap::new();
    for slot in split.slots.values() {
        *counts.entry(*slot).or_default() += 1;
    }
    counts
        .iter()
        .map(|(slot, n)| format!("{}={n}", slot.name()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn make_splits(args: &SplitArgs, dir: &mut OutDir) -> Result<(), CliError> {
    let corpus = open_corpus(&args.corpus, dir)?;
    let labels = binarize_labels(&corpus, args.corpus.binarize_threshold);
    let table = match &args.speaker_labels {
        Some(path) => {
            dir.input(path);
            let mut table = SpeakerLabelTable::load_clips(path)?;
            if let Some(q) = &args.quality {
                dir.input(q);
                table.episodes = load_episode_quality(q)?;
                table.filter_by_quality(&thresholds(&args.thresholds)?);
            }
            Some(table)
        }
        None => None,
    };
    if args.schemes.is_empty() {
        return Err(CliError::Usage("no schemes selected".into()));
    }
    let needs_speakers = args.schemes.iter().any(|s| s.is_speaker_exclusive());
    if needs_speakers && table.is_none() {
        return Err(CliError::Usage(
            "speaker-exclusive schemes need --speaker-labels".into(),
        ));
    }
    let ctx = SplitContext::new(&corpus, &labels, table.as_ref())?;
    let excluded: BTreeSet<String> = args.exclude_podcast.iter().cloned().collect();
    let dominant = || -> Result<Vec<String>, CliError> {
        Ok(dominant_speakers(
            table.as_ref().expect("checked above"),
            &corpus,
            args.n_dominant,
            &excluded,
        )?)
    };

    let seed = args.common.seed;
    let mut splits = Vec::new();
    for scheme in &args.schemes {
        match *scheme {
            Scheme::Lopo => splits.extend(lopo_splits(&ctx, seed)?),
            Scheme::KFoldAgnostic => splits.extend(kfold_agnostic(&ctx, args.k, seed, args.runs)?),
            Scheme::KFoldSpeakerExclusive => {
                let exclude = if args.exclude_dominant {
                    dominant()?
                } else {
                    Vec::new()
                };
                splits.extend(kfold_speaker_exclusive(
                    &ctx, args.k, seed, args.runs, &exclude,
                )?);
            }
            Scheme::FixedTdt(v) => splits.push(fixed_tdt_split(&ctx, v, &dominant()?, seed)?),
            Scheme::External => {
                return Err(CliError::Usage(
                    "`external` is not a generated scheme".into(),
                ))
            }
        }
    }
    save_splits(&dir.file("splits.csv"), &splits)?;
    save_split_report(&dir.file("splits.json"), &SplitReport::new(seed, &splits))?;

    let mut rows = vec![["Scheme", "Run", "Name", "Parts", "Overlap", "MaxLabelDev"]
        .map(String::from)
        .to_vec()];
    for s in &splits {
        let report = s.report.as_ref();
        rows.push(vec![
            s.scheme.to_string(),
            s.run.to_string(),
            s.name.clone(),
            slot_counts(s),
            report.map_or_else(String::new, |r| r.speaker_overlap_count.to_string()),
            report.map_or_else(String::new, |r| format!("{:.2}", r.max_label_deviation)),
        ]);
    }
    let text = render_aligned(&rows);
    dir.write("splits.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn parse_classes(names: &[String]) -> Result<Vec<DysfluencyType>, CliError> {
    names
        .iter()
        .map(|n| {
            DysfluencyType::from_column(n.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown class `{n}`")))
        })
        .collect()
}

fn evaluate(args: &EvaluateArgs, dir: &mut OutDir) -> Result<(), CliError> {
    let classes = parse_classes(&args.classes)?;
    let corpus = open_corpus(&args.corpus, dir)?;
    let truth = binarize_labels(&corpus, args.corpus.binarize_threshold);
    dir.input(&args.splits);
    let splits = load_splits(&args.splits)?;
    let mut scores: Vec<FoldScore> = Vec::new();

    if args.reference {
        let path = args.embeddings.as_ref().expect("clap requires embeddings");
        dir.input(path);
        let store = EmbeddingStore::load(path)?;
        let mut sets = Vec::new();
        for split in &splits {
            for (score, key, preds) in cross_validate_reference(split, &store, &truth, &classes)? {
                scores.push(score);
                sets.push((Some(key), preds));
            }
        }
        let refs: Vec<_> = sets.iter().map(|(k, p)| (*k, p)).collect();
        save_predictions(&dir.file("predictions.csv"), &refs)?;
    } else {
        let path = args
            .predictions
            .as_ref()
            .expect("clap requires predictions");
        dir.input(path);
        let preds = load_predictions(path)?;
        for split in &splits {
            scores.extend(evaluate_split(split, &truth, &classes, |run, fold| {
                let key = PredictionKey {
                    scheme: split.scheme,
                    run,
                    fold,
                };
                preds
                    .get(&Some(key))
                    .or_else(|| preds.get(&None))
                    .cloned()
                    .ok_or_else(|| {
                        Error::CoverageMismatch(format!(
                            "no predictions for {} run {run} fold {fold:?}",
                            split.scheme
                        ))
                    })
            })?);
        }
    }
    let table = ScoreTable::from_scores(&scores, &classes);
    dir.write("scores.csv", table.to_csv())?;
    dir.write("scores.txt", table.to_text())?;
    dir.write_json("fold_scores.json", &scores)?;
    print!("{}", table.to_text());
    Ok(())
}
