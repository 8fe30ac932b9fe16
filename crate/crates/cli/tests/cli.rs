mod common;

use std::fs;
use std::path::Path;

use splitforge_cli::Manifest;

use common::splitforge;

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = splitforge(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn small_synth(cwd: &Path) {
    ok(
        &[
            "synth",
            "--podcasts",
            "2",
            "--episodes-per-podcast",
            "3",
            "--clips-per-episode",
            "24",
            "--seed",
            "5",
            "--out",
            "synth",
        ],
        cwd,
    );
}

fn label(cwd: &Path) {
    ok(
        &[
            "label-speakers",
            "--labels",
            "synth/labels.csv",
            "--episodes",
            "synth/episodes.csv",
            "--embeddings",
            "synth/embeddings.bin",
            "--seed",
            "5",
            "--out",
            "labels",
        ],
        cwd,
    );
}

#[test]
fn no_arguments_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(splitforge(&[], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_input_file_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = splitforge(
        &["ingest", "--labels", "absent.csv", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_threshold_and_scheme_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path());
    label(dir.path());
    let bad_threshold = splitforge(
        &[
            "quality-report",
            "--quality",
            "labels/episode_quality.csv",
            "--silhouette",
            "3",
            "--out",
            "q",
        ],
        dir.path(),
    );
    assert_eq!(bad_threshold.status.code(), Some(2));
    let bad_scheme = splitforge(
        &[
            "make-splits",
            "--labels",
            "synth/labels.csv",
            "--schemes",
            "random",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert_eq!(bad_scheme.status.code(), Some(2));
    let needs_speakers = splitforge(
        &[
            "make-splits",
            "--labels",
            "synth/labels.csv",
            "--schemes",
            "kfold-exclusive",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert_eq!(needs_speakers.status.code(), Some(2));
}

#[test]
fn manifest_digests_match_outputs() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path());
    let root = dir.path().join("synth");
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "synth");
    assert_eq!(manifest.seed, 5);
    let names: Vec<&str> = manifest.outputs.iter().map(|f| f.path.as_str()).collect();
    for expected in [
        "config.json",
        "embeddings.bin",
        "episodes.csv",
        "ground_truth.csv",
        "labels.csv",
    ] {
        assert!(
            names.contains(&expected),
            "{expected} missing from {names:?}"
        );
    }
    for f in &manifest.outputs {
        let bytes = fs::read(root.join(&f.path)).unwrap();
        let digest = {
            use sha2::{Digest, Sha256};
            hex::encode(Sha256::digest(&bytes))
        };
        assert_eq!(digest, f.sha256, "{}", f.path);
    }
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path());
    label(dir.path());
    ok(
        &["rerun", "--config", "labels/config.json", "--out", "again"],
        dir.path(),
    );
    for name in [
        "speaker_labels.csv",
        "episode_quality.csv",
        "dominance.json",
    ] {
        assert_eq!(
            fs::read(dir.path().join("labels").join(name)).unwrap(),
            fs::read(dir.path().join("again").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_splitforge"))
        .args(["synth", "--podcasts", "2", "--out", "env"])
        .current_dir(dir.path())
        .env("SPLITFORGE_SEED", "41")
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("env/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest.seed, 41);
}

#[test]
fn quality_report_prints_combined_line() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path());
    label(dir.path());
    let text = ok(
        &[
            "quality-report",
            "--quality",
            "labels/episode_quality.csv",
            "--out",
            "quality",
        ],
        dir.path(),
    );
    assert!(text.contains("Combined Fulfilled at 0.20/10: "), "{text}");
    assert!(dir.path().join("quality/quality_summary.csv").exists());
}

#[test]
fn ingest_merges_he_stutters_into_women_who_stutter() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path());
    for name in ["labels.csv", "episodes.csv"] {
        let path = dir.path().join("synth").join(name);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("Synth00", "HeStutters")
            .replace("Synth01", "WomenWhoStutter");
        fs::write(path, text).unwrap();
    }
    let merged = ok(
        &[
            "ingest",
            "--labels",
            "synth/labels.csv",
            "--episodes",
            "synth/episodes.csv",
            "--out",
            "merged",
        ],
        dir.path(),
    );
    assert!(
        merged.contains("144 clips, 6 episodes, 1 podcasts"),
        "{merged}"
    );
    let separate = ok(
        &[
            "ingest",
            "--labels",
            "synth/labels.csv",
            "--episodes",
            "synth/episodes.csv",
            "--no-merge",
            "--out",
            "separate",
        ],
        dir.path(),
    );
    assert!(
        separate.contains("144 clips, 6 episodes, 2 podcasts"),
        "{separate}"
    );
}

#[test]
fn evaluate_scores_a_predictions_file() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path());
    label(dir.path());
    ok(
        &[
            "make-splits",
            "--labels",
            "synth/labels.csv",
            "--episodes",
            "synth/episodes.csv",
            "--speaker-labels",
            "labels/speaker_labels.csv",
            "--schemes",
            "kfold-exclusive",
            "--k",
            "2",
            "--runs",
            "1",
            "--out",
            "splits",
        ],
        dir.path(),
    );
    let labels = fs::read_to_string(dir.path().join("synth/labels.csv")).unwrap();
    let mut predictions = String::from("ClipId,Block,Interjection,Prolongation,SoundRep,WordRep\n");
    for line in labels.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let votes: Vec<&str> = cells[5..10]
            .iter()
            .map(|v| {
                if v.parse::<u32>().unwrap() >= 2 {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        predictions.push_str(&format!(
            "{}_{}_{},{}\n",
            cells[0],
            cells[1],
            cells[2],
            votes.join(",")
        ));
    }
    fs::write(dir.path().join("perfect.csv"), predictions).unwrap();
    ok(
        &[
            "evaluate",
            "--labels",
            "synth/labels.csv",
            "--episodes",
            "synth/episodes.csv",
            "--splits",
            "splits/splits.csv",
            "--predictions",
            "perfect.csv",
            "--out",
            "scores",
        ],
        dir.path(),
    );
    let scores = fs::read_to_string(dir.path().join("scores/scores.csv")).unwrap();
    assert!(scores.lines().count() > 1, "{scores}");
    for line in scores.lines().skip(1) {
        let mean = line.split(',').nth(2).unwrap();
        assert!(mean == "1.000000" || mean == "NA", "{scores}");
    }
}
