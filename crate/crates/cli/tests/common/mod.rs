#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use splitforge::labeling::{ClipSpeaker, SpeakerLabelTable};
use splitforge::synth::SynthCorpus;

/// Runs the built binary with `SPLITFORGE_SEED` cleared.
pub fn splitforge(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitforge"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SPLITFORGE_SEED")
        .output()
        .expect("binary runs")
}

/// Speaker labels taken from the planted truth.
pub fn truth_table(s: &SynthCorpus) -> SpeakerLabelTable {
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
