use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClipSpeaker, EpisodeQuality, QualityThresholds, SpeakerLabelTable};
use crate::error::{Error, Result};

const CLIP_HEADER: [&str; 6] = [
    "Show",
    "EpId",
    "ClipId",
    "SpeakerLabel",
    "IsHost",
    "Silhouette",
];
const EPISODE_HEADER: [&str; 7] = [
    "Show",
    "EpId",
    "K",
    "MeanSilhouette",
    "VarianceRatio",
    "HostCosineDistance",
    "AllAboveAvg",
];

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn parse_opt_f64(path: &Path, line: u64, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| Error::format(path, line, format!("`{raw}` is not a number")))
}

fn parse_flag(path: &Path, line: u64, raw: &str) -> Result<bool> {
    match raw {
        "1" | "true" | "True" => Ok(true),
        "0" | "false" | "False" => Ok(false),
        _ => Err(Error::format(
            path,
            line,
            format!("`{raw}` is not a boolean"),
        )),
    }
}

fn check_header(
    path: &Path,
    reader: &mut csv::Reader<std::fs::File>,
    expected: &[&str],
) -> Result<()> {
    let header = reader.headers()?;
    if header.len() < expected.len() || header.iter().zip(expected).any(|(a, b)| a != *b) {
        return Err(Error::format(
            path,
            1,
            format!("expected header {}", expected.join(",")),
        ));
    }
    Ok(())
}

fn records(
    path: &Path,
    reader: &mut csv::Reader<std::fs::File>,
    width: usize,
) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            Error::format(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < width {
            return Err(Error::format(
                path,
                line,
                format!("expected at least {width} fields"),
            ));
        }
        out.push((line, record));
    }
    Ok(out)
}

impl SpeakerLabelTable {
    /// `speaker_labels.csv`: `Show,EpId,ClipId,SpeakerLabel,IsHost,Silhouette`.
    pub fn save_clips(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CLIP_HEADER)?;
        for c in &self.clips {
            w.write_record([
                c.show.as_str(),
                c.episode_id.as_str(),
                c.clip_id.as_str(),
                c.speaker_label.as_str(),
                flag(c.is_host),
                opt_f64(c.silhouette).as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `episode_quality.csv`, with one `Pass@<silhouette>/<ratio>` column
    /// per threshold pair. Episodes without metrics get empty pass cells.
    pub fn save_episodes(&self, path: &Path, thresholds: &[QualityThresholds]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = EPISODE_HEADER.iter().map(|s| s.to_string()).collect();
        header.extend(thresholds.iter().map(|t| format!("Pass@{}", t.tag())));
        w.write_record(&header)?;
        for e in &self.episodes {
            let mut row = vec![
                e.show.clone(),
                e.episode_id.clone(),
                e.k.to_string(),
                opt_f64(e.mean_silhouette),
                opt_f64(e.variance_ratio),
                opt_f64(e.host_cosine_distance),
                e.all_above_average
                    .map(|b| flag(b).to_string())
                    .unwrap_or_default(),
            ];
            for t in thresholds {
                row.push(match e.evaluate(t) {
                    Ok(v) => flag(v.combined).to_string(),
                    Err(_) => String::new(),
                });
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(clips_path: &Path, episodes_path: &Path) -> Result<Self> {
        let mut table = Self::load_clips(clips_path)?;
        table.episodes = load_episode_quality(episodes_path)?;
        Ok(table)
    }

    /// Loads only `speaker_labels.csv`; episode metrics stay empty.
    pub fn load_clips(clips_path: &Path) -> Result<Self> {
        let mut table = SpeakerLabelTable::default();
        let mut reader = csv::Reader::from_path(clips_path)?;
        check_header(clips_path, &mut reader, &CLIP_HEADER)?;
        for (line, r) in records(clips_path, &mut reader, CLIP_HEADER.len())? {
            table.clips.push(ClipSpeaker {
                show: r[0].to_string(),
                episode_id: r[1].to_string(),
                clip_id: r[2].to_string(),
                speaker_label: r[3].to_string(),
                is_host: parse_flag(clips_path, line, &r[4])?,
                silhouette: parse_opt_f64(clips_path, line, &r[5])?,
            });
        }
        Ok(table)
    }
}

/// Reads the leading columns of `episode_quality.csv`; `Pass@` columns are
/// ignored.
pub fn load_episode_quality(path: &Path) -> Result<Vec<EpisodeQuality>> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(path, &mut reader, &EPISODE_HEADER)?;
    records(path, &mut reader, EPISODE_HEADER.len())?
        .into_iter()
        .map(|(line, r)| {
            let k = r[2].parse().map_err(|_| {
                Error::format(path, line, format!("`{}` is not a cluster count", &r[2]))
            })?;
            Ok(EpisodeQuality {
                show: r[0].to_string(),
                episode_id: r[1].to_string(),
                k,
                mean_silhouette: parse_opt_f64(path, line, &r[3])?,
                variance_ratio: parse_opt_f64(path, line, &r[4])?,
                host_cosine_distance: parse_opt_f64(path, line, &r[5])?,
                all_above_average: if r[6].is_empty() {
                    None
                } else {
                    Some(parse_flag(path, line, &r[6])?)
                },
            })
        })
        .collect()
}

/// A manual correction of one clip's speaker assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerOverride {
    pub clip_id: String,
    pub speaker_label: String,
    pub is_host: bool,
}

/// Reads `ClipId,SpeakerLabel,IsHost`.
pub fn load_overrides(path: &Path) -> Result<Vec<SpeakerOverride>> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(path, &mut reader, &["ClipId", "SpeakerLabel", "IsHost"])?;
    records(path, &mut reader, 3)?
        .into_iter()
        .map(|(line, r)| {
            Ok(SpeakerOverride {
                clip_id: r[0].to_string(),
                speaker_label: r[1].to_string(),
                is_host: parse_flag(path, line, &r[2])?,
            })
        })
        .collect()
}

/// Applies overrides in order; an override for an unlabeled clip is an
/// integrity error. Returns the number of clips changed.
pub fn apply_overrides(
    table: &mut SpeakerLabelTable,
    overrides: &[SpeakerOverride],
) -> Result<usize> {
    let index: BTreeMap<String, usize> = table
        .clips
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clip_id.clone(), i))
        .collect();
    let mut changed = 0;
    for o in overrides {
        let i = *index.get(&o.clip_id).ok_or_else(|| {
            Error::Integrity(format!("override for unlabeled clip {}", o.clip_id))
        })?;
        let clip = &mut table.clips[i];
        if clip.speaker_label != o.speaker_label || clip.is_host != o.is_host {
            clip.speaker_label = o.speaker_label.clone();
            clip.is_host = o.is_host;
            changed += 1;
        }
    }
    Ok(changed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SpeakerLabelTable {
        SpeakerLabelTable {
            clips: vec![
                ClipSpeaker {
                    show: "A".into(),
                    episode_id: "0".into(),
                    clip_id: "A_0_0".into(),
                    speaker_label: "A_HOST".into(),
                    is_host: true,
                    silhouette: Some(0.1 + 0.2),
                },
                ClipSpeaker {
                    show: "A".into(),
                    episode_id: "1".into(),
                    clip_id: "A_1_0".into(),
                    speaker_label: "A_HOST".into(),
                    is_host: true,
                    silhouette: None,
                },
            ],
            episodes: vec![
                EpisodeQuality {
                    show: "A".into(),
                    episode_id: "0".into(),
                    k: 2,
                    mean_silhouette: Some(0.4567891234567),
                    variance_ratio: Some(f64::INFINITY),
                    host_cosine_distance: Some(1e-17),
                    all_above_average: Some(true),
                },
                EpisodeQuality {
                    show: "A".into(),
                    episode_id: "1".into(),
                    k: 1,
                    mean_silhouette: None,
                    variance_ratio: None,
                    host_cosine_distance: Some(0.25),
                    all_above_average: None,
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (c, e) = (dir.path().join("c.csv"), dir.path().join("e.csv"));
        let t = table();
        t.save_clips(&c).unwrap();
        t.save_episodes(&e, &QualityThresholds::presets()).unwrap();
        assert_eq!(SpeakerLabelTable::load(&c, &e).unwrap(), t);
        let text = std::fs::read_to_string(&e).unwrap();
        assert!(text.starts_with(
            "Show,EpId,K,MeanSilhouette,VarianceRatio,HostCosineDistance,AllAboveAvg,Pass@0.20/10,Pass@0.30/20"
        ));
        assert!(text.contains("A,1,1,,,0.25,,,,,\n"));
    }

    #[test]
    fn filtering_keeps_passing_episodes() {
        let mut t = table();
        t.filter_by_quality(&QualityThresholds::new(0.3, 20.0).unwrap());
        assert_eq!(t.episodes.len(), 1);
        assert_eq!(t.clips.len(), 1);
        assert_eq!(t.clips[0].clip_id, "A_0_0");
    }

    #[test]
    fn overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.csv");
        std::fs::write(&p, "ClipId,SpeakerLabel,IsHost\nA_1_0,B_HOST,0\n").unwrap();
        let o = load_overrides(&p).unwrap();
        let mut t = table();
        assert_eq!(apply_overrides(&mut t, &o).unwrap(), 1);
        assert_eq!(t.clips[1].speaker_label, "B_HOST");
        assert!(!t.clips[1].is_host);
        let bad = [SpeakerOverride {
            clip_id: "nope".into(),
            speaker_label: "x".into(),
            is_host: false,
        }];
        assert!(matches!(
            apply_overrides(&mut t, &bad),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn bad_rows_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (c, e) = (dir.path().join("c.csv"), dir.path().join("e.csv"));
        std::fs::write(
            &c,
            "Show,EpId,ClipId,SpeakerLabel,IsHost,Silhouette\nA,0,A_0_0,x,maybe,\n",
        )
        .unwrap();
        std::fs::write(
            &e,
            "Show,EpId,K,MeanSilhouette,VarianceRatio,HostCosineDistance,AllAboveAvg\n",
        )
        .unwrap();
        assert!(matches!(
            SpeakerLabelTable::load(&c, &e),
            Err(Error::FileFormat { line: 2, .. })
        ));
    }
}
