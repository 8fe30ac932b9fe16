use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};

use super::{Clip, Corpus, DysfluencyType, EpisodeMeta, Gender, LabelCounts, MergeMap};
use crate::error::{Error, Result};

const LABEL_ID_COLUMNS: [&str; 5] = ["Show", "EpId", "ClipId", "Start", "Stop"];
const EPISODE_COLUMNS: [&str; 5] = [
    "Show",
    "EpId",
    "ExpectedSpeakers",
    "HostName",
    "GuestGenders",
];

struct Columns {
    by_name: HashMap<String, usize>,
}

impl Columns {
    fn from_header(path: &Path, header: &StringRecord, required: &[&str]) -> Result<Self> {
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(Error::format(path, 1, "missing header row"));
        }
        let by_name: HashMap<String, usize> = header
            .iter()
            .enumerate()
            .map(|(i, name)| (name.trim().to_string(), i))
            .collect();
        for col in required {
            if !by_name.contains_key(*col) {
                return Err(Error::format(
                    path,
                    1,
                    format!("header lacks column `{col}`"),
                ));
            }
        }
        Ok(Self { by_name })
    }

    fn get<'r>(&self, record: &'r StringRecord, name: &str) -> &'r str {
        record.get(self.by_name[name]).unwrap_or("").trim()
    }
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_num<T: std::str::FromStr>(
    path: &Path,
    record: &StringRecord,
    column: &str,
    raw: &str,
) -> Result<T> {
    raw.parse::<T>().map_err(|_| {
        Error::format(
            path,
            line_of(record),
            format!("column `{column}`: `{raw}` is not a non-negative integer"),
        )
    })
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    Ok(ReaderBuilder::new()
        .has_headers(true)
        .from_reader(File::open(path)?))
}

fn map_csv_err(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.kind() {
        csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. } => {
            Error::format(path, line, err.to_string())
        }
        _ => Error::Csv(err),
    }
}

fn read_label_rows(path: &Path) -> Result<Vec<Clip>> {
    let mut reader = open_csv(path)?;
    let header = reader.headers().map_err(|e| map_csv_err(path, e))?.clone();
    let mut required: Vec<&str> = LABEL_ID_COLUMNS.to_vec();
    required.extend(DysfluencyType::ALL.iter().map(|t| t.column()));
    let cols = Columns::from_header(path, &header, &required)?;

    let mut clips = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| map_csv_err(path, e))?;
        let show = cols.get(&record, "Show").to_string();
        let episode_id = cols.get(&record, "EpId").to_string();
        if show.is_empty() || episode_id.is_empty() {
            return Err(Error::format(path, line_of(&record), "empty Show or EpId"));
        }
        let clip_index: u64 = parse_num(path, &record, "ClipId", cols.get(&record, "ClipId"))?;
        let start_ms: u64 = parse_num(path, &record, "Start", cols.get(&record, "Start"))?;
        let stop_ms: u64 = parse_num(path, &record, "Stop", cols.get(&record, "Stop"))?;
        let mut label_counts = LabelCounts::default();
        for t in DysfluencyType::ALL {
            let raw = cols.get(&record, t.column());
            label_counts[t] = if raw.is_empty() {
                0
            } else {
                parse_num(path, &record, t.column(), raw)?
            };
        }
        clips.push(Clip {
            clip_id: Clip::make_id(&show, &episode_id, clip_index),
            podcast: show.clone(),
            show,
            episode_id,
            clip_index,
            start_ms,
            stop_ms,
            label_counts,
            embedding_ref: None,
        });
    }
    Ok(clips)
}

fn read_episode_rows(path: &Path) -> Result<Vec<EpisodeMeta>> {
    let mut reader = open_csv(path)?;
    let header = reader.headers().map_err(|e| map_csv_err(path, e))?.clone();
    let cols = Columns::from_header(path, &header, &EPISODE_COLUMNS)?;
    let mut episodes = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| map_csv_err(path, e))?;
        let show = cols.get(&record, "Show").to_string();
        let episode_id = cols.get(&record, "EpId").to_string();
        let expected = cols.get(&record, "ExpectedSpeakers");
        let expected_speakers = if expected.is_empty() {
            None
        } else {
            let n: u32 = parse_num(path, &record, "ExpectedSpeakers", expected)?;
            if n == 0 {
                return Err(Error::format(
                    path,
                    line_of(&record),
                    "ExpectedSpeakers must be at least 1",
                ));
            }
            Some(n)
        };
        let host = cols.get(&record, "HostName");
        let genders = cols.get(&record, "GuestGenders");
        let guest_genders = if genders.is_empty() {
            Vec::new()
        } else {
            genders
                .split(';')
                .map(|tok| {
                    Gender::from_token(tok).ok_or_else(|| {
                        Error::format(
                            path,
                            line_of(&record),
                            format!("unknown gender token `{tok}`"),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?
        };
        episodes.push(EpisodeMeta {
            podcast: show.clone(),
            show,
            episode_id,
            expected_speakers,
            host_name: (!host.is_empty()).then(|| host.to_string()),
            guest_genders,
        });
    }
    Ok(episodes)
}

/// Loads the labels and episodes files into a validated corpus.
///
/// The labels file may carry extra columns (the public release has several
/// non-event annotations); only the named columns are read.
pub fn load_corpus(
    labels_path: &Path,
    episodes_path: &Path,
    merge_map: MergeMap,
) -> Result<Corpus> {
    let clips = read_label_rows(labels_path)?;
    let episodes = read_episode_rows(episodes_path)?;
    Corpus::new(clips, episodes, merge_map)
}

/// Loads a labels file without episode metadata; one episode record with
/// unknown fields is synthesized per distinct (Show, EpId).
pub fn load_labels_only(labels_path: &Path, merge_map: MergeMap) -> Result<Corpus> {
    let clips = read_label_rows(labels_path)?;
    let mut seen = BTreeSet::new();
    let mut episodes = Vec::new();
    for clip in &clips {
        if seen.insert(clip.episode_key()) {
            episodes.push(EpisodeMeta {
                show: clip.show.clone(),
                podcast: clip.show.clone(),
                episode_id: clip.episode_id.clone(),
                expected_speakers: None,
                host_name: None,
                guest_genders: Vec::new(),
            });
        }
    }
    Corpus::new(clips, episodes, merge_map)
}

/// Writes both files in canonical column order, preserving clip order.
pub fn save_corpus(corpus: &Corpus, labels_path: &Path, episodes_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(labels_path)?;
    let mut header: Vec<&str> = LABEL_ID_COLUMNS.to_vec();
    header.extend(DysfluencyType::ALL.iter().map(|t| t.column()));
    w.write_record(&header)?;
    for clip in corpus.clips() {
        let mut row = vec![
            clip.show.clone(),
            clip.episode_id.clone(),
            clip.clip_index.to_string(),
            clip.start_ms.to_string(),
            clip.stop_ms.to_string(),
        ];
        row.extend(
            DysfluencyType::ALL
                .iter()
                .map(|t| clip.label_counts[*t].to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(episodes_path)?;
    w.write_record(EPISODE_COLUMNS)?;
    for ep in corpus.episodes() {
        let genders: Vec<&str> = ep.guest_genders.iter().map(|g| g.token()).collect();
        w.write_record([
            ep.show.as_str(),
            ep.episode_id.as_str(),
            &ep.expected_speakers
                .map(|n| n.to_string())
                .unwrap_or_default(),
            ep.host_name.as_deref().unwrap_or(""),
            &genders.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
