use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ConstraintReport, Partition, Scheme, Slot, SplitAssignment};
use crate::error::{Error, Result};

/// Writes `ClipId,Scheme,Run,Fold,Partition`, one row per clip and split.
/// Fold schemes leave `Partition` empty; partition schemes leave `Fold`
/// empty.
pub fn save_splits(path: &Path, splits: &[SplitAssignment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ClipId", "Scheme", "Run", "Fold", "Partition"])?;
    for split in splits {
        let scheme = split.scheme.to_string();
        let run = split.run.to_string();
        for (clip, slot) in &split.slots {
            let (fold, part) = match slot {
                Slot::Fold(f) => (f.to_string(), String::new()),
                Slot::Part(p) => (String::new(), p.to_string()),
            };
            w.write_record([clip.as_str(), &scheme, &run, &fold, &part])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads split files written by [`save_splits`], or any CSV with a
/// `ClipId` column and a `Partition` or `Fold` column. Missing `Scheme`
/// and `Run` columns default to an external scheme and run 0. Splits are
/// returned in order of first appearance.
pub fn load_splits(path: &Path) -> Result<Vec<SplitAssignment>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let clip_col = col("ClipId").ok_or_else(|| Error::format(path, 1, "missing ClipId column"))?;
    let scheme_col = col("Scheme");
    let run_col = col("Run");
    let fold_col = col("Fold");
    let part_col = col("Partition");
    if fold_col.is_none() && part_col.is_none() {
        return Err(Error::format(path, 1, "need a Partition or Fold column"));
    }

    let mut order: Vec<(Scheme, usize)> = Vec::new();
    let mut splits: BTreeMap<(Scheme, usize), BTreeMap<String, Slot>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            Error::format(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: Option<usize>| c.and_then(|c| record.get(c)).map(str::trim).unwrap_or("");
        let clip = field(Some(clip_col));
        if clip.is_empty() {
            return Err(Error::format(path, line, "empty ClipId"));
        }
        let scheme: Scheme = field(scheme_col)
            .parse()
            .map_err(|e: Error| Error::format(path, line, e.to_string()))?;
        let run: usize = match field(run_col) {
            "" => 0,
            raw => raw
                .parse()
                .map_err(|_| Error::format(path, line, format!("`{raw}` is not a run index")))?,
        };
        let slot =
            match (field(fold_col), field(part_col)) {
                (_, part) if !part.is_empty() => Slot::Part(
                    part.parse::<Partition>()
                        .map_err(|e| Error::format(path, line, e.to_string()))?,
                ),
                (fold, _) if !fold.is_empty() => Slot::Fold(fold.parse().map_err(|_| {
                    Error::format(path, line, format!("`{fold}` is not a fold index"))
                })?),
                _ => {
                    return Err(Error::format(
                        path,
                        line,
                        "row has neither fold nor partition",
                    ))
                }
            };
        let key = (scheme, run);
        let entry = splits.entry(key).or_insert_with(|| {
            order.push(key);
            BTreeMap::new()
        });
        if entry.insert(clip.to_string(), slot).is_some() {
            return Err(Error::format(
                path,
                line,
                format!("clip {clip} assigned twice in one split"),
            ));
        }
    }

    Ok(order
        .into_iter()
        .map(|key| SplitAssignment {
            scheme: key.0,
            run: key.1,
            name: format!("run{}", key.1),
            seed: 0,
            slots: splits.remove(&key).expect("present"),
            report: None,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub scheme: String,
    pub run: usize,
    pub name: String,
    pub seed: u64,
    pub clips: usize,
    pub report: Option<ConstraintReport>,
}

/// Companion JSON for a split file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub version: String,
    pub seed: u64,
    pub splits: Vec<SplitSummary>,
}

impl SplitReport {
    pub fn new(seed: u64, splits: &[SplitAssignment]) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            seed,
            splits: splits
                .iter()
                .map(|s| SplitSummary {
                    scheme: s.scheme.to_string(),
                    run: s.run,
                    name: s.name.clone(),
                    seed: s.seed,
                    clips: s.len(),
                    report: s.report.clone(),
                })
                .collect(),
        }
    }
}

pub fn save_split_report(path: &Path, report: &SplitReport) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, report)?;
    Ok(())
}
