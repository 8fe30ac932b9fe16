use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PredictionSet;
use crate::corpus::{DysfluencyType, LabelVector};
use crate::error::{Error, Result};
use crate::splitting::Scheme;

/// Identifies the model that produced a block of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredictionKey {
    pub scheme: Scheme,
    pub run: usize,
    pub fold: Option<usize>,
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Writes `ClipId` and one 0/1 column per class. Keyed sets add trailing
/// `Scheme,Run,Fold` columns.
pub fn save_predictions(
    path: &Path,
    sets: &[(Option<PredictionKey>, &PredictionSet)],
) -> Result<()> {
    let Some((_, first)) = sets.first() else {
        return Err(Error::InvalidArgument("no predictions to save".into()));
    };
    let classes = &first.classes;
    if sets.iter().any(|(_, s)| &s.classes != classes) {
        return Err(Error::InvalidArgument(
            "prediction sets disagree on classes".into(),
        ));
    }
    let keyed = sets.iter().any(|(k, _)| k.is_some());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["ClipId".to_string()];
    header.extend(classes.iter().map(|c| c.column().to_string()));
    if keyed {
        header.extend(["Scheme", "Run", "Fold"].map(String::from));
    }
    w.write_record(&header)?;
    for (key, set) in sets {
        for (clip, v) in &set.predictions {
            let mut row = vec![clip.clone()];
            row.extend(
                classes
                    .iter()
                    .map(|&c| if v[c] { "1" } else { "0" }.to_string()),
            );
            if keyed {
                match key {
                    Some(k) => {
                        row.push(k.scheme.to_string());
                        row.push(k.run.to_string());
                        row.push(k.fold.map_or_else(String::new, |f| f.to_string()));
                    }
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a predictions CSV. Class columns are recognised by name and cells
/// are `0`/`1`/`true`/`false`. Rows without `Scheme`/`Run`/`Fold` values
/// go under the `None` key.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<Option<PredictionKey>, PredictionSet>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let clip_col = col("ClipId").ok_or_else(|| Error::format(path, 1, "missing ClipId column"))?;
    let class_cols: Vec<(DysfluencyType, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| DysfluencyType::from_column(h.trim()).map(|t| (t, i)))
        .collect();
    if class_cols.is_empty() {
        return Err(Error::format(path, 1, "no class columns"));
    }
    let classes: Vec<DysfluencyType> = class_cols.iter().map(|(t, _)| *t).collect();
    let (scheme_col, run_col, fold_col) = (col("Scheme"), col("Run"), col("Fold"));
    let provenance = path.display().to_string();

    let mut out: BTreeMap<Option<PredictionKey>, PredictionSet> = BTreeMap::new();
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
        let mut v = LabelVector::default();
        for &(t, c) in &class_cols {
            let raw = field(Some(c));
            v[t] = parse_bool(raw).ok_or_else(|| {
                Error::format(path, line, format!("`{raw}` is not a binary prediction"))
            })?;
        }
        let (scheme, run, fold) = (field(scheme_col), field(run_col), field(fold_col));
        let key = if scheme.is_empty() && run.is_empty() && fold.is_empty() {
            None
        } else {
            let index = |raw: &str, what: &str| -> Result<usize> {
                raw.parse().map_err(|_| {
                    Error::format(path, line, format!("`{raw}` is not a {what} index"))
                })
            };
            Some(PredictionKey {
                scheme: scheme
                    .parse()
                    .map_err(|e: Error| Error::format(path, line, e.to_string()))?,
                run: if run.is_empty() {
                    0
                } else {
                    index(run, "run")?
                },
                fold: if fold.is_empty() {
                    None
                } else {
                    Some(index(fold, "fold")?)
                },
            })
        };
        let set = out
            .entry(key)
            .or_insert_with(|| PredictionSet::new(classes.clone(), provenance.clone()));
        if set.predictions.insert(clip.to_string(), v).is_some() {
            return Err(Error::format(
                path,
                line,
                format!("duplicate prediction for clip {clip}"),
            ));
        }
    }
    Ok(out)
}
