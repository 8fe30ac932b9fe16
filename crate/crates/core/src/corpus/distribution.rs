use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{show_abbreviation, BinaryLabels, Corpus, DysfluencyType};
use crate::error::{Error, Result};

/// How clips are grouped in a distribution table.
#[derive(Debug, Clone, Copy)]
pub enum GroupBy<'a> {
    /// Raw show name, before merging.
    Show,
    /// Canonical podcast name, after merging.
    Podcast,
    WholeCorpus,
    /// Arbitrary clip-id → group-name mapping; unmapped clips are skipped.
    Partition(&'a BTreeMap<String, String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub name: String,
    pub clips: usize,
    pub positives: [usize; 6],
    /// Share of all grouped clips, in percent.
    pub share_pct: f64,
}

impl GroupStats {
    fn new(name: String) -> Self {
        Self {
            name,
            clips: 0,
            positives: [0; 6],
            share_pct: 0.0,
        }
    }

    pub fn rate_pct(&self, t: DysfluencyType) -> f64 {
        if self.clips == 0 {
            0.0
        } else {
            100.0 * self.positives[t.index()] as f64 / self.clips as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub groups: Vec<GroupStats>,
    pub total: GroupStats,
}

fn partition_rank(name: &str) -> u8 {
    match name {
        "train" => 0,
        "dev" => 1,
        "test" => 2,
        _ => 3,
    }
}

/// Percent of positive clips per type, clip counts, and share of the total.
pub fn label_distribution(
    corpus: &Corpus,
    labels: &BinaryLabels,
    group_by: GroupBy<'_>,
) -> Result<DistributionTable> {
    let mut groups: BTreeMap<(u8, String), GroupStats> = BTreeMap::new();
    let mut total = GroupStats::new("total".to_string());

    for clip in corpus.clips() {
        let name = match group_by {
            GroupBy::Show => clip.show.clone(),
            GroupBy::Podcast => clip.podcast.clone(),
            GroupBy::WholeCorpus => "total".to_string(),
            GroupBy::Partition(map) => match map.get(&clip.clip_id) {
                Some(part) => part.clone(),
                None => continue,
            },
        };
        let v = labels.get(&clip.clip_id).ok_or_else(|| {
            Error::Integrity(format!("no binary labels for clip {}", clip.clip_id))
        })?;
        let rank = match group_by {
            GroupBy::Partition(_) => partition_rank(&name),
            _ => 0,
        };
        let g = groups
            .entry((rank, name.clone()))
            .or_insert_with(|| GroupStats::new(name));
        g.clips += 1;
        total.clips += 1;
        for t in v.positives() {
            g.positives[t.index()] += 1;
            total.positives[t.index()] += 1;
        }
    }

    if let GroupBy::Partition(map) = group_by {
        // A partition named in the mapping whose clips are all absent from the corpus.
        for name in map.values() {
            if !groups.contains_key(&(partition_rank(name), name.clone())) {
                return Err(Error::EmptyGroup(name.clone()));
            }
        }
    }
    if total.clips == 0 {
        return Err(Error::EmptyGroup(match group_by {
            GroupBy::WholeCorpus => "total".to_string(),
            _ => "<all>".to_string(),
        }));
    }

    let mut groups: Vec<GroupStats> = groups.into_values().collect();
    for g in &mut groups {
        g.share_pct = 100.0 * g.clips as f64 / total.clips as f64;
    }
    total.share_pct = 100.0;
    Ok(DistributionTable { groups, total })
}

impl DistributionTable {
    /// One row per group plus a `total` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Group,Clips,SharePct");
        for t in DysfluencyType::ALL {
            out.push(',');
            out.push_str(t.column());
        }
        out.push('\n');
        for g in self.groups.iter().chain(std::iter::once(&self.total)) {
            let _ = write!(out, "{},{},{:.2}", g.name, g.clips, g.share_pct);
            for t in DysfluencyType::ALL {
                let _ = write!(out, ",{:.2}", g.rate_pct(t));
            }
            out.push('\n');
        }
        out
    }

    /// Types as rows, groups as columns, with count and share footer rows.
    pub fn to_text(&self) -> String {
        let mut header = vec![String::new()];
        let cols: Vec<&GroupStats> = if self.groups.len() == 1 && self.groups[0].name == "total" {
            vec![&self.total]
        } else {
            self.groups
                .iter()
                .chain(std::iter::once(&self.total))
                .collect()
        };
        header.extend(cols.iter().map(|g| show_abbreviation(&g.name).to_string()));
        let mut rows = vec![header];
        for t in DysfluencyType::ALL {
            let mut row = vec![t.display_name().to_string()];
            row.extend(cols.iter().map(|g| format!("{:.2}", g.rate_pct(t))));
            rows.push(row);
        }
        let mut count = vec!["Total #".to_string()];
        count.extend(cols.iter().map(|g| g.clips.to_string()));
        rows.push(count);
        let mut share = vec!["% of total".to_string()];
        share.extend(cols.iter().map(|g| format!("{:.2}", g.share_pct)));
        rows.push(share);
        render_aligned(&rows)
    }
}

/// Right-aligns every column except the first.
pub fn render_aligned(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
