use serde::{Deserialize, Serialize};

use super::{EpisodeClustering, EpisodeQuality};
use crate::error::{Error, Result};

/// Per-episode acceptance thresholds. Both comparisons are strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityThresholds {
    pub min_mean_silhouette: f64,
    pub min_variance_ratio: f64,
    pub require_all_above_average: bool,
}

impl QualityThresholds {
    /// The four standard (silhouette, variance ratio) pairs, loosest first.
    pub const PRESETS: [(f64, f64); 4] = [(0.20, 10.0), (0.30, 20.0), (0.40, 30.0), (0.50, 40.0)];

    pub fn new(min_mean_silhouette: f64, min_variance_ratio: f64) -> Result<Self> {
        let t = Self {
            min_mean_silhouette,
            min_variance_ratio,
            require_all_above_average: true,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn presets() -> Vec<Self> {
        Self::PRESETS
            .iter()
            .map(|&(s, v)| Self::new(s, v).expect("presets are valid"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min_mean_silhouette.is_finite() || !self.min_variance_ratio.is_finite() {
            return Err(Error::InvalidArgument(
                "quality thresholds must be finite".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.min_mean_silhouette) {
            return Err(Error::InvalidArgument(
                "silhouette threshold must lie in [-1, 1]".into(),
            ));
        }
        if self.min_variance_ratio < 0.0 {
            return Err(Error::InvalidArgument(
                "variance ratio threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Column tag such as `0.20/10`.
    pub fn tag(&self) -> String {
        format!(
            "{:.2}/{}",
            self.min_mean_silhouette, self.min_variance_ratio
        )
    }
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self::new(0.20, 10.0).expect("valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityVerdict {
    /// Every cluster holds a clip above the episode's mean silhouette.
    pub criterion1: bool,
    pub criterion2: bool,
    pub criterion3: bool,
    pub combined: bool,
}

pub(crate) fn verdict(
    mean_silhouette: f64,
    variance_ratio: f64,
    all_above: bool,
    t: &QualityThresholds,
) -> QualityVerdict {
    let criterion1 = all_above;
    let criterion2 = mean_silhouette > t.min_mean_silhouette;
    let criterion3 = variance_ratio > t.min_variance_ratio;
    QualityVerdict {
        criterion1,
        criterion2,
        criterion3,
        combined: (criterion1 || !t.require_all_above_average) && criterion2 && criterion3,
    }
}

pub fn evaluate_quality(
    ec: &EpisodeClustering,
    thresholds: &QualityThresholds,
) -> Result<QualityVerdict> {
    let m = ec
        .metrics
        .as_ref()
        .ok_or_else(|| Error::NotApplicable("episode has a single cluster".into()))?;
    Ok(verdict(
        m.mean_silhouette,
        m.variance_ratio,
        m.all_above_average,
        thresholds,
    ))
}

impl EpisodeQuality {
    pub fn evaluate(&self, thresholds: &QualityThresholds) -> Result<QualityVerdict> {
        match (
            self.mean_silhouette,
            self.variance_ratio,
            self.all_above_average,
        ) {
            (Some(s), Some(v), Some(a)) => Ok(verdict(s, v, a, thresholds)),
            _ => Err(Error::NotApplicable(format!(
                "episode {} {} has no cluster metrics",
                self.show, self.episode_id
            ))),
        }
    }
}

/// Episode counts meeting each criterion under one threshold pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub thresholds: QualityThresholds,
    /// Episodes with cluster metrics; single-cluster episodes are left out.
    pub episodes: usize,
    pub criterion1: usize,
    pub criterion2: usize,
    pub criterion3: usize,
    pub combined: usize,
}

impl QualitySummary {
    pub fn pct(&self, count: usize) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.episodes as f64
        }
    }
}

pub fn summarize_quality(
    episodes: &[EpisodeQuality],
    thresholds: &QualityThresholds,
) -> QualitySummary {
    let mut s = QualitySummary {
        thresholds: *thresholds,
        episodes: 0,
        criterion1: 0,
        criterion2: 0,
        criterion3: 0,
        combined: 0,
    };
    for v in episodes.iter().filter_map(|e| e.evaluate(thresholds).ok()) {
        s.episodes += 1;
        s.criterion1 += usize::from(v.criterion1);
        s.criterion2 += usize::from(v.criterion2);
        s.criterion3 += usize::from(v.criterion3);
        s.combined += usize::from(v.combined);
    }
    s
}
