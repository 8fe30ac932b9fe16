//! Per-class F1 scoring of predictions against binary labels, aggregation
//! over cross-validation folds, and a reference classifier.

mod classifier;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{render_aligned, BinaryLabels, DysfluencyType, LabelVector};
use crate::error::{Error, Result};
use crate::splitting::{Partition, Scheme, Slot, SplitAssignment};

pub use classifier::{cross_validate_reference, reference_classifier, NearestCentroid};
pub use io::{load_predictions, save_predictions, PredictionKey};

/// Binary predictions for a set of clips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub classes: Vec<DysfluencyType>,
    pub predictions: BTreeMap<String, LabelVector>,
    pub provenance: String,
}

impl PredictionSet {
    pub fn new(classes: Vec<DysfluencyType>, provenance: impl Into<String>) -> Self {
        Self {
            classes,
            predictions: BTreeMap::new(),
            provenance: provenance.into(),
        }
    }

    /// Predictions restricted to `clips`; missing clips are left out.
    pub fn subset<'a, I>(&self, clips: I) -> PredictionSet
    where
        I: IntoIterator<Item = &'a String>,
    {
        PredictionSet {
            classes: self.classes.clone(),
            predictions: clips
                .into_iter()
                .filter_map(|c| self.predictions.get(c).map(|v| (c.clone(), *v)))
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassF1 {
    pub class: DysfluencyType,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Precision plus recall was zero, so F1 was set to 0.
    pub undefined: bool,
}

/// Binary F1 on the positive class, per class. Truth and predictions must
/// cover exactly the same clips.
pub fn f1_scores(
    truth: &BinaryLabels,
    preds: &PredictionSet,
    classes: &[DysfluencyType],
) -> Result<Vec<ClassF1>> {
    if truth.len() != preds.predictions.len()
        || truth.keys().any(|k| !preds.predictions.contains_key(k))
    {
        let missing = truth
            .keys()
            .filter(|k| !preds.predictions.contains_key(*k))
            .count();
        let extra = preds
            .predictions
            .keys()
            .filter(|k| !truth.contains_key(*k))
            .count();
        return Err(Error::CoverageMismatch(format!(
            "{missing} labeled clips lack predictions, {extra} predictions have no label"
        )));
    }
    for c in classes {
        if !preds.classes.contains(c) {
            return Err(Error::InvalidArgument(format!(
                "predictions do not include class {c}"
            )));
        }
    }
    Ok(classes
        .iter()
        .map(|&class| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (clip, t) in truth {
                match (preds.predictions[clip][class], t[class]) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let undefined = precision + recall == 0.0;
            let f1 = if undefined {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassF1 {
                class,
                tp,
                fp,
                fn_,
                precision,
                recall,
                f1,
                undefined,
            }
        })
        .collect())
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvAggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl fmt::Display for CvAggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ({:.2})", self.mean, self.std)
    }
}

/// Aggregates every fold of every run as one flat sample.
pub fn aggregate_cv(values: &[f64]) -> CvAggregate {
    assert!(!values.is_empty(), "at least one fold required");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    CvAggregate {
        mean,
        std: var.sqrt(),
        n: values.len(),
    }
}

/// Scores of one evaluated test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub scheme: Scheme,
    pub run: usize,
    /// Test fold for fold schemes.
    pub fold: Option<usize>,
    /// Number of folds for fold schemes, used in column names.
    pub n_folds: usize,
    pub scores: Vec<ClassF1>,
}

impl FoldScore {
    pub fn mean_f1(&self) -> f64 {
        self.scores.iter().map(|s| s.f1).sum::<f64>() / self.scores.len().max(1) as f64
    }

    /// Score table column for this fold's scheme.
    pub fn column(&self) -> String {
        match self.scheme {
            Scheme::Lopo => "LOPO".into(),
            Scheme::KFoldAgnostic => format!("{}-fold-cv", self.n_folds),
            Scheme::KFoldSpeakerExclusive => format!("{}-fold-excl", self.n_folds),
            Scheme::FixedTdt(v) => format!("TDT-{v:?}"),
            Scheme::External => "external".into(),
        }
    }
}

/// Test clips of every evaluable unit in a split: the test partition, or
/// each fold in turn.
pub fn test_sets(split: &SplitAssignment) -> Vec<(Option<usize>, Vec<String>)> {
    if split.scheme.is_fold_scheme() || split.n_folds() > 0 {
        (0..split.n_folds())
            .map(|f| {
                let clips = split
                    .fold_view(f)
                    .into_iter()
                    .filter(|(_, p)| *p == Partition::Test)
                    .map(|(c, _)| c)
                    .collect();
                (Some(f), clips)
            })
            .collect()
    } else {
        let clips = split
            .slots
            .iter()
            .filter(|(_, s)| **s == Slot::Part(Partition::Test))
            .map(|(c, _)| c.clone())
            .collect();
        vec![(None, clips)]
    }
}

/// Scores predictions for every test set of `split`. `preds_for` returns
/// the prediction set to use for a (run, fold) pair.
pub fn evaluate_split<F>(
    split: &SplitAssignment,
    truth: &BinaryLabels,
    classes: &[DysfluencyType],
    mut preds_for: F,
) -> Result<Vec<FoldScore>>
where
    F: FnMut(usize, Option<usize>) -> Result<PredictionSet>,
{
    test_sets(split)
        .into_iter()
        .map(|(fold, clips)| {
            let sub_truth: BinaryLabels = clips
                .iter()
                .map(|c| {
                    truth
                        .get(c)
                        .map(|v| (c.clone(), *v))
                        .ok_or_else(|| Error::Integrity(format!("no labels for split clip {c}")))
                })
                .collect::<Result<_>>()?;
            let preds = preds_for(split.run, fold)?.subset(clips.iter());
            Ok(FoldScore {
                scheme: split.scheme,
                run: split.run,
                fold,
                n_folds: split.n_folds(),
                scores: f1_scores(&sub_truth, &preds, classes)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Single(f64),
    Cv(CvAggregate),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Single(v) => write!(f, "{v:.2}"),
            Cell::Cv(a) => a.fmt(f),
        }
    }
}

/// Classes as rows, schemes as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub columns: Vec<String>,
    pub classes: Vec<DysfluencyType>,
    /// `cells[class][column]`.
    pub cells: Vec<Vec<Option<Cell>>>,
}

fn short_name(t: DysfluencyType) -> &'static str {
    match t {
        DysfluencyType::Block => "Bl",
        DysfluencyType::Interjection => "In",
        DysfluencyType::Prolongation => "Pro",
        DysfluencyType::SoundRepetition => "Snd",
        DysfluencyType::WordRepetition => "Wd",
        DysfluencyType::NoStutteredWords => "NoStut",
    }
}

impl ScoreTable {
    /// Groups fold scores by column in first-seen order. A column with one
    /// test set shows the plain F1; otherwise mean and standard deviation
    /// over all folds and runs.
    pub fn from_scores(scores: &[FoldScore], classes: &[DysfluencyType]) -> Self {
        let mut columns: Vec<String> = Vec::new();
        let mut values: BTreeMap<(String, DysfluencyType), Vec<f64>> = BTreeMap::new();
        for s in scores {
            let col = s.column();
            if !columns.contains(&col) {
                columns.push(col.clone());
            }
            for c in &s.scores {
                values.entry((col.clone(), c.class)).or_default().push(c.f1);
            }
        }
        let cells = classes
            .iter()
            .map(|&class| {
                columns
                    .iter()
                    .map(|col| {
                        values.get(&(col.clone(), class)).map(|v| {
                            if v.len() == 1 {
                                Cell::Single(v[0])
                            } else {
                                Cell::Cv(aggregate_cv(v))
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        Self {
            columns,
            classes: classes.to_vec(),
            cells,
        }
    }

    pub fn to_text(&self) -> String {
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        let mut rows = vec![header];
        for (class, row) in self.classes.iter().zip(&self.cells) {
            let mut line = vec![short_name(*class).to_string()];
            line.extend(
                row.iter()
                    .map(|c| c.map_or_else(|| "-".to_string(), |c| c.to_string())),
            );
            rows.push(line);
        }
        render_aligned(&rows)
    }

    /// `Class,Column,Mean,Std,N`; single test sets have std 0 and N 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Class,Column,Mean,Std,N\n");
        for (class, row) in self.classes.iter().zip(&self.cells) {
            for (col, cell) in self.columns.iter().zip(row) {
                let (mean, std, n) = match cell {
                    Some(Cell::Single(v)) => (*v, 0.0, 1),
                    Some(Cell::Cv(a)) => (a.mean, a.std, a.n),
                    None => continue,
                };
                out.push_str(&format!(
                    "{},{col},{mean:.6},{std:.6},{n}\n",
                    class.column()
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lv(bits: [bool; 6]) -> LabelVector {
        LabelVector(bits)
    }

    fn set(rows: &[(&str, [bool; 6])]) -> (BinaryLabels, PredictionSet) {
        let truth: BinaryLabels = rows.iter().map(|(c, b)| (c.to_string(), lv(*b))).collect();
        let mut p = PredictionSet::new(DysfluencyType::EVENTS.to_vec(), "test");
        p.predictions = truth.clone();
        (truth, p)
    }

    #[test]
    fn perfect_predictions() {
        let (truth, p) = set(&[
            ("a", [true, false, true, false, true, false]),
            ("b", [false, true, false, true, false, false]),
        ]);
        for s in f1_scores(&truth, &p, &DysfluencyType::EVENTS).unwrap() {
            assert_eq!(s.f1, 1.0);
        }
    }

    #[test]
    fn one_of_each_error() {
        let f = [false; 6];
        let mut b = f;
        b[0] = true;
        let truth: BinaryLabels = [("tp", b), ("fp", f), ("fn", b)]
            .into_iter()
            .map(|(c, v)| (c.to_string(), lv(v)))
            .collect();
        let mut p = PredictionSet::new(vec![DysfluencyType::Block], "x");
        p.predictions = [("tp", b), ("fp", b), ("fn", f)]
            .into_iter()
            .map(|(c, v)| (c.to_string(), lv(v)))
            .collect();
        let s = f1_scores(&truth, &p, &[DysfluencyType::Block]).unwrap()[0];
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn zero_denominator_flagged() {
        let (truth, p) = set(&[("a", [false; 6])]);
        let s = f1_scores(&truth, &p, &[DysfluencyType::Block]).unwrap()[0];
        assert_eq!(s.f1, 0.0);
        assert!(s.undefined);
    }

    #[test]
    fn coverage_mismatch() {
        let (truth, mut p) = set(&[("a", [false; 6]), ("b", [false; 6])]);
        p.predictions.remove("b");
        assert!(matches!(
            f1_scores(&truth, &p, &[DysfluencyType::Block]),
            Err(Error::CoverageMismatch(_))
        ));
    }

    #[test]
    fn aggregate_formatting() {
        assert_eq!(aggregate_cv(&[0.4, 0.5, 0.6]).to_string(), "0.50 (0.08)");
        assert_eq!(aggregate_cv(&[0.37]).to_string(), "0.37 (0.00)");
    }

    #[test]
    fn score_table_layout() {
        let score = |scheme, run, fold, f1| FoldScore {
            scheme,
            run,
            fold,
            n_folds: if fold.is_some() { 2 } else { 0 },
            scores: vec![ClassF1 {
                class: DysfluencyType::Block,
                tp: 0,
                fp: 0,
                fn_: 0,
                precision: 0.0,
                recall: 0.0,
                f1,
                undefined: false,
            }],
        };
        let scores = vec![
            score(Scheme::KFoldAgnostic, 0, Some(0), 0.4),
            score(Scheme::KFoldAgnostic, 0, Some(1), 0.6),
            score(
                Scheme::FixedTdt(crate::splitting::TdtVariant::E),
                0,
                None,
                0.33,
            ),
        ];
        let t = ScoreTable::from_scores(&scores, &[DysfluencyType::Block]);
        assert_eq!(t.columns, ["2-fold-cv", "TDT-E"]);
        let text = t.to_text();
        assert!(text.contains("Bl  0.50 (0.10)   0.33"), "{text}");
        assert!(t.to_csv().contains("Block,TDT-E,0.330000,0.000000,1"));
    }

    proptest! {
        #[test]
        fn f1_bounded_and_order_free(rows in proptest::collection::vec((any::<[bool; 6]>(), any::<[bool; 6]>()), 1..40)) {
            let truth: BinaryLabels = rows.iter().enumerate().map(|(i, (t, _))| (format!("c{i}"), lv(*t))).collect();
            let mut p = PredictionSet::new(DysfluencyType::EVENTS.to_vec(), "p");
            p.predictions = rows.iter().enumerate().map(|(i, (_, q))| (format!("c{i}"), lv(*q))).collect();
            let a = f1_scores(&truth, &p, &DysfluencyType::EVENTS).unwrap();
            for s in &a {
                prop_assert!((0.0..=1.0).contains(&s.f1));
            }
            // Renaming clips (a permutation of rows) leaves scores unchanged.
            let n = rows.len();
            let truth2: BinaryLabels = rows.iter().enumerate().map(|(i, (t, _))| (format!("c{}", n - 1 - i), lv(*t))).collect();
            let mut p2 = p.clone();
            p2.predictions = rows.iter().enumerate().map(|(i, (_, q))| (format!("c{}", n - 1 - i), lv(*q))).collect();
            prop_assert_eq!(a, f1_scores(&truth2, &p2, &DysfluencyType::EVENTS).unwrap());
        }

        #[test]
        fn aggregate_mean_permutation_invariant(mut v in proptest::collection::vec(0.0f64..1.0, 1..25)) {
            let a = aggregate_cv(&v);
            v.reverse();
            let b = aggregate_cv(&v);
            prop_assert!((a.mean - b.mean).abs() < 1e-12);
            prop_assert!((a.std - b.std).abs() < 1e-12);
        }
    }
}
