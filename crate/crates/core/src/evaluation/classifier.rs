use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{f1_scores, test_sets, FoldScore, PredictionKey, PredictionSet};
use crate::corpus::{BinaryLabels, DysfluencyType, LabelVector};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::splitting::{Partition, Slot, SplitAssignment};

/// One positive and one negative centroid per class; a clip is predicted
/// positive when it is strictly closer to the positive centroid. A class
/// seen with only one value in training always predicts that value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestCentroid {
    pub classes: Vec<DysfluencyType>,
    pub positive: Array2<f64>,
    pub negative: Array2<f64>,
    pub constant: Vec<Option<bool>>,
}

impl NearestCentroid {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        y: &[LabelVector],
        classes: &[DysfluencyType],
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if x.nrows() == 0 {
            return Err(Error::DegenerateClass("no training clips".into()));
        }
        let dim = x.ncols();
        let mut constant = vec![None; classes.len()];
        let mut positive = Array2::zeros((classes.len(), dim));
        let mut negative = Array2::zeros((classes.len(), dim));
        for (c, &class) in classes.iter().enumerate() {
            let (mut np, mut nn) = (0usize, 0usize);
            for (row, labels) in x.axis_iter(Axis(0)).zip(y) {
                if labels[class] {
                    let mut p = positive.row_mut(c);
                    p += &row;
                    np += 1;
                } else {
                    let mut n = negative.row_mut(c);
                    n += &row;
                    nn += 1;
                }
            }
            if np == 0 || nn == 0 {
                constant[c] = Some(np > 0);
                continue;
            }
            positive.row_mut(c).mapv_inplace(|v| v / np as f64);
            negative.row_mut(c).mapv_inplace(|v| v / nn as f64);
        }
        Ok(Self {
            classes: classes.to_vec(),
            positive,
            negative,
            constant,
        })
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<LabelVector>> {
        if x.ncols() != self.positive.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.positive.ncols(),
                found: x.ncols(),
            });
        }
        let dist = |a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>| {
            a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
        };
        Ok(x.axis_iter(Axis(0))
            .map(|row| {
                let mut v = LabelVector::default();
                for (c, &class) in self.classes.iter().enumerate() {
                    v[class] = self.constant[c].unwrap_or_else(|| {
                        dist(row, self.positive.row(c)) < dist(row, self.negative.row(c))
                    });
                }
                v
            })
            .collect())
    }
}

fn rows_of(store: &EmbeddingStore, clips: &[String]) -> Result<Vec<usize>> {
    clips
        .iter()
        .map(|c| {
            store
                .index_of(c)
                .ok_or_else(|| Error::Integrity(format!("no embedding for clip {c}")))
        })
        .collect()
}

/// Fits on `train` clips and predicts `eval` clips.
pub fn reference_classifier(
    store: &EmbeddingStore,
    truth: &BinaryLabels,
    train: &[String],
    eval: &[String],
    classes: &[DysfluencyType],
) -> Result<PredictionSet> {
    let y: Vec<LabelVector> = train
        .iter()
        .map(|c| {
            truth
                .get(c)
                .copied()
                .ok_or_else(|| Error::Integrity(format!("no labels for clip {c}")))
        })
        .collect::<Result<_>>()?;
    let model = NearestCentroid::fit(store.matrix(&rows_of(store, train)?).view(), &y, classes)?;
    let predicted = model.predict(store.matrix(&rows_of(store, eval)?).view())?;
    let mut set = PredictionSet::new(classes.to_vec(), "nearest-centroid reference");
    set.predictions = eval.iter().cloned().zip(predicted).collect();
    Ok(set)
}

/// Trains and scores the reference classifier on every test set of
/// `split`. Training uses the train partition, or every other fold; clips
/// without embeddings are skipped on both sides.
pub fn cross_validate_reference(
    split: &SplitAssignment,
    store: &EmbeddingStore,
    truth: &BinaryLabels,
    classes: &[DysfluencyType],
) -> Result<Vec<(FoldScore, PredictionKey, PredictionSet)>> {
    let embedded = |c: &String| store.index_of(c).is_some();
    test_sets(split)
        .into_iter()
        .map(|(fold, test)| {
            let train: Vec<String> = split
                .slots
                .iter()
                .filter(|(c, s)| match **s {
                    Slot::Part(p) => p == Partition::Train,
                    Slot::Fold(f) => Some(f) != fold,
                } && embedded(c))
                .map(|(c, _)| c.clone())
                .collect();
            let test: Vec<String> = test.into_iter().filter(embedded).collect();
            let preds = reference_classifier(store, truth, &train, &test, classes)?;
            let sub_truth: BinaryLabels = test.iter().map(|c| (c.clone(), truth[c])).collect();
            let score = FoldScore {
                scheme: split.scheme,
                run: split.run,
                fold,
                n_folds: split.n_folds(),
                scores: f1_scores(&sub_truth, &preds, classes)?,
            };
            let key = PredictionKey {
                scheme: split.scheme,
                run: split.run,
                fold,
            };
            Ok((score, key, preds))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separable_classes_are_perfect() {
        let x = array![[0.0, 0.0], [0.2, 0.1], [5.0, 5.0], [5.1, 4.9]];
        let mut pos = LabelVector::default();
        pos[DysfluencyType::Block] = true;
        let y = [LabelVector::default(), LabelVector::default(), pos, pos];
        let m = NearestCentroid::fit(x.view(), &y, &[DysfluencyType::Block]).unwrap();
        assert_eq!(m.predict(x.view()).unwrap(), y);
    }

    #[test]
    fn one_sided_class_predicts_constant() {
        let x = array![[0.0], [1.0]];
        let mut pos = LabelVector::default();
        pos[DysfluencyType::Block] = true;
        let m = NearestCentroid::fit(
            x.view(),
            &[pos, pos],
            &[DysfluencyType::Block, DysfluencyType::Interjection],
        )
        .unwrap();
        assert_eq!(m.predict(array![[7.0]].view()).unwrap(), vec![pos]);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let x = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            NearestCentroid::fit(x.view(), &[], &[DysfluencyType::Block]),
            Err(Error::DegenerateClass(_))
        ));
    }
}
