//! Partition agreement measures used to score speaker recovery.

use std::collections::HashMap;
use std::hash::Hash;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

fn contingency<A, B>(pred: &[A], truth: &[B]) -> (Vec<Vec<i64>>, usize, usize)
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    assert_eq!(
        pred.len(),
        truth.len(),
        "partitions must cover the same items"
    );
    let mut rows: HashMap<A, usize> = HashMap::new();
    let mut cols: HashMap<B, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), i64> = HashMap::new();
    for (p, t) in pred.iter().zip(truth) {
        let next = rows.len();
        let r = *rows.entry(p.clone()).or_insert(next);
        let next = cols.len();
        let c = *cols.entry(t.clone()).or_insert(next);
        *cells.entry((r, c)).or_default() += 1;
    }
    let mut table = vec![vec![0i64; cols.len()]; rows.len()];
    for ((r, c), n) in cells {
        table[r][c] = n;
    }
    (table, rows.len(), cols.len())
}

fn pairs(n: i64) -> f64 {
    (n * (n - 1)) as f64 / 2.0
}

/// Adjusted Rand index; 1.0 for identical partitions up to relabeling.
pub fn adjusted_rand_index<A, B>(pred: &[A], truth: &[B]) -> f64
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    let n = pred.len() as i64;
    if n < 2 {
        return 1.0;
    }
    let (table, _, ncols) = contingency(pred, truth);
    let index: f64 = table.iter().flatten().map(|&v| pairs(v)).sum();
    let row_pairs: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let col_pairs: f64 = (0..ncols)
        .map(|c| pairs(table.iter().map(|r| r[c]).sum()))
        .sum();
    let expected = row_pairs * col_pairs / pairs(n);
    let max = (row_pairs + col_pairs) / 2.0;
    if (max - expected).abs() < f64::EPSILON {
        1.0
    } else {
        (index - expected) / (max - expected)
    }
}

/// Fraction of items whose predicted label maps to their true label under
/// the best one-to-one label matching (Hungarian algorithm).
pub fn matched_accuracy<A, B>(pred: &[A], truth: &[B]) -> f64
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    if pred.is_empty() {
        return 1.0;
    }
    let (table, nrows, ncols) = contingency(pred, truth);
    let oriented: Vec<Vec<i64>> = if nrows <= ncols {
        table
    } else {
        (0..ncols)
            .map(|c| table.iter().map(|r| r[c]).collect())
            .collect()
    };
    let weights = Matrix::from_rows(oriented).expect("rectangular contingency table");
    let (matched, _) = kuhn_munkres(&weights);
    matched as f64 / pred.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_identity_and_relabeling() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 9, 9]), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
    }

    #[test]
    fn ari_reference_value() {
        // sklearn.metrics.adjusted_rand_score([0,0,1,2],[0,0,1,1]) == 0.5714285714285715
        let v = adjusted_rand_index(&[0, 0, 1, 2], &[0, 0, 1, 1]);
        assert!((v - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn matched_accuracy_uses_one_to_one_mapping() {
        assert_eq!(matched_accuracy(&["a", "a", "b", "b"], &[1, 1, 2, 2]), 1.0);
        // two predicted labels cannot both map to truth 1
        assert_eq!(matched_accuracy(&["a", "b", "c", "c"], &[1, 1, 2, 2]), 0.75);
        // more predicted labels than true ones
        assert_eq!(matched_accuracy(&["a", "b", "c"], &[1, 1, 1]), 1.0 / 3.0);
    }
}
