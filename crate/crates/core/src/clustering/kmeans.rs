use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::squared_distance;
use crate::error::{Error, Result};
use crate::seed::{derive_seed_n, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
    /// Independent k-means++ restarts; the lowest-inertia run wins.
    pub n_init: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub n_iter: usize,
    /// Inertia after every assignment step of the winning run, followed by
    /// the final inertia.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn recompute_inertia(&self, points: ArrayView2<'_, f64>) -> f64 {
        inertia(points, &self.centroids, &self.assignments)
    }
}

fn inertia(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, assignments: &[usize]) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(assignments)
        .map(|(p, &a)| {
            squared_distance(p.as_slice().unwrap(), centroids.row(a).as_slice().unwrap())
        })
        .sum()
}

fn plus_plus_init<R: Rng>(points: &Array2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| {
            squared_distance(
                points.row(i).as_slice().unwrap(),
                centroids.row(0).as_slice().unwrap(),
            )
        })
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            let nd = squared_distance(
                points.row(i).as_slice().unwrap(),
                centroids.row(c).as_slice().unwrap(),
            );
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Assigns each point to its nearest centroid (lowest index on ties).
fn assign(
    points: &Array2<f64>,
    centroids: &Array2<f64>,
    assignments: &mut [usize],
    dists: &mut [f64],
) {
    for (i, p) in points.rows().into_iter().enumerate() {
        let p = p.as_slice().unwrap();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.rows().into_iter().enumerate() {
            let d = squared_distance(p, centroid.as_slice().unwrap());
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best;
        dists[i] = best_d;
    }
}

/// Moves each empty cluster's centroid onto the point farthest from its
/// own centroid, taken from a cluster that can spare it.
fn repair_empty(
    points: &Array2<f64>,
    centroids: &mut Array2<f64>,
    assignments: &mut [usize],
    dists: &mut [f64],
) {
    let k = centroids.nrows();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut far = None;
        for i in 0..assignments.len() {
            if sizes[assignments[i]] > 1 && far.is_none_or(|f: usize| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        let far = far.expect("n >= k guarantees a donor cluster");
        sizes[assignments[far]] -= 1;
        sizes[c] = 1;
        assignments[far] = c;
        dists[far] = 0.0;
        centroids.row_mut(c).assign(&points.row(far));
    }
}

fn update_centroids(points: &Array2<f64>, assignments: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (p, &a) in points.rows().into_iter().zip(assignments) {
        let mut row = sums.row_mut(a);
        row += &p;
        counts[a] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        sums.row_mut(c).mapv_inplace(|v| v / count as f64);
    }
    sums
}

fn lloyd(points: &Array2<f64>, k: usize, seed: u64, opts: &KMeansOptions) -> ClusterModel {
    let n = points.nrows();
    let mut rng = rng(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0f64; n];
    let mut trace = Vec::new();
    let mut n_iter = 0;
    for _ in 0..opts.max_iter.max(1) {
        n_iter += 1;
        assign(points, &centroids, &mut assignments, &mut dists);
        repair_empty(points, &mut centroids, &mut assignments, &mut dists);
        let current: f64 = dists.iter().sum();
        debug_assert!(
            trace
                .last()
                .is_none_or(|&prev: &f64| current <= prev + 1e-9 * prev.abs().max(1.0)),
            "Lloyd step increased inertia"
        );
        trace.push(current);
        let updated = update_centroids(points, &assignments, k);
        let shift = updated
            .rows()
            .into_iter()
            .zip(centroids.rows())
            .map(|(a, b)| squared_distance(a.as_slice().unwrap(), b.as_slice().unwrap()).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < opts.tol {
            break;
        }
    }
    let inertia = inertia(points.view(), &centroids, &assignments);
    trace.push(inertia);
    ClusterModel {
        k,
        centroids,
        assignments,
        inertia,
        n_iter,
        inertia_trace: trace,
    }
}

/// Lloyd's algorithm from k-means++ seeding, restarted `opts.n_init` times.
pub fn kmeans(
    points: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<ClusterModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if points.nrows() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            found: points.nrows(),
        });
    }
    for ((row, col), v) in points.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    let points = points.as_standard_layout().into_owned();
    let mut best: Option<ClusterModel> = None;
    for run in 0..opts.n_init.max(1) {
        let model = lloyd(&points, k, derive_seed_n(seed, run as u64), opts);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one run"))
}
