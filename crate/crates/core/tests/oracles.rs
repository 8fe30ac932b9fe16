//! Library results checked against naive reimplementations.

use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitforge::clustering::{kmeans, silhouette, variance_ratio, KMeansOptions};
use splitforge::embedding::fit_preprocessor;
use splitforge::evaluation::aggregate_cv;
use splitforge::metrics::{adjusted_rand_index, matched_accuracy};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<usize>) {
    let k = rng.gen_range(2..=4);
    let n = rng.gen_range(k + 1..=50);
    let dim = rng.gen_range(1..=5);
    let points = Array2::from_shape_fn((n, dim), |_| rng.gen_range(-5.0..5.0));
    let mut assignments: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.gen_range(0..k) })
        .collect();
    assignments.shuffle(rng);
    (points, assignments)
}

fn naive_silhouette(points: ArrayView2<'_, f64>, labels: &[usize]) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
    let k = labels.iter().max().unwrap() + 1;
    (0..rows.len())
        .map(|i| {
            let mut sum = vec![0.0; k];
            let mut count = vec![0usize; k];
            for j in 0..rows.len() {
                if j != i {
                    sum[labels[j]] += dist(&rows[i], &rows[j]);
                    count[labels[j]] += 1;
                }
            }
            let own = labels[i];
            if count[own] == 0 {
                return 0.0;
            }
            let a = sum[own] / count[own] as f64;
            let b = (0..k)
                .filter(|&c| c != own && count[c] > 0)
                .map(|c| sum[c] / count[c] as f64)
                .fold(f64::INFINITY, f64::min);
            (b - a) / a.max(b)
        })
        .collect()
}

fn naive_variance_ratio(points: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
    let (n, dim) = points.dim();
    let k = labels.iter().max().unwrap() + 1;
    let grand: Vec<f64> = (0..dim)
        .map(|d| points.column(d).sum() / n as f64)
        .collect();
    let mut trace_b = 0.0;
    let mut trace_w = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        let centroid: Vec<f64> = (0..dim)
            .map(|d| members.iter().map(|&i| points[[i, d]]).sum::<f64>() / members.len() as f64)
            .collect();
        // Diagonal of n_c (m_c - m)(m_c - m)^T and of the within-cluster scatter.
        for d in 0..dim {
            trace_b += members.len() as f64 * (centroid[d] - grand[d]).powi(2);
            for &i in &members {
                trace_w += (points[[i, d]] - centroid[d]).powi(2);
            }
        }
    }
    (trace_b / (k - 1) as f64) / (trace_w / (n - k) as f64)
}

#[test]
fn silhouette_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (points, labels) = random_instance(&mut rng);
        let got = silhouette(points.view(), &labels).unwrap();
        let want = naive_silhouette(points.view(), &labels);
        for (g, w) in got.per_sample.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
        let mean = want.iter().sum::<f64>() / want.len() as f64;
        assert!((got.mean - mean).abs() < 1e-9);
    }
}

#[test]
fn variance_ratio_matches_scatter_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (points, labels) = random_instance(&mut rng);
        let got = variance_ratio(points.view(), &labels).unwrap().value;
        let want = naive_variance_ratio(points.view(), &labels);
        assert!(
            (got - want).abs() <= 1e-9 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }
}

#[test]
fn variance_ratio_hand_case() {
    let points = Array2::from_shape_vec((4, 1), vec![0.0, 1.0, 10.0, 11.0]).unwrap();
    let got = variance_ratio(points.view(), &[0, 0, 1, 1]).unwrap();
    assert_eq!(got.value, 200.0);
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues and
/// eigenvectors as columns.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (row_p, row_q) = (a[p].clone(), a[q].clone());
                for (k, (apk, aqk)) in row_p.into_iter().zip(row_q).enumerate() {
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[test]
fn pca_matches_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, dim, target) = (50, 8, 3);
    // Correlated columns so the spectrum has distinct leading eigenvalues.
    let latent = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
    let mixing = Array2::from_shape_fn((3, dim), |_| rng.gen_range(-2.0..2.0));
    let noise = Array2::from_shape_fn((n, dim), |_| rng.gen_range(-0.1..0.1));
    let x = latent.dot(&mixing) + noise;

    let mut z = x.clone();
    for d in 0..dim {
        let col = x.column(d);
        let mean = col.sum() / n as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        z.column_mut(d).mapv_inplace(|v| (v - mean) / sd);
    }
    let cov: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| (0..n).map(|r| z[[r, i]] * z[[r, j]]).sum::<f64>() / n as f64)
                .collect()
        })
        .collect();
    let (values, vectors) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let pre = fit_preprocessor(x.view(), target).unwrap();
    for (r, &idx) in order.iter().take(target).enumerate() {
        assert!((pre.explained_variance[r] - values[idx]).abs() < 1e-8);
        let dot: f64 = (0..dim)
            .map(|j| pre.components[[r, j]] * vectors[j][idx])
            .sum();
        assert!(
            (dot.abs() - 1.0).abs() < 1e-8,
            "component {r} misaligned: {dot}"
        );
    }
    let total: f64 = values.iter().sum();
    for r in 0..target {
        assert!((pre.explained_variance_ratio[r] - values[order[r]] / total).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pca_components_are_orthonormal(seed in any::<u64>(), n in 6usize..40, dim in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, dim), |_| rng.gen_range(-3.0..3.0));
        let target = rng.gen_range(1..=dim.min(n));
        let pre = fit_preprocessor(x.view(), target).unwrap();
        let gram = pre.components.dot(&pre.components.t());
        for i in 0..target {
            for j in 0..target {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[[i, j]] - want).abs() < 1e-9);
            }
        }
        for w in pre.explained_variance.windows(2) {
            prop_assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn full_rank_projection_preserves_standardized_norms(seed in any::<u64>(), n in 6usize..30, dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, dim), |_| rng.gen_range(-3.0..3.0));
        let pre = fit_preprocessor(x.view(), dim).unwrap();
        let z = pre.standardize(x.view()).unwrap();
        let y = pre.transform(x.view()).unwrap();
        for (zr, yr) in z.rows().into_iter().zip(y.rows()) {
            let nz = zr.dot(&zr);
            let ny = yr.dot(&yr);
            prop_assert!((nz - ny).abs() < 1e-8 * nz.max(1.0));
        }
    }

    #[test]
    fn lloyd_inertia_never_increases(seed in any::<u64>(), n in 5usize..60, k in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-4.0..4.0));
        let model = kmeans(x.view(), k, seed, &KMeansOptions::default()).unwrap();
        for w in model.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
        }
        prop_assert!((model.recompute_inertia(x.view()) - model.inertia).abs() < 1e-9 * model.inertia.max(1.0));
    }

    #[test]
    fn aggregate_is_flat_mean_over_folds(values in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let agg = aggregate_cv(&values);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        prop_assert!((agg.mean - mean).abs() < 1e-12);
        prop_assert!((agg.std - var.sqrt()).abs() < 1e-12);
        prop_assert_eq!(agg.n, values.len());
    }

    #[test]
    fn ari_matches_pair_counting(a in prop::collection::vec(0u8..4, 2..25), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<u8> = a.iter().map(|_| rng.gen_range(0..3)).collect();
        let n = a.len();
        let (mut same_both, mut same_a, mut same_b) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let sa = a[i] == a[j];
                let sb = b[i] == b[j];
                same_a += f64::from(u8::from(sa));
                same_b += f64::from(u8::from(sb));
                same_both += f64::from(u8::from(sa && sb));
            }
        }
        let total = (n * (n - 1) / 2) as f64;
        let expected = same_a * same_b / total;
        let max = (same_a + same_b) / 2.0;
        let want = if (max - expected).abs() < f64::EPSILON { 1.0 } else { (same_both - expected) / (max - expected) };
        prop_assert!((adjusted_rand_index(&a, &b) - want).abs() < 1e-9);
    }

    #[test]
    fn matched_accuracy_matches_permutation_search(a in prop::collection::vec(0u8..3, 1..20), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<u8> = a.iter().map(|_| rng.gen_range(0..3)).collect();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| a.iter().zip(&b).filter(|(x, y)| p[**x as usize] == **y).count())
            .max()
            .unwrap();
        prop_assert!((matched_accuracy(&a, &b) - best as f64 / a.len() as f64).abs() < 1e-12);
    }
}

/// Exhaustive search for the minimum-inertia partition into `k` non-empty
/// clusters.
fn brute_force_inertia(x: ArrayView2<'_, f64>, k: usize) -> f64 {
    let n = x.nrows();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        if (0..k).any(|cl| !labels.contains(&cl)) {
            continue;
        }
        let mut inertia = 0.0;
        for cl in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == cl).collect();
            for d in 0..x.ncols() {
                let mean = members.iter().map(|&i| x[[i, d]]).sum::<f64>() / members.len() as f64;
                inertia += members
                    .iter()
                    .map(|&i| (x[[i, d]] - mean).powi(2))
                    .sum::<f64>();
            }
        }
        best = best.min(inertia);
    }
    best
}

#[test]
fn kmeans_reaches_brute_force_optimum_on_small_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut hits = 0;
    for trial in 0..40 {
        let n = rng.gen_range(4..=8);
        let k = rng.gen_range(2..=3);
        let x = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-5.0..5.0));
        let model = kmeans(x.view(), k, trial, &KMeansOptions::default()).unwrap();
        let opt = brute_force_inertia(x.view(), k);
        assert!(model.inertia >= opt - 1e-9);
        if model.inertia <= opt + 1e-9 {
            hits += 1;
        }
    }
    assert!(
        hits >= 38,
        "k-means found the optimum in only {hits}/40 instances"
    );
}
