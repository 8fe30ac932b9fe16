//! Mean removal, unit-variance scaling and PCA projection.
//!
//! Components come from the eigendecomposition of the covariance of the
//! standardized data. Each component's sign is fixed so that its
//! largest-magnitude entry is positive, which makes fitted preprocessors
//! reproducible bit for bit.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TARGET_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub mean: Array1<f64>,
    /// Population standard deviation per column; 1 for constant columns.
    pub scale: Array1<f64>,
    /// `target_dim × dim`, orthonormal rows.
    pub components: Array2<f64>,
    pub explained_variance: Array1<f64>,
    pub explained_variance_ratio: Array1<f64>,
}

impl Preprocessor {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn target_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn standardize(&self, vectors: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if vectors.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: vectors.ncols(),
            });
        }
        Ok((&vectors - &self.mean) / &self.scale)
    }

    pub fn transform(&self, vectors: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.standardize(vectors)?.dot(&self.components.t()))
    }

    /// Maps projected rows back to the input space.
    pub fn inverse_transform(&self, projected: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if projected.ncols() != self.target_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target_dim(),
                found: projected.ncols(),
            });
        }
        Ok(projected.dot(&self.components) * &self.scale + &self.mean)
    }
}

fn check_finite(vectors: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in vectors.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

pub fn fit_preprocessor(vectors: ArrayView2<'_, f64>, target_dim: usize) -> Result<Preprocessor> {
    let (n, dim) = vectors.dim();
    if target_dim == 0 || target_dim > dim {
        return Err(Error::DegenerateInput(format!(
            "target dimension {target_dim} outside [1, {dim}]"
        )));
    }
    if n < target_dim || n == 0 {
        return Err(Error::DegenerateInput(format!(
            "{n} rows cannot support {target_dim} components"
        )));
    }
    check_finite(vectors)?;

    let mean = vectors.mean_axis(Axis(0)).expect("non-empty");
    let centered = &vectors - &mean;
    let var = centered
        .mapv(|v| v * v)
        .mean_axis(Axis(0))
        .expect("non-empty");
    let scale = Array1::from_iter(var.iter().zip(mean.iter()).map(|(&v, &m)| {
        let floor = f64::EPSILON * m.abs().max(1.0);
        if v.sqrt() <= floor {
            1.0
        } else {
            v.sqrt()
        }
    }));
    let z = &centered / &scale;
    let cov = z.t().dot(&z) / n as f64;

    let eigen = SymmetricEigen::new(DMatrix::from_fn(dim, dim, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let total: f64 = cov.diag().sum();
    let mut components = Array2::zeros((target_dim, dim));
    let mut explained = Array1::zeros(target_dim);
    for (r, &idx) in order.iter().take(target_dim).enumerate() {
        let col = eigen.eigenvectors.column(idx);
        let mut pivot = 0;
        for j in 1..dim {
            if col[j].abs() > col[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        let norm = col.norm();
        for j in 0..dim {
            components[[r, j]] = sign * col[j] / norm;
        }
        explained[r] = eigen.eigenvalues[idx].max(0.0);
    }
    let ratio = if total > 0.0 {
        explained.mapv(|v| (v / total).clamp(0.0, 1.0))
    } else {
        Array1::zeros(target_dim)
    };

    Ok(Preprocessor {
        mean,
        scale,
        components,
        explained_variance: explained,
        explained_variance_ratio: ratio,
    })
}

pub fn transform(pre: &Preprocessor, vectors: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    pre.transform(vectors)
}
