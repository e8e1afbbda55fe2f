//! Dataset-geometry descriptors of a reference feature set.
//!
//! * mean kNN log-density: the average of `-ln d_k(x_i)` over all rows, where
//!   `d_k` is the Euclidean distance to the k-th nearest other row;
//! * effective rank: `exp(H(p))` with `p = sigma / |sigma|_1` the normalized
//!   singular values of the column-centered feature matrix.
//!
//! Higher density means a more concentrated set; higher effective rank means
//! the set spreads over more linear directions.

mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_store::FeatureMatrix;
use crate::neighbors::kth_neighbors;

pub use spectrum::{centered_singular_values, effective_rank, effective_rank_of_spectrum};

pub const DEFAULT_DENSITY_K: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryDescriptors {
    pub mean_knn_log_density: f64,
    pub effective_rank: f64,
    pub k: usize,
    pub n: usize,
}

/// Both descriptors on the same matrix.
pub fn describe(m: &FeatureMatrix, k: usize) -> Result<GeometryDescriptors> {
    Ok(GeometryDescriptors {
        mean_knn_log_density: mean_knn_log_density(m, k)?,
        effective_rank: effective_rank(m)?,
        k,
        n: m.n(),
    })
}

fn check_k(m: &FeatureMatrix, k: usize) -> Result<()> {
    if k == 0 || k >= m.n() {
        return Err(Error::Argument(format!(
            "k = {k} must be in 1..={} for {} rows",
            m.n().saturating_sub(1),
            m.n()
        )));
    }
    Ok(())
}

/// Distance from each row to its k-th nearest other row.
pub fn knn_distances(m: &FeatureMatrix, k: usize) -> Result<Vec<f64>> {
    check_k(m, k)?;
    Ok(kth_neighbors(m, m, k, true)
        .into_iter()
        .map(|nb| nb.dist2.sqrt())
        .collect())
}

/// `(1/n) * sum_i -ln d_k(x_i)`.
pub fn mean_knn_log_density(m: &FeatureMatrix, k: usize) -> Result<f64> {
    check_k(m, k)?;
    let neighbors = kth_neighbors(m, m, k, true);
    if let Some((i, nb)) = neighbors.iter().enumerate().find(|(_, nb)| nb.dist2 == 0.0) {
        return Err(Error::Degenerate(format!(
            "row {i} coincides with row {} (zero distance to its {k}-th neighbor)",
            nb.index
        )));
    }
    let total: f64 = neighbors.iter().map(|nb| -0.5 * nb.dist2.ln()).sum();
    Ok(total / m.n() as f64)
}
