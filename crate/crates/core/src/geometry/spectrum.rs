use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::feature_store::FeatureMatrix;

/// Singular values of the column-centered matrix, descending.
pub fn centered_singular_values(m: &FeatureMatrix) -> Vec<f64> {
    let mean = m.column_means();
    let (n, dim) = (m.n(), m.dim());
    let centered = DMatrix::from_fn(n, dim, |i, j| m.row(i)[j] - mean[j]);
    let mut sv: Vec<f64> = centered.singular_values().iter().copied().collect();
    sv.sort_unstable_by(|a, b| b.total_cmp(a));
    sv
}

/// `exp(-sum p ln p)` over `p = sigma / |sigma|_1`, with `0 ln 0 = 0`.
///
/// Values at or below `max(sigma) * len * eps` are treated as exact zeros.
pub fn effective_rank_of_spectrum(sigma: &[f64]) -> Result<f64> {
    let max = sigma.iter().copied().fold(0.0f64, f64::max);
    if !(max > 0.0) {
        return Err(Error::Degenerate(
            "all singular values are zero (constant feature matrix)".into(),
        ));
    }
    let cutoff = max * sigma.len().max(1) as f64 * f64::EPSILON;
    let kept: Vec<f64> = sigma.iter().copied().filter(|&s| s > cutoff).collect();
    let total: f64 = kept.iter().sum();
    let entropy: f64 = kept
        .iter()
        .map(|s| {
            let p = s / total;
            -p * p.ln()
        })
        .sum();
    // exp(H) cannot exceed the number of nonzero terms; clip rounding overshoot
    Ok(entropy.exp().clamp(1.0, kept.len() as f64))
}

/// Effective rank of the column-centered feature matrix.
pub fn effective_rank(m: &FeatureMatrix) -> Result<f64> {
    if m.n() < 2 {
        return Err(Error::Argument("effective rank needs at least 2 rows".into()));
    }
    effective_rank_of_spectrum(&centered_singular_values(m))
}
