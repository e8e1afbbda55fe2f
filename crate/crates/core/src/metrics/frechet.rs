use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};
use crate::feature_store::FeatureMatrix;

/// Mean and unbiased covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n: usize,
}

impl GaussianStats {
    /// Builds stats from explicit moments; `cov` is symmetrized.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n: usize) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Argument(format!(
                "covariance is {}x{}, mean has length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { mean, cov, n })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Column means and covariance with divisor `n - 1`.
pub fn fit_gaussian(m: &FeatureMatrix) -> Result<GaussianStats> {
    let n = m.n();
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 rows to fit a Gaussian, got {n}")));
    }
    let mean = m.column_means();
    let centered = DMatrix::from_fn(n, m.dim(), |i, j| m.row(i)[j] - mean[j]);
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    GaussianStats::new(DVector::from_vec(mean), cov, n)
}

/// Squared 2-Wasserstein distance between two Gaussians.
///
/// The trace of the cross term uses the eigenvalues of `cov_a * cov_b`,
/// which equal those of `(cov_a^1/2 cov_b cov_a^1/2)`, so no matrix square
/// root is formed.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.mean == b.mean && a.cov == b.cov {
        return Ok(0.0);
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let product = &a.cov * &b.cov;
    let schur = Schur::try_new(product, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let eig = schur.complex_eigenvalues();
    let radius = eig.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let mut sqrt_trace = 0.0;
    for z in eig.iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Numerical("non-finite eigenvalue in covariance product".into()));
        }
        if z.im.abs() > 1e-6 * radius {
            return Err(Error::Numerical(format!(
                "covariance product has complex eigenvalue {} + {}i",
                z.re, z.im
            )));
        }
        sqrt_trace += z.re.max(0.0).sqrt();
    }
    let value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * sqrt_trace;
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite Frechet distance".into()));
    }
    Ok(value.max(0.0))
}

/// `D lambda^2 + 2 r (1 - sqrt(1 + lambda^2))` for `N(0, P)` against
/// `N(0, P + lambda^2 I)` with `P` a rank-`r` coordinate projection.
pub fn toy_frechet_closed_form(dim: usize, rank: usize, lambda: f64) -> Result<f64> {
    if rank == 0 || rank > dim {
        return Err(Error::Argument(format!("rank {rank} must be in 1..={dim}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Argument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let l2 = lambda * lambda;
    // 1 - sqrt(1 + l2) rewritten without cancellation
    let shrink = -l2 / (1.0 + (1.0 + l2).sqrt());
    Ok(dim as f64 * l2 + 2.0 * rank as f64 * shrink)
}
