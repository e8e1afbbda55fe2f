//! Gaussian toy model with a closed-form Fréchet distance.
//!
//! Reference rows are `N(0, P)` with `P` the projection onto the first `r`
//! of `D` coordinates; generated rows add isotropic `N(0, lambda^2 I)` noise
//! to each reference row. The squared 2-Wasserstein distance between the two
//! populations is `D lambda^2 + 2 r (1 - sqrt(1 + lambda^2))`, and as `n`
//! grows the reference effective rank tends to `r`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_store::FeatureMatrix;
use crate::geometry::{effective_rank, mean_knn_log_density, DEFAULT_DENSITY_K};
use crate::metrics::{fit_gaussian, frechet_distance, toy_frechet_closed_form};

pub const DEFAULT_TOY_SAMPLES: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub dim: usize,
    pub rank: usize,
    pub lambda: f64,
    pub n: usize,
    pub seed: u64,
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.rank > self.dim {
            return Err(Error::Argument(format!(
                "rank {} must be in 1..={}",
                self.rank, self.dim
            )));
        }
        if self.n < 2 {
            return Err(Error::Argument(format!("need n >= 2 samples, got {}", self.n)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Argument(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// `n` rows of `N(0, P)`: the first `rank` coordinates standard normal, the
/// rest exactly zero.
pub fn sample_reference(c: &ToyConfig) -> Result<FeatureMatrix> {
    c.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut data = vec![0.0; c.n * c.dim];
    for row in data.chunks_exact_mut(c.dim) {
        for v in &mut row[..c.rank] {
            *v = rng.sample(StandardNormal);
        }
    }
    FeatureMatrix::new(data, c.n, c.dim)
}

/// Adds i.i.d. `N(0, lambda^2)` noise to every entry. `lambda = 0` returns an
/// exact copy.
pub fn sample_generated(reference: &FeatureMatrix, lambda: f64, seed: u64) -> Result<FeatureMatrix> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Argument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(reference.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = reference
        .as_slice()
        .iter()
        .map(|&v| {
            let eps: f64 = rng.sample(StandardNormal);
            v + lambda * eps
        })
        .collect();
    FeatureMatrix::new(data, reference.n(), reference.dim())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub config: ToyConfig,
    pub empirical_frechet: f64,
    pub analytic_w2: f64,
    /// `|empirical - analytic| / analytic`; zero when both vanish.
    pub rel_error: f64,
    pub erank: f64,
    /// `|erank - rank| / rank`.
    pub erank_rel_error: f64,
    pub density: f64,
    pub density_k: usize,
}

/// Noise for the generated set uses a stream derived from the config seed.
fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Samples both sets and measures them with the same code paths used for
/// real features.
pub fn verify_toy(c: &ToyConfig) -> Result<ToyReport> {
    verify_toy_with_k(c, DEFAULT_DENSITY_K)
}

pub fn verify_toy_with_k(c: &ToyConfig, k: usize) -> Result<ToyReport> {
    c.validate()?;
    if c.n < 1000 {
        return Err(Error::Argument(format!("toy verification needs n >= 1000, got {}", c.n)));
    }
    let reference = sample_reference(c)?;
    let generated = sample_generated(&reference, c.lambda, noise_seed(c.seed))?;
    let empirical = frechet_distance(&fit_gaussian(&reference)?, &fit_gaussian(&generated)?)?;
    let analytic = toy_frechet_closed_form(c.dim, c.rank, c.lambda)?;
    let rel_error = if analytic == 0.0 {
        if empirical == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (empirical - analytic).abs() / analytic
    };
    let erank = effective_rank(&reference)?;
    let density = mean_knn_log_density(&reference, k)?;
    Ok(ToyReport {
        config: *c,
        empirical_frechet: empirical,
        analytic_w2: analytic,
        rel_error,
        erank,
        erank_rel_error: (erank - c.rank as f64).abs() / c.rank as f64,
        density,
        density_k: k,
    })
}
