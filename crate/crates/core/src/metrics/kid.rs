//! Unbiased kernel MMD^2 with the cubic polynomial kernel, averaged over
//! random subsets.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::MetricResult;
use crate::error::{Error, Result};
use crate::feature_store::FeatureMatrix;

pub const DEFAULT_SUBSET_SIZE: usize = 1000;
pub const DEFAULT_NUM_SUBSETS: usize = 100;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ta.iter().zip(tb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `(x . y / D + 1)^3`. Symmetric in its arguments bit for bit.
#[inline]
pub fn polynomial_kernel(x: &[f64], y: &[f64]) -> f64 {
    let t = dot(x, y) / x.len() as f64 + 1.0;
    t * t * t
}

/// Indices of one subset for a set of `n` rows. The draw depends only on
/// `(seed, subset, n)`, so two sets of equal size share their indices and
/// swapping the arguments of [`kid_mmd`] selects the same rows.
fn subset_indices(seed: u64, subset: usize, n: usize, size: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(subset as u64);
    index::sample(&mut rng, n, size).into_vec()
}

/// U-statistic MMD^2 between two equally sized samples:
/// `1/(m(m-1)) sum_{i != j} [k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i)]`.
fn mmd2_unbiased(x: &[&[f64]], y: &[&[f64]]) -> f64 {
    let m = x.len();
    let mut total = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in (i + 1)..m {
            row += (polynomial_kernel(x[i], x[j]) - polynomial_kernel(x[i], y[j]))
                + (polynomial_kernel(y[i], y[j]) - polynomial_kernel(x[j], y[i]));
        }
        total += row;
    }
    2.0 * total / (m as f64 * (m as f64 - 1.0))
}

/// KID-style estimate: the mean of unbiased MMD^2 over `num_subsets` random
/// subsets of `subset_size` rows drawn without replacement from each set.
pub fn kid_mmd(
    reference: &FeatureMatrix,
    generated: &FeatureMatrix,
    subset_size: usize,
    num_subsets: usize,
    seed: u64,
) -> Result<MetricResult> {
    super::check_dims(reference, generated)?;
    let limit = reference.n().min(generated.n());
    if subset_size < 2 || subset_size > limit {
        return Err(Error::Argument(format!(
            "subset size {subset_size} must be in 2..={limit}"
        )));
    }
    if num_subsets == 0 {
        return Err(Error::Argument("need at least one subset".into()));
    }

    let estimates: Vec<f64> = (0..num_subsets)
        .into_par_iter()
        .map(|s| {
            let xi = subset_indices(seed, s, reference.n(), subset_size);
            let yi = subset_indices(seed, s, generated.n(), subset_size);
            let x: Vec<&[f64]> = xi.iter().map(|&i| reference.row(i)).collect();
            let y: Vec<&[f64]> = yi.iter().map(|&i| generated.row(i)).collect();
            mmd2_unbiased(&x, &y)
        })
        .collect();
    let value = estimates.iter().sum::<f64>() / num_subsets as f64;
    let mean = value;
    let std_err = if num_subsets > 1 {
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
            / (num_subsets as f64 - 1.0);
        (var / num_subsets as f64).sqrt()
    } else {
        0.0
    };

    Ok(MetricResult::new("kid", value, reference.n(), generated.n())
        .with_param("subset_size", subset_size)
        .with_param("num_subsets", num_subsets)
        .with_param("seed", seed)
        .with_param("std_err", std_err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> FeatureMatrix {
        let rows: Vec<[f64; 1]> = points.iter().map(|&p| [p]).collect();
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn hand_evaluated_pair() {
        let r = kid_mmd(&line(&[-1.0, 1.0]), &line(&[0.0, 0.0]), 2, 1, 3).unwrap();
        assert_eq!(r.value, -1.0);
    }

    #[test]
    fn identical_sets_cancel() {
        let m = FeatureMatrix::from_rows(&[[0.1, 2.0], [0.7, -1.0], [1.5, 0.3], [-0.4, 0.9]])
            .unwrap();
        let r = kid_mmd(&m, &m, 4, 3, 42).unwrap();
        assert_eq!(r.value, 0.0);
        // shared indices make partial subsets cancel too
        assert_eq!(kid_mmd(&m, &m, 2, 5, 1).unwrap().value, 0.0);
    }

    #[test]
    fn argument_checks() {
        let a = line(&[0.0, 1.0, 2.0]);
        let b = line(&[0.0, 1.0]);
        assert!(matches!(kid_mmd(&a, &b, 3, 1, 0), Err(Error::Argument(_))));
        assert!(matches!(kid_mmd(&a, &b, 1, 1, 0), Err(Error::Argument(_))));
        let wide = FeatureMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(kid_mmd(&a, &wide, 2, 1, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn records_parameters() {
        let a = line(&[0.0, 1.0, 2.0, 4.0]);
        let b = line(&[0.5, 1.0, 2.5]);
        let r = kid_mmd(&a, &b, 3, 2, 9).unwrap();
        assert_eq!((r.n_ref, r.n_gen), (4, 3));
        assert_eq!(r.params["subset_size"], 3);
        assert_eq!(r.params["seed"], 9);
    }
}
