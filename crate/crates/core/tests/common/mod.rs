//! Brute-force reference implementations shared by the integration tests.
//! Each one follows the textbook definition directly and shares no code
//! with the library beyond `FeatureMatrix` accessors.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use refgeo::FeatureMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> FeatureMatrix {
    let data = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
    FeatureMatrix::new(data, n, dim).unwrap()
}

/// Gaussian rows with per-column scales, so covariances are not isotropic.
pub fn anisotropic_matrix(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> FeatureMatrix {
    let scales: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.2..3.0)).collect();
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for j in 0..dim {
            let e: f64 = rng.sample(StandardNormal);
            data.push(shift[j] + scales[j] * e);
        }
    }
    FeatureMatrix::new(data, n, dim).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance from each row to its k-th nearest other row, by sorting all
/// distances.
pub fn naive_kth(m: &FeatureMatrix, k: usize) -> Vec<f64> {
    (0..m.n())
        .map(|i| {
            let mut d: Vec<f64> = (0..m.n())
                .filter(|&j| j != i)
                .map(|j| euclid(m.row(i), m.row(j)))
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

pub fn naive_density(m: &FeatureMatrix, k: usize) -> f64 {
    let d = naive_kth(m, k);
    d.iter().map(|v| -v.ln()).sum::<f64>() / d.len() as f64
}

fn mean_cov(m: &FeatureMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.n();
    let x = DMatrix::from_fn(n, m.dim(), |i, j| m.row(i)[j]);
    let mean = DVector::from_fn(m.dim(), |j, _| x.column(j).sum() / n as f64);
    let mut cov = DMatrix::zeros(m.dim(), m.dim());
    for i in 0..n {
        let r = x.row(i).transpose() - &mean;
        cov += &r * r.transpose();
    }
    (mean, cov / (n as f64 - 1.0))
}

fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let e = a.clone().symmetric_eigen();
    let s = DVector::from_iterator(e.eigenvalues.len(), e.eigenvalues.iter().map(|v| v.max(0.0).sqrt()));
    &e.eigenvectors * DMatrix::from_diagonal(&s) * e.eigenvectors.transpose()
}

/// Fréchet distance via the symmetric square root
/// `tr sqrt(Sa^1/2 Sb Sa^1/2)`.
pub fn naive_frechet(a: &FeatureMatrix, b: &FeatureMatrix) -> f64 {
    let (ma, sa) = mean_cov(a);
    let (mb, sb) = mean_cov(b);
    let ra = sym_sqrt(&sa);
    let mid = &ra * &sb * &ra;
    let mid = (&mid + mid.transpose()) * 0.5;
    (ma - mb).norm_squared() + sa.trace() + sb.trace() - 2.0 * sym_sqrt(&mid).trace()
}

pub fn naive_kernel(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (dot / x.len() as f64 + 1.0).powi(3)
}

/// U-statistic MMD^2 over all rows of two equally sized sets, pairing row i
/// with row i.
pub fn naive_mmd2(x: &FeatureMatrix, y: &FeatureMatrix) -> f64 {
    let m = x.n();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                s += naive_kernel(x.row(i), x.row(j)) + naive_kernel(y.row(i), y.row(j))
                    - naive_kernel(x.row(i), y.row(j))
                    - naive_kernel(x.row(j), y.row(i));
            }
        }
    }
    s / (m * (m - 1)) as f64
}

/// Fraction of `queries` inside at least one k-NN ball of `support`.
pub fn naive_coverage(support: &FeatureMatrix, queries: &FeatureMatrix, k: usize) -> f64 {
    let radii = naive_kth(support, k);
    let covered = (0..queries.n())
        .filter(|&q| {
            (0..support.n()).any(|i| euclid(queries.row(q), support.row(i)) <= radii[i])
        })
        .count();
    covered as f64 / queries.n() as f64
}

/// `(precision, recall)` by the manifold definition.
pub fn naive_precision_recall(reference: &FeatureMatrix, generated: &FeatureMatrix, k: usize) -> (f64, f64) {
    (
        naive_coverage(reference, generated, k),
        naive_coverage(generated, reference, k),
    )
}

pub fn naive_erank(m: &FeatureMatrix) -> f64 {
    let (mean, _) = mean_cov(m);
    let x = DMatrix::from_fn(m.n(), m.dim(), |i, j| m.row(i)[j] - mean[j]);
    let s = x.singular_values();
    let total: f64 = s.iter().sum();
    let h: f64 = s
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let p = v / total;
            -p * p.ln()
        })
        .sum();
    h.exp()
}
