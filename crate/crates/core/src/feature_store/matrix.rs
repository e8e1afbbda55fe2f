use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major `n x dim` matrix of finite feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(data: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Data(format!("empty feature matrix ({n} x {dim})")));
        }
        if data.len() != n * dim {
            return Err(Error::Argument(format!(
                "data length {} does not match shape {n} x {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { data, n, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(n * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Argument(format!(
                    "ragged rows: row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(data, n, dim)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.data.iter().map(|v| v * c).collect(), self.n, self.dim)
    }

    /// Adds `offset` to every row.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::Argument(format!(
                "offset has length {}, expected {}",
                offset.len(),
                self.dim
            )));
        }
        let data = self
            .rows()
            .flat_map(|row| row.iter().zip(offset).map(|(v, o)| v + o))
            .collect();
        Self::new(data, self.n, self.dim)
    }

    /// Copies the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            n: indices.len(),
            dim: self.dim,
        }
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Draws `k` distinct rows uniformly without replacement.
///
/// The selected rows keep their original relative order. The same
/// `(m, k, seed)` always yields the same rows.
pub fn subsample(m: &FeatureMatrix, k: usize, seed: u64) -> Result<FeatureMatrix> {
    if k == 0 || k > m.n() {
        return Err(Error::Argument(format!(
            "subsample size {k} must be in 1..={}",
            m.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, m.n(), k).into_vec();
    picked.sort_unstable();
    Ok(m.select_rows(&picked))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dim: usize) -> FeatureMatrix {
        let data = (0..n * dim).map(|v| v as f64).collect();
        FeatureMatrix::new(data, n, dim).unwrap()
    }

    #[test]
    fn rejects_non_finite_with_position() {
        let err = FeatureMatrix::from_rows(&[[0.0, 1.0], [2.0, f64::INFINITY]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 1 }));
    }

    #[test]
    fn rejects_empty() {
        assert!(FeatureMatrix::new(vec![], 0, 3).is_err());
    }

    #[test]
    fn subsample_full_keeps_row_set() {
        let m = grid(5, 2);
        let s = subsample(&m, 5, 11).unwrap();
        assert_eq!(s, m);
    }

    #[test]
    fn subsample_is_deterministic() {
        let m = grid(100, 3);
        let a = subsample(&m, 10, 7).unwrap();
        let b = subsample(&m, 10, 7).unwrap();
        assert_eq!(a, b);
        let c = subsample(&m, 10, 8).unwrap();
        assert_ne!(a, c);
        let mut firsts: Vec<_> = a.rows().map(|r| r[0] as usize).collect();
        firsts.dedup();
        assert_eq!(firsts.len(), 10);
    }

    #[test]
    fn subsample_too_many() {
        let m = grid(3, 1);
        assert!(matches!(subsample(&m, 4, 0), Err(Error::Argument(_))));
    }
}
