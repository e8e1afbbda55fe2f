//! Exact k-nearest-neighbor search by blocked brute force.
//!
//! Tiles of squared distances are first bounded through the Gram identity
//! `|q - p|^2 = |q|^2 + |p|^2 - 2 q.p` (one matrix product per tile). The
//! product is only a filter: any pair whose bound could beat the current
//! candidate, allowing for the worst-case rounding of that identity, is
//! re-evaluated from coordinate differences, and only exact values are kept.
//! Results are therefore identical to a plain all-pairs scan.
//!
//! Candidates are ordered by `(squared distance, row index)`, so the k-th
//! neighbor is unique even when distances tie. Query blocks are processed
//! independently and each scans the point set in a fixed order, so results
//! do not depend on the number of worker threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::feature_store::FeatureMatrix;

const QUERY_BLOCK: usize = 128;
const POINT_BLOCK: usize = 1024;


#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Neighbor {
    pub dist2: f64,
    pub index: usize,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Squared Euclidean distance with a fixed four-lane summation order.
#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ta.iter().zip(tb) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn squared_norms(m: &FeatureMatrix) -> Vec<f64> {
    m.rows().map(|r| r.iter().map(|v| v * v).sum()).collect()
}

/// Relative rounding allowance of the Gram-identity bound in dimension `dim`.
fn gram_slack(dim: usize) -> f64 {
    (4 * dim + 8) as f64 * f64::EPSILON
}

/// `-2 Q P^T` for query rows `q0..q0+nq` and point rows `p0..p0+np`,
/// row-major into `out`.
fn gram_tile(
    queries: &FeatureMatrix,
    q0: usize,
    nq: usize,
    points: &FeatureMatrix,
    p0: usize,
    np: usize,
    out: &mut [f64],
) {
    let dim = queries.dim();
    let a = &queries.as_slice()[q0 * dim..];
    let b = &points.as_slice()[p0 * dim..];
    // SAFETY: `a` holds at least nq rows and `b` at least np rows of `dim`
    // values, and `out` has room for nq * np entries.
    unsafe {
        matrixmultiply::dgemm(
            nq,
            dim,
            np,
            -2.0,
            a.as_ptr(),
            dim as isize,
            1,
            b.as_ptr(),
            1,
            dim as isize,
            0.0,
            out.as_mut_ptr(),
            np as isize,
            1,
        );
    }
}

/// Turns one tile row of `-2 q.p_j` into lower bounds on `|q - p_j|^2`: the
/// Gram-identity value shrunk by its worst-case rounding error. Returns the
/// smallest bound in the row.
#[inline]
fn lower_bounds(row: &mut [f64], qn: f64, pn: &[f64], shrink: f64) -> f64 {
    let mut lanes = [f64::INFINITY; 4];
    let mut rows = row.chunks_exact_mut(4);
    let mut norms = pn.chunks_exact(4);
    for (r, p) in (&mut rows).zip(&mut norms) {
        for l in 0..4 {
            let v = r[l] + shrink * (qn + p[l]);
            r[l] = v;
            lanes[l] = if v < lanes[l] { v } else { lanes[l] };
        }
    }
    let mut min = lanes[0].min(lanes[1]).min(lanes[2].min(lanes[3]));
    for (r, p) in rows.into_remainder().iter_mut().zip(norms.remainder()) {
        *r += shrink * (qn + p);
        min = min.min(*r);
    }
    min
}

/// Bounded max-heap holding the `k` smallest candidates seen so far.
struct KBest {
    k: usize,
    heap: BinaryHeap<Neighbor>,
    // Worst retained candidate once the heap is full.
    bound: Neighbor,
}

impl KBest {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
            bound: Neighbor {
                dist2: f64::INFINITY,
                index: usize::MAX,
            },
        }
    }

    #[inline]
    fn offer(&mut self, cand: Neighbor) {
        if cand >= self.bound {
            return;
        }
        self.heap.push(cand);
        if self.heap.len() > self.k {
            self.heap.pop();
        }
        if self.heap.len() == self.k {
            self.bound = *self.heap.peek().expect("non-empty");
        }
    }
}

/// For every row of `queries`, the k-th nearest row of `points`.
///
/// When `exclude_self` is set, `queries` and `points` are the same set and
/// row `i` never counts as its own neighbor. Requires `k` no larger than the
/// number of eligible candidates.
pub(crate) fn kth_neighbors(
    queries: &FeatureMatrix,
    points: &FeatureMatrix,
    k: usize,
    exclude_self: bool,
) -> Vec<Neighbor> {
    assert!(k >= 1);
    assert_eq!(queries.dim(), points.dim());
    let qnorm = squared_norms(queries);
    let pnorm = if exclude_self {
        qnorm.clone()
    } else {
        squared_norms(points)
    };
    let shrink = 1.0 - gram_slack(queries.dim());
    let mut out = vec![
        Neighbor {
            dist2: 0.0,
            index: 0
        };
        queries.n()
    ];
    out.par_chunks_mut(QUERY_BLOCK)
        .enumerate()
        .for_each(|(block, slot)| {
            let q0 = block * QUERY_BLOCK;
            let nq = slot.len();
            let mut best: Vec<KBest> = (0..nq).map(|_| KBest::new(k)).collect();
            let mut tile = vec![0.0; nq * POINT_BLOCK];
            for p0 in (0..points.n()).step_by(POINT_BLOCK) {
                let np = POINT_BLOCK.min(points.n() - p0);
                gram_tile(queries, q0, nq, points, p0, np, &mut tile);
                let pn = &pnorm[p0..p0 + np];
                for (off, kb) in best.iter_mut().enumerate() {
                    let i = q0 + off;
                    let row = &mut tile[off * np..(off + 1) * np];
                    if lower_bounds(row, qnorm[i], pn, shrink) > kb.bound.dist2 {
                        continue;
                    }
                    for (t, &bound) in row.iter().enumerate() {
                        let j = p0 + t;
                        if bound > kb.bound.dist2 || (exclude_self && i == j) {
                            continue;
                        }
                        let d2 = dist2(queries.row(i), points.row(j));
                        if d2 <= kb.bound.dist2 {
                            kb.offer(Neighbor { dist2: d2, index: j });
                        }
                    }
                }
            }
            for (s, kb) in slot.iter_mut().zip(best) {
                assert_eq!(kb.heap.len(), k, "not enough candidates for k");
                *s = kb.bound;
            }
        });
    out
}

/// Number of `queries` rows lying inside at least one ball centered at a row
/// of `centers` with squared radius `radii2[i]` (boundary inclusive).
pub(crate) fn count_covered(queries: &FeatureMatrix, centers: &FeatureMatrix, radii2: &[f64]) -> usize {
    assert_eq!(centers.n(), radii2.len());
    assert_eq!(queries.dim(), centers.dim());
    let qnorm = squared_norms(queries);
    let cnorm = squared_norms(centers);
    let shrink = 1.0 - gram_slack(queries.dim());
    let blocks: Vec<usize> = (0..queries.n()).step_by(QUERY_BLOCK).collect();
    blocks
        .into_par_iter()
        .map(|q0| {
            let nq = QUERY_BLOCK.min(queries.n() - q0);
            let mut covered = vec![false; nq];
            let mut tile = vec![0.0; nq * POINT_BLOCK];
            for p0 in (0..centers.n()).step_by(POINT_BLOCK) {
                if covered.iter().all(|&c| c) {
                    break;
                }
                let np = POINT_BLOCK.min(centers.n() - p0);
                gram_tile(queries, q0, nq, centers, p0, np, &mut tile);
                let cn = &cnorm[p0..p0 + np];
                let r2 = &radii2[p0..p0 + np];
                for (off, done) in covered.iter_mut().enumerate().filter(|(_, d)| !**d) {
                    let i = q0 + off;
                    let row = &mut tile[off * np..(off + 1) * np];
                    lower_bounds(row, qnorm[i], cn, shrink);
                    *done = row.iter().zip(r2).enumerate().any(|(t, (&lb, &r))| {
                        lb <= r && dist2(queries.row(i), centers.row(p0 + t)) <= r
                    });
                }
            }
            covered.iter().filter(|&&c| c).count()
        })
        .sum()
}
