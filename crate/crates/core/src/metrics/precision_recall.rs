//! kNN-manifold precision and recall.
//!
//! Each set defines a manifold: the union of balls around its points whose
//! radius is the distance to the point's k-th nearest neighbor within the
//! same set. Precision is the share of generated points inside the reference
//! manifold; recall is the share of reference points inside the generated one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_store::FeatureMatrix;
use crate::neighbors::{count_covered, kth_neighbors};

pub const DEFAULT_PR_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

fn radii2(m: &FeatureMatrix, k: usize) -> Vec<f64> {
    kth_neighbors(m, m, k, true)
        .into_iter()
        .map(|nb| nb.dist2)
        .collect()
}

pub fn precision_recall(
    reference: &FeatureMatrix,
    generated: &FeatureMatrix,
    k: usize,
) -> Result<PrecisionRecall> {
    super::check_dims(reference, generated)?;
    let limit = reference.n().min(generated.n());
    if k == 0 || k >= limit {
        return Err(Error::Argument(format!(
            "k = {k} must be in 1..={} (smaller set has {limit} rows)",
            limit.saturating_sub(1)
        )));
    }
    let ref_r2 = radii2(reference, k);
    let gen_r2 = radii2(generated, k);
    let precision = count_covered(generated, reference, &ref_r2) as f64 / generated.n() as f64;
    let recall = count_covered(reference, generated, &gen_r2) as f64 / reference.n() as f64;
    Ok(PrecisionRecall { precision, recall })
}
