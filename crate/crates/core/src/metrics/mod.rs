//! Distances and support diagnostics between a reference and a generated
//! feature set.

mod frechet;
mod kid;
mod precision_recall;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_store::FeatureMatrix;

pub use frechet::{fit_gaussian, frechet_distance, toy_frechet_closed_form, GaussianStats};
pub use kid::{kid_mmd, polynomial_kernel, DEFAULT_NUM_SUBSETS, DEFAULT_SUBSET_SIZE};
pub use precision_recall::{precision_recall, PrecisionRecall, DEFAULT_PR_K};

/// One metric value plus the sizes and parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric_name: String,
    pub value: f64,
    pub n_ref: usize,
    pub n_gen: usize,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl MetricResult {
    pub(crate) fn new(name: &str, value: f64, n_ref: usize, n_gen: usize) -> Self {
        Self {
            metric_name: name.to_string(),
            value,
            n_ref,
            n_gen,
            params: BTreeMap::new(),
        }
    }

    pub(crate) fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// Fréchet distance between Gaussian fits of the two sets, as a report row.
pub fn frechet_metric(reference: &FeatureMatrix, generated: &FeatureMatrix) -> Result<MetricResult> {
    check_dims(reference, generated)?;
    let d = frechet_distance(&fit_gaussian(reference)?, &fit_gaussian(generated)?)?;
    Ok(MetricResult::new("frechet", d, reference.n(), generated.n()))
}

/// Precision and recall as two report rows, in that order.
pub fn precision_recall_metrics(
    reference: &FeatureMatrix,
    generated: &FeatureMatrix,
    k: usize,
) -> Result<[MetricResult; 2]> {
    let pr = precision_recall(reference, generated, k)?;
    let (nr, ng) = (reference.n(), generated.n());
    Ok([
        MetricResult::new("precision", pr.precision, nr, ng).with_param("k", k),
        MetricResult::new("recall", pr.recall, nr, ng).with_param("k", k),
    ])
}

pub(crate) fn check_dims(reference: &FeatureMatrix, generated: &FeatureMatrix) -> Result<()> {
    if reference.dim() != generated.dim() {
        return Err(Error::Argument(format!(
            "feature dimensions differ: reference {} vs generated {}",
            reference.dim(),
            generated.dim()
        )));
    }
    Ok(())
}
