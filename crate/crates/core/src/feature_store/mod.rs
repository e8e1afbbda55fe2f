//! Feature matrices and their on-disk representation.
//!
//! A [`FeatureMatrix`] is the common input of every descriptor and metric.
//! Files are npy v1.0 (`<f4` or `<f8`, C order, 2-D); 32-bit payloads are
//! widened to `f64` on load. Manifests pin the expected shape and SHA-256 of
//! a feature file.

mod manifest;
mod matrix;
mod npy;

pub use manifest::{load_manifest, sha256_file, DatasetManifest};
pub use matrix::{subsample, FeatureMatrix};
pub use npy::{load_features, read_npy, save_features, write_npy};
