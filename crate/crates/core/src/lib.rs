//! Reference-dataset geometry for generative-model evaluation.
//!
//! The crate measures how a reference feature distribution is shaped (mean
//! kNN log-density, effective rank), computes the distributional metrics that
//! compare a generated set against it (Fréchet distance, kernel MMD,
//! kNN-manifold precision/recall), and runs the hierarchical-linear-model
//! tests that relate metric slopes to those descriptors.

pub mod error;
pub mod feature_store;
pub mod geometry;
pub mod metrics;
pub mod mixed_models;
mod neighbors;
pub mod report;
pub mod toy_model;

pub use error::{Error, Result};
pub use feature_store::FeatureMatrix;
