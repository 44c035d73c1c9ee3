//! Multi-disease prediction toolkit.
//!
//! Two tabular pipelines (diabetes, heart disease) built on tree ensembles and
//! two image pipelines (lung histopathology, brain MRI) built on a small
//! convolutional network engine. Everything a prediction needs, including the
//! feature scaler, travels inside a single versioned model file.

pub mod advice;
pub mod dataframe;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod neuralnet;
pub mod persistence;
pub mod pipeline;
pub mod predict;
pub mod vision;

pub use error::{Error, Result};
pub use model::{Classifier, Model, ModelKind, Prediction};
