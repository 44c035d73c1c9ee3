//! Tabular ingestion and preprocessing.
//!
//! The chain used by the tabular pipelines is
//! `load_csv -> impute_missing -> select_features -> train_test_split -> scale_features`,
//! with the scaler fitted on the training rows only and stored with the model.

mod correlation;
mod encode;
mod impute;
mod load;
mod matrix;
mod scale;
mod select;
mod split;

pub use correlation::correlation_matrix;
pub use encode::{encode_categorical, Encoding};
pub use impute::{impute_missing, ImputePolicy};
pub use load::{load_csv, read_csv, read_schema_file, parse_schema};
pub use matrix::Matrix;
pub use scale::{scale_features, ScalerParams};
pub use select::select_features;
pub use split::{split_indices, train_test_split, SplitPair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Target,
}

/// Sentinel that marks a missing cell in the raw file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MissingMarker {
    Number(f64),
    Text(String),
}

impl MissingMarker {
    fn matches(&self, raw: &str) -> bool {
        match self {
            MissingMarker::Text(t) => raw == t,
            MissingMarker::Number(v) => raw.parse::<f64>().map(|x| x == *v).unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, rename = "missing", skip_serializing_if = "Option::is_none")]
    pub missing_marker: Option<MissingMarker>,
}

impl ColumnSchema {
    pub fn numeric(name: &str) -> Self {
        ColumnSchema {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            missing_marker: None,
        }
    }

    pub fn categorical(name: &str) -> Self {
        ColumnSchema {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
            missing_marker: None,
        }
    }

    pub fn target(name: &str) -> Self {
        ColumnSchema {
            name: name.to_string(),
            kind: ColumnKind::Target,
            missing_marker: None,
        }
    }

    pub fn with_missing(mut self, marker: MissingMarker) -> Self {
        self.missing_marker = Some(marker);
        self
    }
}

/// Checks the schema invariants: unique names and exactly one target column.
pub fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for col in schema {
        if !seen.insert(col.name.as_str()) {
            return Err(Error::Schema(format!("duplicate column name `{}`", col.name)));
        }
    }
    let targets = schema.iter().filter(|c| c.kind == ColumnKind::Target).count();
    if targets != 1 {
        return Err(Error::Schema(format!(
            "expected exactly one target column, found {targets}"
        )));
    }
    Ok(())
}

/// One numeric column of the encoded feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    /// Raw column this feature was derived from (differs from `name` for one-hot columns).
    pub source: String,
    /// Numeric value that counts as missing. NaN cells are always missing.
    pub missing_marker: Option<f64>,
}

impl Feature {
    pub fn plain(name: &str) -> Self {
        Feature {
            name: name.to_string(),
            source: name.to_string(),
            missing_marker: None,
        }
    }

    pub fn is_missing(&self, value: f64) -> bool {
        value.is_nan() || self.missing_marker == Some(value)
    }
}

/// Encoded feature matrix plus integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    features: Vec<Feature>,
    rows: Matrix,
    target: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        schema: Vec<ColumnSchema>,
        features: Vec<Feature>,
        rows: Matrix,
        target: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if rows.n_rows() != target.len() {
            return Err(Error::shape(
                format!("{} targets", rows.n_rows()),
                format!("{} targets", target.len()),
            ));
        }
        if rows.n_cols() != features.len() {
            return Err(Error::shape(
                format!("{} feature columns", features.len()),
                format!("{} matrix columns", rows.n_cols()),
            ));
        }
        if let Some(&bad) = target.iter().find(|&&t| t >= class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside [0, {})",
                class_names.len()
            )));
        }
        Ok(Dataset {
            schema,
            features,
            rows,
            target,
            class_names,
        })
    }

    /// Builds a dataset of plain numeric features, mostly for tests and synthetic data.
    pub fn from_rows(
        feature_names: &[&str],
        rows: Matrix,
        target: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let schema = feature_names
            .iter()
            .map(|n| ColumnSchema::numeric(n))
            .chain(std::iter::once(ColumnSchema::target("target")))
            .collect();
        let features = feature_names.iter().map(|n| Feature::plain(n)).collect();
        Dataset::new(schema, features, rows, target, class_names)
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_rows(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            features: self.features.clone(),
            rows: self.rows.select_rows(indices),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub(crate) fn with_rows(&self, rows: Matrix) -> Dataset {
        debug_assert_eq!(rows.n_cols(), self.features.len());
        Dataset {
            rows,
            ..self.clone()
        }
    }
}
