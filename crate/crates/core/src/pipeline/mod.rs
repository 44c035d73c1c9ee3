//! End-to-end training and evaluation for the four diseases:
//! ingest → preprocess → split → fit → evaluate → artifact.

mod config;
mod image;
mod tabular;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{ImageArch, ImageSettings, LogisticSettings, Scale, TabularSettings, TrainConfig, TrainOverrides};
pub use image::{evaluate_images, load_training_set, train_image_dataset, train_images};
pub use tabular::{evaluate_csv, evaluate_dataset, prepare_tabular, train_tabular, train_tabular_csv};

use crate::dataframe::{ColumnSchema, MissingMarker};
use crate::error::{Error, Result};
use crate::metrics::{render_report, ClassificationReport, ConfusionMatrix};
use crate::model::ModelKind;
use crate::neuralnet::History;
use crate::persistence::ModelArtifact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disease {
    Diabetes,
    Heart,
    Lung,
    Brain,
}

pub const PIMA_COLUMNS: [&str; 9] = [
    "Pregnancies",
    "Glucose",
    "BloodPressure",
    "SkinThickness",
    "Insulin",
    "BMI",
    "DiabetesPedigreeFunction",
    "Age",
    "Outcome",
];

pub const HEART_COLUMNS: [&str; 14] = [
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak", "slope", "ca", "thal",
    "target",
];

impl Disease {
    pub const ALL: [Disease; 4] = [Disease::Diabetes, Disease::Heart, Disease::Lung, Disease::Brain];

    pub fn as_str(self) -> &'static str {
        match self {
            Disease::Diabetes => "diabetes",
            Disease::Heart => "heart",
            Disease::Lung => "lung",
            Disease::Brain => "brain",
        }
    }

    pub fn is_image(self) -> bool {
        matches!(self, Disease::Lung | Disease::Brain)
    }

    /// Column layout of the public CSV. Zero means "not measured" for
    /// Glucose, Insulin and BMI in the Pima data.
    pub fn csv_schema(self) -> Option<Vec<ColumnSchema>> {
        let zero = || MissingMarker::Number(0.0);
        match self {
            Disease::Diabetes => Some(
                PIMA_COLUMNS
                    .iter()
                    .map(|&c| match c {
                        "Outcome" => ColumnSchema::target(c),
                        "Glucose" | "Insulin" | "BMI" => ColumnSchema::numeric(c).with_missing(zero()),
                        _ => ColumnSchema::numeric(c),
                    })
                    .collect(),
            ),
            Disease::Heart => Some(
                HEART_COLUMNS
                    .iter()
                    .map(|&c| if c == "target" { ColumnSchema::target(c) } else { ColumnSchema::numeric(c) })
                    .collect(),
            ),
            Disease::Lung | Disease::Brain => None,
        }
    }

    pub fn target_column(self) -> Option<&'static str> {
        match self {
            Disease::Diabetes => Some("Outcome"),
            Disease::Heart => Some("target"),
            Disease::Lung | Disease::Brain => None,
        }
    }

    /// Features kept after selection, in table order.
    pub fn selected_features(self) -> &'static [&'static str] {
        match self {
            Disease::Diabetes => &["Pregnancies", "Glucose", "Insulin", "BMI", "Age"],
            Disease::Heart => &[
                "age", "sex", "cp", "trestbps", "restecg", "thalach", "exang", "oldpeak", "slope", "ca", "thal",
            ],
            Disease::Lung | Disease::Brain => &[],
        }
    }

    /// Published test accuracy, printed for comparison only.
    pub fn reference_accuracy(self) -> f64 {
        match self {
            Disease::Diabetes => 0.910,
            Disease::Heart => 0.9853,
            Disease::Lung | Disease::Brain => 0.890,
        }
    }

    /// Sub-folders that are not classes (the brain set's unlabeled `pred`).
    pub fn excluded_folders(self) -> &'static [&'static str] {
        match self {
            Disease::Brain => &["pred"],
            _ => &[],
        }
    }
}

impl fmt::Display for Disease {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Disease {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Disease::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown disease `{s}`; expected one of diabetes, heart, lung, brain")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub kind: ModelKind,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub disease: Disease,
    pub artifact: ModelArtifact,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
    pub n_train: usize,
    pub n_test: usize,
    /// Test accuracy of the other classical models on the same split.
    pub comparisons: Vec<Comparison>,
    /// Per-epoch training history (image models only).
    pub history: History,
}

impl TrainOutcome {
    pub fn accuracy(&self) -> f64 {
        self.report.accuracy
    }

    /// Report text as printed by the `train` command.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} / {}: {} train rows, {} test rows\n\n",
            self.disease,
            self.artifact.kind(),
            self.n_train,
            self.n_test
        );
        out.push_str(&render_report(&self.report));
        out.push_str(&format!(
            "\ntest accuracy {:.4} (published figure {:.4}, not expected to be reproduced exactly)\n",
            self.report.accuracy,
            self.disease.reference_accuracy()
        ));
        if !self.comparisons.is_empty() {
            out.push_str("\ncomparison models on the same split:\n");
            for c in &self.comparisons {
                out.push_str(&format!("  {:<10}{:.4}\n", c.kind.as_str(), c.accuracy));
            }
        }
        out
    }
}

/// Trains from a CSV file (tabular diseases) or an image folder (image diseases).
pub fn train(disease: Disease, data: &Path, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if disease.is_image() {
        train_images(disease, data, cfg)
    } else {
        train_tabular_csv(disease, data, cfg)
    }
}

/// Scores a saved model on a labelled CSV file or image folder.
pub fn evaluate(artifact: &ModelArtifact, data: &Path) -> Result<(ConfusionMatrix, ClassificationReport)> {
    let disease: Disease = artifact.disease.parse()?;
    if disease.is_image() {
        evaluate_images(artifact, data)
    } else {
        evaluate_csv(artifact, data)
    }
}
