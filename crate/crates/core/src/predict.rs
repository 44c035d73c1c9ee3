//! The prediction path shared by the service and the command line.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::advice::AdviceTable;
use crate::error::{Error, Result};
use crate::model::{Classifier, Model, ModelKind};
use crate::neuralnet::Tensor;
use crate::persistence::ModelArtifact;
use crate::vision::{decode_image, resize_bilinear};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictResponse {
    pub disease: String,
    pub label: String,
    /// Probability of the predicted class.
    pub probability: f64,
    pub advice: String,
    pub model_kind: ModelKind,
}

impl PredictResponse {
    /// One line for terminal output.
    pub fn render_line(&self) -> String {
        format!(
            "{}: {} (probability {:.3}, {}) {}",
            self.disease, self.label, self.probability, self.model_kind, self.advice
        )
    }
}

/// Public description of a loaded model, enough to build an input form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInfo {
    pub disease: String,
    pub model_kind: ModelKind,
    pub input: &'static str,
    pub features: Vec<String>,
    pub class_names: Vec<String>,
    /// `[height, width]` for image models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_size: Option<[usize; 2]>,
}

impl ModelInfo {
    pub fn of(artifact: &ModelArtifact) -> Self {
        let input_size = image_input_size(artifact);
        ModelInfo {
            disease: artifact.disease.clone(),
            model_kind: artifact.kind(),
            input: if input_size.is_some() { "image" } else { "features" },
            features: artifact.feature_names.clone(),
            class_names: artifact.class_names.clone(),
            input_size,
        }
    }
}

fn image_input_size(artifact: &ModelArtifact) -> Option<[usize; 2]> {
    match &artifact.model {
        Model::NeuralNet(net) if net.input_shape().len() == 3 => Some([net.input_shape()[0], net.input_shape()[1]]),
        _ => None,
    }
}

pub fn is_image_model(artifact: &ModelArtifact) -> bool {
    image_input_size(artifact).is_some()
}

fn respond(artifact: &ModelArtifact, x: &[f64], advice: &AdviceTable) -> Result<PredictResponse> {
    let p = artifact.model.predict(x)?;
    let label = artifact.class_names[p.class].clone();
    Ok(PredictResponse {
        disease: artifact.disease.clone(),
        advice: advice.advice_for(&artifact.disease, &label),
        label,
        probability: p.probabilities[p.class].clamp(0.0, 1.0),
        model_kind: artifact.kind(),
    })
}

/// Checks a JSON object against the model's feature names and returns the
/// values in model column order. Every offending key is reported at once.
pub fn feature_vector(artifact: &ModelArtifact, body: &Value) -> Result<Vec<f64>> {
    let Value::Object(obj) = body else {
        return Err(Error::Validation {
            message: "request body must be a JSON object of named features".into(),
            fields: Vec::new(),
        });
    };
    ordered_features(&artifact.feature_names, obj)
}

fn ordered_features(names: &[String], obj: &Map<String, Value>) -> Result<Vec<f64>> {
    let known: BTreeSet<&str> = names.iter().map(String::as_str).collect();
    let mut missing = Vec::new();
    let mut bad = Vec::new();
    let mut values = Vec::with_capacity(names.len());
    for name in names {
        match obj.get(name) {
            None => missing.push(name.clone()),
            Some(v) => match v.as_f64().filter(|f| f.is_finite()) {
                Some(f) => values.push(f),
                None => bad.push(name.clone()),
            },
        }
    }
    let extra: Vec<String> = obj.keys().filter(|k| !known.contains(k.as_str())).cloned().collect();
    if missing.is_empty() && bad.is_empty() && extra.is_empty() {
        return Ok(values);
    }
    let mut parts = Vec::new();
    if !missing.is_empty() {
        parts.push(format!("missing {}", missing.join(", ")));
    }
    if !bad.is_empty() {
        parts.push(format!("not a finite number: {}", bad.join(", ")));
    }
    if !extra.is_empty() {
        parts.push(format!("unexpected {}", extra.join(", ")));
    }
    let mut fields = missing;
    fields.extend(bad);
    fields.extend(extra);
    Err(Error::Validation {
        message: format!("invalid features ({})", parts.join("; ")),
        fields,
    })
}

/// Tabular prediction: validate, order, scale, predict, attach advice.
pub fn predict_features(artifact: &ModelArtifact, body: &Value, advice: &AdviceTable) -> Result<PredictResponse> {
    if is_image_model(artifact) {
        return Err(Error::InvalidArgument(format!("the {} model expects an image upload", artifact.disease)));
    }
    let raw = feature_vector(artifact, body)?;
    let x = match &artifact.scaler {
        Some(s) => s.transform_row(&raw)?,
        None => raw,
    };
    respond(artifact, &x, advice)
}

/// Image prediction: decode PNG/JPEG bytes, resize to the network input, predict.
pub fn predict_image(artifact: &ModelArtifact, bytes: &[u8], advice: &AdviceTable) -> Result<PredictResponse> {
    let Some([h, w]) = image_input_size(artifact) else {
        return Err(Error::InvalidArgument(format!("the {} model expects JSON features", artifact.disease)));
    };
    let img = resize_bilinear(&decode_image(bytes)?, h, w)?;
    let x = Tensor::new(&[1, h, w, 3], img.data().to_vec())?;
    respond(artifact, x.item(0), advice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{fit_forest, EnsembleConfig};
    use crate::dataframe::{Matrix, ScalerParams};
    use crate::neuralnet::build_lung_cnn;
    use crate::vision::testutil::write_png;
    use serde_json::json;

    fn diabetes_artifact() -> ModelArtifact {
        let names = ["Pregnancies", "Glucose", "Insulin", "BMI", "Age"];
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 5) as f64, 80.0 + 3.0 * i as f64, 50.0 + i as f64, 20.0 + 0.5 * i as f64, 20.0 + i as f64])
            .collect();
        let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let m = Matrix::from_rows(&rows);
        let scaler = ScalerParams::fit(&m);
        let scaled = scaler.transform(&m).unwrap();
        let cfg = EnsembleConfig { n_trees: 5, ..EnsembleConfig::default() };
        let forest = fit_forest(&scaled, &y, 2, &cfg, 7).unwrap();
        ModelArtifact {
            disease: "diabetes".into(),
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            class_names: vec!["0".into(), "1".into()],
            scaler: Some(scaler),
            model: Model::Forest(forest),
        }
    }

    #[test]
    fn tabular_prediction_scales_and_advises() {
        let a = diabetes_artifact();
        let advice = AdviceTable::builtin();
        let body = json!({"Pregnancies": 1, "Glucose": 190.0, "Insulin": 90, "BMI": 40.0, "Age": 58});
        let r = predict_features(&a, &body, &advice).unwrap();
        assert_eq!(r.label, "1");
        assert!((0.0..=1.0).contains(&r.probability));
        assert!(r.advice.to_lowercase().contains("not a medical diagnosis"));
        assert_eq!(r.model_kind, ModelKind::Forest);

        let x = a.scaler.as_ref().unwrap().transform_row(&[1.0, 190.0, 90.0, 40.0, 58.0]).unwrap();
        let direct = a.model.predict(&x).unwrap();
        assert_eq!(r.probability, direct.probabilities[direct.class]);
    }

    #[test]
    fn validation_names_every_offending_field() {
        let a = diabetes_artifact();
        let advice = AdviceTable::builtin();
        let body = json!({"Pregnancies": 1, "Insulin": "high", "BMI": 40.0, "Age": 58, "Height": 170});
        match predict_features(&a, &body, &advice) {
            Err(Error::Validation { fields, message }) => {
                assert_eq!(fields, ["Glucose", "Insulin", "Height"]);
                assert!(message.contains("missing Glucose"), "{message}");
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
        assert!(matches!(predict_features(&a, &json!([1, 2]), &advice), Err(Error::Validation { .. })));
        assert!(predict_image(&a, b"", &advice).is_err());
    }

    #[test]
    fn image_prediction_resizes_any_input() {
        let net = build_lung_cnn(16, 16, 3, 1).unwrap();
        let a = ModelArtifact {
            disease: "lung".into(),
            feature_names: Vec::new(),
            class_names: vec!["lung_aca".into(), "lung_n".into(), "lung_scc".into()],
            scaler: None,
            model: Model::NeuralNet(net),
        };
        let advice = AdviceTable::builtin();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.png");
        write_png(&path, 97, 61, [120, 40, 200]);
        let bytes = std::fs::read(&path).unwrap();
        let r = predict_image(&a, &bytes, &advice).unwrap();
        assert!(a.class_names.contains(&r.label));
        assert_eq!(r, predict_image(&a, &bytes, &advice).unwrap());
        assert!(predict_image(&a, &[], &advice).is_err());
        assert!(predict_features(&a, &json!({}), &advice).is_err());

        let info = ModelInfo::of(&a);
        assert_eq!(info.input_size, Some([16, 16]));
        assert_eq!(info.input, "image");
    }
}
