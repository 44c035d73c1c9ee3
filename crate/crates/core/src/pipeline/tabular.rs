use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Comparison, Disease, TrainConfig, TrainOutcome};
use crate::dataframe::{
    impute_missing, load_csv, select_features, train_test_split, ColumnSchema, Dataset, Matrix, ScalerParams,
};
use crate::ensemble::{fit_adaboost, fit_bagging, fit_forest, fit_logistic, DecisionTree};
use crate::error::{Error, Result};
use crate::metrics::{confusion_matrix, report, ClassificationReport, ConfusionMatrix};
use crate::model::{Classifier, Model, ModelKind};
use crate::persistence::ModelArtifact;

/// Missing-value imputation followed by feature selection.
pub fn prepare_tabular(disease: Disease, ds: &Dataset, cfg: &TrainConfig) -> Result<Dataset> {
    let imputed = impute_missing(ds, cfg.tabular.impute)?;
    if cfg.tabular.features.is_empty() {
        select_features(&imputed, disease.selected_features())
    } else {
        select_features(&imputed, &cfg.tabular.features)
    }
}

fn predict_all(model: &dyn Classifier, x: &Matrix) -> Result<Vec<usize>> {
    x.rows_iter().map(|r| Ok(model.predict(r)?.class)).collect()
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Impute, select, split, scale (fitted on the training rows only), fit a
/// random forest and score it on the held-out rows.
pub fn train_tabular(disease: Disease, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let prepared = prepare_tabular(disease, ds, cfg)?;
    let split = train_test_split(&prepared, cfg.train_ratio, cfg.seed, cfg.stratified)?;
    let scaler = ScalerParams::fit(split.train.rows());
    let x_train = scaler.transform(split.train.rows())?;
    let x_test = scaler.transform(split.test.rows())?;
    let y_train = split.train.target();
    let y_test = split.test.target();
    let k = prepared.n_classes();

    let forest = fit_forest(&x_train, y_train, k, &cfg.tabular.forest, cfg.seed)?;
    let pred = predict_all(&forest, &x_test)?;
    let cm = confusion_matrix(y_test, &pred, k)?.with_class_names(prepared.class_names())?;
    let rep = report(&cm)?;

    let mut comparisons = Vec::new();
    for &kind in &cfg.tabular.compare {
        let model: Model = match kind {
            ModelKind::Forest => continue,
            ModelKind::Tree => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                Model::Tree(DecisionTree::fit(&x_train, y_train, k, &cfg.tabular.forest.tree, &mut rng)?)
            }
            ModelKind::Bagging => Model::Bagging(fit_bagging(&x_train, y_train, k, &cfg.tabular.forest, cfg.seed)?),
            ModelKind::AdaBoost | ModelKind::Logistic if k != 2 => {
                log::warn!("{kind} needs binary labels; skipping it");
                continue;
            }
            ModelKind::AdaBoost => Model::AdaBoost(fit_adaboost(&x_train, y_train, cfg.tabular.adaboost_rounds)?),
            ModelKind::Logistic => {
                let l = &cfg.tabular.logistic;
                Model::Logistic(fit_logistic(&x_train, y_train, l.learning_rate, l.epochs)?)
            }
            ModelKind::NeuralNet => continue,
        };
        comparisons.push(Comparison {
            kind,
            accuracy: accuracy(&predict_all(&model, &x_test)?, y_test),
        });
    }

    Ok(TrainOutcome {
        disease,
        artifact: ModelArtifact {
            disease: disease.as_str().to_string(),
            feature_names: prepared.feature_names(),
            class_names: prepared.class_names().to_vec(),
            scaler: Some(scaler),
            model: Model::Forest(forest),
        },
        confusion: cm,
        report: rep,
        n_train: split.train.n_rows(),
        n_test: split.test.n_rows(),
        comparisons,
        history: Vec::new(),
    })
}

pub fn train_tabular_csv(disease: Disease, path: &Path, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let schema = disease
        .csv_schema()
        .ok_or_else(|| Error::InvalidArgument(format!("{disease} is an image dataset, not a CSV")))?;
    let ds = load_csv(path, &schema)?;
    train_tabular(disease, &ds, cfg)
}

/// Scores an artifact on a dataset holding (at least) its features, unscaled.
pub fn evaluate_dataset(artifact: &ModelArtifact, ds: &Dataset) -> Result<(ConfusionMatrix, ClassificationReport)> {
    if ds.n_rows() == 0 {
        return Err(Error::Empty("evaluation data has no rows".into()));
    }
    let selected = select_features(ds, &artifact.feature_names)?;
    let remap: Vec<usize> = selected
        .class_names()
        .iter()
        .map(|c| {
            artifact.class_names.iter().position(|a| a == c).ok_or_else(|| {
                Error::Schema(format!("label {c:?} is not one of the model's classes {:?}", artifact.class_names))
            })
        })
        .collect::<Result<_>>()?;
    let truth: Vec<usize> = selected.target().iter().map(|&t| remap[t]).collect();
    let x = match &artifact.scaler {
        Some(s) => s.transform(selected.rows())?,
        None => selected.rows().clone(),
    };
    let pred = predict_all(&artifact.model, &x)?;
    let cm = confusion_matrix(&truth, &pred, artifact.class_names.len())?.with_class_names(&artifact.class_names)?;
    let rep = report(&cm)?;
    Ok((cm, rep))
}

/// Reads a labelled CSV whose columns include the artifact's features and the
/// disease's target column; other columns are ignored.
pub fn evaluate_csv(artifact: &ModelArtifact, path: &Path) -> Result<(ConfusionMatrix, ClassificationReport)> {
    let disease: Disease = artifact.disease.parse()?;
    let target = disease
        .target_column()
        .ok_or_else(|| Error::InvalidArgument(format!("{disease} is an image dataset, not a CSV")))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::File {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Schema(format!("{other:?}")),
    })?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut missing: Vec<&str> = artifact
        .feature_names
        .iter()
        .map(String::as_str)
        .chain([target])
        .filter(|f| !header.iter().any(|h| h == f))
        .collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        return Err(Error::Schema(format!("evaluation data is missing column(s) {missing:?}")));
    }
    let known = disease.csv_schema().unwrap_or_default();
    let schema: Vec<ColumnSchema> = header
        .iter()
        .map(|h| {
            if h == target {
                ColumnSchema::target(h)
            } else {
                known
                    .iter()
                    .find(|c| &c.name == h)
                    .cloned()
                    .unwrap_or_else(|| ColumnSchema::numeric(h))
            }
        })
        .collect();
    let ds = load_csv(path, &schema)?;
    if ds.n_rows() == 0 {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    }
    let cfg = TrainConfig::default();
    let imputed = impute_missing(&ds, cfg.tabular.impute)?;
    evaluate_dataset(artifact, &imputed)
}
