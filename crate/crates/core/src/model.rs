//! The shared prediction contract and the closed set of model kinds.

use std::fmt;
use std::str::FromStr;

use crate::ensemble::{AdaBoostModel, DecisionTree, LogisticModel, TreeEnsemble};
use crate::error::{Error, Result};
use crate::neuralnet::SequentialNet;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probabilities: Vec<f64>,
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub trait Classifier {
    /// Length of the flat input vector.
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize;

    /// Class probabilities for one input; non-negative and summing to 1.
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let probabilities = self.predict_proba(x)?;
        Ok(Prediction {
            class: argmax(&probabilities),
            probabilities,
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::shape(
                format!("{} features", self.n_features()),
                format!("{} features", x.len()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Forest,
    Bagging,
    AdaBoost,
    Logistic,
    NeuralNet,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Bagging,
        ModelKind::AdaBoost,
        ModelKind::Logistic,
        ModelKind::NeuralNet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Bagging => "bagging",
            ModelKind::AdaBoost => "adaboost",
            ModelKind::Logistic => "logistic",
            ModelKind::NeuralNet => "neuralnet",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ModelKind::Tree => 1,
            ModelKind::Forest => 2,
            ModelKind::Bagging => 3,
            ModelKind::AdaBoost => 4,
            ModelKind::Logistic => 5,
            ModelKind::NeuralNet => 6,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind `{s}`")))
    }
}

/// Any trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tree(DecisionTree),
    Forest(TreeEnsemble),
    Bagging(TreeEnsemble),
    AdaBoost(AdaBoostModel),
    Logistic(LogisticModel),
    NeuralNet(SequentialNet),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Tree(_) => ModelKind::Tree,
            Model::Forest(_) => ModelKind::Forest,
            Model::Bagging(_) => ModelKind::Bagging,
            Model::AdaBoost(_) => ModelKind::AdaBoost,
            Model::Logistic(_) => ModelKind::Logistic,
            Model::NeuralNet(_) => ModelKind::NeuralNet,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Tree(m) => m,
            Model::Forest(m) | Model::Bagging(m) => m,
            Model::AdaBoost(m) => m,
            Model::Logistic(m) => m,
            Model::NeuralNet(m) => m,
        }
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().predict_proba(x)
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.inner().predict(x)
    }
}
