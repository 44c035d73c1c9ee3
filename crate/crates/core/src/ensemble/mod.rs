//! Classical classifiers: CART trees, random forest and bagging ensembles,
//! discrete AdaBoost over stumps, and logistic regression.

mod adaboost;
mod forest;
mod logistic;
mod tree;

pub use adaboost::{adaboost_reweight, fit_adaboost, fit_adaboost_traced, AdaBoostModel, MAX_ALPHA};
pub use forest::{fit_bagging, fit_forest, tree_rng, EnsembleConfig, TreeEnsemble};
pub use logistic::{fit_logistic, logistic_loss_and_grad, sigmoid, LogisticModel};
pub use tree::{
    best_split, fit_tree, gini_impurity, DecisionTree, FeatureSubsample, Split, SplitCriterion, TreeConfig,
    TreeNode, UNLIMITED_DEPTH,
};

use crate::dataframe::Matrix;
use crate::error::{Error, Result};

pub(crate) fn check_xy(x: &Matrix, y: &[usize]) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::Empty("training data has no rows".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::shape(format!("{} labels", x.n_rows()), format!("{} labels", y.len())));
    }
    Ok(())
}

pub(crate) fn check_binary(y: &[usize]) -> Result<()> {
    if let Some(&bad) = y.iter().find(|&&c| c > 1) {
        return Err(Error::NonBinaryLabels(bad));
    }
    Ok(())
}
