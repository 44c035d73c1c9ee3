use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{Grower, TreeConfig, TreeNode};
use super::{check_binary, check_xy};
use crate::dataframe::Matrix;
use crate::error::{Error, Result};
use crate::model::Classifier;

/// Cap on a stump's vote weight, reached when its weighted error is 0.
pub const MAX_ALPHA: f64 = 13.815510557964274; // ln(1e6)

/// Discrete AdaBoost over depth-1 trees.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostModel {
    pub stumps: Vec<TreeNode>,
    pub alphas: Vec<f64>,
    pub n_features: usize,
}

impl Classifier for AdaBoostModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        2
    }

    /// Alpha mass agreeing with each class, normalized.
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut score = [0.0; 2];
        for (stump, alpha) in self.stumps.iter().zip(&self.alphas) {
            score[stump.vote(x)] += alpha;
        }
        let total = score[0] + score[1];
        Ok(score.iter().map(|s| s / total).collect())
    }
}

/// Multiplies misclassified weights by `e^alpha`, correct ones by `e^-alpha`,
/// and renormalizes to sum 1.
pub fn adaboost_reweight(weights: &mut [f64], misclassified: &[bool], alpha: f64) {
    for (w, &miss) in weights.iter_mut().zip(misclassified) {
        *w *= if miss { alpha.exp() } else { (-alpha).exp() };
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
}

pub fn fit_adaboost(x: &Matrix, y: &[usize], n_rounds: usize) -> Result<AdaBoostModel> {
    fit_adaboost_traced(x, y, n_rounds).map(|(model, _)| model)
}

/// Like [`fit_adaboost`], also returning the sample weights after every update.
pub fn fit_adaboost_traced(x: &Matrix, y: &[usize], n_rounds: usize) -> Result<(AdaBoostModel, Vec<Vec<f64>>)> {
    check_xy(x, y)?;
    check_binary(y)?;
    if y.iter().all(|&c| c == y[0]) {
        return Err(Error::InvalidArgument(
            "AdaBoost needs both classes present in the training labels".into(),
        ));
    }
    let n = x.n_rows();
    let stump_cfg = TreeConfig {
        max_depth: 1,
        ..TreeConfig::default()
    };
    // stumps consider every feature, so the rng is never drawn from
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut weights = vec![1.0 / n as f64; n];
    let mut trace = Vec::new();
    let mut stumps = Vec::new();
    let mut alphas = Vec::new();

    for _ in 0..n_rounds {
        let stump = Grower {
            x,
            y,
            weights: Some(&weights),
            n_classes: 2,
            cfg: &stump_cfg,
            rng: &mut rng,
        }
        .grow((0..n).collect(), 0);
        let misclassified: Vec<bool> = (0..n).map(|i| stump.vote(x.row(i)) != y[i]).collect();
        let error: f64 = weights
            .iter()
            .zip(&misclassified)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum();
        if error >= 0.5 {
            break;
        }
        if error <= 0.0 {
            stumps.push(stump);
            alphas.push(MAX_ALPHA);
            break;
        }
        let alpha = (0.5 * ((1.0 - error) / error).ln()).min(MAX_ALPHA);
        adaboost_reweight(&mut weights, &misclassified, alpha);
        trace.push(weights.clone());
        stumps.push(stump);
        alphas.push(alpha);
    }
    if stumps.is_empty() {
        return Err(Error::InvalidArgument(
            "no stump did better than chance on the weighted data".into(),
        ));
    }
    Ok((
        AdaBoostModel {
            stumps,
            alphas,
            n_features: x.n_cols(),
        },
        trace,
    ))
}
