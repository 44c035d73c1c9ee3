use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check_xy;
use super::tree::{check_labels, FeatureSubsample, Grower, TreeConfig, TreeNode};
use crate::dataframe::Matrix;
use crate::error::{Error, Result};
use crate::model::Classifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    #[serde(flatten)]
    pub tree: TreeConfig,
    pub n_trees: usize,
    /// Draw a bootstrap sample per tree. Disabling it is only useful for tests.
    pub bootstrap: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            tree: TreeConfig::default(),
            n_trees: 100,
            bootstrap: true,
        }
    }
}

/// Independent RNG stream for tree `index` of an ensemble seeded with `seed`.
///
/// Streams depend only on `(seed, index)`, so trees can be grown in any order.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Majority-vote ensemble of CART trees (random forest or bagging).
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub trees: Vec<TreeNode>,
    pub n_features: usize,
    pub n_classes: usize,
    pub config: EnsembleConfig,
    pub seed: u64,
}

impl TreeEnsemble {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Per-class vote counts; they always sum to the number of trees.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check_input(x)?;
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.vote(x)] += 1;
        }
        Ok(votes)
    }
}

impl Classifier for TreeEnsemble {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.trees.len() as f64;
        Ok(self.votes(x)?.into_iter().map(|v| v as f64 / n).collect())
    }
}

fn fit_ensemble(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    cfg: &EnsembleConfig,
    seed: u64,
    subsample: FeatureSubsample,
) -> Result<TreeEnsemble> {
    check_xy(x, y)?;
    check_labels(y, n_classes)?;
    if cfg.n_trees < 1 {
        return Err(Error::InvalidArgument("an ensemble needs at least one tree".into()));
    }
    let tree_cfg = TreeConfig {
        feature_subsample: subsample,
        ..cfg.tree
    };
    tree_cfg.validate()?;
    let n = x.n_rows();
    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            Grower {
                x,
                y,
                weights: None,
                n_classes,
                cfg: &tree_cfg,
                rng: &mut rng,
            }
            .grow(rows, 0)
        })
        .collect();
    Ok(TreeEnsemble {
        trees,
        n_features: x.n_cols(),
        n_classes,
        config: EnsembleConfig { tree: tree_cfg, ..*cfg },
        seed,
    })
}

/// Random forest: bootstrap rows per tree and `ceil(sqrt(p))` candidate features per node.
pub fn fit_forest(x: &Matrix, y: &[usize], n_classes: usize, cfg: &EnsembleConfig, seed: u64) -> Result<TreeEnsemble> {
    fit_ensemble(x, y, n_classes, cfg, seed, FeatureSubsample::Sqrt)
}

/// Bagging: bootstrap rows per tree, every feature considered at every node.
pub fn fit_bagging(x: &Matrix, y: &[usize], n_classes: usize, cfg: &EnsembleConfig, seed: u64) -> Result<TreeEnsemble> {
    fit_ensemble(x, y, n_classes, cfg, seed, FeatureSubsample::All)
}
