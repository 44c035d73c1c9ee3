use rand::seq::index::sample;
use rand::Rng;

use super::check_xy;
use crate::dataframe::Matrix;
use crate::error::{Error, Result};
use crate::model::{argmax, Classifier};

/// Two weighted decreases closer than this are treated as equal, so ties are
/// broken by feature index and threshold rather than by rounding noise.
const TIE_EPS: f64 = 1e-12;

pub const UNLIMITED_DEPTH: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    #[default]
    Gini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsample {
    #[default]
    All,
    /// `ceil(sqrt(p))` features drawn without replacement at every node.
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub criterion: SplitCriterion,
    pub feature_subsample: FeatureSubsample,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 16,
            min_samples_split: 2,
            criterion: SplitCriterion::Gini,
            feature_subsample: FeatureSubsample::All,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument("min_samples_split must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Per-class sample counts reaching the leaf (sample weight sums for weighted fits).
    Leaf { class_counts: Vec<f64> },
    /// Rows with `x[feature] <= threshold` go left.
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf_for(&self, x: &[f64]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class_counts } => return class_counts,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Majority class of the leaf reached by `x`, lowest index on ties.
    pub fn vote(&self, x: &[f64]) -> usize {
        argmax(self.leaf_for(x))
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal { feature, left, right, .. } => Some(
                (*feature)
                    .max(left.max_feature_index().unwrap_or(0))
                    .max(right.max_feature_index().unwrap_or(0)),
            ),
        }
    }
}

/// `1 - sum_k p_k^2` over the class proportions of `labels`.
pub fn gini_impurity(labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("gini impurity of an empty label set".into()));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0.0; k];
    for &y in labels {
        counts[y] += 1.0;
    }
    Ok(gini_from_counts(&counts, labels.len() as f64))
}

fn gini_from_counts(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = (a + b) / 2.0;
    if m >= a && m < b {
        m
    } else {
        a
    }
}

/// Best weighted-Gini split over midpoints of consecutive distinct values.
///
/// Returns `None` when no candidate strictly lowers impurity.
pub fn best_split(x: &Matrix, y: &[usize], candidate_features: &[usize]) -> Option<Split> {
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    find_split(x, y, None, n_classes, &rows, candidate_features)
}

pub(crate) fn find_split(
    x: &Matrix,
    y: &[usize],
    weights: Option<&[f64]>,
    n_classes: usize,
    rows: &[usize],
    candidate_features: &[usize],
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut total = vec![0.0; n_classes];
    for &i in rows {
        total[y[i]] += w(i);
    }
    let total_w: f64 = total.iter().sum();
    let parent = gini_from_counts(&total, total_w);
    if parent <= TIE_EPS {
        return None;
    }

    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<Split> = None;
    let mut order = rows.to_vec();
    let mut left = vec![0.0; n_classes];
    let mut right = vec![0.0; n_classes];
    for &f in &features {
        order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
        left.iter_mut().for_each(|c| *c = 0.0);
        right.copy_from_slice(&total);
        let mut left_w = 0.0;
        for pos in 0..order.len() - 1 {
            let i = order[pos];
            let wi = w(i);
            left[y[i]] += wi;
            right[y[i]] -= wi;
            left_w += wi;
            let (a, b) = (x.get(i, f), x.get(order[pos + 1], f));
            if a == b {
                continue;
            }
            let right_w = total_w - left_w;
            let child = (left_w / total_w) * gini_from_counts(&left, left_w)
                + (right_w / total_w) * gini_from_counts(&right, right_w);
            let decrease = parent - child;
            let improves = match best {
                None => decrease > TIE_EPS,
                Some(s) => decrease > s.impurity_decrease + TIE_EPS,
            };
            if improves {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(a, b),
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

pub(crate) struct Grower<'a, R: Rng> {
    pub x: &'a Matrix,
    pub y: &'a [usize],
    pub weights: Option<&'a [f64]>,
    pub n_classes: usize,
    pub cfg: &'a TreeConfig,
    pub rng: &'a mut R,
}

impl<R: Rng> Grower<'_, R> {
    pub fn grow(&mut self, rows: Vec<usize>, depth: usize) -> TreeNode {
        let mut counts = vec![0.0; self.n_classes];
        for &i in &rows {
            counts[self.y[i]] += self.weights.map_or(1.0, |w| w[i]);
        }
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || rows.len() < self.cfg.min_samples_split {
            return TreeNode::Leaf { class_counts: counts };
        }
        let p = self.x.n_cols();
        let candidates: Vec<usize> = match self.cfg.feature_subsample {
            FeatureSubsample::All => (0..p).collect(),
            FeatureSubsample::Sqrt => {
                let m = ((p as f64).sqrt().ceil() as usize).clamp(1, p.max(1));
                sample(self.rng, p, m).into_vec()
            }
        };
        let Some(split) = find_split(self.x, self.y, self.weights, self.n_classes, &rows, &candidates) else {
            return TreeNode::Leaf { class_counts: counts };
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.x.get(i, split.feature) <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Recursive CART on all rows of `x`.
///
/// `rng` is only consumed when `cfg.feature_subsample` is `Sqrt`.
pub fn fit_tree<R: Rng>(x: &Matrix, y: &[usize], n_classes: usize, cfg: &TreeConfig, rng: &mut R) -> Result<TreeNode> {
    check_xy(x, y)?;
    cfg.validate()?;
    check_labels(y, n_classes)?;
    let rows = (0..x.n_rows()).collect();
    Ok(Grower {
        x,
        y,
        weights: None,
        n_classes,
        cfg,
        rng,
    }
    .grow(rows, 0))
}

pub(crate) fn check_labels(y: &[usize], n_classes: usize) -> Result<()> {
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {bad} outside [0, {n_classes})")));
    }
    Ok(())
}

/// A single fitted tree with its leaf class distributions as probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub n_features: usize,
    pub n_classes: usize,
    pub config: TreeConfig,
}

impl DecisionTree {
    pub fn fit<R: Rng>(x: &Matrix, y: &[usize], n_classes: usize, cfg: &TreeConfig, rng: &mut R) -> Result<Self> {
        Ok(DecisionTree {
            root: fit_tree(x, y, n_classes, cfg, rng)?,
            n_features: x.n_cols(),
            n_classes,
            config: *cfg,
        })
    }
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let counts = self.root.leaf_for(x);
        let total: f64 = counts.iter().sum();
        Ok(counts.iter().map(|c| c / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn accuracy(tree: &TreeNode, x: &Matrix, y: &[usize]) -> f64 {
        let hits = (0..x.n_rows()).filter(|&i| tree.vote(x.row(i)) == y[i]).count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini_impurity(&[0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[0, 1]).unwrap(), 0.5);
        assert!((gini_impurity(&[0, 0, 1, 1, 1, 2]).unwrap() - 22.0 / 36.0).abs() < 1e-15);
        assert!(gini_impurity(&[]).is_err());
    }

    #[test]
    fn split_on_separable_line() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let s = best_split(&x, &[0, 0, 1, 1], &[0]).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 2.5));
        assert!((s.impurity_decrease - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_split_when_pure_or_inseparable() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        assert!(best_split(&x, &[1, 1, 1], &[0]).is_none());
        let dup = Matrix::from_rows(&[[5.0, 5.0], [5.0, 5.0]]);
        assert!(best_split(&dup, &[0, 1], &[0, 1]).is_none());
    }

    #[test]
    fn ties_prefer_lower_feature() {
        // both columns separate the labels equally well
        let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0]]);
        let s = best_split(&x, &[0, 1], &[1, 0]).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn depth_two_tree_on_separable_set() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let y = [0, 0, 1, 1];
        let cfg = TreeConfig {
            max_depth: 2,
            ..TreeConfig::default()
        };
        let tree = fit_tree(&x, &y, 2, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.depth(), 1);
        assert_eq!(accuracy(&tree, &x, &y), 1.0);
    }

    #[test]
    fn single_row_is_a_leaf() {
        let x = Matrix::from_rows(&[[3.0, 4.0]]);
        let tree = fit_tree(&x, &[1], 2, &TreeConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(tree, TreeNode::Leaf { class_counts: vec![0.0, 1.0] });
        assert!(fit_tree(&Matrix::zeros(0, 2), &[], 2, &TreeConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn stump_cannot_solve_xor() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
        let y = [0, 1, 1, 0];
        let cfg = TreeConfig {
            max_depth: 1,
            ..TreeConfig::default()
        };
        let tree = fit_tree(&x, &y, 2, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(accuracy(&tree, &x, &y) <= 0.75);
        let deep = fit_tree(&x, &y, 2, &TreeConfig { max_depth: 2, ..cfg }, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        // XOR has no single split with positive gain, so greedy CART stops at the root
        assert_eq!(deep.n_leaves(), 1);
    }

    #[test]
    fn config_validation() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]);
        let bad = TreeConfig {
            min_samples_split: 1,
            ..TreeConfig::default()
        };
        assert!(fit_tree(&x, &[0, 1], 2, &bad, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
