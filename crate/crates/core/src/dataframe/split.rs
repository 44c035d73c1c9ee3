use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub ratio: f64,
    pub seed: u64,
}

fn floor_count(ratio: f64, n: usize) -> usize {
    // 0.7 * 10 evaluates to 7.000000000000001 but 0.7 * 30 to 20.999999999999996
    (ratio * n as f64 + 1e-9).floor() as usize
}

/// Train/test row indices for `labels`.
///
/// Unstratified: `floor(ratio * n)` rows go to train. Stratified: each class
/// contributes `floor(ratio * n_c)` rows, then the slots still missing from
/// `floor(ratio * n)` are handed out one per class in class-index order.
pub fn split_indices(
    labels: &[usize],
    n_classes: usize,
    ratio: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} not in (0, 1)")));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split {n} rows")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_train = floor_count(ratio, n);

    let (mut train, mut test) = if stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= n_classes {
                return Err(Error::InvalidArgument(format!("label {y} outside [0, {n_classes})")));
            }
            by_class[y].push(i);
        }
        if let Some(empty) = by_class.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!(
                "class {empty} has no rows; stratified split impossible"
            )));
        }
        let mut quota: Vec<usize> = by_class.iter().map(|c| floor_count(ratio, c.len())).collect();
        let mut remaining = n_train.saturating_sub(quota.iter().sum());
        while remaining > 0 {
            let before = remaining;
            for (q, members) in quota.iter_mut().zip(&by_class) {
                if remaining > 0 && *q < members.len() {
                    *q += 1;
                    remaining -= 1;
                }
            }
            if before == remaining {
                break;
            }
        }
        let mut train = Vec::with_capacity(n_train);
        let mut test = Vec::with_capacity(n - n_train);
        for (members, q) in by_class.iter_mut().zip(quota) {
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..q]);
            test.extend_from_slice(&members[q..]);
        }
        (train, test)
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let test = order.split_off(n_train);
        (order, test)
    };
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "ratio {ratio} on {n} rows leaves an empty side ({} train / {} test)",
            train.len(),
            test.len()
        )));
    }
    Ok((train, test))
}

/// Seeded, reproducible train/test split of a dataset.
pub fn train_test_split(ds: &Dataset, ratio: f64, seed: u64, stratified: bool) -> Result<SplitPair> {
    let (train_indices, test_indices) = split_indices(ds.target(), ds.n_classes(), ratio, seed, stratified)?;
    Ok(SplitPair {
        train: ds.subset(&train_indices),
        test: ds.subset(&test_indices),
        train_indices,
        test_indices,
        ratio,
        seed,
    })
}
