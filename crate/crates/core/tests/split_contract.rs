use medpredict::dataframe::split_indices;
use proptest::prelude::*;

/// Independent restatement of the stratified rounding rule.
fn expected_stratified_counts(labels: &[usize], k: usize, ratio: f64) -> Vec<usize> {
    let mut per_class = vec![0usize; k];
    for &y in labels {
        per_class[y] += 1;
    }
    let floor = |m: usize| (ratio * m as f64 + 1e-9).floor() as usize;
    let mut quota: Vec<usize> = per_class.iter().map(|&m| floor(m)).collect();
    let target = floor(labels.len());
    let mut c = 0;
    while quota.iter().sum::<usize>() < target {
        if quota[c] < per_class[c] {
            quota[c] += 1;
        }
        c = (c + 1) % k;
    }
    quota
}

#[test]
fn plain_split_floor_rule_for_every_n() {
    for n in 2..=200usize {
        let labels = vec![0; n];
        let (train, test) = split_indices(&labels, 1, 0.8, 42, false).unwrap();
        assert_eq!(train.len(), (n * 4) / 5, "n = {n}");
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>(), "n = {n}");
    }
}

proptest! {
    #[test]
    fn stratified_counts_match_rounding_rule(
        labels in (2usize..=4).prop_flat_map(|k| prop::collection::vec(0..k, 2..=200).prop_map(move |v| (k, v))),
        seed in any::<u64>(),
    ) {
        let (k, mut y) = labels;
        // Every class must be present for a stratified split.
        for c in 0..k {
            if !y.contains(&c) {
                y.push(c);
            }
        }
        let (train, test) = split_indices(&y, k, 0.8, seed, true).unwrap();
        let mut got = vec![0usize; k];
        for &i in &train {
            got[y[i]] += 1;
        }
        prop_assert_eq!(got, expected_stratified_counts(&y, k, 0.8));
        prop_assert_eq!(train.len(), (y.len() * 4) / 5);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
    }
}
