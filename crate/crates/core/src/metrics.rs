//! Confusion matrices and classification reports.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[i][j]` = samples of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|k| self.counts[k][k]).sum()
    }

    /// Row sums: how many samples truly belong to each class.
    pub fn supports(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Column sums: how often each class was predicted.
    pub fn predicted(&self) -> Vec<u64> {
        (0..self.n_classes()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn with_class_names<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        if names.len() != self.n_classes() {
            return Err(Error::shape(self.n_classes(), names.len()));
        }
        self.class_names = names.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(self)
    }
}

/// Counts label pairs into a K×K matrix. Classes are named `"0"`, `"1"`, …
/// until renamed with [`ConfusionMatrix::with_class_names`].
pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(y_true.len(), y_pred.len()));
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {} outside [0, {n_classes})",
                t.max(p)
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        class_names: (0..n_classes).map(|k| k.to_string()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision/recall/F1, accuracy and macro averages. Any 0/0
/// ratio is reported as 0.
pub fn report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix has no samples".into()));
    }
    let supports = cm.supports();
    let predicted = cm.predicted();
    let classes: Vec<ClassMetrics> = (0..cm.n_classes())
        .map(|k| {
            let tp = cm.counts[k][k];
            let precision = ratio(tp, predicted[k]);
            let recall = ratio(tp, supports[k]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                name: cm.class_names[k].clone(),
                precision,
                recall,
                f1,
                support: supports[k],
            }
        })
        .collect();
    let k = classes.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(f).sum::<f64>() / k;
    Ok(ClassificationReport {
        accuracy: ratio(cm.trace(), total),
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        total,
        classes,
    })
}

const COL: usize = 10;

/// Fixed-width text table with two-decimal values.
pub fn render_report(r: &ClassificationReport) -> String {
    let name_w = r
        .classes
        .iter()
        .map(|c| c.name.chars().count())
        .chain(["macro avg".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>name_w$}{:>COL$}{:>COL$}{:>COL$}{:>COL$}",
        "", "precision", "recall", "f1-score", "support"
    );
    out.push('\n');
    for c in &r.classes {
        let _ = writeln!(
            out,
            "{:>name_w$}{:>COL$.2}{:>COL$.2}{:>COL$.2}{:>COL$}",
            c.name, c.precision, c.recall, c.f1, c.support
        );
    }
    out.push('\n');
    let _ = writeln!(out, "{:>name_w$}{:>COL$}{:>COL$}{:>COL$.2}{:>COL$}", "accuracy", "", "", r.accuracy, r.total);
    let _ = writeln!(
        out,
        "{:>name_w$}{:>COL$.2}{:>COL$.2}{:>COL$.2}{:>COL$}",
        "macro avg", r.macro_precision, r.macro_recall, r.macro_f1, r.total
    );
    out.push_str("\nnote: a ratio with a zero denominator is reported as 0.00\n");
    out
}

/// The report as `key=value` lines with full precision.
pub fn report_key_values(r: &ClassificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "accuracy={}", r.accuracy);
    let _ = writeln!(out, "total={}", r.total);
    let _ = writeln!(out, "macro_avg.precision={}", r.macro_precision);
    let _ = writeln!(out, "macro_avg.recall={}", r.macro_recall);
    let _ = writeln!(out, "macro_avg.f1={}", r.macro_f1);
    for c in &r.classes {
        let _ = writeln!(out, "class.{}.precision={}", c.name, c.precision);
        let _ = writeln!(out, "class.{}.recall={}", c.name, c.recall);
        let _ = writeln!(out, "class.{}.f1={}", c.name, c.f1);
        let _ = writeln!(out, "class.{}.support={}", c.name, c.support);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hand() -> ConfusionMatrix {
        confusion_matrix(&[0, 1, 1, 0], &[0, 1, 0, 0], 2).unwrap()
    }

    #[test]
    fn counts_hand_example() {
        let cm = hand();
        assert_eq!(cm.counts, vec![vec![2, 0], vec![1, 1]]);
        let diag = confusion_matrix(&[0, 2, 1, 2], &[0, 2, 1, 2], 3).unwrap();
        assert_eq!(diag.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        let empty = confusion_matrix(&[], &[], 2).unwrap();
        assert_eq!(empty.total(), 0);
        assert!(report(&empty).is_err());
        assert!(confusion_matrix(&[0, 2], &[0, 1], 2).is_err());
        assert!(confusion_matrix(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn report_hand_example() {
        let r = report(&hand()).unwrap();
        assert_eq!(r.accuracy, 0.75);
        let c1 = &r.classes[1];
        assert_eq!((c1.precision, c1.recall), (1.0, 0.5));
        assert!((c1.f1 - 2.0 / 3.0).abs() < 1e-12);
        let c0 = &r.classes[0];
        assert!((c0.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(c0.recall, 1.0);
        assert!((c0.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn never_predicted_class_has_zero_precision() {
        let r = report(&confusion_matrix(&[0, 1, 1], &[0, 0, 0], 2).unwrap()).unwrap();
        assert_eq!(r.classes[1].precision, 0.0);
        assert_eq!(r.classes[1].f1, 0.0);
    }

    #[test]
    fn render_golden() {
        let cm = hand().with_class_names(&["no", "yes"]).unwrap();
        let text = render_report(&report(&cm).unwrap());
        let golden = "          precision    recall  f1-score   support

       no      0.67      1.00      0.80         2
      yes      1.00      0.50      0.67         2

 accuracy                          0.75         4
macro avg      0.83      0.75      0.73         4

note: a ratio with a zero denominator is reported as 0.00
";
        assert_eq!(text, golden);
    }

    #[test]
    fn render_single_class_and_alignment() {
        let cm = confusion_matrix(&[0, 0, 0], &[0, 0, 0], 1).unwrap();
        let text = render_report(&report(&cm).unwrap());
        let acc = text.lines().find(|l| l.trim_start().starts_with("accuracy")).unwrap();
        assert!(acc.contains("1.00"));

        let small = confusion_matrix(&[0, 1], &[0, 1], 2).unwrap();
        let big = confusion_matrix(&vec![0; 1234].into_iter().chain([1]).collect::<Vec<_>>(), &vec![0; 1235], 2).unwrap();
        let a = render_report(&report(&small).unwrap());
        let b = render_report(&report(&big).unwrap());
        let widths = |s: &str| s.lines().map(str::len).collect::<Vec<_>>();
        assert_eq!(widths(&a), widths(&b));
    }

    #[test]
    fn key_values_round_trip_numbers() {
        let r = report(&hand()).unwrap();
        let kv = report_key_values(&r);
        assert!(kv.contains("accuracy=0.75\n"));
        let f1: f64 = kv
            .lines()
            .find_map(|l| l.strip_prefix("class.1.f1="))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(f1, r.classes[1].f1);
    }

    proptest! {
        #[test]
        fn weighted_recall_equals_accuracy(counts in prop::collection::vec(0u64..50, 9)) {
            let cm = ConfusionMatrix {
                counts: counts.chunks(3).map(<[u64]>::to_vec).collect(),
                class_names: vec!["a".into(), "b".into(), "c".into()],
            };
            prop_assume!(cm.total() > 0);
            let r = report(&cm).unwrap();
            let weighted: f64 = r.classes.iter().map(|c| c.recall * c.support as f64).sum::<f64>() / r.total as f64;
            prop_assert!((weighted - r.accuracy).abs() < 1e-12);
            prop_assert_eq!(r.classes.iter().map(|c| c.support).sum::<u64>(), r.total);
            for c in &r.classes {
                for v in [c.precision, c.recall, c.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn margins_match_label_counts(pairs in prop::collection::vec((0usize..4, 0usize..4), 0..60)) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let cm = confusion_matrix(&t, &p, 4).unwrap();
            for k in 0..4 {
                prop_assert_eq!(cm.supports()[k], t.iter().filter(|&&v| v == k).count() as u64);
                prop_assert_eq!(cm.predicted()[k], p.iter().filter(|&&v| v == k).count() as u64);
            }
        }
    }
}
