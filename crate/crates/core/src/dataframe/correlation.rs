use super::{Dataset, Matrix};
use crate::error::{Error, Result};

/// Pearson correlation between every pair of features.
///
/// The diagonal is exactly 1 for non-constant columns. A constant column has
/// no defined correlation; its whole row and column (diagonal included) are 0.
pub fn correlation_matrix(ds: &Dataset) -> Result<Matrix> {
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 2 rows, got {n}"
        )));
    }
    let p = ds.n_features();
    let centered: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let col = ds.rows().column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut out = Matrix::zeros(p, p);
    for a in 0..p {
        if norms[a] == 0.0 {
            continue;
        }
        out.set(a, a, 1.0);
        for b in (a + 1)..p {
            if norms[b] == 0.0 {
                continue;
            }
            let dot: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
            let r = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            out.set(a, b, r);
            out.set(b, a, r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(columns: &[Vec<f64>]) -> Dataset {
        let names: Vec<String> = (0..columns.len()).map(|i| format!("f{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let n = columns[0].len();
        Dataset::from_rows(&refs, Matrix::from_columns(columns), vec![0; n], vec!["a".into()]).unwrap()
    }

    #[test]
    fn hand_computed_values() {
        let m = correlation_matrix(&ds(&[vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0], vec![2.0, 4.0, 6.0]])).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert!((m.get(0, 1) + 0.5).abs() < 1e-12);
        assert!((m.get(0, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_zero() {
        let m = correlation_matrix(&ds(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]])).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn needs_two_rows() {
        assert!(correlation_matrix(&ds(&[vec![1.0]])).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(cols in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 6), 1..5)) {
            let m = correlation_matrix(&ds(&cols)).unwrap();
            let p = cols.len();
            for a in 0..p {
                for b in 0..p {
                    prop_assert!((m.get(a, b) - m.get(b, a)).abs() <= 1e-12);
                    prop_assert!(m.get(a, b).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }
}
