use std::str::FromStr;

use super::{Dataset, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputePolicy {
    Median,
    Mean,
    DropRow,
}

impl FromStr for ImputePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(ImputePolicy::Median),
            "mean" => Ok(ImputePolicy::Mean),
            "drop_row" | "drop-row" => Ok(ImputePolicy::DropRow),
            other => Err(Error::Config(format!(
                "unknown impute policy `{other}` (expected median, mean or drop_row)"
            ))),
        }
    }
}

/// Replaces missing cells (NaN, or equal to the feature's marker) with the
/// column median/mean over present values, or drops the affected rows.
pub fn impute_missing(ds: &Dataset, policy: ImputePolicy) -> Result<Dataset> {
    let rows = ds.rows();
    let features = ds.features();

    if policy == ImputePolicy::DropRow {
        let keep: Vec<usize> = (0..rows.n_rows())
            .filter(|&i| {
                rows.row(i)
                    .iter()
                    .zip(features)
                    .all(|(&v, f)| !f.is_missing(v))
            })
            .collect();
        return Ok(ds.subset(&keep));
    }

    let mut out: Matrix = rows.clone();
    for (j, feature) in features.iter().enumerate() {
        let column = rows.column(j);
        if !column.iter().any(|&v| feature.is_missing(v)) {
            continue;
        }
        let mut present: Vec<f64> = column
            .iter()
            .copied()
            .filter(|&v| !feature.is_missing(v))
            .collect();
        if present.is_empty() {
            return Err(Error::AllMissing(feature.name.clone()));
        }
        let fill = match policy {
            ImputePolicy::Median => median(&mut present),
            ImputePolicy::Mean => present.iter().sum::<f64>() / present.len() as f64,
            ImputePolicy::DropRow => unreachable!(),
        };
        for (i, &v) in column.iter().enumerate() {
            if feature.is_missing(v) {
                out.set(i, j, fill);
            }
        }
    }
    Ok(ds.with_rows(out))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataframe::{ColumnSchema, Feature};
    use proptest::prelude::*;

    fn glucose(values: &[f64]) -> Dataset {
        let schema = vec![ColumnSchema::numeric("Glucose"), ColumnSchema::target("Outcome")];
        let features = vec![Feature {
            name: "Glucose".into(),
            source: "Glucose".into(),
            missing_marker: Some(0.0),
        }];
        let rows = Matrix::new(values.len(), 1, values.to_vec()).unwrap();
        let target = vec![0; values.len()];
        Dataset::new(schema, features, rows, target, vec!["0".into()]).unwrap()
    }

    #[test]
    fn median_fills_marker_cells() {
        let ds = impute_missing(&glucose(&[0.0, 100.0, 120.0, 140.0]), ImputePolicy::Median).unwrap();
        assert_eq!(ds.rows().data(), &[120.0, 100.0, 120.0, 140.0]);
    }

    #[test]
    fn mean_and_drop_row() {
        let src = glucose(&[0.0, 100.0, 120.0, 140.0]);
        let mean = impute_missing(&src, ImputePolicy::Mean).unwrap();
        assert_eq!(mean.rows().get(0, 0), 120.0);
        let dropped = impute_missing(&src, ImputePolicy::DropRow).unwrap();
        assert_eq!(dropped.rows().data(), &[100.0, 120.0, 140.0]);
    }

    #[test]
    fn nothing_missing_is_identity() {
        let src = glucose(&[90.0, 100.0]);
        assert_eq!(impute_missing(&src, ImputePolicy::Median).unwrap(), src);
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let err = impute_missing(&glucose(&[0.0, 0.0, 0.0]), ImputePolicy::Median).unwrap_err();
        assert!(matches!(err, Error::AllMissing(ref c) if c == "Glucose"));
    }

    proptest! {
        #[test]
        fn present_cells_are_untouched(values in prop::collection::vec(prop_oneof![Just(0.0), 1.0f64..500.0], 1..50)) {
            prop_assume!(values.iter().any(|&v| v != 0.0));
            let out = impute_missing(&glucose(&values), ImputePolicy::Median).unwrap();
            for (i, &v) in values.iter().enumerate() {
                if v != 0.0 {
                    prop_assert_eq!(out.rows().get(i, 0).to_bits(), v.to_bits());
                }
            }
        }
    }
}
