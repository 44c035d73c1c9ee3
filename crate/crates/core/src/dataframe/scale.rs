use serde::{Deserialize, Serialize};

use super::{Dataset, Matrix};
use crate::error::{Error, Result};

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl ScalerParams {
    pub fn fit(rows: &Matrix) -> Self {
        let n = rows.n_rows().max(1) as f64;
        let p = rows.n_cols();
        let mut mean = vec![0.0; p];
        for row in rows.rows_iter() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for row in rows.rows_iter() {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let stddev = var.into_iter().map(|s| (s / n).sqrt()).collect();
        ScalerParams { mean, stddev }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.len() {
            return Err(Error::shape(format!("{} features", self.len()), format!("{} features", row.len())));
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(&x, (&m, &s))| if s > 0.0 { (x - m) / s } else { 0.0 })
            .collect())
    }

    pub fn transform(&self, rows: &Matrix) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows.data().len());
        for row in rows.rows_iter() {
            data.extend(self.transform_row(row)?);
        }
        Matrix::new(rows.n_rows(), rows.n_cols(), data)
    }

    pub fn transform_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        Ok(ds.with_rows(self.transform(ds.rows())?))
    }
}

/// Standardizes every feature to mean 0 / population stddev 1. Constant columns become 0.
pub fn scale_features(ds: &Dataset) -> Result<(Dataset, ScalerParams)> {
    if ds.n_rows() == 0 {
        return Err(Error::Empty("cannot fit a scaler on zero rows".into()));
    }
    let params = ScalerParams::fit(ds.rows());
    Ok((params.transform_dataset(ds)?, params))
}
