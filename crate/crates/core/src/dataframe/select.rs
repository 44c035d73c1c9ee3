use super::Dataset;
use crate::error::{Error, Result};

/// Restricts and reorders features to `names`.
///
/// A name may also refer to a categorical source column, which selects all of
/// its one-hot columns.
pub fn select_features<S: AsRef<str>>(ds: &Dataset, names: &[S]) -> Result<Dataset> {
    let features = ds.features();
    let mut indices = Vec::new();
    let mut unknown = Vec::new();
    for name in names {
        let name = name.as_ref();
        if let Some(j) = features.iter().position(|f| f.name == name) {
            indices.push(j);
            continue;
        }
        let group: Vec<usize> = features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.source == name)
            .map(|(j, _)| j)
            .collect();
        if group.is_empty() {
            unknown.push(name.to_string());
        }
        indices.extend(group);
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownFeature {
            unknown,
            valid: ds.feature_names(),
        });
    }
    let selected = indices.iter().map(|&j| features[j].clone()).collect();
    Dataset::new(
        ds.schema().to_vec(),
        selected,
        ds.rows().select_cols(&indices),
        ds.target().to_vec(),
        ds.class_names().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataframe::Matrix;

    fn pima_like() -> Dataset {
        let names = [
            "Pregnancies", "Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI",
            "DiabetesPedigreeFunction", "Age",
        ];
        let row: Vec<f64> = (0..8).map(f64::from).collect();
        Dataset::from_rows(&names, Matrix::from_rows(&[row]), vec![1], vec!["0".into(), "1".into()]).unwrap()
    }

    #[test]
    fn keeps_listed_features_in_order() {
        let keep = ["Pregnancies", "Glucose", "Insulin", "BMI", "Age"];
        let ds = select_features(&pima_like(), &keep).unwrap();
        assert_eq!(ds.feature_names(), keep);
        assert_eq!(ds.rows().row(0), &[0.0, 1.0, 4.0, 5.0, 7.0]);
        assert_eq!(ds.target(), &[1]);
    }

    #[test]
    fn all_names_is_identity() {
        let src = pima_like();
        let names = src.feature_names();
        assert_eq!(select_features(&src, &names).unwrap(), src);
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        match select_features(&pima_like(), &["Glucos"]) {
            Err(Error::UnknownFeature { unknown, valid }) => {
                assert_eq!(unknown, vec!["Glucos"]);
                assert!(valid.contains(&"Glucose".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }
}
