use std::collections::BTreeSet;

use super::Matrix;
use crate::error::{Error, Result};

/// Output of [`encode_categorical`].
///
/// Two classes collapse to a single 0/1 column (label-binarizer behaviour);
/// three or more produce one indicator column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub matrix: Matrix,
    pub class_names: Vec<String>,
}

impl Encoding {
    /// Class index for each encoded row.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.matrix.n_rows())
            .map(|i| self.decode_index(self.matrix.row(i)).unwrap_or(0))
            .collect()
    }

    pub fn decode_index(&self, row: &[f64]) -> Option<usize> {
        let k = self.class_names.len();
        match row {
            [v] if k <= 2 => {
                let idx = usize::from(*v >= 0.5);
                (idx < k).then_some(idx)
            }
            r if k >= 3 && r.len() == k => r.iter().position(|&v| v == 1.0),
            _ => None,
        }
    }

    /// Inverse lookup from an encoded row back to its class name.
    pub fn decode(&self, row: &[f64]) -> Option<&str> {
        self.decode_index(row).map(|k| self.class_names[k].as_str())
    }
}

pub fn encode_categorical<S: AsRef<str>>(values: &[S]) -> Result<Encoding> {
    if values.is_empty() {
        return Err(Error::Empty("no values to encode".into()));
    }
    let class_names: Vec<String> = values
        .iter()
        .map(|v| v.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index_of = |v: &str| class_names.binary_search_by(|c| c.as_str().cmp(v)).unwrap();

    let matrix = if class_names.len() <= 2 {
        let col: Vec<f64> = values.iter().map(|v| index_of(v.as_ref()) as f64).collect();
        Matrix::new(values.len(), 1, col)?
    } else {
        let k = class_names.len();
        let mut m = Matrix::zeros(values.len(), k);
        for (i, v) in values.iter().enumerate() {
            m.set(i, index_of(v.as_ref()), 1.0);
        }
        m
    };
    Ok(Encoding {
        matrix,
        class_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_values_become_one_column() {
        let enc = encode_categorical(&["no", "yes", "no"]).unwrap();
        assert_eq!(enc.class_names, vec!["no", "yes"]);
        assert_eq!(enc.matrix.n_cols(), 1);
        assert_eq!(enc.matrix.data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn three_classes_are_one_hot() {
        let enc = encode_categorical(&["a", "b", "c"]).unwrap();
        assert_eq!(enc.matrix, Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]));
    }

    #[test]
    fn empty_input_is_rejected() {
        let empty: [&str; 0] = [];
        assert!(matches!(encode_categorical(&empty), Err(Error::Empty(_))));
    }

    proptest! {
        #[test]
        fn inverse_lookup_recovers_labels(values in prop::collection::vec("[a-e]{1,2}", 1..40)) {
            let enc = encode_categorical(&values).unwrap();
            for (i, v) in values.iter().enumerate() {
                prop_assert_eq!(enc.decode(enc.matrix.row(i)), Some(v.as_str()));
            }
        }
    }
}
