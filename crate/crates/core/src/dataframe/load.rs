use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{encode_categorical, validate_schema, ColumnKind, ColumnSchema, Dataset, Feature, Matrix, MissingMarker};
use crate::error::{Error, Result};

/// Reads a header-first CSV file whose columns are described by `schema`.
///
/// Column order in the file is free, but the header must name exactly the
/// schema's columns. Empty cells and cells equal to a column's missing marker
/// become missing values; class names are sorted lexicographically.
pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSchema]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &[ColumnSchema]) -> Result<Dataset> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let positions = match_header(&header, schema)?;

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); schema.len()];
    for record in rdr.records() {
        let record = record?;
        for (col, &pos) in positions.iter().enumerate() {
            raw[col].push(record.get(pos).unwrap_or("").to_string());
        }
    }
    let n = raw.first().map_or(0, Vec::len);

    let mut features = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut target = Vec::new();
    let mut class_names = Vec::new();

    for (col, cells) in schema.iter().zip(&raw) {
        match col.kind {
            ColumnKind::Numeric => {
                let (values, marker) = parse_numeric(col, cells)?;
                features.push(Feature {
                    name: col.name.clone(),
                    source: col.name.clone(),
                    missing_marker: marker,
                });
                columns.push(values);
            }
            ColumnKind::Categorical => {
                let is_missing = |c: &str| c.is_empty() || col.missing_marker.as_ref().is_some_and(|m| m.matches(c));
                let present: Vec<&str> = cells.iter().map(String::as_str).filter(|c| !is_missing(c)).collect();
                if present.is_empty() {
                    return Err(Error::AllMissing(col.name.clone()));
                }
                let enc = encode_categorical(&present)?;
                let width = enc.matrix.n_cols();
                let names: Vec<String> = if width == 1 {
                    vec![col.name.clone()]
                } else {
                    enc.class_names.iter().map(|c| format!("{}={}", col.name, c)).collect()
                };
                let mut encoded = vec![Vec::with_capacity(n); width];
                let mut next_present = 0;
                for cell in cells {
                    if is_missing(cell) {
                        encoded.iter_mut().for_each(|c| c.push(f64::NAN));
                    } else {
                        let row = enc.matrix.row(next_present);
                        next_present += 1;
                        for (c, &v) in encoded.iter_mut().zip(row) {
                            c.push(v);
                        }
                    }
                }
                for (name, values) in names.into_iter().zip(encoded) {
                    features.push(Feature {
                        name,
                        source: col.name.clone(),
                        missing_marker: None,
                    });
                    columns.push(values);
                }
            }
            ColumnKind::Target => {
                if let Some(pos) = cells.iter().position(|c| c.is_empty()) {
                    return Err(Error::Parse {
                        row: pos + 1,
                        column: col.name.clone(),
                        value: String::new(),
                    });
                }
                if cells.is_empty() {
                    continue;
                }
                let enc = encode_categorical(cells)?;
                target = enc.labels();
                class_names = enc.class_names;
            }
        }
    }

    let rows = if columns.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&columns)
    };
    Dataset::new(schema.to_vec(), features, rows, target, class_names)
}

fn match_header(header: &[String], schema: &[ColumnSchema]) -> Result<Vec<usize>> {
    let header_set: HashSet<&str> = header.iter().map(String::as_str).collect();
    let schema_set: HashSet<&str> = schema.iter().map(|c| c.name.as_str()).collect();
    let mut missing: Vec<&str> = schema.iter().map(|c| c.name.as_str()).filter(|n| !header_set.contains(n)).collect();
    let mut extra: Vec<&str> = header.iter().map(String::as_str).filter(|n| !schema_set.contains(n)).collect();
    if !missing.is_empty() || !extra.is_empty() || header.len() != schema.len() {
        missing.sort_unstable();
        extra.sort_unstable();
        return Err(Error::Schema(format!(
            "CSV header does not match schema: missing {missing:?}, unexpected {extra:?}"
        )));
    }
    Ok(schema
        .iter()
        .map(|c| header.iter().position(|h| *h == c.name).unwrap())
        .collect())
}

fn parse_numeric(col: &ColumnSchema, cells: &[String]) -> Result<(Vec<f64>, Option<f64>)> {
    let numeric_marker = match &col.missing_marker {
        Some(MissingMarker::Number(v)) => Some(*v),
        _ => None,
    };
    let values = cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            if cell.is_empty() {
                return Ok(f64::NAN);
            }
            if let Some(MissingMarker::Text(t)) = &col.missing_marker {
                if cell == t {
                    return Ok(f64::NAN);
                }
            }
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: i + 1,
                    column: col.name.clone(),
                    value: cell.clone(),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((values, numeric_marker))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    columns: Vec<ColumnSchema>,
}

/// Parses a schema file:
///
/// ```toml
/// [[columns]]
/// name = "Glucose"
/// kind = "numeric"     # numeric | categorical | target
/// missing = 0          # optional; number or string
/// ```
pub fn parse_schema(text: &str) -> Result<Vec<ColumnSchema>> {
    let file: SchemaFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    validate_schema(&file.columns)?;
    Ok(file.columns)
}

pub fn read_schema_file(path: impl AsRef<Path>) -> Result<Vec<ColumnSchema>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_schema(&text)
}
