//! CSV feature streams.
//!
//! One sample per row behind a mandatory header. Leading `id`, `class`,
//! `identity` and `part` columns are recognised by name and kept as
//! metadata; every remaining column is a feature.

use std::io::Read;

use crate::error::{Error, Result};

pub const META_COLUMNS: [&str; 4] = ["id", "class", "identity", "part"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: Option<String>,
    pub class: Option<String>,
    pub identity: Option<String>,
    pub part: Option<String>,
    pub values: Vec<f64>,
}

impl FeatureRow {
    pub fn is_abnormal(&self) -> bool {
        self.class
            .as_deref()
            .is_some_and(|c| c.eq_ignore_ascii_case("abnormal") || c == "1")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }
}

/// Reads a feature table. A completely empty input yields an empty table.
/// Row numbers in errors count data rows from 1.
pub fn read_features<R: Read>(reader: R) -> Result<FeatureTable> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.is_empty() {
        return Ok(FeatureTable::default());
    }
    let mut meta: [Option<usize>; 4] = [None; 4];
    let mut first_feature = 0;
    for (i, name) in headers.iter().enumerate() {
        match META_COLUMNS
            .iter()
            .position(|m| name.eq_ignore_ascii_case(m))
        {
            Some(k) if meta[k].is_none() => {
                meta[k] = Some(i);
                first_feature = i + 1;
            }
            _ => break,
        }
    }
    let feature_names: Vec<String> = headers
        .iter()
        .skip(first_feature)
        .map(str::to_owned)
        .collect();
    let width = headers.len();

    let mut rows = Vec::new();
    for (idx, record) in csv.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        if record.len() != width {
            return Err(Error::BadRow {
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let values = record
            .iter()
            .skip(first_feature)
            .map(|v| {
                let x: f64 = v.parse().map_err(|e| Error::BadRow {
                    row,
                    message: format!("`{v}`: {e}"),
                })?;
                if !x.is_finite() {
                    return Err(Error::BadRow {
                        row,
                        message: format!("non-finite value `{v}`"),
                    });
                }
                Ok(x)
            })
            .collect::<Result<Vec<f64>>>()?;
        let get = |k: usize| meta[k].map(|i| record[i].to_owned());
        rows.push(FeatureRow {
            id: get(0),
            class: get(1),
            identity: get(2),
            part: get(3),
            values,
        });
    }
    Ok(FeatureTable {
        feature_names,
        rows,
    })
}

pub fn read_features_file(path: impl AsRef<std::path::Path>) -> Result<FeatureTable> {
    read_features(std::fs::File::open(path)?)
}
