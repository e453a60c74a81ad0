use std::collections::HashMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use super::{FeatureSchema, PitchDataset, Provenance, RawPitch};
use crate::error::{Error, Result};

/// Maps logical column names (feature names plus `pitcher`, `date`,
/// `pitch_type` and the optional `season`) to CSV header names. Names not in
/// the map are looked up verbatim.
#[derive(Debug, Clone, Default)]
pub struct ColumnMapping {
    map: HashMap<String, String>,
}

impl ColumnMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, logical: &str, header: &str) -> Self {
        self.map.insert(logical.to_owned(), header.to_owned());
        self
    }

    pub fn header_for<'a>(&'a self, logical: &'a str) -> &'a str {
        self.map.get(logical).map(String::as_str).unwrap_or(logical)
    }
}

impl From<HashMap<String, String>> for ColumnMapping {
    fn from(map: HashMap<String, String>) -> Self {
        ColumnMapping { map }
    }
}

pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y/%m/%d"))
        .ok()
}

/// Reads a headered CSV file into a dataset.
///
/// Rows with a missing or unparseable required feature, or an unreadable
/// date, are rejected and counted in the dataset provenance; the parse
/// continues. A missing required column is fatal.
pub fn parse_csv(path: impl AsRef<Path>, schema: &FeatureSchema, mapping: &ColumnMapping) -> Result<PitchDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |logical: &str| {
        let h = mapping.header_for(logical);
        headers.iter().position(|c| c.trim() == h)
    };
    let require = |logical: &str| {
        find(logical).ok_or_else(|| {
            Error::Schema(format!(
                "{}: missing required column `{}`",
                path.display(),
                mapping.header_for(logical)
            ))
        })
    };

    let pitcher_col = require("pitcher")?;
    let date_col = require("date")?;
    let type_col = require("pitch_type")?;
    let season_col = find("season");
    let mut feature_cols = Vec::with_capacity(schema.len());
    for spec in schema.features() {
        let col = if spec.required {
            Some(require(&spec.name)?)
        } else {
            find(&spec.name)
        };
        feature_cols.push(col);
    }

    let mut raw = Vec::new();
    let mut rejected = 0usize;
    for (row_no, row) in reader.records().enumerate() {
        let line = row_no + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{}:{line}: unreadable row: {e}", path.display());
                rejected += 1;
                continue;
            }
        };
        match convert_row(&row, schema, &feature_cols, pitcher_col, date_col, type_col, season_col) {
            Ok(p) => raw.push(p),
            Err(reason) => {
                log::warn!("{}:{line}: row rejected: {reason}", path.display());
                rejected += 1;
            }
        }
    }
    if rejected > 0 {
        log::info!("{}: {rejected} row(s) rejected", path.display());
    }
    let provenance = Provenance {
        kind: "csv".into(),
        sources: vec![source_name(path)],
        rejected_rows: rejected,
    };
    PitchDataset::from_raw(schema.clone(), raw, provenance)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
}

pub(crate) fn source_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn convert_row(
    row: &csv::StringRecord,
    schema: &FeatureSchema,
    feature_cols: &[Option<usize>],
    pitcher_col: usize,
    date_col: usize,
    type_col: usize,
    season_col: Option<usize>,
) -> std::result::Result<RawPitch, String> {
    let cell = |i: usize| row.get(i).map(str::trim).unwrap_or("");
    let pitcher_id = cell(pitcher_col);
    if pitcher_id.is_empty() {
        return Err("empty pitcher".into());
    }
    let game_date = parse_date(cell(date_col)).ok_or_else(|| format!("bad date `{}`", cell(date_col)))?;
    let season = match season_col.map(cell) {
        Some(s) if !s.is_empty() => s.parse::<i32>().map_err(|_| format!("bad season `{s}`"))?,
        _ => game_date.year(),
    };
    let pitch_type = match cell(type_col) {
        "" => "UN".to_owned(),
        s => s.to_owned(),
    };

    let mut values = Vec::with_capacity(schema.len());
    for (spec, col) in schema.features().iter().zip(feature_cols) {
        let text = col.map(cell).unwrap_or("");
        let parsed = if text.is_empty() {
            None
        } else {
            text.parse::<f64>().ok().filter(|v| v.is_finite())
        };
        match parsed {
            Some(v) => values.push(v),
            None if spec.required => {
                return Err(format!("required feature `{}` has value `{text}`", spec.name))
            }
            None => values.push(f64::NAN),
        }
    }
    Ok(RawPitch {
        pitcher_id: pitcher_id.to_owned(),
        game_date,
        season,
        pitch_type_label: pitch_type,
        values,
    })
}
