//! On-disk dataset format: `<name>.data.csv` holds one row per pitch,
//! `<name>.schema.json` holds `{version, features:[{name,unit,required}], provenance}`.
//!
//! The data file header is `temporal_index,pitcher_id,season,game_date,pitch_type`
//! followed by the feature names in schema order. Floats are written in the
//! shortest form that parses back to the same value; missing optional
//! values are empty cells.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csv_input::parse_date;
use super::{FeatureSchema, FeatureSpec, PitchDataset, PitchRecord, Provenance};
use crate::error::{Error, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;

const META_COLUMNS: [&str; 5] = ["temporal_index", "pitcher_id", "season", "game_date", "pitch_type"];

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    version: String,
    features: Vec<FeatureSpec>,
    #[serde(default)]
    provenance: Provenance,
}

/// The `(data, schema)` file pair behind a dataset base path.
pub fn dataset_paths(base: &Path) -> (PathBuf, PathBuf) {
    let s = base.to_string_lossy();
    let stem = s
        .strip_suffix(".data.csv")
        .or_else(|| s.strip_suffix(".schema.json"))
        .unwrap_or(&s)
        .to_owned();
    (
        PathBuf::from(format!("{stem}.data.csv")),
        PathBuf::from(format!("{stem}.schema.json")),
    )
}

/// Writes `<base>.data.csv` and `<base>.schema.json`. Output is byte-stable
/// for equal datasets.
pub fn save_dataset(dataset: &PitchDataset, base: impl AsRef<Path>) -> Result<()> {
    let (data_path, schema_path) = dataset_paths(base.as_ref());
    if let Some(parent) = data_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }

    let schema_file = SchemaFile {
        version: dataset.schema().version.clone(),
        features: dataset.schema().features().to_vec(),
        provenance: dataset.provenance().clone(),
    };
    let mut json = serde_json::to_string_pretty(&schema_file)?;
    json.push('\n');
    std::fs::write(&schema_path, json).map_err(|e| Error::io(&schema_path, e))?;

    let mut w = csv::Writer::from_path(&data_path)?;
    let mut header: Vec<&str> = META_COLUMNS.to_vec();
    header.extend(dataset.schema().names());
    w.write_record(&header)?;
    for r in dataset.records() {
        let mut row = vec![
            r.temporal_index.to_string(),
            r.pitcher_id.clone(),
            r.season.to_string(),
            r.game_date.format("%Y-%m-%d").to_string(),
            r.pitch_type_label.clone(),
        ];
        row.extend(r.values.iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(&data_path, e))?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset`].
pub fn load_dataset(base: impl AsRef<Path>) -> Result<PitchDataset> {
    let (data_path, schema_path) = dataset_paths(base.as_ref());
    let text = std::fs::read_to_string(&schema_path).map_err(|e| Error::io(&schema_path, e))?;
    let file: SchemaFile = serde_json::from_str(&text)?;
    let version: u32 = file.version.trim().parse().map_err(|_| Error::Version {
        found: file.version.clone(),
        supported: DATASET_FORMAT_VERSION,
    })?;
    if version > DATASET_FORMAT_VERSION {
        return Err(Error::Version {
            found: file.version,
            supported: DATASET_FORMAT_VERSION,
        });
    }
    let schema = FeatureSchema::with_version(file.version, file.features)?;

    let mut reader = csv::Reader::from_path(&data_path)?;
    let header = reader.headers()?.clone();
    let expected: Vec<&str> = META_COLUMNS.iter().copied().chain(schema.names()).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema(format!(
            "{}: header does not match schema",
            data_path.display()
        )));
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Dataset(format!("{}: row {}: bad {what}", data_path.display(), i + 2));
        let values = row
            .iter()
            .skip(META_COLUMNS.len())
            .map(|c| {
                if c.is_empty() {
                    Ok(f64::NAN)
                } else {
                    c.parse::<f64>().map_err(|_| bad("number"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push(PitchRecord {
            temporal_index: row[0].parse().map_err(|_| bad("temporal_index"))?,
            pitcher_id: row[1].to_owned(),
            season: row[2].parse().map_err(|_| bad("season"))?,
            game_date: parse_date(&row[3]).ok_or_else(|| bad("date"))?,
            pitch_type_label: row[4].to_owned(),
            values,
        });
    }
    PitchDataset::new(schema, records, file.provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::fixtures::mixed;
    use crate::ingest::PitchFilter;

    #[test]
    fn round_trip_preserves_every_field() {
        let dir = tempfile::tempdir().unwrap();
        let ds = mixed();
        save_dataset(&ds, dir.path().join("m")).unwrap();
        let back = load_dataset(dir.path().join("m")).unwrap();
        assert_eq!(back, ds);
        assert!(back.records()[4].values[2].is_nan());
    }

    #[test]
    fn suffixed_paths_resolve_to_the_pair() {
        let dir = tempfile::tempdir().unwrap();
        let ds = mixed();
        save_dataset(&ds, dir.path().join("m.data.csv")).unwrap();
        assert!(dir.path().join("m.schema.json").exists());
        assert_eq!(load_dataset(dir.path().join("m.schema.json")).unwrap(), ds);
    }

    #[test]
    fn two_saves_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let ds = mixed();
        save_dataset(&ds, dir.path().join("a")).unwrap();
        save_dataset(&ds, dir.path().join("b")).unwrap();
        for ext in ["data.csv", "schema.json"] {
            let a = std::fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
            let b = std::fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
            assert_eq!(a, b, "{ext}");
        }
    }

    #[test]
    fn newer_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ds = mixed();
        save_dataset(&ds, dir.path().join("m")).unwrap();
        let sp = dir.path().join("m.schema.json");
        let text = std::fs::read_to_string(&sp).unwrap().replace("\"version\": \"1\"", "\"version\": \"2\"");
        std::fs::write(&sp, text).unwrap();
        let err = load_dataset(dir.path().join("m")).unwrap_err();
        assert!(matches!(err, Error::Version { .. }), "{err}");
    }

    #[test]
    fn filter_commutes_with_persistence() {
        let dir = tempfile::tempdir().unwrap();
        let ds = mixed();
        let f = PitchFilter::new().pitcher("kershaw");
        save_dataset(&ds, dir.path().join("all")).unwrap();
        let filtered_after = load_dataset(dir.path().join("all")).unwrap().filter(&f);
        save_dataset(&ds.filter(&f), dir.path().join("sub")).unwrap();
        let filtered_before = load_dataset(dir.path().join("sub")).unwrap();
        assert_eq!(filtered_after, filtered_before);
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_dataset(dir.path().join("none")), Err(Error::Io { .. })));
    }
}
