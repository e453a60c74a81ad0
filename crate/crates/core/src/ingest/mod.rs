//! Pitch-level datasets: the feature schema, per-pitch records, and the
//! readers and writers that produce them.
//!
//! A [`PitchDataset`] is immutable once built. Every downstream matrix takes
//! its column order from the dataset's [`FeatureSchema`].

mod csv_input;
mod store;
mod xml_input;

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_input::{parse_csv, ColumnMapping};
pub use store::{dataset_paths, load_dataset, save_dataset, DATASET_FORMAT_VERSION};
pub use xml_input::parse_gameday_xml;

/// One column of the feature schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub unit: String,
    pub required: bool,
}

impl FeatureSpec {
    pub fn new(name: &str, unit: &str, required: bool) -> Self {
        FeatureSpec {
            name: name.to_owned(),
            unit: unit.to_owned(),
            required,
        }
    }
}

/// Ordered list of numeric features. The order is the column order of every
/// matrix built from a dataset using this schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct FeatureSchema {
    pub version: String,
    features: Vec<FeatureSpec>,
}

#[derive(Deserialize)]
struct RawSchema {
    version: String,
    features: Vec<FeatureSpec>,
}

impl TryFrom<RawSchema> for FeatureSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        FeatureSchema::with_version(raw.version, raw.features)
    }
}

/// The eleven features of the universal large block.
pub const UNIVERSALITY11: [&str; 11] = [
    "start_speed",
    "end_speed",
    "vy0",
    "pfx_z",
    "az",
    "break_length",
    "break_angle",
    "pfx_x",
    "ax",
    "spin_dir",
    "spin_rate",
];

/// Universality features plus the release-point coordinates used for
/// pitch-subtype extraction.
pub const SUBTYPE13: [&str; 13] = [
    "start_speed",
    "end_speed",
    "vy0",
    "pfx_z",
    "az",
    "break_length",
    "break_angle",
    "pfx_x",
    "ax",
    "spin_dir",
    "spin_rate",
    "x0",
    "z0",
];

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        Self::with_version(DATASET_FORMAT_VERSION.to_string(), features)
    }

    pub fn with_version(version: String, features: Vec<FeatureSpec>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Schema("schema has no features".into()));
        }
        let mut seen = BTreeSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::Schema("empty feature name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
        }
        Ok(FeatureSchema { version, features })
    }

    /// The default 21-feature PITCHf/x schema.
    ///
    /// Eighteen trajectory and spin features plus the plate-crossing
    /// coordinates `px`, `pz` and the strike-zone top `sz_top`. Only
    /// `sz_top` is optional; older Gameday files omit it.
    pub fn pitchfx_default() -> Self {
        let f = FeatureSpec::new;
        let features = vec![
            f("start_speed", "mph", true),
            f("end_speed", "mph", true),
            f("vx0", "ft/s", true),
            f("vy0", "ft/s", true),
            f("vz0", "ft/s", true),
            f("ax", "ft/s^2", true),
            f("ay", "ft/s^2", true),
            f("az", "ft/s^2", true),
            f("pfx_x", "in", true),
            f("pfx_z", "in", true),
            f("break_angle", "deg", true),
            f("break_length", "in", true),
            f("break_y", "ft", true),
            f("spin_dir", "deg", true),
            f("spin_rate", "rpm", true),
            f("x0", "ft", true),
            f("y0", "ft", true),
            f("z0", "ft", true),
            f("px", "ft", true),
            f("pz", "ft", true),
            f("sz_top", "ft", false),
        ];
        FeatureSchema::new(features).expect("default schema is valid")
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Resolves feature names to column indices, failing on the first
    /// unknown name.
    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.index_of(n.as_ref())
                    .ok_or_else(|| Error::Schema(format!("feature `{}` not in schema", n.as_ref())))
            })
            .collect()
    }
}

/// A single pitch.
///
/// Missing values of optional features are stored as NaN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PitchRecord {
    pub pitcher_id: String,
    pub season: i32,
    pub game_date: NaiveDate,
    pub temporal_index: u64,
    pub pitch_type_label: String,
    pub values: Vec<f64>,
}

impl PartialEq for PitchRecord {
    fn eq(&self, other: &Self) -> bool {
        self.pitcher_id == other.pitcher_id
            && self.season == other.season
            && self.game_date == other.game_date
            && self.temporal_index == other.temporal_index
            && self.pitch_type_label == other.pitch_type_label
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl PitchRecord {
    pub fn value(&self, schema: &FeatureSchema, feature: &str) -> Option<f64> {
        schema.index_of(feature).map(|i| self.values[i])
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    pub sources: Vec<String>,
    pub rejected_rows: usize,
}

/// A parsed pitch before temporal indices are assigned.
#[derive(Debug, Clone)]
pub struct RawPitch {
    pub pitcher_id: String,
    pub game_date: NaiveDate,
    pub season: i32,
    pub pitch_type_label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchDataset {
    schema: FeatureSchema,
    records: Vec<PitchRecord>,
    provenance: Provenance,
}

impl PitchDataset {
    /// Builds a dataset from already-indexed records, checking every
    /// invariant.
    pub fn new(schema: FeatureSchema, records: Vec<PitchRecord>, provenance: Provenance) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            check_values(&schema, &r.values).map_err(|e| Error::Dataset(format!("record {i}: {e}")))?;
        }
        if records
            .windows(2)
            .any(|w| w[0].temporal_index >= w[1].temporal_index)
        {
            return Err(Error::Dataset(
                "records must be strictly ordered by temporal_index".into(),
            ));
        }
        Ok(PitchDataset {
            schema,
            records,
            provenance,
        })
    }

    /// Assigns temporal indices as the stable sort rank of
    /// (pitcher, game date, input order) and orders records accordingly.
    pub fn from_raw(schema: FeatureSchema, raw: Vec<RawPitch>, provenance: Provenance) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Dataset("no usable pitches".into()));
        }
        let mut raw = raw;
        raw.sort_by(|a, b| {
            a.pitcher_id
                .cmp(&b.pitcher_id)
                .then(a.game_date.cmp(&b.game_date))
        });
        let records = raw
            .into_iter()
            .enumerate()
            .map(|(i, r)| PitchRecord {
                pitcher_id: r.pitcher_id,
                season: r.season,
                game_date: r.game_date,
                temporal_index: i as u64,
                pitch_type_label: r.pitch_type_label,
                values: r.values,
            })
            .collect();
        PitchDataset::new(schema, records, provenance)
    }

    /// Concatenates datasets sharing one schema and re-assigns temporal
    /// indices over the union.
    pub fn merge(parts: Vec<PitchDataset>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Dataset("nothing to merge".into()))?;
        let schema = first.schema.clone();
        let mut provenance = first.provenance.clone();
        let mut raw: Vec<RawPitch> = first.records.into_iter().map(RawPitch::from).collect();
        for part in iter {
            if part.schema.features != schema.features {
                return Err(Error::Schema("cannot merge datasets with different schemas".into()));
            }
            if provenance.kind != part.provenance.kind {
                provenance.kind = "merged".into();
            }
            provenance.sources.extend(part.provenance.sources);
            provenance.rejected_rows += part.provenance.rejected_rows;
            raw.extend(part.records.into_iter().map(RawPitch::from));
        }
        PitchDataset::from_raw(schema, raw, provenance)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn records(&self) -> &[PitchRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn filter(&self, filter: &PitchFilter) -> PitchDataset {
        self.filter_by(|r| filter.matches(r))
    }

    /// Keeps the records for which `keep` holds. Order, schema and temporal
    /// indices are preserved.
    pub fn filter_by(&self, keep: impl Fn(&PitchRecord) -> bool) -> PitchDataset {
        PitchDataset {
            schema: self.schema.clone(),
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Values of one feature across all records, in record order.
    pub fn column(&self, feature: &str) -> Result<Vec<f64>> {
        let idx = self
            .schema
            .index_of(feature)
            .ok_or_else(|| Error::Schema(format!("feature `{feature}` not in schema")))?;
        Ok(self.records.iter().map(|r| r.values[idx]).collect())
    }

    /// Distinct (pitcher, season) pairs in sorted order.
    pub fn pitcher_seasons(&self) -> Vec<(String, i32)> {
        let set: BTreeSet<(String, i32)> = self
            .records
            .iter()
            .map(|r| (r.pitcher_id.clone(), r.season))
            .collect();
        set.into_iter().collect()
    }

    pub fn pitch_types(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.pitch_type_label.clone()).collect()
    }

    pub fn save(&self, base: impl AsRef<Path>) -> Result<()> {
        save_dataset(self, base)
    }
}

impl From<PitchRecord> for RawPitch {
    fn from(r: PitchRecord) -> Self {
        RawPitch {
            pitcher_id: r.pitcher_id,
            game_date: r.game_date,
            season: r.season,
            pitch_type_label: r.pitch_type_label,
            values: r.values,
        }
    }
}

pub(crate) fn check_values(schema: &FeatureSchema, values: &[f64]) -> std::result::Result<(), String> {
    if values.len() != schema.len() {
        return Err(format!(
            "{} values for a {}-feature schema",
            values.len(),
            schema.len()
        ));
    }
    for (spec, v) in schema.features.iter().zip(values) {
        if spec.required && !v.is_finite() {
            return Err(format!("required feature `{}` is not a finite number", spec.name));
        }
        if v.is_infinite() {
            return Err(format!("feature `{}` is infinite", spec.name));
        }
    }
    Ok(())
}

/// Record selection by pitcher, season and pitch type. Unset fields match
/// everything.
#[derive(Debug, Clone, Default)]
pub struct PitchFilter {
    pub pitchers: Option<BTreeSet<String>>,
    pub seasons: Option<BTreeSet<i32>>,
    pub pitch_types: Option<BTreeSet<String>>,
}

impl PitchFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pitcher(mut self, id: &str) -> Self {
        self.pitchers.get_or_insert_with(BTreeSet::new).insert(id.to_owned());
        self
    }

    pub fn season(mut self, year: i32) -> Self {
        self.seasons.get_or_insert_with(BTreeSet::new).insert(year);
        self
    }

    pub fn seasons(mut self, years: impl IntoIterator<Item = i32>) -> Self {
        self.seasons.get_or_insert_with(BTreeSet::new).extend(years);
        self
    }

    pub fn pitch_type(mut self, label: &str) -> Self {
        self.pitch_types
            .get_or_insert_with(BTreeSet::new)
            .insert(label.to_owned());
        self
    }

    pub fn matches(&self, r: &PitchRecord) -> bool {
        self.pitchers.as_ref().is_none_or(|s| s.contains(&r.pitcher_id))
            && self.seasons.as_ref().is_none_or(|s| s.contains(&r.season))
            && self
                .pitch_types
                .as_ref()
                .is_none_or(|s| s.contains(&r.pitch_type_label))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn small_schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::new("start_speed", "mph", true),
            FeatureSpec::new("spin_rate", "rpm", true),
            FeatureSpec::new("sz_top", "ft", false),
        ])
        .unwrap()
    }

    pub fn raw(pitcher: &str, date: &str, ty: &str, values: Vec<f64>) -> RawPitch {
        let game_date = NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap();
        RawPitch {
            pitcher_id: pitcher.into(),
            season: chrono::Datelike::year(&game_date),
            game_date,
            pitch_type_label: ty.into(),
            values,
        }
    }

    pub fn mixed() -> PitchDataset {
        let rows = vec![
            raw("kershaw", "2013-04-01", "FF", vec![93.1, 2300.0, 3.4]),
            raw("verlander", "2013-04-02", "FF", vec![95.0, 2500.0, f64::NAN]),
            raw("kershaw", "2013-05-01", "SL", vec![86.2, 2100.0, 3.5]),
            raw("kershaw", "2014-04-03", "FT", vec![92.0, 2200.0, 3.3]),
            raw("kershaw", "2013-04-01", "CU", vec![74.0, 1900.0, 3.4]),
            raw("verlander", "2013-04-02", "CH", vec![85.0, 1700.0, 3.6]),
        ];
        PitchDataset::from_raw(small_schema(), rows, Provenance::default()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn default_schema_has_21_features_including_named_ones() {
        let s = FeatureSchema::pitchfx_default();
        assert_eq!(s.len(), 21);
        for name in [
            "start_speed", "end_speed", "vx0", "vy0", "vz0", "ax", "ay", "az", "pfx_x", "pfx_z",
            "break_angle", "break_length", "break_y", "spin_dir", "spin_rate", "x0", "y0", "z0",
        ] {
            assert!(s.index_of(name).is_some(), "{name}");
        }
        assert!(s.indices_of(&UNIVERSALITY11).is_ok());
        assert!(s.indices_of(&SUBTYPE13).is_ok());
    }

    #[test]
    fn duplicate_feature_names_rejected() {
        let err = FeatureSchema::new(vec![
            FeatureSpec::new("a", "", true),
            FeatureSpec::new("a", "", true),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn temporal_index_is_rank_of_pitcher_date_and_input_order() {
        let ds = mixed();
        let order: Vec<(&str, &str)> = ds
            .records()
            .iter()
            .map(|r| (r.pitcher_id.as_str(), r.pitch_type_label.as_str()))
            .collect();
        assert_eq!(
            order,
            vec![
                ("kershaw", "FF"),
                ("kershaw", "CU"),
                ("kershaw", "SL"),
                ("kershaw", "FT"),
                ("verlander", "FF"),
                ("verlander", "CH"),
            ]
        );
        let idx: Vec<u64> = ds.records().iter().map(|r| r.temporal_index).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn filter_by_pitcher_and_season() {
        let ds = mixed();
        let f = ds.filter(&PitchFilter::new().pitcher("kershaw").season(2013));
        assert_eq!(f.len(), 3);
        assert!(f
            .records()
            .iter()
            .all(|r| r.pitcher_id == "kershaw" && r.season == 2013));
    }

    #[test]
    fn always_true_filter_is_identity() {
        let ds = mixed();
        assert_eq!(ds.filter_by(|_| true), ds);
        assert_eq!(ds.filter(&PitchFilter::new()), ds);
    }

    #[test]
    fn filter_on_pitch_type_set_matches_independent_count() {
        let ds = mixed();
        let f = ds.filter(&PitchFilter::new().pitch_type("FF").pitch_type("FT"));
        let mut ff = 0;
        let mut ft = 0;
        for r in ds.records() {
            match r.pitch_type_label.as_str() {
                "FF" => ff += 1,
                "FT" => ft += 1,
                _ => {}
            }
        }
        assert_eq!(f.len(), ff + ft);
    }

    #[test]
    fn empty_filter_result_is_allowed() {
        let ds = mixed();
        assert!(ds.filter(&PitchFilter::new().pitcher("nobody")).is_empty());
    }

    #[test]
    fn records_must_match_schema_width() {
        let schema = small_schema();
        let bad = vec![raw("a", "2013-01-01", "FF", vec![1.0])];
        assert!(PitchDataset::from_raw(schema, bad, Provenance::default()).is_err());
    }

    #[test]
    fn nan_in_optional_feature_is_allowed_but_not_in_required() {
        let schema = small_schema();
        assert!(check_values(&schema, &[1.0, 2.0, f64::NAN]).is_ok());
        assert!(check_values(&schema, &[f64::NAN, 2.0, 1.0]).is_err());
    }

    #[test]
    fn merge_reassigns_indices_over_union() {
        let ds = mixed();
        let a = ds.filter(&PitchFilter::new().pitcher("verlander"));
        let b = ds.filter(&PitchFilter::new().pitcher("kershaw"));
        let merged = PitchDataset::merge(vec![a, b]).unwrap();
        assert_eq!(merged.records(), ds.records());
    }
}
