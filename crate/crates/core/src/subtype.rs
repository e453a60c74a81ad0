//! Pitch subtypes and their likelihood over time.
//!
//! The pitches of one type form a pitches-by-features matrix (columns
//! standardized). Data Mechanics clusters it, and the row tree cut at six
//! clusters defines the subtypes, numbered by leaf order from left to
//! right. The share of baseline pitches in each subtype is the
//! categorical pattern distribution. A pitch's likelihood is the share of
//! its subtype.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PitchDataset, PitchRecord};
use crate::mechanics::{dm_iterate, CoupledTrees, DmConfig, RectMatrix};

/// Label used for the pooled group of pitch types that the baseline pitcher
/// never throws.
pub const OTHER_TYPES: &str = "OT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtypePitch {
    pub pitcher_id: String,
    pub temporal_index: u64,
    pub season: i32,
    pub pitch_type: String,
    pub subtype: usize,
}

/// What the pattern distribution was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Seasons(BTreeSet<i32>),
    Pitcher(String),
    /// Nothing of this type was thrown in the baseline: every likelihood is 0.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeModel {
    pub pitch_type: String,
    pub feature_names: Vec<String>,
    pub n_subtypes: usize,
    pub trees: CoupledTrees,
    pub pitches: Vec<SubtypePitch>,
    pub baseline: Option<Baseline>,
    /// Baseline share of each subtype; empty until a baseline is fitted.
    pub pattern_distribution: Vec<f64>,
}

impl SubtypeModel {
    pub fn subtype_of(&self, pitcher_id: &str, temporal_index: u64) -> Option<usize> {
        self.pitches
            .iter()
            .find(|p| p.temporal_index == temporal_index && p.pitcher_id == pitcher_id)
            .map(|p| p.subtype)
    }

    /// Display name of a subtype, e.g. `FF1` for id 0.
    pub fn subtype_name(&self, subtype: usize) -> String {
        format!("{}{}", self.pitch_type, subtype + 1)
    }

    pub fn is_fitted(&self) -> bool {
        self.baseline.is_some()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    fn with_baseline(&self, baseline: Baseline, in_baseline: impl Fn(&SubtypePitch) -> bool) -> Result<SubtypeModel> {
        let mut counts = vec![0u64; self.n_subtypes];
        for p in self.pitches.iter().filter(|p| in_baseline(p)) {
            counts[p.subtype] += 1;
        }
        let total: u64 = counts.iter().sum();
        let (baseline, pattern_distribution) = if total == 0 {
            (Baseline::Empty, vec![0.0; self.n_subtypes])
        } else {
            (baseline, counts.iter().map(|&c| c as f64 / total as f64).collect())
        };
        Ok(SubtypeModel {
            baseline: Some(baseline),
            pattern_distribution,
            ..self.clone()
        })
    }
}

fn pitch_label(r: &PitchRecord) -> String {
    format!("{}#{}", r.pitcher_id, r.temporal_index)
}

/// Clusters the `pitch_type` pitches of `dataset` into subtypes. The row
/// cut of `config` (six by default) is lowered to the number of pitches
/// when there are fewer.
pub fn extract_subtypes<S: AsRef<str>>(
    dataset: &PitchDataset,
    pitch_type: &str,
    features: &[S],
    config: &DmConfig,
) -> Result<SubtypeModel> {
    let records: Vec<&PitchRecord> = dataset
        .records()
        .iter()
        .filter(|r| r.pitch_type_label == pitch_type)
        .collect();
    extract_from_records(dataset, &records, pitch_type, features, config)
}

fn extract_from_records<S: AsRef<str>>(
    dataset: &PitchDataset,
    records: &[&PitchRecord],
    label: &str,
    features: &[S],
    config: &DmConfig,
) -> Result<SubtypeModel> {
    let n = records.len();
    if n < 2 {
        return Err(Error::Dataset(format!(
            "pitch type {label}: {n} pitch(es), at least 2 are needed for subtypes"
        )));
    }
    let cols = dataset.schema().indices_of(features)?;
    let names: Vec<String> = features.iter().map(|f| f.as_ref().to_owned()).collect();
    let mut values = Vec::with_capacity(n * cols.len());
    for r in records {
        for (&c, name) in cols.iter().zip(&names) {
            let v = r.values[c];
            if v.is_nan() {
                return Err(Error::Dataset(format!(
                    "pitch {} has no value for {name}",
                    pitch_label(r)
                )));
            }
            values.push(v);
        }
    }
    let matrix = RectMatrix::from_row_major(records.iter().map(|r| pitch_label(r)).collect(), names.clone(), values)?
        .standardize_columns();

    let mut cfg = *config;
    if cfg.row_cut_k > n {
        log::warn!("pitch type {label}: only {n} pitches, using {n} subtypes instead of {}", cfg.row_cut_k);
        cfg.row_cut_k = n;
    }
    cfg.col_cut_k = cfg.col_cut_k.min(names.len());
    let trees = dm_iterate(&matrix, &cfg)?;
    let pitches = records
        .iter()
        .zip(&trees.row_cut.labels)
        .map(|(r, &s)| SubtypePitch {
            pitcher_id: r.pitcher_id.clone(),
            temporal_index: r.temporal_index,
            season: r.season,
            pitch_type: r.pitch_type_label.clone(),
            subtype: s,
        })
        .collect();
    Ok(SubtypeModel {
        pitch_type: label.to_owned(),
        feature_names: names,
        n_subtypes: cfg.row_cut_k,
        trees,
        pitches,
        baseline: None,
        pattern_distribution: Vec::new(),
    })
}

/// Pattern distribution over the pitches thrown in `baseline_seasons`.
/// Subtypes without baseline pitches get probability 0.
pub fn fit_baseline(model: &SubtypeModel, baseline_seasons: &BTreeSet<i32>) -> Result<SubtypeModel> {
    if !model.pitches.iter().any(|p| baseline_seasons.contains(&p.season)) {
        return Err(Error::Dataset(format!(
            "no {} pitches in baseline seasons {:?}",
            model.pitch_type, baseline_seasons
        )));
    }
    model.with_baseline(Baseline::Seasons(baseline_seasons.clone()), |p| {
        baseline_seasons.contains(&p.season)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodPoint {
    pub temporal_index: u64,
    pub season: i32,
    pub subtype: usize,
    pub likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSeries {
    pub pitcher_id: String,
    pub pitch_type: String,
    pub points: Vec<LikelihoodPoint>,
}

impl LikelihoodSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `temporal_index,season,pitch_type,subtype,likelihood` rows; subtype
    /// ids start at 0.
    pub fn to_csv(&self) -> String {
        write_series_csv(std::slice::from_ref(self))
    }
}

/// Several series in one CSV table, rows in series order.
pub fn write_series_csv(series: &[LikelihoodSeries]) -> String {
    let mut out = String::from("temporal_index,season,pitch_type,subtype,likelihood\n");
    for s in series {
        for p in &s.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.temporal_index, p.season, s.pitch_type, p.subtype, p.likelihood
            );
        }
    }
    out
}

/// One point per `dataset` pitch of the model's type, in temporal order.
/// The model must be fitted and must contain every such pitch.
pub fn likelihood_series(model: &SubtypeModel, dataset: &PitchDataset) -> Result<Vec<LikelihoodSeries>> {
    if !model.is_fitted() {
        return Err(Error::arg("fit a baseline before computing likelihoods"));
    }
    let subtype: HashMap<(&str, u64), usize> = model
        .pitches
        .iter()
        .map(|p| ((p.pitcher_id.as_str(), p.temporal_index), p.subtype))
        .collect();
    let types: BTreeSet<&str> = model.pitches.iter().map(|p| p.pitch_type.as_str()).collect();
    let mut by_pitcher: BTreeMap<&str, Vec<LikelihoodPoint>> = BTreeMap::new();
    for r in dataset.records().iter().filter(|r| types.contains(r.pitch_type_label.as_str())) {
        let s = *subtype
            .get(&(r.pitcher_id.as_str(), r.temporal_index))
            .ok_or_else(|| Error::arg(format!("pitch {} is not part of the model", pitch_label(r))))?;
        by_pitcher.entry(&r.pitcher_id).or_default().push(LikelihoodPoint {
            temporal_index: r.temporal_index,
            season: r.season,
            subtype: s,
            likelihood: model.pattern_distribution[s],
        });
    }
    Ok(by_pitcher
        .into_iter()
        .map(|(pitcher, mut points)| {
            points.sort_by_key(|p| p.temporal_index);
            LikelihoodSeries {
                pitcher_id: pitcher.to_owned(),
                pitch_type: model.pitch_type.clone(),
                points,
            }
        })
        .collect())
}

/// Subtype models and series for every pitch type `pitcher` throws, against
/// the baseline seasons. A type never thrown in the baseline gets an
/// all-zero series.
pub fn pitcher_series<S: AsRef<str>>(
    dataset: &PitchDataset,
    pitcher: &str,
    baseline_seasons: &BTreeSet<i32>,
    features: &[S],
    config: &DmConfig,
) -> Result<Vec<(SubtypeModel, LikelihoodSeries)>> {
    let own = dataset.filter_by(|r| r.pitcher_id == pitcher);
    if own.is_empty() {
        return Err(Error::Dataset(format!("no pitches for pitcher {pitcher}")));
    }
    let mut out = Vec::new();
    for pitch_type in own.pitch_types() {
        let count = own.records().iter().filter(|r| r.pitch_type_label == pitch_type).count();
        if count < 2 {
            log::warn!("{pitcher} {pitch_type}: {count} pitch(es), skipped");
            continue;
        }
        let model = extract_subtypes(&own, &pitch_type, features, config)?;
        let fitted = match fit_baseline(&model, baseline_seasons) {
            Ok(m) => m,
            Err(Error::Dataset(_)) => {
                log::info!("{pitcher} {pitch_type}: not thrown in the baseline, likelihood 0");
                model.with_baseline(Baseline::Empty, |_| false)?
            }
            Err(e) => return Err(e),
        };
        let series = likelihood_series(&fitted, &own)?.into_iter().next().expect("pitcher has pitches");
        out.push((fitted, series));
    }
    Ok(out)
}

/// Subtypes extracted from the pooled pitches of every pitcher, with all
/// pitches of `baseline_pitcher` as the baseline. `pitch_type` may be
/// [`OTHER_TYPES`] to pool every type the baseline pitcher never throws;
/// that group has an empty baseline and therefore zero likelihoods.
/// Returns the model and one series per pitcher that threw the type.
pub fn cross_pitcher_series<S: AsRef<str>>(
    dataset: &PitchDataset,
    baseline_pitcher: &str,
    pitch_type: &str,
    features: &[S],
    config: &DmConfig,
) -> Result<(SubtypeModel, Vec<LikelihoodSeries>)> {
    let repertoire: BTreeSet<&str> = dataset
        .records()
        .iter()
        .filter(|r| r.pitcher_id == baseline_pitcher)
        .map(|r| r.pitch_type_label.as_str())
        .collect();
    if repertoire.is_empty() {
        return Err(Error::Dataset(format!("baseline pitcher {baseline_pitcher} has no pitches")));
    }
    let records: Vec<&PitchRecord> = dataset
        .records()
        .iter()
        .filter(|r| {
            if pitch_type == OTHER_TYPES {
                !repertoire.contains(r.pitch_type_label.as_str())
            } else {
                r.pitch_type_label == pitch_type
            }
        })
        .collect();
    let model = extract_from_records(dataset, &records, pitch_type, features, config)?;
    let fitted = model.with_baseline(Baseline::Pitcher(baseline_pitcher.to_owned()), |p| {
        p.pitcher_id == baseline_pitcher
    })?;
    if fitted.baseline == Some(Baseline::Empty) {
        log::info!("{baseline_pitcher} throws no {pitch_type}; all likelihoods are 0");
    }
    let series = likelihood_series(&fitted, dataset)?;
    Ok((fitted, series))
}
