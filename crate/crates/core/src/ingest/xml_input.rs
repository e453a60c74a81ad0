use std::path::Path;

use chrono::{Datelike, NaiveDate};

use super::csv_input::{parse_date, source_name};
use super::{FeatureSchema, PitchDataset, Provenance, RawPitch};
use crate::error::{Error, Result};

/// Reads an MLB Gameday `inning_all.xml` style file.
///
/// Every `<pitch>` element carrying all required feature attributes becomes
/// one record; the pitcher id comes from the enclosing `<atbat pitcher=..>`.
/// The game date is taken from the pitch's `tfs_zulu` or `sv_id` attribute,
/// falling back to a `gid_YYYY_MM_DD` component of the file path.
pub fn parse_gameday_xml(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<PitchDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc = roxmltree::Document::parse(&text).map_err(|e| Error::Xml {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let path_date = date_from_path(path);

    let mut raw = Vec::new();
    let mut skipped = 0usize;
    for (n, pitch) in doc
        .descendants()
        .filter(|n| n.has_tag_name("pitch"))
        .enumerate()
    {
        match convert_pitch(pitch, schema, path_date) {
            Ok(p) => raw.push(p),
            Err(reason) => {
                log::warn!("{}: <pitch> #{n} skipped: {reason}", path.display());
                skipped += 1;
            }
        }
    }
    if skipped > 0 {
        log::info!("{}: {skipped} <pitch> element(s) skipped", path.display());
    }
    let provenance = Provenance {
        kind: "gameday-xml".into(),
        sources: vec![source_name(path)],
        rejected_rows: skipped,
    };
    PitchDataset::from_raw(schema.clone(), raw, provenance)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
}

fn convert_pitch(
    pitch: roxmltree::Node<'_, '_>,
    schema: &FeatureSchema,
    path_date: Option<NaiveDate>,
) -> std::result::Result<RawPitch, String> {
    let pitcher_id = pitch
        .attribute("pitcher")
        .or_else(|| {
            pitch
                .ancestors()
                .find(|a| a.has_tag_name("atbat"))
                .and_then(|a| a.attribute("pitcher"))
        })
        .ok_or("no pitcher id")?;
    let game_date = pitch
        .attribute("tfs_zulu")
        .and_then(|s| parse_date(s.get(..10)?))
        .or_else(|| pitch.attribute("sv_id").and_then(date_from_sv_id))
        .or(path_date)
        .ok_or("no game date")?;

    let mut values = Vec::with_capacity(schema.len());
    for spec in schema.features() {
        let v = pitch
            .attribute(spec.name.as_str())
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite());
        match v {
            Some(v) => values.push(v),
            None if spec.required => return Err(format!("missing required attribute `{}`", spec.name)),
            None => values.push(f64::NAN),
        }
    }
    let pitch_type = match pitch.attribute("pitch_type") {
        Some(s) if !s.trim().is_empty() => s.trim().to_owned(),
        _ => "UN".to_owned(),
    };
    Ok(RawPitch {
        pitcher_id: pitcher_id.to_owned(),
        season: game_date.year(),
        game_date,
        pitch_type_label: pitch_type,
        values,
    })
}

// sv_id looks like `130401_201536` (yymmdd_hhmmss).
fn date_from_sv_id(s: &str) -> Option<NaiveDate> {
    let d = s.get(..6)?;
    let yy: i32 = d.get(..2)?.parse().ok()?;
    let mm: u32 = d.get(2..4)?.parse().ok()?;
    let dd: u32 = d.get(4..6)?.parse().ok()?;
    NaiveDate::from_ymd_opt(2000 + yy, mm, dd)
}

fn date_from_path(path: &Path) -> Option<NaiveDate> {
    path.components().find_map(|c| {
        let s = c.as_os_str().to_str()?;
        let rest = s.strip_prefix("gid_")?;
        let mut parts = rest.split('_');
        let y = parts.next()?.parse().ok()?;
        let m = parts.next()?.parse().ok()?;
        let d = parts.next()?.parse().ok()?;
        NaiveDate::from_ymd_opt(y, m, d)
    })
}
