//! Reads a CSV of pitches whose headers differ from the schema names,
//! then filters and saves the dataset.
//!
//! cargo run --example ingest_csv [OUT_DIR]

use datamech::ingest::{load_dataset, parse_csv, ColumnMapping, FeatureSchema, PitchFilter};

fn main() -> datamech::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("datamech-examples"));
    std::fs::create_dir_all(&out).map_err(|e| datamech::Error::Io { path: out.clone(), source: e })?;

    let schema = FeatureSchema::pitchfx_default();
    let mut header = vec!["player".to_string(), "date".into(), "pitch_type".into()];
    header.extend(schema.names().iter().map(|s| s.to_string()));
    let mut csv = header.join(",") + "\n";
    for (i, (who, date, ty)) in [
        ("kershaw", "2013-04-01", "FF"),
        ("kershaw", "2013-04-01", "CU"),
        ("kershaw", "2014-05-02", "SL"),
        ("greinke", "2013-06-11", "FF"),
    ]
    .iter()
    .enumerate()
    {
        let values: Vec<String> = (0..schema.len()).map(|j| format!("{}", 1.0 + i as f64 + 0.1 * j as f64)).collect();
        csv += &format!("{who},{date},{ty},{}\n", values.join(","));
    }
    // one row with a missing required feature is rejected, not fatal
    csv += &format!("kershaw,2013-04-02,FF,{}\n", vec![""; schema.len()].join(","));
    let input = out.join("pitches.csv");
    std::fs::write(&input, csv).map_err(|e| datamech::Error::Io { path: input.clone(), source: e })?;

    let mapping = ColumnMapping::new().with("pitcher", "player");
    let ds = parse_csv(&input, &schema, &mapping)?;
    println!("{} pitches, {} rejected", ds.len(), ds.provenance().rejected_rows);
    for (pitcher, season) in ds.pitcher_seasons() {
        let n = ds.filter(&PitchFilter::new().pitcher(&pitcher).season(season)).len();
        println!("  {pitcher} {season}: {n}");
    }

    let base = out.join("example-dataset");
    ds.save(&base)?;
    let back = load_dataset(&base)?;
    assert_eq!(back.records(), ds.records());
    println!("saved to {}.data.csv", base.display());
    Ok(())
}
