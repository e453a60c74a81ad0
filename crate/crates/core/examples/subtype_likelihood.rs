//! Extracts fastball subtypes and tracks how likely each pitch is under
//! the baseline seasons' subtype distribution. Two subtypes only appear in
//! the final season, so their pitches score zero.
//!
//! cargo run --release --example subtype_likelihood

use std::collections::BTreeSet;

use datamech::ingest::SUBTYPE13;
use datamech::mechanics::DmConfig;
use datamech::subtype::pitcher_series;
use datamech::synthetic::PlantedSubtypes;

fn main() -> datamech::Result<()> {
    let planted = PlantedSubtypes {
        emerging: 2,
        ..PlantedSubtypes::default()
    }
    .generate(3);
    let baseline: BTreeSet<i32> = (2012..=2014).collect();
    for (model, series) in pitcher_series(&planted.dataset, "kershaw", &baseline, &SUBTYPE13, &DmConfig::default())? {
        let shares: Vec<String> = model
            .pattern_distribution
            .iter()
            .enumerate()
            .map(|(s, p)| format!("{}={p:.3}", model.subtype_name(s)))
            .collect();
        println!("{}: {}", model.pitch_type, shares.join(" "));
        let mut by_season: Vec<(i32, f64, usize)> = Vec::new();
        for p in &series.points {
            match by_season.last_mut() {
                Some((s, sum, n)) if *s == p.season => {
                    *sum += p.likelihood;
                    *n += 1;
                }
                _ => by_season.push((p.season, p.likelihood, 1)),
            }
        }
        for (season, sum, n) in by_season {
            println!("  {season}: mean likelihood {:.3} over {n} pitches", sum / n as f64);
        }
    }
    Ok(())
}
