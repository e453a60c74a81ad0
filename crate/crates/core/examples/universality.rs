//! Scores synthetic pitcher-seasons against the universality template and
//! runs the systemic coupled clustering over their stacked MCE vectors.
//!
//! cargo run --release --example universality

use datamech::entropy::mce_matrix;
use datamech::hclust::{agglomerate, DistanceMatrix, Linkage};
use datamech::histogram::HistogramConfig;
use datamech::ingest::UNIVERSALITY11;
use datamech::mechanics::{dm_iterate, stack_pitcher_seasons, DmConfig};
use datamech::render::{universality_report, UniversalityTemplate};
use datamech::synthetic::MagnusCoupled;

fn main() -> datamech::Result<()> {
    let template = UniversalityTemplate::default();
    let mut eleven = Vec::new();
    for seed in 0..4 {
        let ds = MagnusCoupled {
            season: 2012 + seed as i32,
            ..MagnusCoupled::default()
        }
        .generate(seed);
        let features: Vec<String> = ds.schema().names().iter().map(|s| s.to_string()).collect();
        let mce = mce_matrix(&ds, &features, &HistogramConfig::default())?;
        let tree = agglomerate(&DistanceMatrix::from_mce(&mce)?, Linkage::Average)?;
        let report = universality_report(&mce, &tree, &template)?;
        if seed == 0 {
            print!("{}", report.to_text());
        }
        println!("season {}: match score {:.3}", 2012 + seed, report.match_score);
        eleven.push((format!("synthetic-{}", 2012 + seed), mce.submatrix(&UNIVERSALITY11)?));
    }

    let stacked = stack_pitcher_seasons(&eleven)?;
    let trees = dm_iterate(&stacked, &DmConfig::systemic(stacked.n_rows(), stacked.n_cols()))?;
    println!(
        "systemic matrix {}x{}, column clusters {:?}",
        stacked.n_rows(),
        stacked.n_cols(),
        trees.col_cut.sizes()
    );
    Ok(())
}
