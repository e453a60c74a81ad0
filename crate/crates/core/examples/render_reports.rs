//! Writes the static figures: an MCE heatmap with its feature tree, a
//! coupled-tree heatmap, a likelihood plot and a 3D scatter export.
//!
//! cargo run --release --example render_reports [OUT_DIR]

use std::collections::BTreeSet;
use std::path::PathBuf;

use datamech::entropy::mce_matrix;
use datamech::hclust::{agglomerate, DistanceMatrix, Linkage};
use datamech::histogram::HistogramConfig;
use datamech::ingest::SUBTYPE13;
use datamech::mechanics::{dm_iterate, DmConfig};
use datamech::render::{export_scatter3p2, render_heatmap, render_likelihood_plot, HeatmapSpec};
use datamech::subtype::pitcher_series;
use datamech::synthetic::{MagnusCoupled, PlantedBlocks, PlantedSubtypes};

fn main() -> datamech::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("datamech-examples"));
    std::fs::create_dir_all(&out).map_err(|e| datamech::Error::Io { path: out.clone(), source: e })?;

    let ds = MagnusCoupled::default().generate(5);
    let features: Vec<String> = ds.schema().names().iter().map(|s| s.to_string()).collect();
    let mce = mce_matrix(&ds, &features, &HistogramConfig::default())?;
    let tree = agglomerate(&DistanceMatrix::from_mce(&mce)?, Linkage::Average)?;
    render_heatmap(&HeatmapSpec::from_mce("synthetic MCE", &mce, Some(&tree))?, out.join("mce.svg"))?;

    let planted = PlantedBlocks::default().generate(5);
    let trees = dm_iterate(&planted.matrix, &DmConfig::default().with_cuts(3, 3))?;
    render_heatmap(&HeatmapSpec::from_coupled("planted blocks", &planted.matrix, &trees), out.join("coupled.svg"))?;

    let pitches = PlantedSubtypes {
        emerging: 1,
        ..PlantedSubtypes::default()
    }
    .generate(5)
    .dataset;
    let baseline: BTreeSet<i32> = (2012..=2013).collect();
    let series: Vec<_> = pitcher_series(&pitches, "kershaw", &baseline, &SUBTYPE13, &DmConfig::default())?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    render_likelihood_plot(&series, out.join("likelihood.svg"))?;
    export_scatter3p2(&pitches, 2017, &baseline, out.join("scatter.json"))?;

    for f in ["mce.svg", "coupled.svg", "likelihood.svg", "scatter.json"] {
        println!("{}", out.join(f).display());
    }
    Ok(())
}
