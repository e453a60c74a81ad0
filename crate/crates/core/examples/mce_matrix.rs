//! Mutual conditional entropy of a few contingency tables, then the full
//! 21-feature MCE matrix of a synthetic pitcher-season.
//!
//! cargo run --release --example mce_matrix

use datamech::entropy::{directed_ce, mce_matrix, mutual_ce, ContingencyTable, Direction};
use datamech::histogram::HistogramConfig;
use datamech::synthetic::MagnusCoupled;

fn main() -> datamech::Result<()> {
    let independent = ContingencyTable::from_rows(&[[2u64, 4], [3, 6]])?;
    let determined = ContingencyTable::from_rows(&[[0u64, 7], [5, 0]])?;
    let partial = ContingencyTable::from_rows(&[[10u64, 0], [5, 5]])?;
    println!("independent {:.4}", mutual_ce(&independent)?);
    println!("determined  {:.4}", mutual_ce(&determined)?);
    println!(
        "partial     {:.4} (Y|X {:.4}, X|Y {:.4})",
        mutual_ce(&partial)?,
        directed_ce(&partial, Direction::YGivenX)?,
        directed_ce(&partial, Direction::XGivenY)?
    );

    let ds = MagnusCoupled::default().generate(1);
    let features: Vec<String> = ds.schema().names().iter().map(|s| s.to_string()).collect();
    let mce = mce_matrix(&ds, &features, &HistogramConfig::default())?;
    println!("\n{}x{} MCE matrix, lowest off-diagonal pairs:", mce.len(), mce.len());
    let mut pairs: Vec<(f64, &str, &str)> = Vec::new();
    for i in 0..mce.len() {
        for j in i + 1..mce.len() {
            pairs.push((mce.entries[i][j], &mce.features[i], &mce.features[j]));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (v, a, b) in pairs.iter().take(8) {
        println!("  {v:.3}  {a} / {b}");
    }
    Ok(())
}
