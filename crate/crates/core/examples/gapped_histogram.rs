//! Categorizes a bimodal sample with a possibly-gapped histogram.
//!
//! cargo run --example gapped_histogram

use datamech::histogram::{build, categorize, fit_quality, HistogramConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> datamech::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut values: Vec<f64> = (0..300).map(|_| 90.0 + 3.0 * rng.random::<f64>()).collect();
    values.extend((0..200).map(|_| 78.0 + 4.0 * rng.random::<f64>()));

    let cfg = HistogramConfig::default();
    let hist = build(&values, &cfg)?;
    println!("{} bins, penalty {:.2e}", hist.n_bins(), cfg.penalty_for(&values));
    for b in hist.bins() {
        println!("  [{:7.3}, {:7.3}]  n={}", b.lo, b.hi, b.count);
    }
    for g in hist.gaps() {
        println!("  gap ({:.3}, {:.3})", g.lo, g.hi);
    }
    println!("max CDF deviation {:.4}", fit_quality(&hist, &values));

    let cats = categorize(&hist, &values);
    println!("counts per category {:?}", cats.counts(hist.n_bins()));
    Ok(())
}
