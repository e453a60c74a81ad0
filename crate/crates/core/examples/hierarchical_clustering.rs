//! Agglomerative clustering of a small distance matrix under each linkage.
//!
//! cargo run --example hierarchical_clustering

use datamech::hclust::{agglomerate, cut, leaf_ordering, DistanceMatrix, Linkage};

fn main() -> datamech::Result<()> {
    let labels: Vec<String> = ["a", "b", "c", "d", "e", "f"].iter().map(|s| s.to_string()).collect();
    let xs: [f64; 6] = [0.0, 0.4, 1.0, 5.0, 5.3, 9.0];
    let dist = DistanceMatrix::from_fn(labels, |i, j| (xs[i] - xs[j]).abs())?;

    for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward] {
        let tree = agglomerate(&dist, linkage)?;
        let heights: Vec<String> = tree.merges.iter().map(|m| format!("{:.2}", m.height)).collect();
        let three = cut(&tree, 3)?;
        println!("{linkage:>8}: heights [{}]", heights.join(", "));
        println!("          k=3 labels {:?}, leaf order {:?}", three.labels, leaf_ordering(&tree));
        println!("          {}", tree.to_newick());
    }
    Ok(())
}
