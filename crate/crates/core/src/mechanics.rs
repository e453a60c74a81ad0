//! Data Mechanics: coupled row and column clustering of a rectangular
//! matrix, where each axis's distance is augmented by the cluster
//! composition found on the other axis.
//!
//! One run of [`dm_iterate`]:
//!
//! 1. cluster columns by plain Euclidean distance and cut the tree;
//! 2. cluster rows by [`augment_distance`] against the column cut;
//! 3. cluster columns by [`augment_distance`] against the row cut.
//!
//! Steps 2 and 3 together count as one iteration.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::MceMatrix;
use crate::error::{Error, Result};
use crate::hclust::{self, ClusterCut, Dendrogram, DistanceMatrix, Linkage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Columns,
}

/// Dense row-major matrix with unique labels on both axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectMatrix {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    values: Vec<f64>,
}

fn check_unique(labels: &[String], axis: &str) -> Result<()> {
    let mut seen = HashSet::new();
    match labels.iter().find(|l| !seen.insert(l.as_str())) {
        Some(dup) => Err(Error::arg(format!("duplicate {axis} label `{dup}`"))),
        None => Ok(()),
    }
}

impl RectMatrix {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = col_labels.len();
        if rows.len() != row_labels.len() || rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension(format!(
                "expected {}x{p} values",
                row_labels.len()
            )));
        }
        Self::from_row_major(row_labels, col_labels, rows.into_iter().flatten().collect())
    }

    pub fn from_row_major(row_labels: Vec<String>, col_labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != row_labels.len() * col_labels.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} matrix",
                values.len(),
                row_labels.len(),
                col_labels.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::arg(format!("matrix entry {v} is not finite")));
        }
        check_unique(&row_labels, "row")?;
        check_unique(&col_labels, "column")?;
        Ok(RectMatrix {
            row_labels,
            col_labels,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> RectMatrix {
        let values = (0..self.n_cols()).flat_map(|j| self.column(j)).collect();
        RectMatrix {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            values,
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Shifts and scales every column to mean 0 and unit (population)
    /// variance. Constant columns become all zeros.
    pub fn standardize_columns(&self) -> RectMatrix {
        let (m, p) = (self.n_rows(), self.n_cols());
        let mut out = self.clone();
        for j in 0..p {
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / m as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
            let sd = var.sqrt();
            for (i, v) in col.iter().enumerate() {
                out.values[i * p + j] = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
            }
        }
        out
    }

    /// Rows and columns reordered by the given permutations.
    pub fn permuted(&self, row_order: &[usize], col_order: &[usize]) -> RectMatrix {
        let values = row_order
            .iter()
            .flat_map(|&i| col_order.iter().map(move |&j| self.get(i, j)))
            .collect();
        RectMatrix {
            row_labels: row_order.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: col_order.iter().map(|&j| self.col_labels[j].clone()).collect(),
            values,
        }
    }

    fn axis_view(&self, axis: Axis) -> (usize, usize, Box<dyn Fn(usize, usize) -> f64 + Sync + '_>) {
        match axis {
            Axis::Rows => (self.n_rows(), self.n_cols(), Box::new(move |a, k| self.get(a, k))),
            Axis::Columns => (self.n_cols(), self.n_rows(), Box::new(move |a, k| self.get(k, a))),
        }
    }

    fn labels(&self, axis: Axis) -> &[String] {
        match axis {
            Axis::Rows => &self.row_labels,
            Axis::Columns => &self.col_labels,
        }
    }
}

/// Upper-triangle entries of an MCE matrix with their pair names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Row-major flattening of the strict upper triangle (`i < j`), so `f`
/// features give `f (f - 1) / 2` entries named `"a|b"`.
pub fn vectorize_upper_triangle(mce: &MceMatrix) -> PairVector {
    let f = mce.features.len();
    let mut names = Vec::with_capacity(f * f.saturating_sub(1) / 2);
    let mut values = Vec::with_capacity(names.capacity());
    for i in 0..f {
        for j in i + 1..f {
            names.push(format!("{}|{}", mce.features[i], mce.features[j]));
            values.push(mce.entries[i][j]);
        }
    }
    PairVector { names, values }
}

/// One row per labelled matrix, columns are the feature pairs.
pub fn stack_pitcher_seasons(mces: &[(String, MceMatrix)]) -> Result<RectMatrix> {
    let Some((_, first)) = mces.first() else {
        return Err(Error::arg("no matrices to stack"));
    };
    let columns = vectorize_upper_triangle(first).names;
    let mut labels = Vec::with_capacity(mces.len());
    let mut values = Vec::with_capacity(mces.len() * columns.len());
    for (label, m) in mces {
        if m.features != first.features {
            return Err(Error::Dimension(format!(
                "matrix `{label}` has a different feature order"
            )));
        }
        labels.push(label.clone());
        values.extend(vectorize_upper_triangle(m).values);
    }
    RectMatrix::from_row_major(labels, columns, values)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn pairwise(labels: Vec<String>, vectors: &[Vec<f64>], dist: impl Fn(usize, usize) -> f64 + Sync) -> Result<DistanceMatrix> {
    let n = vectors.len();
    let condensed: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let dist = &dist;
            (i + 1..n).map(move |j| dist(i, j))
        })
        .collect();
    DistanceMatrix::from_condensed(labels, condensed)
}

/// Plain Euclidean distances between the rows (or columns) of `matrix`.
pub fn euclidean_distance(matrix: &RectMatrix, axis: Axis) -> Result<DistanceMatrix> {
    let (n, p, at) = matrix.axis_view(axis);
    let vectors: Vec<Vec<f64>> = (0..n).map(|a| (0..p).map(|k| at(a, k)).collect()).collect();
    pairwise(matrix.labels(axis).to_vec(), &vectors, |i, j| euclid(&vectors[i], &vectors[j]))
}

/// Distances between the items on `axis`: Euclidean distance of the raw
/// vectors plus `weight` times the Euclidean distance of their per-cluster
/// means, one mean per cluster of `other_cut` on the opposite axis.
pub fn augment_distance(
    matrix: &RectMatrix,
    axis: Axis,
    other_cut: &ClusterCut,
    weight: f64,
) -> Result<DistanceMatrix> {
    let (n, p, at) = matrix.axis_view(axis);
    if other_cut.labels.len() != p {
        return Err(Error::Dimension(format!(
            "cut covers {} items but the opposite axis has {p}",
            other_cut.labels.len()
        )));
    }
    if !(weight >= 0.0 && weight.is_finite()) {
        return Err(Error::arg("augment weight must be finite and non-negative"));
    }
    let raw: Vec<Vec<f64>> = (0..n).map(|a| (0..p).map(|k| at(a, k)).collect()).collect();
    let sizes = other_cut.sizes();
    let means: Vec<Vec<f64>> = raw
        .iter()
        .map(|v| {
            let mut sums = vec![0.0; other_cut.k];
            for (k, &c) in other_cut.labels.iter().enumerate() {
                sums[c] += v[k];
            }
            sums.iter().zip(&sizes).map(|(s, &c)| s / c as f64).collect()
        })
        .collect();
    pairwise(matrix.labels(axis).to_vec(), &raw, |i, j| {
        euclid(&raw[i], &raw[j]) + weight * euclid(&means[i], &means[j])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmConfig {
    pub iterations: usize,
    pub row_cut_k: usize,
    pub col_cut_k: usize,
    pub augment_weight: f64,
    pub linkage: Linkage,
}

impl Default for DmConfig {
    /// Six clusters per axis, two iterations, weight 1, average linkage.
    fn default() -> Self {
        DmConfig {
            iterations: 2,
            row_cut_k: 6,
            col_cut_k: 6,
            augment_weight: 1.0,
            linkage: Linkage::Average,
        }
    }
}

impl DmConfig {
    /// Cut levels of `max(2, round(sqrt(n)))` per axis, capped at the axis
    /// size.
    pub fn systemic(rows: usize, cols: usize) -> Self {
        let level = |n: usize| ((n as f64).sqrt().round() as usize).max(2).min(n);
        DmConfig {
            row_cut_k: level(rows),
            col_cut_k: level(cols),
            ..DmConfig::default()
        }
    }

    pub fn with_cuts(mut self, row_cut_k: usize, col_cut_k: usize) -> Self {
        self.row_cut_k = row_cut_k;
        self.col_cut_k = col_cut_k;
        self
    }

    fn validate(&self, m: usize, p: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::arg("iterations must be at least 1"));
        }
        if !(1..=m).contains(&self.row_cut_k) {
            return Err(Error::arg(format!("row cut {} outside 1..={m}", self.row_cut_k)));
        }
        if !(1..=p).contains(&self.col_cut_k) {
            return Err(Error::arg(format!("column cut {} outside 1..={p}", self.col_cut_k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledTrees {
    pub row_tree: Dendrogram,
    pub col_tree: Dendrogram,
    pub row_cut: ClusterCut,
    pub col_cut: ClusterCut,
    pub block_means: Vec<Vec<f64>>,
}

impl CoupledTrees {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Mean of the entries in each (row cluster, column cluster) block.
pub fn block_means(matrix: &RectMatrix, row_cut: &ClusterCut, col_cut: &ClusterCut) -> Result<Vec<Vec<f64>>> {
    if row_cut.labels.len() != matrix.n_rows() || col_cut.labels.len() != matrix.n_cols() {
        return Err(Error::Dimension("cuts do not match the matrix".into()));
    }
    let mut sums = vec![vec![0.0; col_cut.k]; row_cut.k];
    let mut counts = vec![vec![0usize; col_cut.k]; row_cut.k];
    for (i, &r) in row_cut.labels.iter().enumerate() {
        for (j, &c) in col_cut.labels.iter().enumerate() {
            sums[r][c] += matrix.get(i, j);
            counts[r][c] += 1;
        }
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| s.iter().zip(c).map(|(s, &c)| s / c as f64).collect())
        .collect())
}

/// Runs the coupled clustering described in the module docs.
pub fn dm_iterate(matrix: &RectMatrix, config: &DmConfig) -> Result<CoupledTrees> {
    let (m, p) = (matrix.n_rows(), matrix.n_cols());
    if m < 2 || p < 2 {
        return Err(Error::arg(format!("data mechanics needs at least 2x2, got {m}x{p}")));
    }
    config.validate(m, p)?;

    let mut col_tree = hclust::agglomerate(&euclidean_distance(matrix, Axis::Columns)?, config.linkage)?;
    let mut col_cut = hclust::cut(&col_tree, config.col_cut_k)?;
    let mut row_tree = None;
    let mut row_cut = None;
    for round in 0..config.iterations {
        let rows = augment_distance(matrix, Axis::Rows, &col_cut, config.augment_weight)?;
        let rt = hclust::agglomerate(&rows, config.linkage)?;
        let rc = hclust::cut(&rt, config.row_cut_k)?;
        let cols = augment_distance(matrix, Axis::Columns, &rc, config.augment_weight)?;
        col_tree = hclust::agglomerate(&cols, config.linkage)?;
        col_cut = hclust::cut(&col_tree, config.col_cut_k)?;
        log::debug!("data mechanics round {} done", round + 1);
        row_tree = Some(rt);
        row_cut = Some(rc);
    }
    let (row_tree, row_cut) = (row_tree.expect("iterations >= 1"), row_cut.expect("iterations >= 1"));
    let block_means = block_means(matrix, &row_cut, &col_cut)?;
    Ok(CoupledTrees {
        row_tree,
        col_tree,
        row_cut,
        col_cut,
        block_means,
    })
}
