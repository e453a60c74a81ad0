//! Contingency tables, relative conditional entropies and the mutual
//! conditional entropy (MCE) matrix.
//!
//! For a table with source categories on one axis and target categories on
//! the other, the directed relative conditional entropy is
//!
//! ```text
//! sum_i (n_i / N) * H(target | source = i) / H(target)
//! ```
//!
//! and the MCE is the mean of the two directions. 0 means each variable
//! determines the other; 1 means independence. Entropies use base 2, which
//! cancels in every ratio.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{self, HistogramConfig};
use crate::ingest::PitchDataset;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
}

/// Which variable plays the target role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Column variable given the row variable.
    YGivenX,
    /// Row variable given the column variable.
    XGivenY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Two,
    E,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

impl ContingencyTable {
    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|x| x.as_ref().len()).unwrap_or(0);
        if r == 0 || c == 0 {
            return Err(Error::arg("contingency table needs at least one row and column"));
        }
        if rows.iter().any(|x| x.as_ref().len() != c) {
            return Err(Error::arg("ragged contingency table"));
        }
        let counts: Vec<u64> = rows.iter().flat_map(|x| x.as_ref().iter().copied()).collect();
        if counts.iter().all(|&v| v == 0) {
            return Err(Error::arg("contingency table total is zero"));
        }
        Ok(ContingencyTable {
            rows: r,
            cols: c,
            counts,
            row_labels: (0..r).collect(),
            col_labels: (0..c).collect(),
        })
    }

    /// Cross-tabulates two aligned category vectors. Only categories that
    /// occur get a row or column.
    pub fn from_categories(x: &[usize], y: &[usize]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("{} vs {} observations", x.len(), y.len())));
        }
        if x.is_empty() {
            return Err(Error::arg("no jointly observed records"));
        }
        let compact = |v: &[usize]| -> (Vec<usize>, Vec<usize>) {
            let mut labels = v.to_vec();
            labels.sort_unstable();
            labels.dedup();
            let idx = v.iter().map(|c| labels.binary_search(c).unwrap()).collect();
            (labels, idx)
        };
        let (row_labels, xi) = compact(x);
        let (col_labels, yi) = compact(y);
        let (r, c) = (row_labels.len(), col_labels.len());
        let mut counts = vec![0u64; r * c];
        for (a, b) in xi.iter().zip(&yi) {
            counts[a * c + b] += 1;
        }
        Ok(ContingencyTable {
            rows: r,
            cols: c,
            counts,
            row_labels,
            col_labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0u64; self.counts.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                counts[j * self.rows + i] = self.get(i, j);
            }
        }
        ContingencyTable {
            rows: self.cols,
            cols: self.rows,
            counts,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }
}

/// Shannon entropy in bits of a probability vector, with 0 log 0 = 0.
pub fn shannon_entropy(dist: &[f64]) -> Result<f64> {
    if dist.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::arg("probabilities must be finite and non-negative"));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("probabilities sum to {total}, not 1")));
    }
    Ok(entropy_of(dist.iter().copied(), LogBase::Two))
}

fn entropy_of(probs: impl Iterator<Item = f64>, base: LogBase) -> f64 {
    let h: f64 = probs.filter(|&p| p > 0.0).map(|p| -p * base.log(p)).sum();
    // -0.0 for a point mass
    h.max(0.0)
}

/// Entropy of a vector of counts. The same arithmetic is used for local
/// (row) and marginal distributions, so equal distributions give
/// bit-identical entropies.
fn count_entropy(counts: impl Iterator<Item = u64> + Clone, base: LogBase) -> f64 {
    let n: u64 = counts.clone().sum();
    if n == 0 {
        return 0.0;
    }
    entropy_of(counts.map(|c| c as f64 / n as f64), base)
}

/// Directed relative conditional entropy of the target given the source.
pub fn directed_ce(table: &ContingencyTable, direction: Direction) -> Result<f64> {
    directed_ce_in_base(table, direction, LogBase::Two)
}

pub fn directed_ce_in_base(table: &ContingencyTable, direction: Direction, base: LogBase) -> Result<f64> {
    // (number of source categories, number of target categories, accessor)
    let (ns, nt) = match direction {
        Direction::YGivenX => (table.rows, table.cols),
        Direction::XGivenY => (table.cols, table.rows),
    };
    let at = |s: usize, t: usize| match direction {
        Direction::YGivenX => table.get(s, t),
        Direction::XGivenY => table.get(t, s),
    };
    let target_marginal = (0..nt).map(|t| (0..ns).map(|s| at(s, t)).sum::<u64>());
    let h_target = count_entropy(target_marginal, base);
    if h_target == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let mut total = 0u64;
    let mut weighted = 0.0;
    for s in 0..ns {
        let line = (0..nt).map(|t| at(s, t));
        let n_s: u64 = line.clone().sum();
        if n_s == 0 {
            continue;
        }
        total += n_s;
        weighted += n_s as f64 * (count_entropy(line, base) / h_target);
    }
    // bounded by 1 mathematically; trim rounding excess
    Ok((weighted / total as f64).min(1.0))
}

/// Whether a table variable has a single observed category.
fn degenerate(sums: &[u64]) -> bool {
    sums.iter().filter(|&&s| s > 0).count() <= 1
}

/// Mutual conditional entropy: the mean of both directed relative
/// conditional entropies.
///
/// A table where exactly one variable is constant yields 1.0 (a constant
/// carries no dependency information) and a warning; if both are constant
/// the value is undefined and [`Error::Degenerate`] is returned.
pub fn mutual_ce(table: &ContingencyTable) -> Result<f64> {
    let x_deg = degenerate(&table.row_sums());
    let y_deg = degenerate(&table.col_sums());
    match (x_deg, y_deg) {
        (true, true) => Err(Error::Degenerate),
        (true, false) | (false, true) => {
            log::warn!("one variable of a contingency table is constant; mutual CE set to 1");
            Ok(1.0)
        }
        (false, false) => {
            let a = directed_ce(table, Direction::YGivenX)?;
            let b = directed_ce(table, Direction::XGivenY)?;
            Ok((a + b) / 2.0)
        }
    }
}

/// Symmetric feature-by-feature MCE matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MceMatrix {
    pub features: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl MceMatrix {
    pub fn new(features: Vec<String>, entries: Vec<Vec<f64>>) -> Result<Self> {
        let f = features.len();
        if entries.len() != f || entries.iter().any(|r| r.len() != f) {
            return Err(Error::Dimension(format!("MCE matrix must be {f}x{f}")));
        }
        for i in 0..f {
            if entries[i][i] != 0.0 {
                return Err(Error::arg("MCE diagonal must be zero"));
            }
            for j in 0..f {
                let v = entries[i][j];
                if v != entries[j][i] || !(0.0..=1.0).contains(&v) {
                    return Err(Error::arg(format!("invalid MCE entry ({i},{j}) = {v}")));
                }
            }
        }
        Ok(MceMatrix { features, entries })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.features.iter().position(|f| f == a)?;
        let j = self.features.iter().position(|f| f == b)?;
        Some(self.entries[i][j])
    }

    /// Restricts the matrix to `names`, in that order.
    pub fn submatrix<S: AsRef<str>>(&self, names: &[S]) -> Result<MceMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.features
                    .iter()
                    .position(|f| f == n.as_ref())
                    .ok_or_else(|| Error::Schema(format!("feature `{}` not in matrix", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MceMatrix {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            entries: idx
                .iter()
                .map(|&i| idx.iter().map(|&j| self.entries[i][j]).collect())
                .collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: MceMatrix = serde_json::from_str(text)?;
        MceMatrix::new(m.features, m.entries)
    }

    /// CSV with a feature-name header row and row labels in the first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for f in &self.features {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        for (f, row) in self.features.iter().zip(&self.entries) {
            out.push_str(f);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// MCE matrix over the named features of a dataset. Each feature is
/// categorized by its own possibly-gapped histogram.
pub fn mce_matrix<S: AsRef<str> + Sync>(
    dataset: &PitchDataset,
    features: &[S],
    hist_config: &HistogramConfig,
) -> Result<MceMatrix> {
    if dataset.len() < 2 {
        return Err(Error::arg("MCE matrix needs at least 2 records"));
    }
    let columns = features
        .iter()
        .map(|f| dataset.column(f.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = features.iter().map(|f| f.as_ref().to_owned()).collect();
    mce_matrix_from_columns(&names, &columns, hist_config)
}

/// MCE matrix over raw numeric columns (NaN marks a missing value). Pairs
/// are tabulated over jointly observed rows only.
pub fn mce_matrix_from_columns(
    names: &[String],
    columns: &[Vec<f64>],
    hist_config: &HistogramConfig,
) -> Result<MceMatrix> {
    let f = names.len();
    if f < 2 {
        return Err(Error::arg("MCE matrix needs at least 2 features"));
    }
    if columns.len() != f {
        return Err(Error::Dimension(format!("{} names for {} columns", f, columns.len())));
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("columns differ in length".into()));
    }
    if n < 2 {
        return Err(Error::arg("MCE matrix needs at least 2 records"));
    }

    let categories = names
        .par_iter()
        .zip(columns.par_iter())
        .map(|(name, col)| {
            let observed: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            let hist = histogram::build(&observed, hist_config).map_err(|e| Error::Feature {
                feature: name.clone(),
                source: Box::new(e),
            })?;
            Ok(col
                .iter()
                .map(|&v| (!v.is_nan()).then(|| hist.category_of(v)))
                .collect::<Vec<Option<usize>>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(usize, usize)> = (0..f).flat_map(|i| (i + 1..f).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y): (Vec<usize>, Vec<usize>) = categories[i]
                .iter()
                .zip(&categories[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            let annotate = |e: Error| Error::FeaturePair {
                a: names[i].clone(),
                b: names[j].clone(),
                source: Box::new(e),
            };
            let table = ContingencyTable::from_categories(&x, &y).map_err(annotate)?;
            match mutual_ce(&table) {
                Ok(v) => Ok(v.clamp(0.0, 1.0)),
                Err(Error::Degenerate) => {
                    log::warn!("features {} and {} are both constant; MCE set to 1", names[i], names[j]);
                    Ok(1.0)
                }
                Err(e) => Err(annotate(e)),
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut entries = vec![vec![0.0; f]; f];
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[i][j] = v;
        entries[j][i] = v;
    }
    Ok(MceMatrix {
        features: names.to_vec(),
        entries,
    })
}
