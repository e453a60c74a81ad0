//! Agglomerative hierarchical clustering over a distance matrix, tree
//! cutting and a deterministic leaf order for heatmaps.
//!
//! Node ids follow the usual convention: leaves are `0..n`, the cluster
//! created by merge `i` is `n + i`. Ties between equal distances are broken
//! by the pair of cluster keys, where a cluster's key is the rank of the
//! smallest item label it contains. Results therefore depend on labels, not
//! on the order items were supplied in.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy::MceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
    /// Ward's minimum variance criterion. Heights are on the distance scale
    /// (the square root of the Lance-Williams recurrence on squared
    /// distances), so Euclidean input reproduces the centroid formula.
    Ward,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
            Linkage::Ward => "ward",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            "ward" => Ok(Linkage::Ward),
            other => Err(Error::arg(format!("unknown linkage `{other}`"))),
        }
    }
}

/// Symmetric, non-negative, zero-diagonal matrix stored as its strict
/// upper triangle. The triangle inequality is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    condensed: Vec<f64>,
}

fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl DistanceMatrix {
    pub fn from_full(labels: Vec<String>, entries: &[Vec<f64>]) -> Result<Self> {
        let n = labels.len();
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("distance matrix must be {n}x{n}")));
        }
        for i in 0..n {
            if entries[i][i] != 0.0 {
                return Err(Error::arg(format!("non-zero diagonal at {}", labels[i])));
            }
            for j in i + 1..n {
                let (a, b) = (entries[i][j], entries[j][i]);
                let scale = a.abs().max(b.abs()).max(1.0);
                if !((a - b).abs() <= 1e-12 * scale) {
                    return Err(Error::arg(format!(
                        "distance matrix not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Self::from_fn(labels, |i, j| entries[i][j])
    }

    /// Builds the matrix from `dist(i, j)`, called once per pair with `i < j`.
    pub fn from_fn(labels: Vec<String>, mut dist: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        let mut condensed = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                condensed.push(dist(i, j));
            }
        }
        Self::from_condensed(labels, condensed)
    }

    /// `condensed` holds the pairs `(0,1), (0,2), .., (0,n-1), (1,2), ..`.
    pub fn from_condensed(labels: Vec<String>, condensed: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if condensed.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::Dimension(format!(
                "{} condensed distances for {n} items",
                condensed.len()
            )));
        }
        if let Some(k) = condensed.iter().position(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(Error::arg(format!(
                "distance {} is NaN, infinite or negative",
                condensed[k]
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::arg(format!("duplicate item label `{dup}`")));
        }
        Ok(DistanceMatrix { labels, condensed })
    }

    pub fn from_mce(mce: &MceMatrix) -> Result<Self> {
        Self::from_full(mce.features.clone(), &mce.entries)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.condensed[condensed_index(self.len(), i, j)]
        }
    }

    pub fn condensed(&self) -> &[f64] {
        &self.condensed
    }

    pub fn to_full(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Same distances, every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_condensed(
            self.labels.clone(),
            self.condensed.iter().map(|d| d * factor).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_order: Vec<usize>,
    pub leaf_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCut {
    pub k: usize,
    pub labels: Vec<usize>,
}

impl ClusterCut {
    /// Item indices of each cluster, in cluster-id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (item, &c) in self.labels.iter().enumerate() {
            out[c].push(item);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.labels {
            out[c] += 1;
        }
        out
    }
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.leaf_labels.len()
    }

    pub fn root(&self) -> usize {
        match self.merges.len() {
            0 => 0,
            m => self.n_leaves() + m - 1,
        }
    }

    /// The two children of an internal node, or `None` for a leaf.
    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        let n = self.n_leaves();
        (node >= n).then(|| {
            let m = self.merges[node - n];
            (m.left, m.right)
        })
    }

    /// Original item indices under `node`, in leaf order.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(v),
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Dendrogram = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_leaves();
        if n == 0 || self.merges.len() != n - 1 {
            return Err(Error::arg(format!("{} merges for {n} leaves", self.merges.len())));
        }
        let mut used = vec![false; 2 * n - 1];
        for (i, m) in self.merges.iter().enumerate() {
            for c in [m.left, m.right] {
                if c >= n + i || std::mem::replace(&mut used[c], true) {
                    return Err(Error::arg(format!("merge {i} has invalid child {c}")));
                }
            }
        }
        let mut order = self.leaf_order.clone();
        order.sort_unstable();
        if order != (0..n).collect::<Vec<_>>() {
            return Err(Error::arg("leaf_order is not a permutation"));
        }
        Ok(())
    }

    /// Newick text with branch lengths taken from merge heights.
    pub fn to_newick(&self) -> String {
        let n = self.n_leaves();
        let height = |v: usize| if v < n { 0.0 } else { self.merges[v - n].height };
        fn quote(s: &str) -> String {
            if s.chars().any(|c| "(),:;' []".contains(c)) {
                format!("'{}'", s.replace('\'', "''"))
            } else {
                s.to_owned()
            }
        }
        // iterative post-order so deep chains cannot overflow the stack
        let mut text: Vec<Option<String>> = vec![None; 2 * n - 1];
        let mut stack = vec![(self.root(), false)];
        while let Some((v, expanded)) = stack.pop() {
            match self.children(v) {
                None => text[v] = Some(quote(&self.leaf_labels[v])),
                Some((l, r)) if expanded => {
                    let h = height(v);
                    let side = |c: usize, t: &mut Vec<Option<String>>| {
                        format!("{}:{}", t[c].take().unwrap_or_default(), h - height(c))
                    };
                    let s = format!("({},{})", side(l, &mut text), side(r, &mut text));
                    text[v] = Some(s);
                }
                Some((l, r)) => {
                    stack.push((v, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
            }
        }
        format!("{};", text[self.root()].take().unwrap_or_default())
    }
}

/// Clusters the items of `dist` bottom-up, always merging the closest pair.
pub fn agglomerate(dist: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::arg("cannot cluster zero items"));
    }
    let rank = label_ranks(dist.labels());
    let ward = linkage == Linkage::Ward;
    let mut d: Vec<f64> = if ward {
        dist.condensed.iter().map(|x| x * x).collect()
    } else {
        dist.condensed.clone()
    };

    // Each active cluster lives in the slot of one of its items.
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut key = rank.clone();
    let mut node = (0..n).collect::<Vec<usize>>();
    let mut min_index = (0..n).collect::<Vec<usize>>();
    let mut nn = vec![Neighbour::NONE; n];

    let pair_key = |ka: usize, kb: usize| (ka.min(kb), ka.max(kb));
    let find_nn = |i: usize, d: &[f64], active: &[bool], key: &[usize]| {
        let mut best = Neighbour::NONE;
        for j in (0..n).filter(|&j| j != i && active[j]) {
            let cand = Neighbour {
                slot: j,
                dist: d[condensed_index(n, i, j)],
                key: pair_key(key[i], key[j]),
            };
            if cand.better_than(&best) {
                best = cand;
            }
        }
        best
    };
    for i in 0..n {
        nn[i] = find_nn(i, &d, &active, &key);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let a = (0..n)
            .filter(|&i| active[i])
            .min_by(|&x, &y| nn[x].order(&nn[y]))
            .expect("at least two active clusters");
        let b = nn[a].slot;
        let dab = nn[a].dist;
        let height = if ward { dab.max(0.0).sqrt() } else { dab };

        let (left, right) = if min_index[a] < min_index[b] {
            (node[a], node[b])
        } else {
            (node[b], node[a])
        };
        merges.push(Merge { left, right, height });

        // merged cluster takes slot `a`
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for k in (0..n).filter(|&k| active[k] && k != a && k != b) {
            let dka = d[condensed_index(n, k, a)];
            let dkb = d[condensed_index(n, k, b)];
            let nk = size[k] as f64;
            let updated = match linkage {
                Linkage::Single => dka.min(dkb),
                Linkage::Complete => dka.max(dkb),
                Linkage::Average => (na * dka + nb * dkb) / (na + nb),
                Linkage::Ward => {
                    (((na + nk) * dka + (nb + nk) * dkb - nk * dab) / (na + nb + nk)).max(0.0)
                }
            };
            d[condensed_index(n, k, a)] = updated;
        }
        active[b] = false;
        size[a] += size[b];
        key[a] = key[a].min(key[b]);
        min_index[a] = min_index[a].min(min_index[b]);
        node[a] = n + step;

        if step + 2 == n {
            break;
        }
        for k in (0..n).filter(|&k| active[k] && k != a) {
            if nn[k].slot == a || nn[k].slot == b {
                nn[k] = find_nn(k, &d, &active, &key);
            } else {
                let cand = Neighbour {
                    slot: a,
                    dist: d[condensed_index(n, k, a)],
                    key: pair_key(key[k], key[a]),
                };
                if cand.better_than(&nn[k]) {
                    nn[k] = cand;
                }
            }
        }
        nn[a] = find_nn(a, &d, &active, &key);
    }

    let mut dend = Dendrogram {
        merges,
        leaf_order: Vec::new(),
        leaf_labels: dist.labels().to_vec(),
    };
    dend.leaf_order = leaf_ordering(&dend);
    Ok(dend)
}

#[derive(Debug, Clone, Copy)]
struct Neighbour {
    slot: usize,
    dist: f64,
    key: (usize, usize),
}

impl Neighbour {
    const NONE: Neighbour = Neighbour {
        slot: usize::MAX,
        dist: f64::INFINITY,
        key: (usize::MAX, usize::MAX),
    };

    fn order(&self, other: &Neighbour) -> std::cmp::Ordering {
        self.dist.total_cmp(&other.dist).then(self.key.cmp(&other.key))
    }

    fn better_than(&self, other: &Neighbour) -> bool {
        self.order(other).is_lt()
    }
}

fn label_ranks(labels: &[String]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by(|&a, &b| labels[a].cmp(&labels[b]).then(a.cmp(&b)));
    let mut rank = vec![0; labels.len()];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Cuts the tree into `k` clusters by undoing its `k - 1` last merges.
/// Cluster ids are numbered in order of first appearance in the leaf order.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<ClusterCut> {
    let n = dend.n_leaves();
    if k == 0 || k > n {
        return Err(Error::arg(format!("cut level {k} outside 1..={n}")));
    }
    // union-find over the first n - k merges
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, m) in dend.merges.iter().take(n - k).enumerate() {
        let (l, r) = (find(&mut parent, m.left), find(&mut parent, m.right));
        parent[l] = n + i;
        parent[r] = n + i;
    }
    let mut id_of_root = std::collections::HashMap::new();
    let mut labels = vec![0; n];
    for &leaf in &dend.leaf_order {
        let root = find(&mut parent, leaf);
        let next = id_of_root.len();
        labels[leaf] = *id_of_root.entry(root).or_insert(next);
    }
    Ok(ClusterCut { k, labels })
}

/// Planar left-to-right order of the leaves: at every internal node the
/// child holding the smaller original item index comes first.
pub fn leaf_ordering(dend: &Dendrogram) -> Vec<usize> {
    let n = dend.n_leaves();
    if n == 0 {
        return Vec::new();
    }
    let mut min_leaf: Vec<usize> = (0..2 * n - 1).collect();
    for (i, m) in dend.merges.iter().enumerate() {
        min_leaf[n + i] = min_leaf[m.left].min(min_leaf[m.right]);
    }
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![dend.root()];
    while let Some(v) = stack.pop() {
        match dend.children(v) {
            Some((l, r)) => {
                let (first, second) = if min_leaf[l] <= min_leaf[r] { (l, r) } else { (r, l) };
                stack.push(second);
                stack.push(first);
            }
            None => out.push(v),
        }
    }
    out
}
