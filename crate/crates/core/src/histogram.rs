//! Possibly-gapped histograms: turning one real-valued feature into an
//! ordinal categorical variable, one category per bin.
//!
//! Bins are chosen by dynamic programming over the sorted distinct values.
//! Each candidate bin is scored by the squared residual of the empirical CDF
//! against its least-squares line on that bin, plus a per-bin penalty.
//!
//! A candidate bin with `k` internal spacings (gaps between consecutive
//! distinct values) is infeasible when its largest spacing exceeds
//! `gap_factor * median_spacing * max(1, ln k)`. The `ln k` term tracks the
//! expected growth of the largest spacing of a uniform sample. The DP first
//! minimizes the number of infeasible bins (zero whenever possible) and then
//! the penalized objective. Between two adjacent bins, the empty interval is
//! recorded as a gap when the spacing across it would make the merged bin
//! infeasible by the same rule.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    pub max_bins: usize,
    /// Per-bin penalty. `None` selects `ln(n) * mean_k F_k (1 - F_k) / n`:
    /// log n times the mean sampling variance of the empirical CDF at the
    /// distinct values.
    pub penalty: Option<f64>,
    pub gap_factor: f64,
    /// Above this many distinct values, candidate boundaries are restricted
    /// to at most `max_atoms - 1` positions (all large spacings first, then
    /// equal-count quantiles).
    pub max_atoms: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            max_bins: 10,
            penalty: None,
            gap_factor: 4.0,
            max_atoms: 512,
        }
    }
}

impl HistogramConfig {
    pub fn with_max_bins(mut self, max_bins: usize) -> Self {
        self.max_bins = max_bins;
        self
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = Some(penalty);
        self
    }

    /// The penalty `build` will use for `values`.
    pub fn penalty_for(&self, values: &[f64]) -> f64 {
        match self.penalty {
            Some(p) => p,
            None => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                auto_penalty(&Distinct::new(&sorted))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_bins == 0 {
            return Err(Error::arg("max_bins must be at least 1"));
        }
        if let Some(p) = self.penalty {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::arg("penalty must be a finite non-negative number"));
            }
        }
        if !(self.gap_factor > 1.0) {
            return Err(Error::arg("gap_factor must exceed 1"));
        }
        if self.max_atoms < 2 {
            return Err(Error::arg("max_atoms must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// An empty open interval between two consecutive bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GappedHistogram {
    bins: Vec<Bin>,
    gaps: Vec<Gap>,
    /// Unpenalized objective: summed squared CDF residuals over all bins.
    fit_error: f64,
}

/// Category index of each input value, aligned to input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryAssignment {
    pub category_ids: Vec<usize>,
}

impl CategoryAssignment {
    pub fn counts(&self, n_categories: usize) -> Vec<u64> {
        let mut out = vec![0u64; n_categories];
        for &c in &self.category_ids {
            out[c] += 1;
        }
        out
    }
}

impl GappedHistogram {
    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn gaps(&self) -> &[Gap] {
        &self.gaps
    }

    pub fn fit_error(&self) -> f64 {
        self.fit_error
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn total_count(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Penalized objective value, as minimized by [`build`].
    pub fn objective(&self, penalty: f64) -> f64 {
        self.fit_error + penalty * self.bins.len() as f64
    }

    /// Category of one value. In-bin values get their bin; values in a gap,
    /// between bins or outside the range get the nearest bin by boundary
    /// distance, with ties going to the lower bin. `x` must not be NaN.
    pub fn category_of(&self, x: f64) -> usize {
        // first bin whose lo is > x
        let upper = self.bins.partition_point(|b| b.lo <= x);
        if upper == 0 {
            return 0;
        }
        let i = upper - 1;
        if x <= self.bins[i].hi || upper == self.bins.len() {
            return i;
        }
        let left = x - self.bins[i].hi;
        let right = self.bins[upper].lo - x;
        if right < left {
            upper
        } else {
            i
        }
    }

    fn cdf_before(&self) -> Vec<f64> {
        let total = self.total_count() as f64;
        let mut acc = 0u64;
        let mut out = Vec::with_capacity(self.bins.len() + 1);
        out.push(0.0);
        for b in &self.bins {
            acc += b.count;
            out.push(acc as f64 / total);
        }
        out
    }

    /// The piecewise-linear CDF implied by the bins: uniform within each
    /// bin, flat between bins. Returns (left limit, value) at `x`.
    fn approx_cdf(&self, cum: &[f64], x: f64) -> (f64, f64) {
        let mut last = 0.0;
        for (i, b) in self.bins.iter().enumerate() {
            let (before, after) = (cum[i], cum[i + 1]);
            if x < b.lo {
                return (last, last);
            }
            if x <= b.hi {
                if b.hi == b.lo {
                    return (before, after);
                }
                let v = before + (after - before) * (x - b.lo) / (b.hi - b.lo);
                let left = if x == b.lo { before } else { v };
                return (left, v);
            }
            last = after;
        }
        (last, last)
    }
}

/// Builds a possibly-gapped histogram over `values`.
///
/// The result depends only on the multiset of values. Ties are never split
/// across bins.
pub fn build(values: &[f64], config: &HistogramConfig) -> Result<GappedHistogram> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::arg("cannot build a histogram of no values"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::arg(format!("non-finite value {bad}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d = Distinct::new(&sorted);
    let penalty = config.penalty.unwrap_or_else(|| auto_penalty(&d));

    let atoms = d.atoms(config.max_atoms, config.gap_factor);
    let costs = SegmentCosts::new(&d);
    let feasible = feasibility(&d, &atoms, config.gap_factor);
    let (segments, violations) = partition(&atoms, &costs, &feasible, config.max_bins, penalty);
    if violations > 0 {
        log::warn!(
            "{violations} bin(s) violate the gap rule; no partition into at most {} bins avoids it",
            config.max_bins
        );
    }

    let bins: Vec<Bin> = segments
        .iter()
        .map(|&(s, e)| Bin {
            lo: d.values[s],
            hi: d.values[e],
            count: d.counts[s..=e].iter().sum(),
        })
        .collect();
    let fit_error = segments.iter().map(|&(s, e)| segment_sse_direct(&d, s, e)).sum();
    let gaps = segments
        .windows(2)
        .filter_map(|w| {
            let (s, mid) = (w[0].0, w[0].1);
            let e = w[1].1;
            let spacing = d.values[mid + 1] - d.values[mid];
            let mut merged = d.spacings(s, e);
            let limit = gap_limit(config.gap_factor, &mut merged);
            (spacing > limit).then(|| Gap {
                lo: d.values[mid],
                hi: d.values[mid + 1],
            })
        })
        .collect();
    Ok(GappedHistogram { bins, gaps, fit_error })
}

/// Assigns every value its category.
pub fn categorize(hist: &GappedHistogram, values: &[f64]) -> CategoryAssignment {
    CategoryAssignment {
        category_ids: values.iter().map(|&x| hist.category_of(x)).collect(),
    }
}

/// Largest absolute deviation between the empirical CDF of `values` and the
/// piecewise-linear CDF induced by the histogram's bins.
pub fn fit_quality(hist: &GappedHistogram, values: &[f64]) -> f64 {
    if values.is_empty() || hist.bins.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let cum = hist.cdf_before();
    let ecdf = |x: f64| -> (f64, f64) {
        let below = sorted.partition_point(|&v| v < x) as f64;
        let upto = sorted.partition_point(|&v| v <= x) as f64;
        (below / n, upto / n)
    };
    let mut probes: Vec<f64> = sorted.clone();
    probes.dedup();
    probes.extend(hist.bins.iter().flat_map(|b| [b.lo, b.hi]));
    probes
        .into_iter()
        .map(|x| {
            let (fl, fr) = ecdf(x);
            let (gl, gr) = hist.approx_cdf(&cum, x);
            (fl - gl).abs().max((fr - gr).abs())
        })
        .fold(0.0, f64::max)
}

/// Sorted distinct values with multiplicities and right-continuous ECDF.
struct Distinct {
    values: Vec<f64>,
    counts: Vec<u64>,
    ecdf: Vec<f64>,
    n: u64,
}

impl Distinct {
    fn new(sorted: &[f64]) -> Self {
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for &x in sorted {
            if values.last() == Some(&x) {
                *counts.last_mut().unwrap() += 1;
            } else {
                values.push(x);
                counts.push(1);
            }
        }
        let n = sorted.len() as u64;
        let mut acc = 0;
        let ecdf = counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / n as f64
            })
            .collect();
        Distinct {
            values,
            counts,
            ecdf,
            n,
        }
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    /// Spacings between consecutive distinct values in `[s, e]`.
    fn spacings(&self, s: usize, e: usize) -> Vec<f64> {
        self.values[s..=e].windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Contiguous runs of distinct values that the DP treats as indivisible.
    fn atoms(&self, max_atoms: usize, gap_factor: f64) -> Vec<(usize, usize)> {
        let m = self.len();
        if m <= max_atoms {
            return (0..m).map(|i| (i, i)).collect();
        }
        let spacings = self.spacings(0, m - 1);
        let med = median(&mut spacings.clone());
        // a cut after distinct index j separates j and j + 1
        let mut large: Vec<usize> = (0..m - 1)
            .filter(|&j| spacings[j] > gap_factor * med)
            .collect();
        large.sort_by(|&a, &b| spacings[b].total_cmp(&spacings[a]).then(a.cmp(&b)));
        large.truncate((max_atoms - 1) / 2);

        let mut cuts: Vec<usize> = large;
        let quota = (max_atoms - 1).saturating_sub(cuts.len());
        let mut cum = 0u64;
        let mut q = 1usize;
        for j in 0..m - 1 {
            cum += self.counts[j];
            while q <= quota && cum as f64 >= q as f64 * self.n as f64 / (quota + 1) as f64 {
                cuts.push(j);
                q += 1;
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        let mut atoms = Vec::with_capacity(cuts.len() + 1);
        let mut start = 0;
        for c in cuts {
            atoms.push((start, c));
            start = c + 1;
        }
        atoms.push((start, m - 1));
        atoms
    }
}

fn auto_penalty(d: &Distinct) -> f64 {
    let n = d.n as f64;
    let mean_var = d.ecdf.iter().map(|f| f * (1.0 - f)).sum::<f64>() / (d.len() as f64 * n);
    n.ln() * mean_var
}

/// Largest spacing a bin with these internal spacings may contain.
fn gap_limit(gap_factor: f64, spacings: &mut [f64]) -> f64 {
    let k = spacings.len() as f64;
    gap_factor * median(spacings) * k.ln().max(1.0)
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Prefix sums for O(1) least-squares residuals of ECDF points over any
/// range of distinct values. The x axis is rescaled to [0, 1]; residuals of
/// a linear fit are invariant under affine maps of x.
struct SegmentCosts {
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxx: Vec<f64>,
    sxy: Vec<f64>,
    syy: Vec<f64>,
}

impl SegmentCosts {
    fn new(d: &Distinct) -> Self {
        let m = d.len();
        let x0 = d.values[0];
        let span = d.values[m - 1] - x0;
        let scale = if span > 0.0 { 1.0 / span } else { 1.0 };
        let mut c = SegmentCosts {
            sx: vec![0.0; m + 1],
            sy: vec![0.0; m + 1],
            sxx: vec![0.0; m + 1],
            sxy: vec![0.0; m + 1],
            syy: vec![0.0; m + 1],
        };
        for i in 0..m {
            let x = (d.values[i] - x0) * scale;
            let y = d.ecdf[i];
            c.sx[i + 1] = c.sx[i] + x;
            c.sy[i + 1] = c.sy[i] + y;
            c.sxx[i + 1] = c.sxx[i] + x * x;
            c.sxy[i + 1] = c.sxy[i] + x * y;
            c.syy[i + 1] = c.syy[i] + y * y;
        }
        c
    }

    /// SSE of the distinct points `s..=e` about their least-squares line.
    fn cost(&self, s: usize, e: usize) -> f64 {
        if s == e {
            return 0.0;
        }
        let k = (e - s + 1) as f64;
        let sx = self.sx[e + 1] - self.sx[s];
        let sy = self.sy[e + 1] - self.sy[s];
        let cxx = (self.sxx[e + 1] - self.sxx[s]) - sx * sx / k;
        let cxy = (self.sxy[e + 1] - self.sxy[s]) - sx * sy / k;
        let cyy = (self.syy[e + 1] - self.syy[s]) - sy * sy / k;
        let sse = if cxx > 0.0 { cyy - cxy * cxy / cxx } else { cyy };
        sse.max(0.0)
    }
}

/// Two-pass SSE for one segment; used for the reported fit error.
fn segment_sse_direct(d: &Distinct, s: usize, e: usize) -> f64 {
    if s == e {
        return 0.0;
    }
    let xs = &d.values[s..=e];
    let ys = &d.ecdf[s..=e];
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let sse = if sxx > 0.0 { syy - sxy * sxy / sxx } else { syy };
    sse.max(0.0)
}

#[derive(Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Streaming median over a growing multiset.
#[derive(Default)]
struct RunningMedian {
    low: BinaryHeap<OrdF64>,
    high: BinaryHeap<Reverse<OrdF64>>,
}

impl RunningMedian {
    fn push(&mut self, x: f64) {
        match self.low.peek() {
            Some(top) if x > top.0 => self.high.push(Reverse(OrdF64(x))),
            _ => self.low.push(OrdF64(x)),
        }
        if self.low.len() > self.high.len() + 1 {
            let v = self.low.pop().unwrap();
            self.high.push(Reverse(v));
        } else if self.high.len() > self.low.len() {
            let Reverse(v) = self.high.pop().unwrap();
            self.low.push(v);
        }
    }

    fn len(&self) -> usize {
        self.low.len() + self.high.len()
    }

    fn median(&self) -> f64 {
        match (self.low.peek(), self.high.peek()) {
            (None, _) => 0.0,
            (Some(l), Some(Reverse(h))) if self.low.len() == self.high.len() => 0.5 * (l.0 + h.0),
            (Some(l), _) => l.0,
        }
    }
}

/// `feasible[a][b - a]`: whether atoms `a..=b` may form one bin.
fn feasibility(d: &Distinct, atoms: &[(usize, usize)], gap_factor: f64) -> Vec<Vec<bool>> {
    let na = atoms.len();
    let mut out = Vec::with_capacity(na);
    for a in 0..na {
        let mut row = Vec::with_capacity(na - a);
        let mut med = RunningMedian::default();
        let mut max_spacing = 0.0f64;
        let start = atoms[a].0;
        let mut last = start;
        for &(_, end) in &atoms[a..] {
            for j in last..end {
                let s = d.values[j + 1] - d.values[j];
                med.push(s);
                max_spacing = max_spacing.max(s);
            }
            last = end;
            let k = med.len() as f64;
            let limit = gap_factor * med.median() * k.ln().max(1.0);
            row.push(!(max_spacing > limit));
        }
        out.push(row);
    }
    out
}

/// Optimal segmentation of the atoms into at most `max_bins` segments,
/// minimizing first the number of infeasible segments and then the
/// penalized cost. Returns inclusive distinct-value ranges and the number
/// of infeasible segments used.
fn partition(
    atoms: &[(usize, usize)],
    costs: &SegmentCosts,
    feasible: &[Vec<bool>],
    max_bins: usize,
    penalty: f64,
) -> (Vec<(usize, usize)>, u32) {
    let na = atoms.len();
    let kmax = max_bins.min(na);
    let bad = |a: usize, b: usize| u32::from(!feasible[a][b - a]);
    let cost = |a: usize, b: usize| costs.cost(atoms[a].0, atoms[b].1);
    let better = |x: (u32, f64), y: (u32, f64)| x.0 < y.0 || (x.0 == y.0 && x.1 < y.1);
    const NONE: (u32, f64) = (u32::MAX, f64::INFINITY);

    // best[k][b]: (violations, cost) of atoms 0..=b in k + 1 segments
    let mut best = vec![vec![NONE; na]; kmax];
    let mut from = vec![vec![usize::MAX; na]; kmax];
    for b in 0..na {
        best[0][b] = (bad(0, b), cost(0, b));
        from[0][b] = 0;
    }
    for k in 1..kmax {
        for b in k..na {
            let mut bv = NONE;
            let mut ba = usize::MAX;
            for a in k..=b {
                let prev = best[k - 1][a - 1];
                let v = (prev.0 + bad(a, b), prev.1 + cost(a, b));
                if better(v, bv) {
                    bv = v;
                    ba = a;
                }
            }
            best[k][b] = bv;
            from[k][b] = ba;
        }
    }

    let mut chosen = (0usize, NONE);
    for (k, row) in best.iter().enumerate() {
        let (viol, c) = row[na - 1];
        let total = (viol, c + penalty * (k + 1) as f64);
        if better(total, chosen.1) {
            chosen = (k, total);
        }
    }
    let (mut k, (violations, _)) = chosen;
    let mut b = na - 1;
    let mut segs = Vec::with_capacity(k + 1);
    loop {
        let a = from[k][b];
        segs.push((atoms[a].0, atoms[b].1));
        if k == 0 {
            break;
        }
        b = a - 1;
        k -= 1;
    }
    segs.reverse();
    (segs, violations)
}
