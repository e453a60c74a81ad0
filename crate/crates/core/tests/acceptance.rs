//! Acceptance suite. Runs as a plain binary (no libtest harness) so that
//! every criterion prints exactly one PASS, FAIL or SKIP line. Criteria 1-9
//! gate the exit status; criterion 10 needs real tracking data and is
//! informational only.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use datamech::entropy::{mce_matrix, mutual_ce, ContingencyTable};
use datamech::hclust::{agglomerate, DistanceMatrix, Linkage};
use datamech::histogram::{self, HistogramConfig};
use datamech::ingest::{load_dataset, FeatureSchema, PitchDataset, PitchFilter, UNIVERSALITY11};
use datamech::mechanics::{dm_iterate, stack_pitcher_seasons, vectorize_upper_triangle, DmConfig};
use datamech::metrics::adjusted_rand_index;
use datamech::render::{heatmap_svg, likelihood_svg, universality_report, HeatmapSpec, UniversalityTemplate};
use datamech::subtype::{extract_subtypes, fit_baseline, likelihood_series, pitcher_series};
use datamech::synthetic::{three_pitchers, MagnusCoupled, PlantedBlocks, PlantedSubtypes, MAGNUS_GROUPS};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: u64) -> Check {
    ensure!(
        elapsed <= Duration::from_secs(limit_secs),
        "took {:.1}s, limit {limit_secs}s",
        elapsed.as_secs_f64()
    );
    Ok(String::new())
}

// ---------------------------------------------------------------- 1 and 2

/// Mutual conditional entropy from joint and marginal entropies in nats:
/// H(Y|X) = H(X,Y) - H(X), averaged with H(X|Y)/H(X).
fn mce_oracle(cells: &[u64], r: usize, c: usize) -> Option<f64> {
    let n = cells.iter().sum::<u64>() as f64;
    let h = |counts: &[u64]| -> f64 {
        counts
            .iter()
            .filter(|&&k| k > 0)
            .map(|&k| {
                let p = k as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let (mut rows, mut cols) = ([0u64; 4], [0u64; 4]);
    for i in 0..r {
        for j in 0..c {
            rows[i] += cells[i * c + j];
            cols[j] += cells[i * c + j];
        }
    }
    let (rows, cols) = (&rows[..r], &cols[..c]);
    let constant = |v: &[u64]| v.iter().filter(|&&k| k > 0).count() <= 1;
    match (constant(rows), constant(cols)) {
        (true, true) => None,
        (true, false) | (false, true) => Some(1.0),
        _ => {
            let (hx, hy, hxy) = (h(rows), h(cols), h(cells));
            Some(0.5 * ((hxy - hx) / hy + (hxy - hy) / hx))
        }
    }
}

/// Calls `f` on every `r x c` table of non-negative counts with total
/// between 1 and `max_total` whose first cell equals `first`.
fn each_table(r: usize, c: usize, first: u64, max_total: u64, f: &mut dyn FnMut(&[u64])) {
    fn fill(cells: &mut Vec<u64>, at: usize, left: u64, f: &mut dyn FnMut(&[u64])) {
        if at == cells.len() {
            if cells.iter().any(|&k| k > 0) {
                f(cells);
            }
            return;
        }
        for k in 0..=left {
            cells[at] = k;
            fill(cells, at + 1, left - k, f);
        }
        cells[at] = 0;
    }
    let mut cells = vec![0u64; r * c];
    cells[0] = first;
    fill(&mut cells, 1, max_total - first, f);
}

/// (tables checked, largest deviation) for one slice of the enumeration.
fn check_tables(r: usize, c: usize, first: u64) -> Result<(u64, f64), String> {
    let mut checked = 0u64;
    let mut worst = 0.0f64;
    let mut failure = None;
    each_table(r, c, first, 12, &mut |cells| {
        if failure.is_some() {
            return;
        }
        let mut rows: [&[u64]; 4] = [&[]; 4];
        for (i, chunk) in cells.chunks(c).enumerate() {
            rows[i] = chunk;
        }
        let table = ContingencyTable::from_rows(&rows[..r]).expect("non-empty table");
        let got = mutual_ce(&table).ok();
        let want = mce_oracle(cells, r, c);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) if (g - w).abs() <= 1e-12 => worst = worst.max((g - w).abs()),
            _ => failure = Some(format!("{r}x{c} table {cells:?}: got {got:?}, oracle {want:?}")),
        }
        checked += 1;
    });
    match failure {
        Some(f) => Err(f),
        None => Ok((checked, worst)),
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let slices: Vec<(usize, usize, u64)> = (1..=4)
        .flat_map(|r| (1..=4).flat_map(move |c| (0..=12).map(move |first| (r, c, first))))
        .collect();
    let results: Vec<Result<(u64, f64), String>> =
        slices.par_iter().map(|&(r, c, first)| check_tables(r, c, first)).collect();
    let mut checked = 0u64;
    let mut worst = 0.0f64;
    for res in results {
        let (n, w) = res?;
        checked += n;
        worst = worst.max(w);
    }
    within(start.elapsed(), 60)?;
    Ok(format!(
        "{checked} tables, max |diff| {worst:.1e}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut uniform = 0;
    let mut permutation = 0;
    for r in 2..=6 {
        for c in 2..=6 {
            // outer products u v^T of positive integer vectors
            for _ in 0..20 {
                let u: Vec<u64> = (0..r).map(|_| rng.random_range(1..=9)).collect();
                let v: Vec<u64> = (0..c).map(|_| rng.random_range(1..=9)).collect();
                let rows: Vec<Vec<u64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
                let got = mutual_ce(&ContingencyTable::from_rows(&rows).unwrap()).unwrap();
                ensure!(got == 1.0, "product table {rows:?} gave {got}");
                uniform += 1;
            }
        }
        // positive counts on the support of a random permutation
        for _ in 0..50 {
            let mut perm: Vec<usize> = (0..r).collect();
            for i in (1..r).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let mut rows = vec![vec![0u64; r]; r];
            for (i, &j) in perm.iter().enumerate() {
                rows[i][j] = rng.random_range(1..=20);
            }
            let got = mutual_ce(&ContingencyTable::from_rows(&rows).unwrap()).unwrap();
            ensure!(got == 0.0, "permutation table {rows:?} gave {got}");
            permutation += 1;
        }
    }
    Ok(format!("{uniform} product tables exactly 1, {permutation} permutation tables exactly 0"))
}

// ---------------------------------------------------------------------- 3

struct BinScore {
    violations: u32,
    cost: f64,
}

/// Scores bins given as inclusive ranges of sorted distinct values: summed
/// least-squares residual of the ECDF points, and how many bins break the
/// spacing rule (largest internal spacing above
/// `gap_factor * median * max(1, ln k)` for `k` internal spacings).
fn score_bins(values: &[f64], ecdf: &[f64], bins: &[(usize, usize)], gap_factor: f64) -> BinScore {
    let mut violations = 0;
    let mut cost = 0.0;
    for &(s, e) in bins {
        let xs = &values[s..=e];
        let ys = &ecdf[s..=e];
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        cost += if sxx > 0.0 { (syy - sxy * sxy / sxx).max(0.0) } else { syy };

        let mut gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        if !gaps.is_empty() {
            let largest = gaps.iter().copied().fold(0.0, f64::max);
            gaps.sort_by(f64::total_cmp);
            let m = gaps.len();
            let median = if m % 2 == 1 { gaps[m / 2] } else { 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]) };
            if largest > gap_factor * median * (m as f64).ln().max(1.0) {
                violations += 1;
            }
        }
    }
    BinScore { violations, cost }
}

/// Best (violations, objective) over every placement of at most
/// `max_bins - 1` boundaries between distinct values.
fn exhaustive_best(values: &[f64], ecdf: &[f64], max_bins: usize, penalty: f64, gap_factor: f64) -> (u32, f64) {
    let m = values.len();
    let mut best = (u32::MAX, f64::INFINITY);
    let mut cuts: Vec<usize> = Vec::new();
    fn recurse(
        next: usize,
        m: usize,
        left: usize,
        cuts: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        visit(cuts);
        if left == 0 {
            return;
        }
        for c in next..m.saturating_sub(1) {
            cuts.push(c);
            recurse(c + 1, m, left - 1, cuts, visit);
            cuts.pop();
        }
    }
    recurse(0, m, max_bins - 1, &mut cuts, &mut |cuts| {
        let mut bins = Vec::with_capacity(cuts.len() + 1);
        let mut s = 0;
        for &c in cuts {
            bins.push((s, c));
            s = c + 1;
        }
        bins.push((s, m - 1));
        let sc = score_bins(values, ecdf, &bins, gap_factor);
        let obj = sc.cost + penalty * bins.len() as f64;
        if sc.violations < best.0 || (sc.violations == best.0 && obj < best.1) {
            best = (sc.violations, obj);
        }
    });
    best
}

fn distinct_with_ecdf(data: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut values: Vec<f64> = Vec::new();
    let mut ecdf = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        if values.last() == Some(&x) {
            *ecdf.last_mut().unwrap() = (i + 1) as f64 / n;
        } else {
            values.push(x);
            ecdf.push((i + 1) as f64 / n);
        }
    }
    (values, ecdf)
}

fn random_dataset(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(1..=30);
    match rng.random_range(0..4) {
        // continuous
        0 => (0..n).map(|_| rng.random::<f64>() * 10.0).collect(),
        // heavy ties on a coarse grid
        1 => (0..n).map(|_| rng.random_range(0..6) as f64 * 0.5).collect(),
        // two or three separated clumps
        2 => (0..n)
            .map(|_| rng.random_range(0..3) as f64 * 20.0 + rng.random::<f64>())
            .collect(),
        // skewed
        _ => (0..n).map(|_| (-rng.random::<f64>().max(1e-9).ln()).powi(2)).collect(),
    }
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    let mut worst = 0.0f64;
    for _ in 0..600 {
        let data = random_dataset(&mut rng);
        let (values, ecdf) = distinct_with_ecdf(&data);
        for max_bins in 1..=4 {
            for penalty in [None, Some(0.0), Some(1e-3), Some(0.05)] {
                let mut cfg = HistogramConfig::default().with_max_bins(max_bins);
                cfg.penalty = penalty;
                let p = cfg.penalty_for(&data);
                let hist = histogram::build(&data, &cfg).map_err(|e| e.to_string())?;
                let (best_viol, best_obj) = exhaustive_best(&values, &ecdf, max_bins, p, cfg.gap_factor);
                let bins: Vec<(usize, usize)> = hist
                    .bins()
                    .iter()
                    .map(|b| {
                        let s = values.iter().position(|&v| v == b.lo).unwrap();
                        let e = values.iter().position(|&v| v == b.hi).unwrap();
                        (s, e)
                    })
                    .collect();
                let got = score_bins(&values, &ecdf, &bins, cfg.gap_factor);
                ensure!(
                    got.violations == best_viol,
                    "data {data:?}, max_bins {max_bins}: {} infeasible bins, oracle {best_viol}",
                    got.violations
                );
                let diff = (hist.objective(p) - best_obj).abs();
                ensure!(
                    diff <= 1e-9,
                    "data {data:?}, max_bins {max_bins}, penalty {p}: objective {} vs oracle {best_obj}",
                    hist.objective(p)
                );
                worst = worst.max(diff);
                cases += 1;
            }
        }
    }

    let two: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).chain((0..10).map(|i| 10.0 + i as f64 / 10.0)).collect();
    let hist = histogram::build(&two, &HistogramConfig::default()).map_err(|e| e.to_string())?;
    ensure!(
        hist.n_bins() == 2 && hist.gaps().len() == 1,
        "two-cluster fixture: {} bins, {} gaps",
        hist.n_bins(),
        hist.gaps().len()
    );
    let g = hist.gaps()[0];
    ensure!(g.lo == 0.9 && g.hi == 10.0, "gap at ({}, {})", g.lo, g.hi);
    Ok(format!("{cases} cases, max |diff| {worst:.1e}; two-cluster fixture: 2 bins, gap (0.9, 10)"))
}

// ---------------------------------------------------------------------- 4

/// Naive agglomeration: every step recomputes all cluster distances from
/// the member-level definitions. Ward uses the energy form
/// `2 |A||B| / (|A|+|B|) * (mean d^2(A,B) - mean d^2(A,A)/2 - mean d^2(B,B)/2)`.
fn naive_heights(d: &[Vec<f64>], linkage: Linkage) -> Vec<(BTreeSet<usize>, f64)> {
    let n = d.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mean_sq = |a: &[usize], b: &[usize]| -> f64 {
        let s: f64 = a.iter().flat_map(|&i| b.iter().map(move |&j| d[i][j] * d[i][j])).sum();
        s / (a.len() * b.len()) as f64
    };
    let dist = |a: &[usize], b: &[usize]| -> f64 {
        let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| d[i][j]));
        match linkage {
            Linkage::Single => pairs.fold(f64::INFINITY, f64::min),
            Linkage::Complete => pairs.fold(0.0, f64::max),
            Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
            Linkage::Ward => {
                let (na, nb) = (a.len() as f64, b.len() as f64);
                let e = mean_sq(a, b) - 0.5 * mean_sq(a, a) - 0.5 * mean_sq(b, b);
                (2.0 * na * nb / (na + nb) * e).max(0.0).sqrt()
            }
        }
    };
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let v = dist(&clusters[i], &clusters[j]);
                if v < best.0 {
                    best = (v, i, j);
                }
            }
        }
        let (h, i, j) = best;
        let b = clusters.remove(j);
        clusters[i].extend(b);
        out.push((clusters[i].iter().copied().collect(), h));
    }
    out
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 15;
    let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut worst = 0.0f64;
    let mut runs = 0;
    for trial in 0..40 {
        // even trials: Euclidean distances of random points; odd trials:
        // arbitrary symmetric dissimilarities (Ward only on Euclidean ones)
        let euclidean = trial % 2 == 0;
        let mut d = vec![vec![0.0; n]; n];
        if euclidean {
            let pts: Vec<[f64; 4]> = (0..n).map(|_| std::array::from_fn(|_| rng.random::<f64>())).collect();
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                }
            }
        } else {
            for i in 0..n {
                for j in i + 1..n {
                    let v = rng.random::<f64>();
                    d[i][j] = v;
                    d[j][i] = v;
                }
            }
        }
        let dm = DistanceMatrix::from_full(labels.clone(), &d).map_err(|e| e.to_string())?;
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward] {
            if linkage == Linkage::Ward && !euclidean {
                continue;
            }
            let tree = agglomerate(&dm, linkage).map_err(|e| e.to_string())?;
            let reference = naive_heights(&d, linkage);
            for (step, (merge, (members, h))) in tree.merges.iter().zip(&reference).enumerate() {
                let diff = (merge.height - h).abs();
                ensure!(
                    diff <= 1e-12,
                    "trial {trial} {linkage} step {step}: height {} vs {h}",
                    merge.height
                );
                let got: BTreeSet<usize> = tree.leaves_under(n + step).into_iter().collect();
                ensure!(&got == members, "trial {trial} {linkage} step {step}: merged {got:?} vs {members:?}");
                worst = worst.max(diff);
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} trees, max |height diff| {worst:.1e}"))
}

// ---------------------------------------------------------------------- 5

fn criterion_5() -> Check {
    let start = Instant::now();
    let planted = PlantedBlocks::default().generate(5);
    let trees = dm_iterate(&planted.matrix, &DmConfig::default().with_cuts(3, 3)).map_err(|e| e.to_string())?;
    let ari_r = adjusted_rand_index(&trees.row_cut.labels, &planted.row_truth);
    let ari_c = adjusted_rand_index(&trees.col_cut.labels, &planted.col_truth);
    ensure!(ari_r >= 0.9 && ari_c >= 0.9, "ARI rows {ari_r:.3}, columns {ari_c:.3}");

    // match each found cluster to its majority planted cluster
    let majority = |found: &[usize], truth: &[usize], k: usize| -> Vec<usize> {
        (0..k)
            .map(|c| {
                let mut votes = BTreeMap::new();
                for (f, t) in found.iter().zip(truth) {
                    if *f == c {
                        *votes.entry(*t).or_insert(0) += 1;
                    }
                }
                votes.into_iter().max_by_key(|&(t, v)| (v, std::cmp::Reverse(t))).map(|(t, _)| t).unwrap()
            })
            .collect()
    };
    let rmap = majority(&trees.row_cut.labels, &planted.row_truth, 3);
    let cmap = majority(&trees.col_cut.labels, &planted.col_truth, 3);
    let mut worst = 0.0f64;
    for r in 0..3 {
        for c in 0..3 {
            worst = worst.max((trees.block_means[r][c] - planted.means[rmap[r]][cmap[c]]).abs());
        }
    }
    ensure!(worst <= 0.05, "block mean off by {worst:.4}");
    within(start.elapsed(), 10)?;
    Ok(format!(
        "ARI rows {ari_r:.3}, columns {ari_c:.3}; max block mean error {worst:.4}; {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------- 6

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let ds = MagnusCoupled::default().generate(6);
    ensure!(ds.len() == 2000, "generator produced {} pitches", ds.len());

    let inner: Vec<&[&str]> = MAGNUS_GROUPS[..3].to_vec();
    let mut min_within = 1.0f64;
    let mut max_cross = 0.0f64;
    for (gi, g) in inner.iter().enumerate() {
        for (a_i, a) in g.iter().enumerate() {
            let ca = ds.column(a).unwrap();
            for b in &g[a_i + 1..] {
                min_within = min_within.min(pearson(&ca, &ds.column(b).unwrap()));
            }
            for h in &inner[gi + 1..] {
                for b in h.iter() {
                    max_cross = max_cross.max(pearson(&ca, &ds.column(b).unwrap()).abs());
                }
            }
        }
    }
    ensure!(min_within >= 0.9, "within-group correlation {min_within:.3} < 0.9");
    ensure!(max_cross <= 0.2, "cross-group correlation {max_cross:.3} > 0.2");

    let names: Vec<String> = ds.schema().names().iter().map(|s| s.to_string()).collect();
    let mce = mce_matrix(&ds, &names, &HistogramConfig::default()).map_err(|e| e.to_string())?;
    let tree = agglomerate(&DistanceMatrix::from_mce(&mce).map_err(|e| e.to_string())?, Linkage::Average)
        .map_err(|e| e.to_string())?;
    let report = universality_report(&mce, &tree, &UniversalityTemplate::default()).map_err(|e| e.to_string())?;
    ensure!(report.match_score >= 0.8, "match score {:.3}", report.match_score);
    within(start.elapsed(), 30)?;
    Ok(format!(
        "rho within >= {min_within:.3}, cross <= {max_cross:.3}; match score {}/{} = {:.3}; {:.1}s",
        report.satisfied,
        report.expected,
        report.match_score,
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------- 7

fn criterion_7() -> Check {
    let subtype_features: Vec<&str> = datamech::ingest::SUBTYPE13.to_vec();
    let mut models = 0;
    let mut zero_points = 0;
    let mut fixtures: Vec<(PitchDataset, BTreeSet<i32>, String)> = Vec::new();
    for seed in 0..4 {
        let planted = PlantedSubtypes {
            emerging: 2,
            ..PlantedSubtypes::default()
        }
        .generate(seed);
        fixtures.push((planted.dataset, (2012..=2014).collect(), "FF".into()));
    }
    let merged = PitchDataset::merge(vec![three_pitchers(7, 25, 2015), three_pitchers(8, 25, 2016)]).unwrap();
    fixtures.push((merged.filter(&PitchFilter::new().pitcher("verlander")), BTreeSet::from([2015]), "FF".into()));

    for (ds, baseline, ty) in &fixtures {
        let model = extract_subtypes(ds, ty, &subtype_features, &DmConfig::default()).map_err(|e| e.to_string())?;
        let fitted = fit_baseline(&model, baseline).map_err(|e| e.to_string())?;
        let in_base: Vec<usize> = fitted
            .pitches
            .iter()
            .filter(|p| baseline.contains(&p.season))
            .map(|p| p.subtype)
            .collect();
        let mut freq = vec![0u64; fitted.n_subtypes];
        for &s in &in_base {
            freq[s] += 1;
        }
        let empirical: Vec<f64> = freq.iter().map(|&c| c as f64 / in_base.len() as f64).collect();
        ensure!(
            empirical == fitted.pattern_distribution,
            "pattern distribution {:?} vs empirical {empirical:?}",
            fitted.pattern_distribution
        );
        for series in likelihood_series(&fitted, ds).map_err(|e| e.to_string())? {
            for p in &series.points {
                ensure!(
                    p.likelihood == fitted.pattern_distribution[p.subtype],
                    "point {} has likelihood {}, distribution says {}",
                    p.temporal_index,
                    p.likelihood,
                    fitted.pattern_distribution[p.subtype]
                );
                if freq[p.subtype] == 0 {
                    ensure!(p.likelihood == 0.0, "unused subtype with likelihood {}", p.likelihood);
                    zero_points += 1;
                }
            }
        }
        models += 1;
    }
    ensure!(zero_points > 0, "no fixture exercised an unused subtype");

    // a type absent from the baseline gets an all-zero series
    let both = PitchDataset::merge(vec![three_pitchers(9, 20, 2015), three_pitchers(10, 20, 2016)]).unwrap();
    let renamed = both.filter_by(|r| !(r.season == 2015 && r.pitch_type_label == "CU"));
    let per_type = pitcher_series(&renamed, "kershaw", &BTreeSet::from([2015]), &subtype_features, &DmConfig::default())
        .map_err(|e| e.to_string())?;
    let cu = per_type.iter().find(|(m, _)| m.pitch_type == "CU").ok_or("no CU series")?;
    ensure!(cu.1.points.iter().all(|p| p.likelihood == 0.0), "new pitch type has non-zero likelihood");
    Ok(format!("{models} fitted models exact, {zero_points} unused-subtype points at 0, new type all 0"))
}

// ---------------------------------------------------------------------- 8

fn criterion_8() -> Check {
    let mut parts = Vec::new();
    for (i, seed) in [80, 81].into_iter().enumerate() {
        parts.push(
            MagnusCoupled {
                n_pitches: 300,
                season: 2015 + i as i32,
                ..MagnusCoupled::default()
            }
            .generate(seed),
        );
    }
    let all: Vec<String> = FeatureSchema::pitchfx_default().names().iter().map(|s| s.to_string()).collect();
    let eleven: Vec<String> = UNIVERSALITY11.iter().map(|s| s.to_string()).collect();
    let mut sizes = Vec::new();
    for features in [&all, &eleven] {
        let mces: Vec<(String, datamech::entropy::MceMatrix)> = parts
            .iter()
            .enumerate()
            .map(|(i, ds)| (format!("s{i}"), mce_matrix(ds, features, &HistogramConfig::default()).unwrap()))
            .collect();
        let v = vectorize_upper_triangle(&mces[0].1);
        let stacked = stack_pitcher_seasons(&mces).map_err(|e| e.to_string())?;
        ensure!(v.values.len() == stacked.n_cols(), "vector and stack disagree");
        sizes.push((features.len(), stacked.n_cols()));
    }
    ensure!(sizes == vec![(21, 210), (11, 55)], "sizes {sizes:?}");
    Ok("21 features -> 210 columns, 11 features -> 55 columns".into())
}

// ---------------------------------------------------------------------- 9

fn render_all() -> Result<Vec<(String, String)>, String> {
    let ds = MagnusCoupled {
        n_pitches: 400,
        ..MagnusCoupled::default()
    }
    .generate(9);
    let names: Vec<String> = ds.schema().names().iter().map(|s| s.to_string()).collect();
    let mce = mce_matrix(&ds, &names, &HistogramConfig::default()).map_err(|e| e.to_string())?;
    let tree = agglomerate(&DistanceMatrix::from_mce(&mce).unwrap(), Linkage::Average).map_err(|e| e.to_string())?;
    let heat = heatmap_svg(&HeatmapSpec::from_mce("MCE 21x21", &mce, Some(&tree)).unwrap()).map_err(|e| e.to_string())?;

    let planted = PlantedBlocks::default().generate(9);
    let trees = dm_iterate(&planted.matrix, &DmConfig::default().with_cuts(3, 3)).map_err(|e| e.to_string())?;
    let coupled = heatmap_svg(&HeatmapSpec::from_coupled("planted", &planted.matrix, &trees)).map_err(|e| e.to_string())?;

    let subtypes = PlantedSubtypes {
        emerging: 1,
        ..PlantedSubtypes::default()
    }
    .generate(9);
    let series = pitcher_series(
        &subtypes.dataset,
        "kershaw",
        &(2012..=2013).collect(),
        &datamech::ingest::SUBTYPE13,
        &DmConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let series: Vec<_> = series.into_iter().map(|(_, s)| s).collect();
    let lik = likelihood_svg(&series);
    Ok(vec![("mce".into(), heat), ("coupled".into(), coupled), ("likelihood".into(), lik)])
}

fn criterion_9() -> Check {
    let first = render_all()?;
    let second = render_all()?;
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        ensure!(a == b, "{name} SVG differs between runs");
        let doc = roxmltree::Document::parse(a).map_err(|e| format!("{name} SVG is not well-formed: {e}"))?;
        ensure!(doc.root_element().tag_name().name() == "svg", "{name} root is not <svg>");
    }
    let cells = first[0].1.matches("class=\"cell\"").count();
    ensure!(cells == 441, "21x21 heatmap has {cells} cells");
    Ok(format!("{} SVGs well-formed and byte-identical; 21x21 heatmap has 441 cells", first.len()))
}

// --------------------------------------------------------------------- 10

const REAL_DATA_ENV: &str = "DATAMECH_REAL_DATA";

fn criterion_10() -> Option<Check> {
    let base = std::env::var(REAL_DATA_ENV).ok()?;
    Some((|| {
        let ds = load_dataset(&base).map_err(|e| e.to_string())?;
        let eleven: Vec<String> = UNIVERSALITY11.iter().map(|s| s.to_string()).collect();
        let mut mces = Vec::new();
        for (p, s) in ds.pitcher_seasons() {
            let sub = ds.filter(&PitchFilter::new().pitcher(&p).season(s));
            if sub.len() >= 2 {
                mces.push((format!("{p}-{s}"), mce_matrix(&sub, &eleven, &HistogramConfig::default()).map_err(|e| e.to_string())?));
            }
        }
        let matrix = stack_pitcher_seasons(&mces).map_err(|e| e.to_string())?;
        let trees = dm_iterate(&matrix, &DmConfig::systemic(matrix.n_rows(), matrix.n_cols())).map_err(|e| e.to_string())?;
        let kershaw: BTreeSet<usize> = matrix
            .row_labels()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.starts_with("kershaw-"))
            .map(|(i, _)| i)
            .collect();
        ensure!(kershaw.len() == 6, "found {} kershaw seasons", kershaw.len());
        let tree = &trees.row_tree;
        let smallest = (0..2 * tree.n_leaves() - 1)
            .map(|node| tree.leaves_under(node).into_iter().collect::<BTreeSet<usize>>())
            .filter(|leaves| kershaw.is_subset(leaves))
            .min_by_key(BTreeSet::len)
            .unwrap();
        ensure!(
            smallest == kershaw,
            "smallest branch holding all kershaw seasons has {} rows",
            smallest.len()
        );
        Ok(format!("{} pitcher-seasons; kershaw seasons form one exclusive branch", matrix.n_rows()))
    })())
}

fn run(id: u32, title: &str, check: fn() -> Check) -> bool {
    let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS  [{id:>2}] {title}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL  [{id:>2}] {title}: {why}");
            false
        }
    }
}

fn main() {
    let gating: [(u32, &str, fn() -> Check); 9] = [
        (1, "MCE matches the entropy-difference oracle on all small tables", criterion_1),
        (2, "MCE endpoints are exact", criterion_2),
        (3, "histogram DP matches exhaustive boundary search", criterion_3),
        (4, "hierarchical clustering matches the naive reference", criterion_4),
        (5, "Data Mechanics recovers planted blocks", criterion_5),
        (6, "synthetic universality", criterion_6),
        (7, "subtype likelihoods are exact", criterion_7),
        (8, "pair vector sizes", criterion_8),
        (9, "SVG rendering", criterion_9),
    ];
    let mut failed = 0;
    for (id, title, check) in gating {
        if !run(id, title, check) {
            failed += 1;
        }
    }
    let title = "real data: Kershaw seasons share one branch (optional)";
    match criterion_10() {
        None => println!("SKIP  [10] {title}: set {REAL_DATA_ENV} to a dataset base path"),
        Some(Ok(detail)) => println!("PASS  [10] {title}: {detail}"),
        Some(Err(why)) => println!("FAIL  [10] {title} (non-gating): {why}"),
    }
    println!("acceptance: {} of 9 gating criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
