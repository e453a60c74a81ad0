//! Static report files: tree-framed heatmaps and likelihood plots as SVG,
//! the 3(+2)D point cloud as JSON, and the universality block report.
//!
//! Styling is fixed here. Every coordinate is rounded to three decimals so
//! the same input always produces the same bytes.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::MceMatrix;
use crate::error::{Error, Result};
use crate::hclust::{self, ClusterCut, Dendrogram};
use crate::ingest::{PitchDataset, UNIVERSALITY11};
use crate::mechanics::{CoupledTrees, RectMatrix};
use crate::subtype::LikelihoodSeries;

fn num(x: f64) -> String {
    let s = format!("{:.3}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colormap {
    /// Blue for low values through white to red for high values.
    #[default]
    BlueRed,
    /// White for low values to black for high values.
    Grays,
}

impl Colormap {
    /// RGB for `t` in [0, 1]; values outside are clamped.
    pub fn rgb(self, t: f64) -> [u8; 3] {
        let t = if t.is_nan() { 0.5 } else { t.clamp(0.0, 1.0) };
        let lerp = |a: f64, b: f64, u: f64| (a + (b - a) * u).round() as u8;
        match self {
            Colormap::BlueRed => {
                let (blue, white, red) = ([33.0, 102.0, 172.0], [247.0, 247.0, 247.0], [178.0, 24.0, 43.0]);
                let (from, to, u) = if t < 0.5 { (blue, white, t * 2.0) } else { (white, red, t * 2.0 - 1.0) };
                [lerp(from[0], to[0], u), lerp(from[1], to[1], u), lerp(from[2], to[2], u)]
            }
            Colormap::Grays => {
                let v = lerp(255.0, 0.0, t);
                [v, v, v]
            }
        }
    }

    pub fn hex(self, t: f64) -> String {
        let [r, g, b] = self.rgb(t);
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

/// What to draw in a heatmap. Trees reorder their axis by leaf order and
/// are drawn in the margin; cuts add boundary lines between clusters.
#[derive(Debug, Clone)]
pub struct HeatmapSpec {
    pub title: String,
    pub matrix: RectMatrix,
    pub row_tree: Option<Dendrogram>,
    pub col_tree: Option<Dendrogram>,
    pub row_cut: Option<ClusterCut>,
    pub col_cut: Option<ClusterCut>,
    pub colormap: Colormap,
    /// Value range mapped onto the colormap; `None` uses the data range.
    pub range: Option<(f64, f64)>,
}

impl HeatmapSpec {
    pub fn new(title: impl Into<String>, matrix: RectMatrix) -> Self {
        HeatmapSpec {
            title: title.into(),
            matrix,
            row_tree: None,
            col_tree: None,
            row_cut: None,
            col_cut: None,
            colormap: Colormap::default(),
            range: None,
        }
    }

    /// An MCE matrix framed by one feature tree on both axes, colored on
    /// the fixed [0, 1] scale.
    pub fn from_mce(title: impl Into<String>, mce: &MceMatrix, tree: Option<&Dendrogram>) -> Result<Self> {
        let matrix = RectMatrix::new(mce.features.clone(), mce.features.clone(), mce.entries.clone())?;
        Ok(HeatmapSpec {
            row_tree: tree.cloned(),
            col_tree: tree.cloned(),
            range: Some((0.0, 1.0)),
            ..HeatmapSpec::new(title, matrix)
        })
    }

    /// A Data Mechanics result: both trees with their cuts.
    pub fn from_coupled(title: impl Into<String>, matrix: &RectMatrix, trees: &CoupledTrees) -> Self {
        HeatmapSpec {
            row_tree: Some(trees.row_tree.clone()),
            col_tree: Some(trees.col_tree.clone()),
            row_cut: Some(trees.row_cut.clone()),
            col_cut: Some(trees.col_cut.clone()),
            ..HeatmapSpec::new(title, matrix.clone())
        }
    }

    fn order(&self, tree: &Option<Dendrogram>, n: usize, axis: &str) -> Result<Vec<usize>> {
        match tree {
            Some(t) if t.n_leaves() != n => Err(Error::Dimension(format!(
                "{axis} tree has {} leaves for {n} {axis}s",
                t.n_leaves()
            ))),
            Some(t) => Ok(t.leaf_order.clone()),
            None => Ok((0..n).collect()),
        }
    }
}

const MARGIN_TREE: f64 = 100.0;
const PAD: f64 = 10.0;
const TITLE_H: f64 = 24.0;

/// Dendrogram drawn with leaves along one axis and height growing away from
/// the matrix. Emits one `<path class="merge">` per merge.
fn draw_tree(out: &mut String, tree: &Dendrogram, leaf_pos: impl Fn(usize) -> f64, base: f64, horizontal: bool) {
    let n = tree.n_leaves();
    let max_h = tree.merges.iter().map(|m| m.height).fold(0.0, f64::max);
    let scale = if max_h > 0.0 { (MARGIN_TREE - PAD) / max_h } else { 0.0 };
    let mut pos: Vec<f64> = vec![0.0; 2 * n - 1];
    let mut rank = vec![0usize; n];
    for (r, &leaf) in tree.leaf_order.iter().enumerate() {
        rank[leaf] = r;
    }
    for leaf in 0..n {
        pos[leaf] = leaf_pos(rank[leaf]);
    }
    let height = |v: usize| if v < n { 0.0 } else { tree.merges[v - n].height };
    out.push_str("<g class=\"tree\">\n");
    for (i, m) in tree.merges.iter().enumerate() {
        let (a, b) = (pos[m.left], pos[m.right]);
        pos[n + i] = (a + b) / 2.0;
        let (ha, hb, hm) = (
            base - height(m.left) * scale,
            base - height(m.right) * scale,
            base - m.height * scale,
        );
        let d = if horizontal {
            format!("M{} {}H{}V{}H{}", num(ha), num(a), num(hm), num(b), num(hb))
        } else {
            format!("M{} {}V{}H{}V{}", num(a), num(ha), num(hm), num(b), num(hb))
        };
        let _ = writeln!(out, "<path class=\"merge\" d=\"{d}\"/>");
    }
    out.push_str("</g>\n");
}

/// Positions after which a boundary line goes, for items in `order`.
fn boundaries(order: &[usize], cut: &Option<ClusterCut>) -> Vec<usize> {
    match cut {
        Some(c) => (1..order.len())
            .filter(|&k| c.labels[order[k]] != c.labels[order[k - 1]])
            .collect(),
        None => Vec::new(),
    }
}

/// The heatmap as SVG text. Each matrix entry is one `<rect class="cell">`.
pub fn heatmap_svg(spec: &HeatmapSpec) -> Result<String> {
    let m = &spec.matrix;
    let (rows, cols) = (m.n_rows(), m.n_cols());
    let row_order = spec.order(&spec.row_tree, rows, "row")?;
    let col_order = spec.order(&spec.col_tree, cols, "column")?;
    for (cut, n, axis) in [(&spec.row_cut, rows, "row"), (&spec.col_cut, cols, "column")] {
        if let Some(c) = cut {
            if c.labels.len() != n {
                return Err(Error::Dimension(format!("{axis} cut covers {} of {n} items", c.labels.len())));
            }
        }
    }
    let cell = (640.0 / rows.max(cols) as f64).clamp(2.0, 24.0);
    let show_labels = cell >= 8.0;
    let label_w = if show_labels { 110.0 } else { 0.0 };
    let left = PAD + if spec.row_tree.is_some() { MARGIN_TREE } else { 0.0 };
    let top = PAD + TITLE_H + if spec.col_tree.is_some() { MARGIN_TREE } else { 0.0 };
    let width = left + cell * cols as f64 + label_w + PAD;
    let height = top + cell * rows as f64 + label_w + PAD;
    let (lo, hi) = spec.range.unwrap_or_else(|| m.min_max());
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        num(width),
        num(height),
        num(width),
        num(height)
    );
    out.push_str("<style>.merge{fill:none;stroke:#333;stroke-width:1}.bound{stroke:#000;stroke-width:1.5}text{font-family:sans-serif;font-size:10px}</style>\n");
    let _ = writeln!(
        out,
        "<text class=\"title\" x=\"{}\" y=\"{}\" font-size=\"14\">{}</text>",
        num(PAD),
        num(PAD + 14.0),
        escape(&spec.title)
    );

    out.push_str("<g class=\"cells\">\n");
    for (r, &i) in row_order.iter().enumerate() {
        for (c, &j) in col_order.iter().enumerate() {
            let v = m.get(i, j);
            let _ = writeln!(
                out,
                "<rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{} / {}: {}</title></rect>",
                num(left + c as f64 * cell),
                num(top + r as f64 * cell),
                num(cell),
                num(cell),
                spec.colormap.hex((v - lo) / span),
                escape(&m.row_labels()[i]),
                escape(&m.col_labels()[j]),
                num(v)
            );
        }
    }
    out.push_str("</g>\n");

    let (x_end, y_end) = (left + cell * cols as f64, top + cell * rows as f64);
    for k in boundaries(&row_order, &spec.row_cut) {
        let y = num(top + k as f64 * cell);
        let _ = writeln!(out, "<line class=\"bound\" x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\"/>", num(left), num(x_end));
    }
    for k in boundaries(&col_order, &spec.col_cut) {
        let x = num(left + k as f64 * cell);
        let _ = writeln!(out, "<line class=\"bound\" x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\"/>", num(top), num(y_end));
    }

    if let Some(t) = &spec.row_tree {
        draw_tree(&mut out, t, |r| top + (r as f64 + 0.5) * cell, left - 2.0, true);
    }
    if let Some(t) = &spec.col_tree {
        draw_tree(&mut out, t, |c| left + (c as f64 + 0.5) * cell, top - 2.0, false);
    }

    if show_labels {
        for (r, &i) in row_order.iter().enumerate() {
            let _ = writeln!(
                out,
                "<text class=\"row-label\" x=\"{}\" y=\"{}\">{}</text>",
                num(x_end + 3.0),
                num(top + (r as f64 + 0.5) * cell + 3.5),
                escape(&m.row_labels()[i])
            );
        }
        for (c, &j) in col_order.iter().enumerate() {
            let (x, y) = (left + (c as f64 + 0.5) * cell + 3.5, y_end + 3.0);
            let _ = writeln!(
                out,
                "<text class=\"col-label\" x=\"{}\" y=\"{}\" transform=\"rotate(90 {} {})\">{}</text>",
                num(x),
                num(y),
                num(x),
                num(y),
                escape(&m.col_labels()[j])
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_heatmap(spec: &HeatmapSpec, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &heatmap_svg(spec)?)
}

const SUBTYPE_COLORS: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

/// Likelihood plots, one panel per series: x is the temporal index, y the
/// likelihood, each pitch drawn as its subtype number in one
/// `<text class="pt">`. Season changes are vertical rules.
pub fn likelihood_svg(series: &[LikelihoodSeries]) -> String {
    let (panel_w, panel_h, left, gap) = (720.0, 180.0, 50.0, 40.0);
    let panels: Vec<Option<&LikelihoodSeries>> = if series.is_empty() {
        vec![None]
    } else {
        series.iter().map(Some).collect()
    };
    let width = left + panel_w + PAD * 2.0;
    let height = PAD + panels.len() as f64 * (panel_h + gap);
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        num(width),
        num(height),
        num(width),
        num(height)
    );
    out.push_str("<style>.axis{stroke:#000;stroke-width:1}.season{stroke:#999;stroke-dasharray:3 3}text{font-family:sans-serif;font-size:10px}.pt{font-size:9px;text-anchor:middle}</style>\n");

    for (p, s) in panels.iter().enumerate() {
        let y0 = PAD + p as f64 * (panel_h + gap) + gap * 0.5;
        let (x_min, x_max) = match s.and_then(|s| Some((s.points.first()?, s.points.last()?))) {
            Some((a, b)) => (a.temporal_index as f64, b.temporal_index as f64),
            None => (0.0, 1.0),
        };
        let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
        let px = |t: f64| left + PAD + (t - x_min) / x_span * (panel_w - 2.0 * PAD);
        let py = |l: f64| y0 + panel_h - l * panel_h;
        let title = match s {
            Some(s) => format!("{} {}", s.pitcher_id, s.pitch_type),
            None => "no pitches".into(),
        };
        let _ = writeln!(out, "<g class=\"panel\">");
        let _ = writeln!(out, "<text class=\"panel-title\" x=\"{}\" y=\"{}\">{}</text>", num(left), num(y0 - 6.0), escape(&title));
        let _ = writeln!(
            out,
            "<path class=\"axis\" d=\"M{} {}V{}H{}\" fill=\"none\"/>",
            num(left),
            num(y0),
            num(y0 + panel_h),
            num(left + panel_w)
        );
        for tick in [0.0, 0.5, 1.0] {
            let _ = writeln!(
                out,
                "<text class=\"tick\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
                num(left - 4.0),
                num(py(tick) + 3.5),
                num(tick)
            );
        }
        if let Some(s) = s {
            for w in s.points.windows(2) {
                if w[0].season != w[1].season {
                    let x = num(px((w[0].temporal_index + w[1].temporal_index) as f64 / 2.0));
                    let _ = writeln!(
                        out,
                        "<line class=\"season\" x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\"/>",
                        num(y0),
                        num(y0 + panel_h)
                    );
                    let _ = writeln!(out, "<text class=\"season-label\" x=\"{x}\" y=\"{}\">{}</text>", num(y0 + 10.0), w[1].season);
                }
            }
            for pt in &s.points {
                let _ = writeln!(
                    out,
                    "<text class=\"pt\" x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>",
                    num(px(pt.temporal_index as f64)),
                    num(py(pt.likelihood) + 3.0),
                    SUBTYPE_COLORS[pt.subtype % SUBTYPE_COLORS.len()],
                    pt.subtype + 1
                );
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_likelihood_plot(series: &[LikelihoodSeries], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &likelihood_svg(series))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub t: u64,
    /// start_speed, pfx_z, break_angle
    pub coords: [f64; 3],
    /// spin_rate
    pub size: f64,
    pub color: String,
    pub season: i32,
    pub pitch_type: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterExport {
    pub pitches: Vec<ScatterPoint>,
}

/// Color of a focus-season pitch of this type.
pub fn pitch_type_color(pitch_type: &str) -> &'static str {
    match pitch_type {
        "FF" => "red",
        "FT" => "orange",
        "SL" => "green",
        "CU" => "blue",
        "CH" => "purple",
        "FC" => "brown",
        "SI" => "gold",
        "KN" => "cyan",
        _ => "black",
    }
}

pub const BASELINE_COLOR: &str = "gray";

/// Point cloud of the pitches thrown in the focus season or a baseline
/// season. Focus-season pitches are colored by pitch type (this wins if the
/// focus season is also a baseline season), baseline pitches are gray.
pub fn scatter3p2(dataset: &PitchDataset, focus_season: i32, baseline_seasons: &BTreeSet<i32>) -> Result<ScatterExport> {
    let schema = dataset.schema();
    let idx = schema.indices_of(&["start_speed", "pfx_z", "break_angle", "spin_rate"])?;
    let pitches = dataset
        .records()
        .iter()
        .filter(|r| r.season == focus_season || baseline_seasons.contains(&r.season))
        .map(|r| ScatterPoint {
            t: r.temporal_index,
            coords: [r.values[idx[0]], r.values[idx[1]], r.values[idx[2]]],
            size: r.values[idx[3]],
            color: if r.season == focus_season {
                pitch_type_color(&r.pitch_type_label).into()
            } else {
                BASELINE_COLOR.into()
            },
            season: r.season,
            pitch_type: r.pitch_type_label.clone(),
        })
        .collect();
    Ok(ScatterExport { pitches })
}

pub fn export_scatter3p2(
    dataset: &PitchDataset,
    focus_season: i32,
    baseline_seasons: &BTreeSet<i32>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let export = scatter3p2(dataset, focus_season, baseline_seasons)?;
    write_file(path.as_ref(), &(serde_json::to_string(&export)? + "\n"))
}

/// Expected block structure of an MCE feature tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityTemplate {
    pub large_block: Vec<String>,
    /// Small blocks inside the large block.
    pub groups: Vec<Vec<String>>,
    /// Number of small blocks expected among the remaining features.
    pub outside_blocks: usize,
}

impl Default for UniversalityTemplate {
    /// The 11-feature block made of the speed trio, the vertical-movement
    /// trio, the horizontal-movement quartet and spin rate, with three
    /// blocks outside it.
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        UniversalityTemplate {
            large_block: s(&UNIVERSALITY11),
            groups: vec![
                s(&["start_speed", "end_speed", "vy0"]),
                s(&["pfx_z", "az", "break_length"]),
                s(&["break_angle", "pfx_x", "ax", "spin_dir"]),
                s(&["spin_rate"]),
            ],
            outside_blocks: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBlock {
    pub features: Vec<String>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    /// Largest tree node whose features all belong to the template's large
    /// block.
    pub large_block: Vec<String>,
    /// Clusters of the tree cut at `groups + outside_blocks`, in leaf order.
    pub sub_blocks: Vec<SubBlock>,
    pub cut_level: usize,
    pub satisfied: usize,
    pub expected: usize,
    pub match_score: f64,
}

impl UniversalityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "large block ({}): {}", self.large_block.len(), self.large_block.join(", "));
        let _ = writeln!(out, "blocks at cut level {}:", self.cut_level);
        for b in &self.sub_blocks {
            let _ = writeln!(out, "  {}x{}: {}", b.size, b.size, b.features.join(", "));
        }
        let _ = writeln!(
            out,
            "match score: {}/{} = {:.4}",
            self.satisfied, self.expected, self.match_score
        );
        out
    }
}

/// Scores a feature tree against the template.
///
/// A small-block membership of feature `f` holds when, after cutting the
/// tree at `groups + outside_blocks` clusters, the large-block features in
/// `f`'s cluster are exactly `f`'s template group. A large-block membership
/// holds when `f` lies in the largest tree node made only of large-block
/// features. The score is the fraction of the
/// `|groups| + |large_block|` memberships that hold.
pub fn universality_report(mce: &MceMatrix, tree: &Dendrogram, template: &UniversalityTemplate) -> Result<UniversalityReport> {
    if tree.leaf_labels != mce.features {
        return Err(Error::arg("tree leaves do not match the matrix features"));
    }
    let index: HashMap<&str, usize> = mce.features.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
    let lookup = |f: &String| {
        index
            .get(f.as_str())
            .copied()
            .ok_or_else(|| Error::arg(format!("template feature `{f}` is not in the matrix")))
    };
    let large: BTreeSet<usize> = template.large_block.iter().map(lookup).collect::<Result<_>>()?;
    let groups: Vec<BTreeSet<usize>> = template
        .groups
        .iter()
        .map(|g| g.iter().map(lookup).collect::<Result<BTreeSet<usize>>>())
        .collect::<Result<_>>()?;
    if let Some(f) = groups.iter().flatten().find(|f| !large.contains(f)) {
        return Err(Error::arg(format!("group feature `{}` is outside the large block", mce.features[*f])));
    }

    let n = mce.len();
    let cut_level = (groups.len() + template.outside_blocks).clamp(1, n);
    let cut = hclust::cut(tree, cut_level)?;
    let mut satisfied = 0;
    for g in &groups {
        for &f in g {
            let same: BTreeSet<usize> = large.iter().copied().filter(|&x| cut.labels[x] == cut.labels[f]).collect();
            if same == *g {
                satisfied += 1;
            }
        }
    }

    let mut best: Vec<usize> = Vec::new();
    for node in 0..(2 * n - 1) {
        let leaves = tree.leaves_under(node);
        if leaves.len() > best.len() && leaves.iter().all(|l| large.contains(l)) {
            best = leaves;
        }
    }
    satisfied += best.len();

    let expected = groups.iter().map(BTreeSet::len).sum::<usize>() + large.len();
    let name = |i: &usize| mce.features[*i].clone();
    let mut sub_blocks: Vec<SubBlock> = vec![];
    let mut seen = BTreeSet::new();
    for &leaf in &tree.leaf_order {
        if seen.insert(cut.labels[leaf]) {
            let features: Vec<String> = tree
                .leaf_order
                .iter()
                .filter(|&&l| cut.labels[l] == cut.labels[leaf])
                .map(name)
                .collect();
            sub_blocks.push(SubBlock { size: features.len(), features });
        }
    }
    Ok(UniversalityReport {
        large_block: best.iter().map(name).collect(),
        sub_blocks,
        cut_level,
        satisfied,
        expected,
        match_score: if expected == 0 { 1.0 } else { satisfied as f64 / expected as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hclust::{agglomerate, Linkage};
    use crate::ingest::FeatureSchema;
    use crate::subtype::LikelihoodPoint;
    use crate::synthetic::three_pitchers;
    use roxmltree::Document;

    fn count(svg: &str, class: &str) -> usize {
        let doc = Document::parse(svg).expect("well-formed SVG");
        doc.descendants().filter(|n| n.attribute("class") == Some(class)).count()
    }

    fn engineered_mce() -> MceMatrix {
        let t = UniversalityTemplate::default();
        let schema = FeatureSchema::pitchfx_default();
        let names: Vec<String> = schema.names().iter().map(|s| s.to_string()).collect();
        let outside = [["x0", "vx0", "px"].as_slice(), &["z0", "vz0", "pz"], &["y0", "ay", "break_y", "sz_top"]];
        let group_of = |f: &str| -> usize {
            if let Some(g) = t.groups.iter().position(|g| g.iter().any(|x| x == f)) {
                g
            } else {
                4 + outside.iter().position(|g| g.contains(&f)).unwrap()
            }
        };
        let entries = names
            .iter()
            .map(|a| {
                names
                    .iter()
                    .map(|b| {
                        let (ga, gb) = (group_of(a), group_of(b));
                        if a == b {
                            0.0
                        } else if ga == gb {
                            0.2
                        } else if ga < 4 && gb < 4 {
                            0.6
                        } else {
                            0.95
                        }
                    })
                    .collect()
            })
            .collect();
        MceMatrix::new(names, entries).unwrap()
    }

    #[test]
    fn number_formatting() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.12345), "0.123");
        assert_eq!(num(-0.0001), "0");
        assert_eq!(num(10.5), "10.5");
    }

    #[test]
    fn colormap_is_monotone() {
        let mut prev = Colormap::BlueRed.rgb(0.0);
        assert_eq!(Colormap::BlueRed.hex(0.0), "#2166ac");
        for k in 1..=100 {
            let c = Colormap::BlueRed.rgb(k as f64 / 100.0);
            // redness (r - b) never decreases
            assert!(c[0] as i32 - c[2] as i32 >= prev[0] as i32 - prev[2] as i32);
            prev = c;
        }
        assert!(Colormap::Grays.rgb(0.2)[0] > Colormap::Grays.rgb(0.8)[0]);
    }

    #[test]
    fn two_by_two_has_four_cells_two_colors() {
        let m = RectMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let svg = heatmap_svg(&HeatmapSpec::new("id", m)).unwrap();
        assert_eq!(count(&svg, "cell"), 4);
        let doc = Document::parse(&svg).unwrap();
        let fills: BTreeSet<&str> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("cell"))
            .filter_map(|n| n.attribute("fill"))
            .collect();
        assert_eq!(fills.len(), 2);
    }

    #[test]
    fn mce_heatmap_has_cells_and_margin_trees() {
        let mce = engineered_mce();
        let tree = agglomerate(&hclust::DistanceMatrix::from_mce(&mce).unwrap(), Linkage::Average).unwrap();
        let spec = HeatmapSpec::from_mce("t & <x>", &mce, Some(&tree)).unwrap();
        let svg = heatmap_svg(&spec).unwrap();
        assert_eq!(count(&svg, "cell"), 441);
        assert_eq!(count(&svg, "merge"), 40);
        assert_eq!(svg, heatmap_svg(&spec).unwrap());
    }

    #[test]
    fn tree_size_mismatch_is_rejected() {
        let mce = engineered_mce();
        let small = mce.submatrix(&["start_speed", "vy0", "az"]).unwrap();
        let tree = agglomerate(&hclust::DistanceMatrix::from_mce(&small).unwrap(), Linkage::Average).unwrap();
        assert!(heatmap_svg(&HeatmapSpec::from_mce("x", &mce, Some(&tree)).unwrap()).is_err());
    }

    #[test]
    fn likelihood_points_and_rules() {
        let pts: Vec<LikelihoodPoint> = (0..10)
            .map(|i| LikelihoodPoint {
                temporal_index: i,
                season: if i < 5 { 2014 } else { 2015 },
                subtype: 2,
                likelihood: 0.4,
            })
            .collect();
        let s = LikelihoodSeries { pitcher_id: "k".into(), pitch_type: "FF".into(), points: pts };
        let svg = likelihood_svg(std::slice::from_ref(&s));
        assert_eq!(count(&svg, "pt"), 10);
        assert_eq!(count(&svg, "season"), 1);
        // one horizontal band
        let doc = Document::parse(&svg).unwrap();
        let ys: BTreeSet<&str> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("pt"))
            .filter_map(|n| n.attribute("y"))
            .collect();
        assert_eq!(ys.len(), 1);

        let empty = likelihood_svg(&[]);
        assert_eq!(count(&empty, "pt"), 0);
        assert_eq!(count(&empty, "axis"), 1);
    }

    #[test]
    fn scatter_colors_and_counts() {
        let ds = three_pitchers(2, 5, 2016);
        let base: BTreeSet<i32> = [2016].into();
        let all_gray = scatter3p2(&ds, 2099, &base).unwrap();
        assert_eq!(all_gray.pitches.len(), ds.len());
        assert!(all_gray.pitches.iter().all(|p| p.color == BASELINE_COLOR));

        let focus = scatter3p2(&ds, 2016, &BTreeSet::new()).unwrap();
        let r = &ds.records()[0];
        let p = &focus.pitches[0];
        let s = ds.schema();
        assert_eq!(p.coords, [
            r.value(s, "start_speed").unwrap(),
            r.value(s, "pfx_z").unwrap(),
            r.value(s, "break_angle").unwrap()
        ]);
        assert_eq!(p.color, pitch_type_color(&r.pitch_type_label));
        let ff = focus.pitches.iter().find(|p| p.pitch_type == "FF").unwrap();
        assert_eq!(ff.color, "red");
        let v: serde_json::Value = serde_json::to_value(&focus).unwrap();
        for key in ["t", "coords", "size", "color", "season", "pitch_type"] {
            assert!(v["pitches"][0].get(key).is_some());
        }
    }

    #[test]
    fn engineered_blocks_score_one() {
        let mce = engineered_mce();
        let tree = agglomerate(&hclust::DistanceMatrix::from_mce(&mce).unwrap(), Linkage::Average).unwrap();
        let r = universality_report(&mce, &tree, &UniversalityTemplate::default()).unwrap();
        assert_eq!(r.match_score, 1.0);
        assert_eq!(r.large_block.len(), 11);
        let mut sizes: Vec<usize> = r.sub_blocks.iter().map(|b| b.size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 3, 3, 3, 3, 4, 4]);
        assert!(r.to_text().contains("match score: 22/22"));
    }

    #[test]
    fn random_matrix_only_reports() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut mce = engineered_mce();
        let n = mce.len();
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.random_range(0.0..1.0);
                mce.entries[i][j] = v;
                mce.entries[j][i] = v;
            }
        }
        let tree = agglomerate(&hclust::DistanceMatrix::from_mce(&mce).unwrap(), Linkage::Average).unwrap();
        let r = universality_report(&mce, &tree, &UniversalityTemplate::default()).unwrap();
        assert!((0.0..=1.0).contains(&r.match_score));
    }

    #[test]
    fn unknown_template_feature_is_an_error() {
        let mce = engineered_mce();
        let tree = agglomerate(&hclust::DistanceMatrix::from_mce(&mce).unwrap(), Linkage::Average).unwrap();
        let mut t = UniversalityTemplate::default();
        t.groups[3] = vec!["spin_axis".into()];
        assert!(universality_report(&mce, &tree, &t).is_err());
    }
}
