//! Command-line front end.
//!
//! ```text
//! datamech <ingest|mce|dm|subtypes|report> [--config FILE] [--out DIR] ...
//! ```
//!
//! Settings come from an optional JSON [`RunConfig`]; flags win over the
//! file. Relative paths inside the file resolve against its directory.
//! Every run writes `run.manifest.json` into the output directory, listing
//! the SHA-256 of the effective configuration, of every input read and of
//! every file written. `DATAMECH_THREADS` caps the worker pool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ffi::OsString;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entropy::{mce_matrix, MceMatrix};
use crate::error::Error;
use crate::hclust::{self, DistanceMatrix, Linkage};
use crate::histogram::HistogramConfig;
use crate::ingest::{
    dataset_paths, load_dataset, parse_csv, parse_gameday_xml, save_dataset, ColumnMapping, FeatureSchema,
    PitchDataset, PitchFilter, SUBTYPE13, UNIVERSALITY11,
};
use crate::mechanics::{dm_iterate, stack_pitcher_seasons, DmConfig};
use crate::render::{heatmap_svg, likelihood_svg, scatter3p2, universality_report, HeatmapSpec, UniversalityTemplate};
use crate::subtype::{cross_pitcher_series, pitcher_series, write_series_csv, LikelihoodSeries};

pub const MANIFEST_FILE: &str = "run.manifest.json";
pub const THREADS_ENV: &str = "DATAMECH_THREADS";
const DEFAULT_OUT: &str = "out";
const DATASET_STEM: &str = "dataset";

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const INTERNAL: i32 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "datamech", version, about = "Pitch feature dependency and subtype analysis")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Parse CSV or Gameday XML files into `<out>/dataset.*`.
    Ingest(IngestArgs),
    /// One MCE matrix, feature tree and heatmap per pitcher-season.
    Mce(MceArgs),
    /// Systemic Data Mechanics over stacked pitcher-season MCE vectors.
    Dm(DmArgs),
    /// Pitch subtypes and their likelihood against baseline seasons.
    Subtypes(SubtypesArgs),
    /// Universality report and 3D scatter export for one pitcher-season.
    Report(ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Mce(_) => "mce",
            Command::Dm(_) => "dm",
            Command::Subtypes(_) => "subtypes",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Auto,
    Csv,
    Xml,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Input file; repeatable. Adds to the config's inputs.
    #[arg(long = "input", value_name = "PATH")]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// CSV header for a logical column, as `logical=header`; repeatable.
    #[arg(long = "map", value_name = "LOGICAL=HEADER")]
    pub mappings: Vec<String>,
    /// Feature schema JSON replacing the 21-feature default.
    #[arg(long, value_name = "FILE")]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DatasetArg {
    /// Dataset base path (default `<out>/dataset`).
    #[arg(long, value_name = "BASE")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MceArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    /// Restrict to a pitcher; repeatable.
    #[arg(long = "pitcher", value_name = "ID")]
    pub pitchers: Vec<String>,
    /// Seasons, e.g. `2013`, `2012-2014` or `2012,2015`.
    #[arg(long, value_name = "SEASONS")]
    pub season: Option<String>,
    /// `all`, `universality11`, `subtype13` or a comma list.
    #[arg(long, value_name = "SEL")]
    pub features: Option<String>,
    #[arg(long, value_name = "N")]
    pub max_bins: Option<usize>,
    #[arg(long)]
    pub linkage: Option<Linkage>,
}

#[derive(Debug, Args, Serialize)]
pub struct DmArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    /// `11set` by default.
    #[arg(long, value_name = "SEL")]
    pub features: Option<String>,
    /// `all` or a comma list of pitcher ids.
    #[arg(long, value_name = "WHO", default_value = "all")]
    pub stack: String,
    #[arg(long, value_name = "N")]
    pub row_k: Option<usize>,
    #[arg(long, value_name = "N")]
    pub col_k: Option<usize>,
    #[arg(long, value_name = "N")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SubtypesArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    #[arg(long, value_name = "ID")]
    pub pitcher: String,
    /// Baseline seasons; falls back to the config's `baseline_seasons`.
    #[arg(long, value_name = "SEASONS")]
    pub baseline: Option<String>,
    #[arg(long, value_name = "SEL")]
    pub features: Option<String>,
    /// Pool these pitch types over all pitchers, with every pitch of
    /// `--pitcher` as the baseline. `OT` pools the types the pitcher never
    /// throws. Repeatable.
    #[arg(long = "pool", value_name = "TYPE")]
    pub pool: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub dataset: DatasetArg,
    #[arg(long, value_name = "ID")]
    pub pitcher: String,
    #[arg(long)]
    pub season: i32,
    /// Seasons drawn in gray in the scatter export.
    #[arg(long, value_name = "SEASONS")]
    pub baseline: Option<String>,
    #[arg(long, value_name = "SEL")]
    pub features: Option<String>,
}

/// A feature subset: a preset name or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSelection {
    Preset(String),
    List(Vec<String>),
}

impl FeatureSelection {
    /// Presets: `all`/`21set`, `universality11`/`11set`, `subtype13`/`13set`.
    /// Any other string is read as a comma list.
    pub fn resolve(&self, schema: &FeatureSchema) -> Result<Vec<String>, String> {
        let names: Vec<String> = match self {
            FeatureSelection::List(v) => v.clone(),
            FeatureSelection::Preset(p) => match p.as_str() {
                "all" | "21set" => schema.names().iter().map(|s| s.to_string()).collect(),
                "universality11" | "11set" => UNIVERSALITY11.iter().map(|s| s.to_string()).collect(),
                "subtype13" | "13set" => SUBTYPE13.iter().map(|s| s.to_string()).collect(),
                list => list.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect(),
            },
        };
        if names.is_empty() {
            return Err("empty feature selection".into());
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if schema.index_of(n).is_none() {
                return Err(format!("feature `{n}` is not in the dataset schema"));
            }
            if !seen.insert(n) {
                return Err(format!("feature `{n}` selected twice"));
            }
        }
        Ok(names)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSets {
    /// Per pitcher-season matrices and reports (default `all`).
    pub mce: Option<FeatureSelection>,
    /// Systemic stacking (default `universality11`).
    pub systemic: Option<FeatureSelection>,
    /// Subtype extraction (default `subtype13`).
    pub subtype: Option<FeatureSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: InputFormat,
    /// CSV header per logical column.
    #[serde(default)]
    pub mapping: BTreeMap<String, String>,
}

/// JSON run configuration. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<InputSpec>,
    /// Dataset base path for the analysis commands.
    pub dataset: Option<PathBuf>,
    /// Feature schema used by `ingest`.
    pub schema: Option<PathBuf>,
    pub features: FeatureSets,
    pub histogram: HistogramConfig,
    /// Linkage of the per-matrix feature trees.
    pub linkage: Linkage,
    /// Systemic cut levels; sized from the matrix when absent.
    pub dm: Option<DmConfig>,
    pub subtype_dm: DmConfig,
    pub baseline_seasons: BTreeMap<String, Vec<i32>>,
    pub pitchers: Vec<String>,
    pub seasons: Vec<i32>,
    pub template: UniversalityTemplate,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        cfg.inputs.iter_mut().for_each(|i| fix(&mut i.path));
        cfg.dataset.iter_mut().for_each(fix);
        cfg.schema.iter_mut().for_each(fix);
        cfg.out.iter_mut().for_each(fix);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(Error),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => exit::USAGE,
            Failure::Data(_) => exit::DATA,
            Failure::Internal(_) => exit::INTERNAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Data(e) => write!(f, "data error: {e}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_file(path: &Path) -> Outcome<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Data(Error::io(path, e)))?;
    Ok(FileDigest {
        path: path.to_string_lossy().into_owned(),
        sha256: sha256_hex(&bytes),
    })
}

/// Keeps file names portable.
fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

struct Run {
    out: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    fn new(out: PathBuf) -> Outcome<Self> {
        std::fs::create_dir_all(&out)
            .map_err(|e| Failure::Internal(format!("cannot create {}: {e}", out.display())))?;
        Ok(Run {
            out,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn read_input(&mut self, path: &Path) -> Outcome {
        let d = digest_file(path)?;
        if !self.inputs.contains(&d) {
            self.inputs.push(d);
        }
        Ok(())
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Outcome {
        let path = self.out.join(name);
        std::fs::write(&path, contents.as_ref())
            .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))?;
        self.record(name, contents.as_ref());
        Ok(())
    }

    fn record(&mut self, name: &str, contents: &[u8]) {
        self.outputs.retain(|d| d.path != name);
        self.outputs.push(FileDigest {
            path: name.to_owned(),
            sha256: sha256_hex(contents),
        });
    }

    fn finish(mut self, command: &str, config_hash: String) -> Outcome<Manifest> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: "datamech".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: config_hash,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
        let path = self.out.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))?;
        Ok(manifest)
    }
}

/// `2013`, `2012-2014`, `2012,2015` or combinations.
pub fn parse_seasons(text: &str) -> Result<BTreeSet<i32>, String> {
    let mut out = BTreeSet::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("bad season spec `{part}`");
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(part.parse().map_err(|_| bad())?);
            }
        }
    }
    if out.is_empty() {
        return Err("empty season spec".into());
    }
    Ok(out)
}

/// Parses and runs a command line, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();

    match panic::catch_unwind(AssertUnwindSafe(|| execute_with_threads(&cli))) {
        Ok(Ok(_)) => exit::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("datamech: {f}");
            f.code()
        }
        Err(_) => {
            eprintln!("datamech: internal error: unexpected panic");
            exit::INTERNAL
        }
    }
}

fn execute_with_threads(cli: &Cli) -> Outcome<Manifest> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Internal(e.to_string()))?;
            pool.install(|| execute(cli))
        }
        Err(_) => execute(cli),
    }
}

/// Runs a parsed command and writes its manifest.
pub fn execute(cli: &Cli) -> Outcome<Manifest> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    // Hash of what determines the outputs: the resolved config and the
    // command's own arguments. The output directory is left out.
    #[derive(Serialize)]
    struct Effective<'a> {
        config: &'a RunConfig,
        command: &'a Command,
    }
    let mut hashed = cfg.clone();
    hashed.out = None;
    let effective = serde_json::to_vec(&Effective {
        config: &hashed,
        command: &cli.command,
    })
    .map_err(|e| Failure::Internal(e.to_string()))?;
    let config_hash = sha256_hex(&effective);

    let mut run = Run::new(out.clone())?;
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(&cfg, a, &mut run)?,
        Command::Mce(a) => cmd_mce(&cfg, a, &out, &mut run)?,
        Command::Dm(a) => cmd_dm(&cfg, a, &out, &mut run)?,
        Command::Subtypes(a) => cmd_subtypes(&cfg, a, &out, &mut run)?,
        Command::Report(a) => cmd_report(&cfg, a, &out, &mut run)?,
    }
    run.finish(cli.command.name(), config_hash)
}

fn require_file(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{} does not exist", path.display())))
    }
}

fn open_dataset(cfg: &RunConfig, arg: &DatasetArg, out: &Path, run: &mut Run) -> Outcome<PitchDataset> {
    let base = arg
        .dataset
        .clone()
        .or_else(|| cfg.dataset.clone())
        .unwrap_or_else(|| out.join(DATASET_STEM));
    let (data, schema) = dataset_paths(&base);
    require_file(&data)?;
    require_file(&schema)?;
    run.read_input(&data)?;
    run.read_input(&schema)?;
    Ok(load_dataset(&base)?)
}

fn select(flag: &Option<String>, configured: &Option<FeatureSelection>, fallback: &str, schema: &FeatureSchema) -> Outcome<Vec<String>> {
    let sel = match (flag, configured) {
        (Some(f), _) => FeatureSelection::Preset(f.clone()),
        (None, Some(c)) => c.clone(),
        (None, None) => FeatureSelection::Preset(fallback.into()),
    };
    sel.resolve(schema).map_err(Failure::Usage)
}

fn baseline_for(flag: &Option<String>, cfg: &RunConfig, pitcher: &str) -> Outcome<Option<BTreeSet<i32>>> {
    match flag {
        Some(s) => parse_seasons(s).map(Some).map_err(Failure::Usage),
        None => Ok(cfg.baseline_seasons.get(pitcher).map(|v| v.iter().copied().collect())),
    }
}

fn cmd_ingest(cfg: &RunConfig, a: &IngestArgs, run: &mut Run) -> Outcome {
    let schema = match a.schema.as_ref().or(cfg.schema.as_ref()) {
        Some(p) => {
            require_file(p)?;
            run.read_input(p)?;
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Data(Error::io(p, e)))?;
            serde_json::from_str::<FeatureSchema>(&text)
                .map_err(|e| Failure::Usage(format!("invalid schema {}: {e}", p.display())))?
        }
        None => FeatureSchema::pitchfx_default(),
    };
    let mut flag_map = BTreeMap::new();
    for m in &a.mappings {
        let (k, v) = m
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--map expects LOGICAL=HEADER, got `{m}`")))?;
        flag_map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    let mut specs = cfg.inputs.clone();
    specs.extend(a.inputs.iter().map(|p| InputSpec {
        path: p.clone(),
        format: a.format,
        mapping: BTreeMap::new(),
    }));
    if specs.is_empty() {
        return Err(Failure::Usage("ingest needs at least one --input or config input".into()));
    }
    let mut parts = Vec::with_capacity(specs.len());
    for spec in &specs {
        require_file(&spec.path)?;
        run.read_input(&spec.path)?;
        let xml = match spec.format {
            InputFormat::Xml => true,
            InputFormat::Csv => false,
            InputFormat::Auto => spec.path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")),
        };
        let part = if xml {
            parse_gameday_xml(&spec.path, &schema)?
        } else {
            let mut map: HashMap<String, String> = spec.mapping.clone().into_iter().collect();
            map.extend(flag_map.clone());
            parse_csv(&spec.path, &schema, &ColumnMapping::from(map))?
        };
        log::info!("{}: {} pitches", spec.path.display(), part.len());
        parts.push(part);
    }
    let dataset = PitchDataset::merge(parts)?;
    let base = run.out.join(DATASET_STEM);
    save_dataset(&dataset, &base).map_err(|e| Failure::Internal(e.to_string()))?;
    for path in [dataset_paths(&base).0, dataset_paths(&base).1] {
        let bytes = std::fs::read(&path).map_err(|e| Failure::Internal(e.to_string()))?;
        let name = path.file_name().expect("file name").to_string_lossy().into_owned();
        run.record(&name, &bytes);
    }
    Ok(())
}

/// MCE matrix and average-linkage feature tree of one subset, or `None`
/// with a warning when there are too few pitches.
fn matrix_and_tree(ds: &PitchDataset, features: &[String], cfg: &RunConfig, label: &str) -> Outcome<Option<(MceMatrix, hclust::Dendrogram)>> {
    if ds.len() < 2 {
        log::warn!("{label}: {} pitch(es), skipped", ds.len());
        return Ok(None);
    }
    let mce = mce_matrix(ds, features, &cfg.histogram)?;
    let tree = hclust::agglomerate(&DistanceMatrix::from_mce(&mce)?, cfg.linkage)?;
    Ok(Some((mce, tree)))
}

fn cmd_mce(cfg: &RunConfig, a: &MceArgs, out: &Path, run: &mut Run) -> Outcome {
    let mut cfg = cfg.clone();
    if let Some(b) = a.max_bins {
        cfg.histogram.max_bins = b;
    }
    if let Some(l) = a.linkage {
        cfg.linkage = l;
    }
    let ds = open_dataset(&cfg, &a.dataset, out, run)?;
    let features = select(&a.features, &cfg.features.mce, "all", ds.schema())?;
    let pitchers: BTreeSet<&String> = if a.pitchers.is_empty() { cfg.pitchers.iter().collect() } else { a.pitchers.iter().collect() };
    let seasons: BTreeSet<i32> = match &a.season {
        Some(s) => parse_seasons(s).map_err(Failure::Usage)?,
        None => cfg.seasons.iter().copied().collect(),
    };
    let targets: Vec<(String, i32)> = ds
        .pitcher_seasons()
        .into_iter()
        .filter(|(p, s)| (pitchers.is_empty() || pitchers.contains(p)) && (seasons.is_empty() || seasons.contains(s)))
        .collect();
    if targets.is_empty() {
        return Err(Failure::Data(Error::Dataset("no pitcher-season matches the selection".into())));
    }
    let mut written = 0;
    for (pitcher, season) in targets {
        let label = format!("{pitcher}-{season}");
        let sub = ds.filter(&PitchFilter::new().pitcher(&pitcher).season(season));
        let Some((mce, tree)) = matrix_and_tree(&sub, &features, &cfg, &label)? else {
            continue;
        };
        let stem = file_stem(&label);
        run.write(&format!("{stem}.mce.json"), mce.to_json()? + "\n")?;
        run.write(&format!("{stem}.mce.csv"), mce.to_csv())?;
        run.write(&format!("{stem}.tree.json"), tree.to_json()? + "\n")?;
        let spec = HeatmapSpec::from_mce(format!("{label} MCE"), &mce, Some(&tree))?;
        run.write(&format!("{stem}.mce.svg"), heatmap_svg(&spec)?)?;
        written += 1;
    }
    if written == 0 {
        return Err(Failure::Data(Error::Dataset("every selected pitcher-season has fewer than 2 pitches".into())));
    }
    Ok(())
}

fn cmd_dm(cfg: &RunConfig, a: &DmArgs, out: &Path, run: &mut Run) -> Outcome {
    let ds = open_dataset(cfg, &a.dataset, out, run)?;
    let features = select(&a.features, &cfg.features.systemic, "universality11", ds.schema())?;
    let who: Option<BTreeSet<&str>> = match a.stack.trim() {
        "all" => None,
        list => Some(list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()),
    };
    let mut mces = Vec::new();
    for (pitcher, season) in ds.pitcher_seasons() {
        if who.as_ref().is_some_and(|w| !w.contains(pitcher.as_str())) {
            continue;
        }
        let label = format!("{pitcher}-{season}");
        let sub = ds.filter(&PitchFilter::new().pitcher(&pitcher).season(season));
        if let Some((mce, _)) = matrix_and_tree(&sub, &features, cfg, &label)? {
            mces.push((label, mce));
        }
    }
    if mces.len() < 2 {
        return Err(Failure::Data(Error::Dataset(format!(
            "systemic analysis needs at least 2 pitcher-seasons, found {}",
            mces.len()
        ))));
    }
    let matrix = stack_pitcher_seasons(&mces)?;
    let mut dm = cfg.dm.unwrap_or_else(|| DmConfig::systemic(matrix.n_rows(), matrix.n_cols()));
    if let Some(k) = a.row_k {
        dm.row_cut_k = k;
    }
    if let Some(k) = a.col_k {
        dm.col_cut_k = k;
    }
    if let Some(i) = a.iterations {
        dm.iterations = i;
    }
    if dm.row_cut_k == 0 || dm.row_cut_k > matrix.n_rows() || dm.col_cut_k == 0 || dm.col_cut_k > matrix.n_cols() {
        return Err(Failure::Usage(format!(
            "cut levels {}x{} do not fit a {}x{} matrix",
            dm.row_cut_k,
            dm.col_cut_k,
            matrix.n_rows(),
            matrix.n_cols()
        )));
    }
    let trees = dm_iterate(&matrix, &dm)?;
    let mut csv = String::from("pitcher_season");
    for c in matrix.col_labels() {
        csv.push(',');
        csv.push_str(c);
    }
    csv.push('\n');
    for (i, r) in matrix.row_labels().iter().enumerate() {
        csv.push_str(r);
        for v in matrix.row(i) {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    run.write("systemic.matrix.csv", csv)?;
    run.write("systemic.dm.json", trees.to_json()? + "\n")?;
    let title = format!("{} pitcher-seasons x {} feature pairs", matrix.n_rows(), matrix.n_cols());
    run.write("systemic.svg", heatmap_svg(&HeatmapSpec::from_coupled(title, &matrix, &trees))?)?;
    Ok(())
}

fn write_series(run: &mut Run, stem: &str, series: &[LikelihoodSeries]) -> Outcome {
    run.write(&format!("{stem}.likelihood.csv"), write_series_csv(series))?;
    run.write(&format!("{stem}.likelihood.svg"), likelihood_svg(series))
}

fn cmd_subtypes(cfg: &RunConfig, a: &SubtypesArgs, out: &Path, run: &mut Run) -> Outcome {
    let ds = open_dataset(cfg, &a.dataset, out, run)?;
    let features = select(&a.features, &cfg.features.subtype, "subtype13", ds.schema())?;
    let stem = file_stem(&a.pitcher);
    if !a.pool.is_empty() {
        for ty in &a.pool {
            let (model, series) = cross_pitcher_series(&ds, &a.pitcher, ty, &features, &cfg.subtype_dm)?;
            let s = format!("{stem}-pooled-{}", file_stem(ty));
            run.write(&format!("{s}.subtypes.json"), model.to_json()? + "\n")?;
            write_series(run, &s, &series)?;
        }
        return Ok(());
    }
    let baseline = baseline_for(&a.baseline, cfg, &a.pitcher)?
        .ok_or_else(|| Failure::Usage(format!("no baseline seasons for {}; pass --baseline", a.pitcher)))?;
    let fitted = pitcher_series(&ds, &a.pitcher, &baseline, &features, &cfg.subtype_dm)?;
    if fitted.is_empty() {
        return Err(Failure::Data(Error::Dataset(format!("{}: no pitch type has 2 or more pitches", a.pitcher))));
    }
    let models: Vec<_> = fitted.iter().map(|(m, _)| m).collect();
    let series: Vec<LikelihoodSeries> = fitted.iter().map(|(_, s)| s.clone()).collect();
    let json = serde_json::to_string_pretty(&models).map_err(Error::from)? + "\n";
    run.write(&format!("{stem}.subtypes.json"), json)?;
    write_series(run, &stem, &series)
}

fn cmd_report(cfg: &RunConfig, a: &ReportArgs, out: &Path, run: &mut Run) -> Outcome {
    let ds = open_dataset(cfg, &a.dataset, out, run)?;
    let features = select(&a.features, &cfg.features.mce, "all", ds.schema())?;
    let label = format!("{}-{}", a.pitcher, a.season);
    let own = ds.filter(&PitchFilter::new().pitcher(&a.pitcher));
    let season = own.filter(&PitchFilter::new().season(a.season));
    let Some((mce, tree)) = matrix_and_tree(&season, &features, cfg, &label)? else {
        return Err(Failure::Data(Error::Dataset(format!("{label}: fewer than 2 pitches"))));
    };
    let report = universality_report(&mce, &tree, &cfg.template)?;
    let baseline = baseline_for(&a.baseline, cfg, &a.pitcher)?.unwrap_or_default();
    let scatter = scatter3p2(&own, a.season, &baseline)?;
    let stem = file_stem(&label);
    run.write(&format!("{stem}.universality.json"), report.to_json()? + "\n")?;
    run.write(&format!("{stem}.universality.txt"), report.to_text())?;
    run.write(&format!("{stem}.scatter.json"), serde_json::to_string(&scatter).map_err(Error::from)? + "\n")?;
    Ok(())
}
