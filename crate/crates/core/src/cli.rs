//! The `cartography` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 ingestion or validation failure,
//! 3 computation or verification failure, 4 output-write failure.

use crate::correlation::{write_correlations_csv, ClassFilter, COEFFICIENT};
use crate::dynamics::{write_dynamics_csv, DynamicsError, RegionConfig};
use crate::heuristics::{write_annotations_csv, OverlapMeasure};
use crate::ingest::{
    check_role, load_dataset, load_prediction_files, validate, Corpus, DatasetRole, IngestError,
    Sample, Split,
};
use crate::pipeline::{analyze, Analysis};
use crate::render::{map_svg, trend_file_name, trends_svg, MapStyle, RenderError};
use crate::synth::{
    self, read_oracle, PipelineOutputs, SynthError, SynthSpec, ANNOTATIONS_CSV, CORRELATIONS_CSV,
    DYNAMICS_CSV,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

pub const MANIFEST_JSON: &str = "manifest.json";
pub const MAPS_DIR: &str = "maps";
pub const TRENDS_DIR: &str = "trends";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Ingest(String),
    Compute(String),
    Write(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Ingest(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Write(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (category, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Ingest(m) => ("ingest", m),
            CliError::Compute(m) => ("compute", m),
            CliError::Write(m) => ("write", m),
        };
        write!(f, "error[{category}]: {msg}")
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Ingest(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidRegionConfig { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Io { .. } => CliError::Write(e.to_string()),
            RenderError::InvalidFraction(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            SynthError::Schema(_) => CliError::Ingest(e.to_string()),
            SynthError::Io { .. } => CliError::Write(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "cartography",
    version,
    about = "Training-dynamics cartography for NLI prediction logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check dataset and prediction files without writing anything.
    Validate(RunArgs),
    /// Write heuristic annotations (annotations.csv).
    Heuristics(RunArgs),
    /// Write per-epoch confidence, variability and region (dynamics.csv).
    Dynamics(RunArgs),
    /// Write correlations (correlations.csv) and trend charts (trends/).
    Correlate(RunArgs),
    /// Write cartography maps (maps/).
    Map(RunArgs),
    /// Run every step and write a manifest.
    Report(RunArgs),
    /// Generate a synthetic corpus with an oracle.
    Synth(SynthArgs),
    /// Compare a run directory with a synthetic oracle.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file holding any mix of roles (repeatable).
    #[arg(long)]
    dataset: Vec<PathBuf>,
    /// Dataset file holding only train samples.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Dataset file holding only in-distribution eval samples.
    #[arg(long)]
    eval_in: Option<PathBuf>,
    /// Dataset file holding only OOD eval samples.
    #[arg(long)]
    eval_ood: Option<PathBuf>,
    /// Prediction log (repeatable).
    #[arg(long)]
    predictions: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Variability threshold for the ambiguous region [default: 0.25].
    #[arg(long)]
    tau_v: Option<f64>,
    /// Confidence threshold between easy and hard [default: 0.5].
    #[arg(long)]
    tau_mu: Option<f64>,
    /// Fraction of points drawn on maps, in (0, 1] [default: 1].
    #[arg(long)]
    sample_fraction: Option<f64>,
    /// Seed for map subsampling [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Draw region thresholds on maps.
    #[arg(long)]
    region_guides: bool,
    /// Overlap measures to correlate, comma separated [default: m2].
    #[arg(long, value_delimiter = ',', value_parser = parse_measure)]
    measures: Vec<OverlapMeasure>,
    /// Epochs to map, comma separated [default: every epoch].
    #[arg(long, value_delimiter = ',')]
    epochs: Vec<u32>,
}

fn parse_measure(s: &str) -> Result<OverlapMeasure, String> {
    OverlapMeasure::parse(s).ok_or_else(|| format!("unknown measure {s:?} (expected m1 or m2)"))
}

/// Every run option; the `--config` file uses these keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Vec<PathBuf>,
    pub train: Option<PathBuf>,
    pub eval_in: Option<PathBuf>,
    pub eval_ood: Option<PathBuf>,
    pub predictions: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub tau_v: f64,
    pub tau_mu: f64,
    pub sample_fraction: f64,
    pub seed: u64,
    pub region_guides: bool,
    pub measures: Vec<OverlapMeasure>,
    /// Empty means every epoch.
    pub epochs: Vec<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let style = MapStyle::default();
        RunConfig {
            dataset: Vec::new(),
            train: None,
            eval_in: None,
            eval_ood: None,
            predictions: Vec::new(),
            out: None,
            tau_v: RegionConfig::DEFAULT_TAU_V,
            tau_mu: RegionConfig::DEFAULT_TAU_MU,
            sample_fraction: style.sample_fraction,
            seed: style.seed,
            region_guides: false,
            measures: vec![OverlapMeasure::M2],
            epochs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn regions(&self) -> CliResult<RegionConfig> {
        RegionConfig::new(self.tau_v, self.tau_mu).map_err(CliError::from)
    }

    pub fn map_style(&self) -> CliResult<MapStyle> {
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(CliError::Usage(format!(
                "sample_fraction {} must be in (0, 1]",
                self.sample_fraction
            )));
        }
        Ok(MapStyle {
            sample_fraction: self.sample_fraction,
            seed: self.seed,
            guides: self.region_guides.then(|| self.regions()).transpose()?,
        })
    }

    fn out_dir(&self) -> CliResult<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage("--out is required".into()))
    }

    fn input_files(&self) -> Vec<(&'static str, &Path)> {
        let mut out = Vec::new();
        for (role, path) in [
            ("train", &self.train),
            ("eval_in", &self.eval_in),
            ("eval_ood", &self.eval_ood),
        ] {
            if let Some(p) = path {
                out.push((role, p.as_path()));
            }
        }
        out.extend(self.dataset.iter().map(|p| ("dataset", p.as_path())));
        out.extend(
            self.predictions
                .iter()
                .map(|p| ("predictions", p.as_path())),
        );
        out
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn resolve_run_config(args: RunArgs) -> CliResult<RunConfig> {
    let mut cfg: RunConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => RunConfig::default(),
    };
    if !args.dataset.is_empty() {
        cfg.dataset = args.dataset;
    }
    if !args.predictions.is_empty() {
        cfg.predictions = args.predictions;
    }
    if !args.measures.is_empty() {
        cfg.measures = args.measures;
    }
    if !args.epochs.is_empty() {
        cfg.epochs = args.epochs;
    }
    cfg.train = args.train.or(cfg.train);
    cfg.eval_in = args.eval_in.or(cfg.eval_in);
    cfg.eval_ood = args.eval_ood.or(cfg.eval_ood);
    cfg.out = args.out.or(cfg.out);
    cfg.tau_v = args.tau_v.unwrap_or(cfg.tau_v);
    cfg.tau_mu = args.tau_mu.unwrap_or(cfg.tau_mu);
    cfg.sample_fraction = args.sample_fraction.unwrap_or(cfg.sample_fraction);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.region_guides |= args.region_guides;

    let mut seen = Vec::new();
    cfg.measures.retain(|m| {
        let fresh = !seen.contains(m);
        seen.push(*m);
        fresh
    });
    if cfg.measures.is_empty() {
        return Err(CliError::Usage("at least one measure is required".into()));
    }
    cfg.regions()?;
    cfg.map_style()?;
    Ok(cfg)
}

fn load_samples(cfg: &RunConfig) -> CliResult<Vec<Sample>> {
    let roles = [
        (&cfg.train, DatasetRole::Train),
        (&cfg.eval_in, DatasetRole::EvalInDistribution),
        (&cfg.eval_ood, DatasetRole::EvalOod),
    ];
    if cfg.dataset.is_empty() && roles.iter().all(|(p, _)| p.is_none()) {
        return Err(CliError::Usage(
            "no dataset given (use --dataset or --train/--eval-in/--eval-ood)".into(),
        ));
    }
    let mut samples = Vec::new();
    for (path, role) in roles {
        if let Some(path) = path {
            let part = load_dataset(path)?;
            check_role(&part, role)?;
            samples.extend(part);
        }
    }
    for path in &cfg.dataset {
        samples.extend(load_dataset(path)?);
    }
    Ok(samples)
}

/// Loads and validates the corpus; predictions are optional only when
/// `need_predictions` is false.
fn load_corpus(cfg: &RunConfig, need_predictions: bool) -> CliResult<Corpus> {
    if need_predictions && cfg.predictions.is_empty() {
        return Err(CliError::Usage("--predictions is required".into()));
    }
    let samples = load_samples(cfg)?;
    let corpus = load_prediction_files(&cfg.predictions, samples)?;
    let violations = validate(&corpus);
    if let Some(first) = violations.first() {
        for v in &violations {
            eprintln!("{}\t{}\t{}", v.sample_id, v.rule.as_str(), v.detail);
        }
        return Err(CliError::Ingest(format!(
            "{} validation violation(s); first: {} {}: {}",
            violations.len(),
            first.sample_id,
            first.rule.as_str(),
            first.detail
        )));
    }
    Ok(corpus)
}

/// Files written by one command, relative to the output directory.
struct Sink<'a> {
    root: &'a Path,
    written: Vec<(String, Vec<u8>)>,
}

impl<'a> Sink<'a> {
    fn new(root: &'a Path) -> Self {
        Sink {
            root,
            written: Vec::new(),
        }
    }

    fn put(&mut self, rel: &str, bytes: Vec<u8>) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Write(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, &bytes)
            .map_err(|e| CliError::Write(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        self.written.push((rel.to_string(), bytes));
        Ok(())
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Write(e.to_string()))?;
    Ok(buf)
}

fn write_annotations(sink: &mut Sink, analysis: &Analysis) -> CliResult<()> {
    for failure in analysis.annotations.failures() {
        eprintln!(
            "warning: {} left untagged: {}",
            failure.sample_id, failure.error
        );
    }
    let bytes = csv_bytes(|b| write_annotations_csv(b, &analysis.annotations))?;
    sink.put(ANNOTATIONS_CSV, bytes)
}

fn write_dynamics(sink: &mut Sink, analysis: &Analysis) -> CliResult<()> {
    let bytes = csv_bytes(|b| write_dynamics_csv(b, analysis.snapshots.iter().flatten()))?;
    sink.put(DYNAMICS_CSV, bytes)
}

fn write_correlations(sink: &mut Sink, analysis: &Analysis, cfg: &RunConfig) -> CliResult<()> {
    let bytes = csv_bytes(|b| write_correlations_csv(b, &analysis.series))?;
    sink.put(CORRELATIONS_CSV, bytes)?;
    for &measure in &cfg.measures {
        for class_filter in ClassFilter::ALL {
            let series: Vec<_> = analysis
                .series
                .iter()
                .filter(|s| s.measure == measure && s.class_filter == class_filter)
                .cloned()
                .collect();
            match trends_svg(&series) {
                Ok(svg) => {
                    let rel = format!("{TRENDS_DIR}/{}", trend_file_name(measure, class_filter));
                    sink.put(&rel, svg.into_bytes())?;
                }
                Err(RenderError::AllUndefined) => eprintln!(
                    "warning: no defined correlation for {} / {}; trend chart skipped",
                    measure.as_str(),
                    class_filter.as_str()
                ),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn map_epochs(cfg: &RunConfig, max_epoch: u32) -> CliResult<Vec<u32>> {
    if cfg.epochs.is_empty() {
        return Ok((1..=max_epoch).collect());
    }
    let mut epochs = Vec::new();
    for &e in &cfg.epochs {
        if e < 1 || e > max_epoch {
            return Err(CliError::Usage(format!(
                "epoch {e} to map is outside 1..={max_epoch}"
            )));
        }
        if !epochs.contains(&e) {
            epochs.push(e);
        }
    }
    Ok(epochs)
}

pub fn map_file_name(split: Split, epoch: u32) -> String {
    format!("map_{}_e{epoch}.svg", split.as_str())
}

fn write_maps(sink: &mut Sink, analysis: &Analysis, cfg: &RunConfig) -> CliResult<()> {
    let style = cfg.map_style()?;
    let epochs = map_epochs(cfg, analysis.snapshots.len() as u32)?;
    for epoch in epochs {
        let snapshot = &analysis.snapshots[epoch as usize - 1];
        for split in [Split::Train, Split::Eval] {
            let points: Vec<_> = snapshot
                .iter()
                .filter(|p| p.split == split)
                .cloned()
                .collect();
            if points.is_empty() {
                eprintln!(
                    "warning: no {} samples at epoch {epoch}; map skipped",
                    split.as_str()
                );
                continue;
            }
            let svg = map_svg(&points, &style)?;
            sink.put(
                &format!("{MAPS_DIR}/{}", map_file_name(split, epoch)),
                svg.into_bytes(),
            )?;
        }
    }
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct ManifestInput {
    role: &'static str,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    coefficient: &'static str,
    config: &'a RunConfig,
    inputs: Vec<ManifestInput>,
    outputs: Vec<ManifestFile>,
}

fn manifest_bytes(cfg: &RunConfig, written: &[(String, Vec<u8>)]) -> CliResult<Vec<u8>> {
    let mut inputs = Vec::new();
    for (role, path) in cfg.input_files() {
        let bytes =
            fs::read(path).map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
        inputs.push(ManifestInput {
            role,
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
    }
    let mut outputs: Vec<ManifestFile> = written
        .iter()
        .map(|(path, bytes)| ManifestFile {
            path: path.clone(),
            sha256: sha256_hex(bytes),
        })
        .collect();
    outputs.sort_by(|a, b| a.path.cmp(&b.path));
    // The output directory is left out so identical runs produce identical manifests.
    let config = RunConfig {
        out: None,
        ..cfg.clone()
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        coefficient: COEFFICIENT,
        config: &config,
        inputs,
        outputs,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Write(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn run_analysis(cfg: &RunConfig) -> CliResult<(Corpus, Analysis)> {
    let corpus = load_corpus(cfg, true)?;
    let analysis = analyze(&corpus, &cfg.regions()?, &cfg.measures)?;
    Ok((corpus, analysis))
}

pub fn cmd_validate(cfg: &RunConfig) -> CliResult<()> {
    let corpus = load_corpus(cfg, false)?;
    println!(
        "ok: {} samples, {} epochs, 0 violations",
        corpus.len(),
        corpus.max_epoch()
    );
    Ok(())
}

pub fn cmd_heuristics(cfg: &RunConfig) -> CliResult<()> {
    let corpus = load_corpus(cfg, false)?;
    let annotations = crate::heuristics::annotate_corpus(&corpus);
    let analysis = Analysis {
        annotations,
        snapshots: Vec::new(),
        series: Vec::new(),
    };
    write_annotations(&mut Sink::new(cfg.out_dir()?), &analysis)
}

pub fn cmd_dynamics(cfg: &RunConfig) -> CliResult<()> {
    let (_, analysis) = run_analysis(cfg)?;
    write_dynamics(&mut Sink::new(cfg.out_dir()?), &analysis)
}

pub fn cmd_correlate(cfg: &RunConfig) -> CliResult<()> {
    let (_, analysis) = run_analysis(cfg)?;
    write_correlations(&mut Sink::new(cfg.out_dir()?), &analysis, cfg)
}

pub fn cmd_map(cfg: &RunConfig) -> CliResult<()> {
    let (_, analysis) = run_analysis(cfg)?;
    write_maps(&mut Sink::new(cfg.out_dir()?), &analysis, cfg)
}

/// Every output of the other subcommands plus `manifest.json`.
pub fn cmd_report(cfg: &RunConfig) -> CliResult<()> {
    let out = cfg.out_dir()?;
    let (_, analysis) = run_analysis(cfg)?;
    map_epochs(cfg, analysis.snapshots.len() as u32)?;
    let mut sink = Sink::new(out);
    write_annotations(&mut sink, &analysis)?;
    write_dynamics(&mut sink, &analysis)?;
    write_correlations(&mut sink, &analysis, cfg)?;
    write_maps(&mut sink, &analysis, cfg)?;
    let manifest = manifest_bytes(cfg, &sink.written)?;
    sink.put(MANIFEST_JSON, manifest)
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// JSON file with any SynthSpec fields; flags take precedence.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory for dataset.jsonl, predictions.jsonl and oracle.jsonl.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_eval_in: Option<usize>,
    #[arg(long)]
    n_eval_ood: Option<usize>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    planted_slope: Option<f64>,
    #[arg(long)]
    intercept: Option<f64>,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long)]
    vocabulary_size: Option<usize>,
    /// Terminal confidence for OOD entailment samples that support the heuristic.
    #[arg(long)]
    ood_support_confidence: Option<f64>,
    #[arg(long)]
    tau_v: Option<f64>,
    #[arg(long)]
    tau_mu: Option<f64>,
}

fn resolve_synth_spec(args: &SynthArgs) -> CliResult<SynthSpec> {
    let mut spec: SynthSpec = match &args.spec {
        Some(path) => read_json(path)?,
        None => SynthSpec::default(),
    };
    spec.n_train = args.n_train.unwrap_or(spec.n_train);
    spec.n_eval_in = args.n_eval_in.unwrap_or(spec.n_eval_in);
    spec.n_eval_ood = args.n_eval_ood.unwrap_or(spec.n_eval_ood);
    spec.epochs = args.epochs.unwrap_or(spec.epochs);
    spec.seed = args.seed.unwrap_or(spec.seed);
    spec.planted_slope = args.planted_slope.unwrap_or(spec.planted_slope);
    spec.intercept = args.intercept.unwrap_or(spec.intercept);
    spec.noise_scale = args.noise_scale.unwrap_or(spec.noise_scale);
    spec.vocabulary_size = args.vocabulary_size.unwrap_or(spec.vocabulary_size);
    spec.ood_support_confidence = args.ood_support_confidence.or(spec.ood_support_confidence);
    spec.regions.tau_v = args.tau_v.unwrap_or(spec.regions.tau_v);
    spec.regions.tau_mu = args.tau_mu.unwrap_or(spec.regions.tau_mu);
    Ok(spec)
}

pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> CliResult<()> {
    let corpus = synth::generate(spec)?;
    synth::write_synth(out, &corpus)?;
    println!(
        "wrote {} samples x {} epochs to {}",
        corpus.planted.len(),
        spec.epochs,
        out.display()
    );
    Ok(())
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Oracle file written by `synth`.
    #[arg(long)]
    oracle: PathBuf,
    /// Directory written by `report` (or the individual subcommands).
    #[arg(long)]
    run: PathBuf,
}

pub fn cmd_verify(oracle: &Path, run: &Path) -> CliResult<()> {
    let file = fs::File::open(oracle)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", oracle.display())))?;
    let entries = read_oracle(BufReader::new(file))?;
    let outputs = PipelineOutputs::read_dir(run).map_err(|e| match e {
        SynthError::Io { .. } => CliError::Ingest(e.to_string()),
        other => other.into(),
    })?;
    let report = synth::verify(&entries, &outputs);
    match report.first() {
        None => {
            println!(
                "PASS: {} oracle entries match ({} skipped for measures not computed)",
                report.checked, report.skipped
            );
            Ok(())
        }
        Some(first) => Err(CliError::Compute(format!(
            "verification failed with {} divergence(s); first: {first}",
            report.divergences.len()
        ))),
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Validate(a) => cmd_validate(&resolve_run_config(a)?),
        Command::Heuristics(a) => cmd_heuristics(&resolve_run_config(a)?),
        Command::Dynamics(a) => cmd_dynamics(&resolve_run_config(a)?),
        Command::Correlate(a) => cmd_correlate(&resolve_run_config(a)?),
        Command::Map(a) => cmd_map(&resolve_run_config(a)?),
        Command::Report(a) => cmd_report(&resolve_run_config(a)?),
        Command::Synth(a) => cmd_synth(&resolve_synth_spec(&a)?, &a.out),
        Command::Verify(a) => cmd_verify(&a.oracle, &a.run),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
