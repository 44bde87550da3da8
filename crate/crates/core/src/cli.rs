//! Command-line front end. Every command writes a run manifest holding its
//! fully resolved arguments; `--from-manifest` replays one.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::DetectorConfig;
use crate::engine::{run_qicd, BaseOptimizer, InitMode, PerturbationKind, QicdConfig};
use crate::experiment::{
    mrg_significance, run_experiment, run_experiment_fresh, summarize_experiment, ExperimentConfig, MethodSpec,
};
use crate::generate::{
    calibrate_planted, degree_preserving_rewire, generate_planted, ring_of_cliques, ring_of_cliques_truth,
    CalibrationOptions, PlantedSpec,
};
use crate::graph::{load_edge_list, DuplicatePolicy, Graph};
use crate::io::{experiment_csv, partition_csv, render_table, trace_csv, PartitionJson, QicdEnvelope, SummaryJson};
use crate::partition::{modularity_with_resolution, Partition};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "qicd", version, about = "Modularity community detection with perturbation refinement")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file whose entries act as flags; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Replay a run from its manifest.
    #[arg(long, value_name = "FILE", conflicts_with = "config")]
    pub from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write a synthetic graph as an edge list.
    Generate(GenerateArgs),
    /// Run Louvain or Leiden once.
    Detect(DetectArgs),
    /// Run the perturbation refinement loop.
    Qicd(QicdArgs),
    /// Run a method grid several times and compare against a baseline.
    Benchmark(BenchmarkArgs),
    /// Compare the recovery gap against degree-preserving null graphs.
    Mrg(MrgArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Detect(_) => "detect",
            Command::Qicd(_) => "qicd",
            Command::Benchmark(_) => "benchmark",
            Command::Mrg(_) => "mrg",
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Command::Generate(a) => a.seed,
            Command::Detect(a) => a.seed,
            Command::Qicd(a) => a.seed,
            Command::Benchmark(a) => a.seed,
            Command::Mrg(a) => a.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Planted,
    Calibrated,
    CliqueRing,
    Rewire,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub model: Model,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub target_q: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    /// Starting average degree for calibration.
    #[arg(long, default_value_t = 20.0)]
    pub avg_degree: f64,
    #[arg(long)]
    pub cliques: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    /// Graph to rewire.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub swap_factor: f64,
    #[arg(long, env = "QICD_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GraphArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Sum the weights of repeated edges instead of rejecting them.
    #[arg(long)]
    pub merge_duplicates: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DetectorArgs {
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    #[arg(long, default_value_t = 20)]
    pub max_levels: usize,
    #[arg(long, default_value_t = 100)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub min_gain: f64,
    #[arg(long)]
    pub random_tie_break: bool,
}

impl DetectorArgs {
    fn config(&self, seed: u64) -> DetectorConfig {
        DetectorConfig {
            seed,
            max_levels: self.max_levels,
            max_sweeps_per_level: self.max_sweeps,
            min_gain: self.min_gain,
            resolution: self.resolution,
            random_tie_break: self.random_tie_break,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: GraphArgs,
    #[arg(long, value_parser = parse_base, default_value = "leiden")]
    pub method: BaseOptimizer,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long, env = "QICD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Partition file; defaults to `<graph>.partition.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// Refinement-loop settings shared by `qicd`, `benchmark` and `mrg`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LoopArgs {
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub stall_limit: usize,
    /// Proposal seed count K; defaults to ceil(sqrt(n)).
    #[arg(long = "seeds")]
    pub seed_count: Option<usize>,
    /// Oversize threshold multiplier for the hyperuniform step.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Share of nodes the hyperuniform step relocates.
    #[arg(long, default_value_t = 0.1)]
    pub fraction: f64,
    #[arg(long, value_enum, default_value = "quick-leiden")]
    pub init: InitArg,
    /// Polish proposals with the base optimizer before comparing them.
    #[arg(long)]
    pub refine_before_accept: bool,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Singleton,
    QuickLeiden,
}

impl LoopArgs {
    fn config(&self, kind: PerturbationKind, base: BaseOptimizer, seed: u64) -> QicdConfig {
        QicdConfig {
            iterations: self.iterations,
            stall_limit: self.stall_limit,
            kind,
            seed_count: self.seed_count,
            hu: crate::sampling::HyperuniformParams {
                skew_factor: self.alpha,
                reassign_fraction: self.fraction,
            },
            detector: self.detector.config(0),
            base,
            init_mode: match self.init {
                InitArg::Singleton => InitMode::Singleton,
                InitArg::QuickLeiden => InitMode::QuickLeiden,
            },
            refine_before_accept: self.refine_before_accept,
            seed: 0,
        }
        .with_seed(seed)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct QicdArgs {
    #[command(flatten)]
    pub input: GraphArgs,
    #[arg(long, value_parser = parse_kind, default_value = "haar")]
    pub kind: PerturbationKind,
    #[arg(long, value_parser = parse_base, default_value = "leiden")]
    pub base: BaseOptimizer,
    #[command(flatten)]
    pub looping: LoopArgs,
    #[arg(long, env = "QICD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Best-partition file; the trace, summary and manifest go next to it.
    /// Defaults to `<graph>.qicd.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-iteration wall times into the trace (otherwise 0).
    #[arg(long)]
    pub record_timings: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    #[arg(long, required_unless_present = "generate_spec", conflicts_with = "generate_spec")]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub merge_duplicates: bool,
    /// Planted graph to generate, as `n=..,k=..,p_in=..,p_out=..`.
    #[arg(long)]
    pub generate_spec: Option<String>,
    /// Draw a new graph from the spec for every run.
    #[arg(long, requires = "generate_spec")]
    pub fresh_graphs: bool,
    #[arg(long, default_value = "louvain,louvain-hu,louvain-pt,louvain-haar,louvain-pt-hu,louvain-haar-hu,leiden,leiden-hu,leiden-pt,leiden-haar,leiden-pt-hu,leiden-haar-hu")]
    pub methods: String,
    /// Runs per method, optionally followed by overrides: `6,louvain=12`.
    #[arg(long, default_value = "6")]
    pub runs: String,
    #[arg(long, default_value = "leiden")]
    pub baseline: String,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Worker threads; defaults to the logical CPU count.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub looping: LoopArgs,
    #[arg(long, env = "QICD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes `<out>.runs.csv`, `<out>.summary.json`, `<out>.table.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MrgArgs {
    #[command(flatten)]
    pub input: GraphArgs,
    #[arg(long, default_value_t = 20)]
    pub nulls: usize,
    #[arg(long, value_parser = parse_kind, default_value = "haar")]
    pub kind: PerturbationKind,
    #[arg(long, value_parser = parse_base, default_value = "leiden")]
    pub base: BaseOptimizer,
    #[command(flatten)]
    pub looping: LoopArgs,
    #[arg(long, env = "QICD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Report file; defaults to `<graph>.mrg.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<PerturbationKind, String> {
    PerturbationKind::parse(s).ok_or_else(|| format!("unknown kind `{s}` (pt, haar, hu, pt-hu, haar-hu)"))
}

fn parse_base(s: &str) -> Result<BaseOptimizer, String> {
    match s {
        "louvain" => Ok(BaseOptimizer::Louvain),
        "leiden" => Ok(BaseOptimizer::Leiden),
        _ => Err(format!("unknown method `{s}` (louvain, leiden)")),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Command,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub duration_secs: f64,
    /// Headline numbers of the run.
    pub result: serde_json::Value,
}

#[derive(Default)]
struct Outputs {
    inputs: Vec<PathBuf>,
    files: Vec<PathBuf>,
    result: serde_json::Value,
}

impl Outputs {
    fn write(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path.to_path_buf());
        Ok(())
    }
}

/// `dir/name.ext` -> `dir/name.suffix`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn load_graph(args: &GraphArgs, out: &mut Outputs) -> Result<Graph, CliError> {
    read_graph(&args.graph, args.merge_duplicates, out)
}

fn read_graph(path: &Path, merge: bool, out: &mut Outputs) -> Result<Graph, CliError> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let policy = if merge { DuplicatePolicy::Merge } else { DuplicatePolicy::Reject };
    let g = load_edge_list(BufReader::new(file), policy).with_context(|| format!("reading {}", path.display()))?;
    out.inputs.push(path.to_path_buf());
    Ok(g)
}

fn quality(g: &Graph, p: &Partition, resolution: f64) -> Result<f64, CliError> {
    Ok(modularity_with_resolution(g, p, resolution).map_err(anyhow::Error::from)?)
}

fn require<T: Copy>(v: Option<T>, flag: &str, model: &str) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("generate {model} requires --{flag}")))
}

fn cmd_generate(a: &GenerateArgs, out: &mut Outputs) -> Result<(), CliError> {
    let (g, truth) = match a.model {
        Model::Planted => {
            let spec = PlantedSpec {
                n: require(a.n, "n", "planted")?,
                k: require(a.k, "k", "planted")?,
                p_in: require(a.p_in, "p-in", "planted")?,
                p_out: require(a.p_out, "p-out", "planted")?,
                seed: a.seed,
            };
            spec.validate().map_err(|e| usage(e.to_string()))?;
            let (g, truth) = generate_planted(&spec).map_err(anyhow::Error::from)?;
            out.result = serde_json::json!({ "spec": spec });
            (g, Some(truth.labels().to_vec()))
        }
        Model::Calibrated => {
            let n = require(a.n, "n", "calibrated")?;
            let k = require(a.k, "k", "calibrated")?;
            let target = require(a.target_q, "target-q", "calibrated")?;
            let opts = CalibrationOptions {
                avg_degree: a.avg_degree,
                seed: a.seed,
                ..CalibrationOptions::default()
            };
            let cal = calibrate_planted(n, k, target, a.tolerance, &opts).map_err(anyhow::Error::from)?;
            eprintln!(
                "calibrated: ratio={:.6} avg_degree={:.3} Q={:.6}{}",
                cal.ratio,
                cal.avg_degree,
                cal.achieved_q,
                if cal.within_tolerance { "" } else { " (target not reachable)" }
            );
            let (g, truth) = generate_planted(&cal.spec).map_err(anyhow::Error::from)?;
            out.result = serde_json::to_value(cal).map_err(anyhow::Error::from)?;
            (g, Some(truth.labels().to_vec()))
        }
        Model::CliqueRing => {
            let c = require(a.cliques, "cliques", "clique-ring")?;
            let s = require(a.size, "size", "clique-ring")?;
            let g = ring_of_cliques(c, s).map_err(|e| usage(e.to_string()))?;
            (g, Some(ring_of_cliques_truth(c, s)))
        }
        Model::Rewire => {
            let input = a.input.as_ref().ok_or_else(|| usage("generate rewire requires --input"))?;
            let g = read_graph(input, false, out)?;
            let g = degree_preserving_rewire(&g, a.swap_factor, a.seed).map_err(anyhow::Error::from)?;
            (g, None)
        }
    };
    out.write(&a.out, &g.to_edge_list())?;
    if let Some(labels) = truth {
        let p = Partition::from_labels(&g, &labels).map_err(anyhow::Error::from)?;
        out.write(&sibling(&a.out, "truth.csv"), &partition_csv(&p))?;
    }
    println!("nodes={} edges={}", g.node_count(), g.edge_count());
    Ok(())
}

fn cmd_detect(a: &DetectArgs, out: &mut Outputs) -> Result<(), CliError> {
    let g = load_graph(&a.input, out)?;
    let cfg = a.detector.config(a.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let p = a.method.run(&g, &cfg).map_err(anyhow::Error::from)?;
    let q = quality(&g, &p, cfg.resolution)?;
    let ext = match a.format {
        Format::Csv => "partition.csv",
        Format::Json => "partition.json",
    };
    let path = a.out.clone().unwrap_or_else(|| sibling(&a.input.graph, ext));
    let text = match a.format {
        Format::Csv => partition_csv(&p),
        Format::Json => {
            let doc = PartitionJson {
                labels: p.labels().to_vec(),
                q,
            };
            serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n"
        }
    };
    out.write(&path, &text)?;
    out.result = serde_json::json!({ "Q": q, "communities": p.community_count() });
    println!("Q={q:.6}");
    Ok(())
}

fn cmd_qicd(a: &QicdArgs, out: &mut Outputs) -> Result<(), CliError> {
    let g = load_graph(&a.input, out)?;
    let cfg = a.looping.config(a.kind, a.base, a.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let r = run_qicd(&g, &cfg).map_err(anyhow::Error::from)?;
    let path = a.out.clone().unwrap_or_else(|| sibling(&a.input.graph, "qicd.csv"));
    out.write(&path, &partition_csv(&r.best_partition))?;
    out.write(&sibling(&path, "trace.csv"), &trace_csv(&r.trace, a.record_timings))?;
    let env = QicdEnvelope::new(&r, &cfg);
    out.write(
        &sibling(&path, "json"),
        &(serde_json::to_string_pretty(&env).map_err(anyhow::Error::from)? + "\n"),
    )?;
    out.result = serde_json::json!({ "Q_star": r.q_star, "Q_baseline": r.q_baseline, "mrg": r.mrg });
    println!("Q*={:.6} baseline={:.6} MRG={:.6}", r.q_star, r.q_baseline, r.mrg);
    Ok(())
}

/// `n=..,k=..,p_in=..,p_out=..` into a planted spec.
pub fn parse_planted_spec(text: &str, seed: u64) -> Result<PlantedSpec, String> {
    let mut fields = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got `{part}`"))?;
        fields.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    let get = |key: &str| fields.get(key).ok_or_else(|| format!("spec is missing `{key}`"));
    let spec = PlantedSpec {
        n: get("n")?.parse().map_err(|_| "bad n".to_string())?,
        k: get("k")?.parse().map_err(|_| "bad k".to_string())?,
        p_in: get("p_in")?.parse().map_err(|_| "bad p_in".to_string())?,
        p_out: get("p_out")?.parse().map_err(|_| "bad p_out".to_string())?,
        seed,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// `6,louvain=12` into a default count and per-method overrides.
pub fn parse_runs(text: &str) -> Result<(usize, BTreeMap<String, usize>), String> {
    let mut default = None;
    let mut overrides = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('=') {
            Some((m, c)) => {
                let m = m.trim();
                MethodSpec::parse(m).map_err(|e| e.to_string())?;
                let c = c.trim().parse().map_err(|_| format!("bad run count in `{part}`"))?;
                overrides.insert(m.to_string(), c);
            }
            None => default = Some(part.parse().map_err(|_| format!("bad run count `{part}`"))?),
        }
    }
    Ok((default.unwrap_or(6), overrides))
}

fn cmd_benchmark(a: &BenchmarkArgs, out: &mut Outputs) -> Result<(), CliError> {
    let mut methods = MethodSpec::parse_list(&a.methods).map_err(|e| usage(e.to_string()))?;
    let baseline = MethodSpec::parse(&a.baseline).map_err(|e| usage(e.to_string()))?;
    if !methods.contains(&baseline) {
        methods.insert(0, baseline);
    }
    for (i, m) in methods.iter().enumerate() {
        if methods[..i].contains(m) {
            return Err(usage(format!("method `{m}` listed twice")));
        }
    }
    let (runs, runs_override) = parse_runs(&a.runs).map_err(usage)?;
    let mut cfg = ExperimentConfig::new(methods, runs, a.seed);
    cfg.runs_override = runs_override;
    cfg.jobs = a.jobs;
    cfg.template = a.looping.config(PerturbationKind::Haar, BaseOptimizer::Leiden, 0);
    cfg.template.validate().map_err(|e| usage(e.to_string()))?;
    if !(a.confidence > 0.0 && a.confidence < 1.0) {
        return Err(usage("--confidence must lie in (0, 1)"));
    }
    for &m in &cfg.methods {
        if cfg.runs_for(m) < 2 {
            return Err(usage(format!("method `{m}` needs at least 2 runs")));
        }
    }

    let samples = match (&a.graph, &a.generate_spec) {
        (Some(path), _) => {
            let g = read_graph(path, a.merge_duplicates, out)?;
            run_experiment(&g, &cfg)
        }
        (None, Some(spec)) => {
            let spec = parse_planted_spec(spec, a.seed).map_err(usage)?;
            if a.fresh_graphs {
                run_experiment_fresh(&spec, &cfg)
            } else {
                let (g, _) = generate_planted(&spec).map_err(anyhow::Error::from)?;
                run_experiment(&g, &cfg)
            }
        }
        (None, None) => return Err(usage("benchmark needs --graph or --generate-spec")),
    }
    .map_err(anyhow::Error::from)?;

    let base_name = baseline.to_string();
    let rows = summarize_experiment(&samples, &base_name, a.confidence).map_err(anyhow::Error::from)?;
    let summary = SummaryJson::new(&rows, &base_name, a.confidence);
    let table = render_table(&rows);
    out.write(&with_suffix(&a.out, "runs.csv"), &experiment_csv(&samples))?;
    out.write(
        &with_suffix(&a.out, "summary.json"),
        &(serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n"),
    )?;
    out.write(&with_suffix(&a.out, "table.txt"), &table)?;
    out.result = serde_json::json!({ "methods": rows.len() });
    print!("{table}");
    Ok(())
}

fn cmd_mrg(a: &MrgArgs, out: &mut Outputs) -> Result<(), CliError> {
    if a.nulls < 5 {
        return Err(usage(format!("--nulls must be at least 5, got {}", a.nulls)));
    }
    let g = load_graph(&a.input, out)?;
    let cfg = a.looping.config(a.kind, a.base, a.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let report = mrg_significance(&g, &cfg, a.nulls, a.seed).map_err(anyhow::Error::from)?;
    let path = a.out.clone().unwrap_or_else(|| sibling(&a.input.graph, "mrg.json"));
    out.write(&path, &(serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n"))?;
    out.result = serde_json::json!({ "observed": report.observed, "percentile": report.percentile });
    println!(
        "MRG={:.6} null_mean={:.6} null_std={:.6} percentile={:.1}",
        report.observed, report.null_mean, report.null_std, report.percentile
    );
    Ok(())
}

fn manifest_path(cmd: &Command) -> PathBuf {
    match cmd {
        Command::Generate(a) => sibling(&a.out, "manifest.json"),
        Command::Detect(a) => sibling(
            &a.out.clone().unwrap_or_else(|| sibling(&a.input.graph, "partition.csv")),
            "manifest.json",
        ),
        Command::Qicd(a) => sibling(
            &a.out.clone().unwrap_or_else(|| sibling(&a.input.graph, "qicd.csv")),
            "manifest.json",
        ),
        Command::Benchmark(a) => with_suffix(&a.out, "manifest.json"),
        Command::Mrg(a) => sibling(
            &a.out.clone().unwrap_or_else(|| sibling(&a.input.graph, "mrg.json")),
            "manifest.json",
        ),
    }
}

/// Runs one command and writes its manifest.
pub fn execute(cmd: &Command) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = Outputs::default();
    match cmd {
        Command::Generate(a) => cmd_generate(a, &mut out)?,
        Command::Detect(a) => cmd_detect(a, &mut out)?,
        Command::Qicd(a) => cmd_qicd(a, &mut out)?,
        Command::Benchmark(a) => cmd_benchmark(a, &mut out)?,
        Command::Mrg(a) => cmd_mrg(a, &mut out)?,
    }
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        config: cmd.clone(),
        seed: cmd.seed(),
        inputs: out.inputs,
        outputs: out.files,
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_secs: started.elapsed().as_secs_f64(),
        result: out.result,
    };
    let path = manifest_path(cmd);
    let text = serde_json::to_string_pretty(&manifest).map_err(anyhow::Error::from)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

/// Turns `key=value` lines into flags. `#` starts a comment; `true`/`false`
/// values toggle switches.
pub fn config_to_args(text: &str) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let flag = format!("--{}", k.trim().replace('_', "-"));
        match v.trim() {
            "true" => args.push(flag),
            "false" => {}
            v => {
                args.push(flag);
                args.push(v.to_string());
            }
        }
    }
    Ok(args)
}

const SUBCOMMANDS: [&str; 5] = ["generate", "detect", "qicd", "benchmark", "mrg"];

/// Pulls `--config FILE` out of `args` and splices the file's flags in
/// right after the subcommand, so later command-line flags override them.
fn expand_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut file = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--config" {
            if i + 1 >= args.len() {
                return Err(usage("--config needs a file"));
            }
            file = Some(PathBuf::from(args.remove(i + 1)));
            args.remove(i);
        } else if let Some(path) = a.strip_prefix("--config=") {
            file = Some(PathBuf::from(path));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(file) = file else {
        return Ok(args);
    };
    let text = fs::read_to_string(&file)
        .map_err(|e| usage(format!("cannot read config {}: {e}", file.display())))?;
    let extra = config_to_args(&text).map_err(usage)?;
    let at = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .ok_or_else(|| usage("--config needs a subcommand"))?;
    let tail = args.split_off(at + 1);
    args.extend(extra.into_iter().map(OsString::from));
    args.extend(tail);
    Ok(args)
}

fn parse(args: Vec<OsString>) -> Result<Command, CliError> {
    let args = expand_config(args)?;
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            std::process::exit(0);
        }
        _ => usage(e.render().to_string()),
    })?;
    match (cli.from_manifest, cli.command) {
        (Some(path), None) => {
            let text = fs::read_to_string(&path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let manifest: RunManifest =
                serde_json::from_str(&text).map_err(|e| usage(format!("bad manifest {}: {e}", path.display())))?;
            Ok(manifest.config)
        }
        (None, Some(cmd)) => Ok(cmd),
        (Some(_), Some(_)) => Err(usage("--from-manifest replaces the subcommand; give one or the other")),
        (None, None) => Err(usage("missing subcommand (generate, detect, qicd, benchmark, mrg)")),
    }
}

/// Entry point of the `qicd` binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let result = parse(args.into_iter().map(Into::into).collect()).and_then(|cmd| execute(&cmd));
    match result {
        Ok(_) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("{}", msg.trim_end()),
                CliError::Data(err) => eprintln!("error: {err:#}"),
            }
            e.exit_code()
        }
    }
}
