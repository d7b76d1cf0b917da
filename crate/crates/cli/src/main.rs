//! `snas` — search and analysis harness for stochastic-ordering
//! architecture search.
//!
//! Subcommands:
//!
//! * `gen-space` — enumerate a cell space and synthesize a ground-truth
//!   accuracy table (benchmark CSV);
//! * `search` — run random / REA / greedy / FreeREA search against an
//!   oracle, repeated over seeds, and emit per-run results plus a summary;
//! * `analyze-variation` — per-architecture score variation and the CV
//!   correlation studies;
//! * `sweep-threshold` — significance-level ablation of the statistical
//!   evaluator.
//!
//! Every command writes a manifest next to its outputs; re-running with the
//! same manifest inputs reproduces the outputs byte for byte. Exit codes:
//! 0 success, 1 runtime failure, 2 usage error.

mod inputs;
mod kv;
mod manifest;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use snas_core::analysis::{
    run_experiment, threshold_sweep, variation_metric, write_results_csv, write_summary_csv,
    write_sweep_csv, write_variation_csv, ExperimentCell,
};
use snas_core::compare::{CacheKind, CachePolicy, EvaluatorKind};
use snas_core::search::{Algorithm, SearchConfig};
use snas_core::space::{synthesize_benchmark, AccuracyModel, SpaceSpec, NB201_OPS};
use snas_core::stats::CvConvention;

use inputs::{load_accuracy_model, resolve_oracle, resolve_space, ResolvedSpace};
use manifest::write_manifest;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(err: anyhow::Error) -> Self {
        CliError::Runtime(err)
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(err: E) -> Self {
        CliError::Runtime(err.into())
    }
}

#[derive(Parser)]
#[command(
    name = "snas",
    version,
    about = "Stochastic-ordering architecture search: compare noisy proxy scores by stochastic dominance instead of averaging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate a cell space and write a synthetic ground-truth benchmark CSV
    GenSpace(GenSpaceArgs),
    /// Run architecture search, repeated over seeds, and emit results CSVs
    Search(SearchArgs),
    /// Measure per-architecture score variation and CV correlations
    AnalyzeVariation(VariationArgs),
    /// Ablate the p-value threshold of the statistical evaluator
    SweepThreshold(SweepArgs),
}

/// Flags shared by the commands that consume a space and an oracle.
#[derive(Args)]
struct CommonArgs {
    /// Benchmark CSV path, or builtin:nb201-shape for the bare cell shape
    #[arg(long)]
    space: Option<String>,
    /// Oracle spec: synthetic:<profile>, replay:<file>, or ensemble:<file>
    #[arg(long)]
    oracle: Option<String>,
    /// Base seed (falls back to the SNAS_SEED environment variable, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Draws per architecture (V)
    #[arg(long)]
    evals: Option<usize>,
    /// Load the benchmark in sparse mode (incomplete tables allowed)
    #[arg(long)]
    sparse: bool,
    /// Optional key=value config file; flags override file entries
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// random, rea, greedy, or free-rea
    #[arg(long)]
    algorithm: Option<String>,
    /// statistical, averaging, or both
    #[arg(long)]
    evaluator: Option<String>,
    /// cached, on-the-fly, or hybrid
    #[arg(long)]
    cache: Option<String>,
    /// Independently seeded runs per grid cell
    #[arg(long)]
    repeats: Option<usize>,
    /// Random-search candidate count (N)
    #[arg(long)]
    samples: Option<usize>,
    /// Evolutionary population size (P)
    #[arg(long)]
    population: Option<usize>,
    /// Tournament size (S)
    #[arg(long)]
    tournament: Option<usize>,
    /// History budget in evolution cycles (C)
    #[arg(long)]
    cycles: Option<usize>,
    /// Significance threshold of the statistical evaluator
    #[arg(long)]
    threshold: Option<f64>,
    /// Extra draws per repeat encounter under the hybrid cache policy
    #[arg(long)]
    hybrid_increment: Option<usize>,
    /// Parallel worker threads for independent runs
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct VariationArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CV formula: paper (Var/Mean) or conventional (std/mean)
    #[arg(long)]
    cv_convention: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated significance thresholds, e.g. 0.01,0.05,0.1
    #[arg(long)]
    thresholds: Option<String>,
    /// Search algorithm for the sweep
    #[arg(long)]
    algorithm: Option<String>,
    /// cached, on-the-fly, or hybrid
    #[arg(long)]
    cache: Option<String>,
    /// Runs per threshold (seed-paired across thresholds)
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    tournament: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    hybrid_increment: Option<usize>,
}

#[derive(Args)]
struct GenSpaceArgs {
    /// Nodes in the cell DAG
    #[arg(long)]
    nodes: Option<usize>,
    /// Op vocabulary: a count (prefix of the builtin list) or a comma list
    #[arg(long)]
    ops: Option<String>,
    /// key=value accuracy model file (low, high, mode, roughness)
    #[arg(long)]
    accuracy_model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output benchmark CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional key=value config file; flags override file entries
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Flag > config file > (SNAS_SEED for the seed) > default, with every
/// resolved value recorded for the manifest.
struct Resolver {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    fn load(config: Option<&PathBuf>) -> Result<Self, CliError> {
        let file = match config {
            None => BTreeMap::new(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("--config {}: {e}", path.display())))?;
                kv::parse_kv(&text)
                    .map_err(|e| CliError::usage(format!("--config {}: {e}", path.display())))?
            }
        };
        Ok(Resolver {
            file,
            resolved: BTreeMap::new(),
        })
    }

    fn record(&mut self, name: &str, value: impl Display) {
        self.resolved.insert(name.to_string(), value.to_string());
    }

    fn parse<T>(&mut self, name: &str, flag: Option<T>, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(name) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|e| CliError::usage(format!("config key {name:?}: {e}")))?,
                None => {
                    default.ok_or_else(|| CliError::usage(format!("missing required --{name}")))?
                }
            },
        };
        self.record(name, &value);
        Ok(value)
    }

    fn seed(&mut self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(v) = flag {
            self.record("seed", v);
            return Ok(v);
        }
        if let Some(raw) = self.file.get("seed") {
            let v: u64 = raw
                .parse()
                .map_err(|e| CliError::usage(format!("config key \"seed\": {e}")))?;
            self.record("seed", v);
            return Ok(v);
        }
        if let Ok(raw) = std::env::var("SNAS_SEED") {
            let v: u64 = raw
                .parse()
                .map_err(|e| CliError::usage(format!("SNAS_SEED: {e}")))?;
            self.record("seed", v);
            return Ok(v);
        }
        self.record("seed", 0);
        Ok(0)
    }
}

fn parse_evaluators(tag: &str, threshold: f64) -> Result<Vec<EvaluatorKind>, CliError> {
    match tag {
        "statistical" => Ok(vec![EvaluatorKind::Statistical { threshold }]),
        "averaging" => Ok(vec![EvaluatorKind::Averaging]),
        "both" => Ok(vec![
            EvaluatorKind::Averaging,
            EvaluatorKind::Statistical { threshold },
        ]),
        other => Err(CliError::usage(format!(
            "--evaluator must be statistical, averaging, or both, got {other:?}"
        ))),
    }
}

fn parse_cache_kind(tag: &str) -> Result<CacheKind, CliError> {
    match tag {
        "cached" => Ok(CacheKind::Cached),
        "on-the-fly" | "on_the_fly" => Ok(CacheKind::OnTheFly),
        "hybrid" => Ok(CacheKind::Hybrid),
        other => Err(CliError::usage(format!(
            "--cache must be cached, on-the-fly, or hybrid, got {other:?}"
        ))),
    }
}

fn parse_convention(tag: &str) -> Result<CvConvention, CliError> {
    match tag {
        "paper" => Ok(CvConvention::Paper),
        "conventional" => Ok(CvConvention::Conventional),
        other => Err(CliError::usage(format!(
            "--cv-convention must be paper or conventional, got {other:?}"
        ))),
    }
}

fn require_bench(
    space: &ResolvedSpace,
    what: &str,
) -> Result<Arc<snas_core::space::TabularBenchmark>, CliError> {
    space.bench.clone().ok_or_else(|| {
        CliError::usage(format!(
            "{what} needs ground-truth accuracies; pass --space <benchmark csv> \
             (generate one with `snas gen-space`)"
        ))
    })
}

fn cmd_search(args: SearchArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.common.config.as_ref())?;
    let space_arg = r.parse::<String>("space", args.common.space, None)?;
    let oracle_arg = r.parse::<String>("oracle", args.common.oracle, None)?;
    let out = PathBuf::from(r.parse::<String>(
        "out",
        args.common.out.map(|p| p.display().to_string()),
        None,
    )?);
    let seed = r.seed(args.common.seed)?;
    let algorithm: Algorithm = r
        .parse::<String>("algorithm", args.algorithm, Some("random".into()))?
        .parse()
        .map_err(CliError::usage)?;
    let threshold = r.parse("threshold", args.threshold, Some(0.05))?;
    let evaluator_tag = r.parse::<String>("evaluator", args.evaluator, Some("both".into()))?;
    let evaluators = parse_evaluators(&evaluator_tag, threshold)?;
    let cache_tag = r.parse::<String>("cache", args.cache, Some("cached".into()))?;
    let cache_kind = parse_cache_kind(&cache_tag)?;
    let evals = r.parse("evals", args.common.evals, Some(10))?;
    let hybrid_increment = r.parse("hybrid_increment", args.hybrid_increment, Some(3))?;
    let samples = r.parse("samples", args.samples, Some(100))?;
    let population = r.parse("population", args.population, Some(25))?;
    let tournament = r.parse("tournament", args.tournament, Some(5))?;
    let cycles = r.parse("cycles", args.cycles, Some(1000))?;
    let default_repeats = if algorithm == Algorithm::Random {
        100
    } else {
        10
    };
    let repeats = r.parse("repeats", args.repeats, Some(default_repeats))?;
    let jobs = r.parse("jobs", args.jobs, Some(1))?;
    if repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    r.record("sparse", args.common.sparse);

    let space = resolve_space(&space_arg, args.common.sparse)?;
    let bench = require_bench(&space, "search")?;
    let oracle = resolve_oracle(&oracle_arg, &space, seed, 0)?;
    let cache =
        CachePolicy::new(cache_kind, evals, hybrid_increment).map_err(anyhow::Error::from)?;

    let cells: Vec<ExperimentCell> = evaluators
        .into_iter()
        .map(|evaluator| ExperimentCell {
            space_label: space.label.clone(),
            profile_label: oracle.label.clone(),
            config: SearchConfig {
                algorithm,
                sample_count: samples,
                population_size: population,
                tournament_size: tournament,
                cycle_budget: cycles,
                evaluator,
                cache,
                seed: 0, // per-run seeds assigned by the runner
                random_tie_break: false,
            },
            oracle: oracle.oracle.clone(),
            bench: Arc::clone(&bench),
            repeats,
        })
        .collect();

    let results = run_experiment(&cells, seed, jobs).map_err(anyhow::Error::from)?;

    std::fs::create_dir_all(&out)?;
    let mut results_buf = Vec::new();
    write_results_csv(&mut results_buf, &results)?;
    std::fs::write(out.join("results.csv"), results_buf)?;
    let mut summary_buf = Vec::new();
    write_summary_csv(&mut summary_buf, &results)?;
    std::fs::write(out.join("summary.csv"), summary_buf)?;

    let mut input_files = oracle.sources.clone();
    if let Some(src) = &space.source {
        input_files.push(src.clone());
    }
    write_manifest(
        &out.join("manifest.json"),
        "search",
        seed,
        r.resolved,
        &input_files,
    )?;

    for result in &results {
        println!(
            "{} {} {} {}: mean {:.4} +/- {:.4} over {} runs{}",
            result.space_label,
            result.algorithm.tag(),
            result.evaluator.tag(),
            result.profile_label,
            result.mean_accuracy,
            result.std_accuracy,
            result.runs.len(),
            result
                .stat_vs_avg_p
                .map(|p| format!(" (stat-vs-avg p = {p:.4})"))
                .unwrap_or_default()
        );
    }
    println!("wrote {}", out.join("results.csv").display());
    Ok(())
}

fn cmd_analyze_variation(args: VariationArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.common.config.as_ref())?;
    let space_arg = r.parse::<String>("space", args.common.space, None)?;
    let oracle_arg = r.parse::<String>("oracle", args.common.oracle, None)?;
    let out = PathBuf::from(r.parse::<String>(
        "out",
        args.common.out.map(|p| p.display().to_string()),
        None,
    )?);
    let seed = r.seed(args.common.seed)?;
    let evals = r.parse("evals", args.common.evals, Some(10))?;
    let convention = parse_convention(&r.parse::<String>(
        "cv_convention",
        args.cv_convention,
        Some("paper".into()),
    )?)?;
    r.record("sparse", args.common.sparse);

    let space = resolve_space(&space_arg, args.common.sparse)?;
    let oracle = resolve_oracle(&oracle_arg, &space, seed, 0)?;

    let report = variation_metric(&space.spec, &oracle.oracle, evals, convention)
        .map_err(anyhow::Error::from)?;
    let tau_mean = report.mean_tau().map_err(anyhow::Error::from)?;
    let tau_acc = match &space.bench {
        Some(bench) => Some(report.accuracy_tau(bench).map_err(anyhow::Error::from)?),
        None => None,
    };

    std::fs::create_dir_all(&out)?;
    let mut buf = Vec::new();
    write_variation_csv(&mut buf, &space.spec, &report, space.bench.as_deref())?;
    std::fs::write(out.join("variation.csv"), buf)?;

    let mut input_files = oracle.sources.clone();
    if let Some(src) = &space.source {
        input_files.push(src.clone());
    }
    write_manifest(
        &out.join("manifest.json"),
        "analyze-variation",
        seed,
        r.resolved,
        &input_files,
    )?;

    println!(
        "var_ss = {} over {} architectures ({} excluded for degenerate mean)",
        report.var_ss,
        report.entries.len(),
        report.excluded
    );
    match tau_acc {
        Some(tau) => println!("kendall tau (cv vs accuracy) = {tau:.4}"),
        None => println!("kendall tau (cv vs accuracy) unavailable without a benchmark"),
    }
    println!("kendall tau (cv vs mean score) = {tau_mean:.4}");
    println!("wrote {}", out.join("variation.csv").display());
    Ok(())
}

fn cmd_sweep_threshold(args: SweepArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.common.config.as_ref())?;
    let space_arg = r.parse::<String>("space", args.common.space, None)?;
    let oracle_arg = r.parse::<String>("oracle", args.common.oracle, None)?;
    let out = PathBuf::from(r.parse::<String>(
        "out",
        args.common.out.map(|p| p.display().to_string()),
        None,
    )?);
    let seed = r.seed(args.common.seed)?;
    let thresholds_raw = r.parse::<String>("thresholds", args.thresholds, None)?;
    let thresholds: Vec<f64> = {
        let parts: Vec<&str> = thresholds_raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if parts.is_empty() {
            return Err(CliError::usage("--thresholds list is empty"));
        }
        parts
            .into_iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| CliError::usage(format!("--thresholds entry {s:?}: {e}")))
            })
            .collect::<Result<_, _>>()?
    };
    let algorithm: Algorithm = r
        .parse::<String>("algorithm", args.algorithm, Some("free-rea".into()))?
        .parse()
        .map_err(CliError::usage)?;
    let cache_kind =
        parse_cache_kind(&r.parse::<String>("cache", args.cache, Some("cached".into()))?)?;
    let evals = r.parse("evals", args.common.evals, Some(10))?;
    let hybrid_increment = r.parse("hybrid_increment", args.hybrid_increment, Some(3))?;
    let samples = r.parse("samples", args.samples, Some(100))?;
    let population = r.parse("population", args.population, Some(25))?;
    let tournament = r.parse("tournament", args.tournament, Some(5))?;
    let cycles = r.parse("cycles", args.cycles, Some(1000))?;
    let repeats = r.parse("repeats", args.repeats, Some(20))?;
    r.record("sparse", args.common.sparse);

    let space = resolve_space(&space_arg, args.common.sparse)?;
    let bench = require_bench(&space, "sweep-threshold")?;
    let oracle = resolve_oracle(&oracle_arg, &space, seed, 0)?;
    let cache =
        CachePolicy::new(cache_kind, evals, hybrid_increment).map_err(anyhow::Error::from)?;

    let config = SearchConfig {
        algorithm,
        sample_count: samples,
        population_size: population,
        tournament_size: tournament,
        cycle_budget: cycles,
        evaluator: EvaluatorKind::Statistical { threshold: 0.05 },
        cache,
        seed: 0,
        random_tie_break: false,
    };
    let rows = threshold_sweep(
        &space.spec,
        &oracle.oracle,
        &bench,
        &config,
        &thresholds,
        repeats,
        seed,
    )
    .map_err(|e| match e {
        snas_core::analysis::AnalysisError::InvalidArgument(msg) => CliError::usage(msg),
        other => CliError::runtime(other.into()),
    })?;

    std::fs::create_dir_all(&out)?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows)?;
    std::fs::write(out.join("sweep.csv"), buf)?;

    let mut input_files = oracle.sources.clone();
    if let Some(src) = &space.source {
        input_files.push(src.clone());
    }
    write_manifest(
        &out.join("manifest.json"),
        "sweep-threshold",
        seed,
        r.resolved,
        &input_files,
    )?;

    for row in &rows {
        println!(
            "threshold {:>7}: mean {:.4} +/- {:.4} (relative {:+.4})",
            row.threshold, row.mean_accuracy, row.std_accuracy, row.relative_accuracy
        );
    }
    println!("wrote {}", out.join("sweep.csv").display());
    Ok(())
}

fn parse_ops_arg(raw: &str) -> Result<Vec<String>, CliError> {
    if let Ok(count) = raw.parse::<usize>() {
        if count == 0 || count > NB201_OPS.len() {
            return Err(CliError::usage(format!(
                "--ops count must be 1..={}, or pass an explicit comma list",
                NB201_OPS.len()
            )));
        }
        return Ok(NB201_OPS[..count].iter().map(|s| s.to_string()).collect());
    }
    let ops: Vec<String> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if ops.is_empty() {
        return Err(CliError::usage("--ops list is empty"));
    }
    Ok(ops)
}

fn cmd_gen_space(args: GenSpaceArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.config.as_ref())?;
    let nodes = r.parse("nodes", args.nodes, None)?;
    let ops_raw = r.parse::<String>("ops", args.ops, None)?;
    let ops = parse_ops_arg(&ops_raw)?;
    let seed = r.seed(args.seed)?;
    let out =
        PathBuf::from(r.parse::<String>("out", args.out.map(|p| p.display().to_string()), None)?);
    let model_path = match args.accuracy_model {
        Some(p) => Some(p),
        None => r.file.get("accuracy_model").map(PathBuf::from),
    };
    let model = match &model_path {
        Some(path) => {
            r.record("accuracy_model", path.display());
            load_accuracy_model(path)?
        }
        None => {
            r.record("accuracy_model", "default-additive");
            AccuracyModel::default_additive()
        }
    };

    let spec = SpaceSpec::new(nodes, ops).map_err(|e| CliError::usage(e.to_string()))?;
    let bench = synthesize_benchmark(&spec, &model, seed).map_err(anyhow::Error::from)?;

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut buf = Vec::new();
    bench.write_csv(&mut buf)?;
    std::fs::write(&out, buf)?;

    let manifest_path = out.with_extension("manifest.json");
    let inputs: Vec<PathBuf> = model_path.into_iter().collect();
    write_manifest(&manifest_path, "gen-space", seed, r.resolved, &inputs)?;

    println!("wrote {} architectures to {}", bench.len(), out.display());
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenSpace(args) => cmd_gen_space(args),
        Command::Search(args) => cmd_search(args),
        Command::AnalyzeVariation(args) => cmd_analyze_variation(args),
        Command::SweepThreshold(args) => cmd_sweep_threshold(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
