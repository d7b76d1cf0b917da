//! Resolution of command-line inputs: spaces, benchmarks, noise profiles,
//! oracles, and accuracy models.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use snas_core::oracle::{ensemble_oracle, replay_oracle, synthetic_oracle, NoiseProfile, Oracle};
use snas_core::space::{AccuracyModel, AccuracyModelKind, LoadMode, SpaceSpec, TabularBenchmark};

use crate::kv::{parse_kv, reject_unknown_keys, take_parsed};
use crate::CliError;

pub const BUILTIN_SPACE: &str = "builtin:nb201-shape";

/// A resolved `--space` argument: the cell shape, plus ground-truth
/// accuracies when the space came from a benchmark CSV.
pub struct ResolvedSpace {
    pub spec: SpaceSpec,
    pub bench: Option<Arc<TabularBenchmark>>,
    pub label: String,
    /// Input file backing the space, when any.
    pub source: Option<PathBuf>,
}

/// Infer the cell shape from a benchmark CSV: the arity of the encodings
/// fixes the node count and the sorted set of op tags fixes the vocabulary.
fn infer_spec_from_csv(path: &Path) -> Result<SpaceSpec, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("--space {}: {e}", path.display())))?;
    let mut tags: BTreeSet<String> = BTreeSet::new();
    let mut arity: Option<usize> = None;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::usage(format!("--space: {e}")))?;
        if record.is_empty() {
            continue;
        }
        let fields: Vec<&str> = record[0].split('|').collect();
        match arity {
            None => arity = Some(fields.len()),
            Some(a) if a != fields.len() => {
                return Err(CliError::usage(format!(
                    "--space {}: inconsistent encoding arity ({} vs {})",
                    path.display(),
                    a,
                    fields.len()
                )))
            }
            _ => {}
        }
        for f in fields {
            tags.insert(f.to_string());
        }
    }
    let edges =
        arity.ok_or_else(|| CliError::usage(format!("--space {}: no rows", path.display())))?;
    // invert edges = n (n - 1) / 2
    let mut num_nodes = None;
    for n in 2..=64usize {
        if n * (n - 1) / 2 == edges {
            num_nodes = Some(n);
            break;
        }
    }
    let num_nodes = num_nodes.ok_or_else(|| {
        CliError::usage(format!(
            "--space {}: {edges} fields per encoding is not a complete-DAG edge count",
            path.display()
        ))
    })?;
    SpaceSpec::new(num_nodes, tags.into_iter().collect())
        .map_err(|e| CliError::usage(format!("--space {}: {e}", path.display())))
}

pub fn resolve_space(arg: &str, sparse: bool) -> Result<ResolvedSpace, CliError> {
    if arg == BUILTIN_SPACE {
        return Ok(ResolvedSpace {
            spec: SpaceSpec::nb201_shape(),
            bench: None,
            label: "nb201-shape".into(),
            source: None,
        });
    }
    if let Some(rest) = arg.strip_prefix("builtin:") {
        return Err(CliError::usage(format!(
            "unknown builtin space {rest:?} (available: nb201-shape)"
        )));
    }
    let path = PathBuf::from(arg);
    let spec = infer_spec_from_csv(&path)?;
    let mode = if sparse {
        LoadMode::Sparse
    } else {
        LoadMode::Strict
    };
    let bench = TabularBenchmark::load_csv(&path, &spec, mode)
        .map_err(|e| CliError::runtime(anyhow::anyhow!("--space {}: {e}", path.display())))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| arg.to_string());
    Ok(ResolvedSpace {
        spec,
        bench: Some(Arc::new(bench)),
        label,
        source: Some(path),
    })
}

pub const PROFILE_KEYS: [&str; 5] = [
    "cv_at_worst",
    "cv_at_best",
    "signal_gamma",
    "bias_sigma",
    "batch_size_label",
];

pub fn load_profile(path: &Path) -> Result<NoiseProfile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("profile {}: {e}", path.display())))?;
    let map =
        parse_kv(&text).map_err(|e| CliError::usage(format!("profile {}: {e}", path.display())))?;
    reject_unknown_keys(&map, &PROFILE_KEYS)
        .map_err(|e| CliError::usage(format!("profile {}: {e}", path.display())))?;
    let field = |key: &str| -> Result<Option<f64>, CliError> {
        take_parsed::<f64>(&map, key)
            .map_err(|e| CliError::usage(format!("profile {}: {e}", path.display())))
    };
    let cv_at_worst = field("cv_at_worst")?.ok_or_else(|| {
        CliError::usage(format!("profile {}: missing cv_at_worst", path.display()))
    })?;
    let cv_at_best = field("cv_at_best")?.ok_or_else(|| {
        CliError::usage(format!("profile {}: missing cv_at_best", path.display()))
    })?;
    let signal_gamma = field("signal_gamma")?.unwrap_or(1.0);
    let bias_sigma = field("bias_sigma")?.unwrap_or(0.0);
    let batch_size_label = take_parsed::<u32>(&map, "batch_size_label")
        .map_err(|e| CliError::usage(format!("profile {}: {e}", path.display())))?
        .unwrap_or(64);
    NoiseProfile::new(
        cv_at_worst,
        cv_at_best,
        signal_gamma,
        bias_sigma,
        batch_size_label,
    )
    .map_err(|e| CliError::usage(format!("profile {}: {e}", path.display())))
}

/// A resolved `--oracle` argument.
pub struct ResolvedOracle {
    pub oracle: Oracle,
    pub label: String,
    /// Every file consulted while building the oracle (for manifests).
    pub sources: Vec<PathBuf>,
}

/// Parse `synthetic:<profile>`, `replay:<file>`, or `ensemble:<file>`;
/// ensemble files list one member oracle spec per line.
pub fn resolve_oracle(
    arg: &str,
    space: &ResolvedSpace,
    seed: u64,
    depth: usize,
) -> Result<ResolvedOracle, CliError> {
    if depth > 8 {
        return Err(CliError::usage("ensemble nesting deeper than 8 levels"));
    }
    if let Some(profile_path) = arg.strip_prefix("synthetic:") {
        let path = PathBuf::from(profile_path);
        let profile = load_profile(&path)?;
        let bench = space.bench.as_ref().ok_or_else(|| {
            CliError::usage(format!(
                "a synthetic oracle needs ground-truth accuracies; \
                 pass --space <benchmark csv> instead of {BUILTIN_SPACE} \
                 (generate one with `snas gen-space`)"
            ))
        })?;
        let oracle = synthetic_oracle(Arc::clone(bench), profile, seed)
            .map_err(|e| CliError::runtime(anyhow::anyhow!("synthetic oracle: {e}")))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "synthetic".into());
        Ok(ResolvedOracle {
            oracle,
            label,
            sources: vec![path],
        })
    } else if let Some(file) = arg.strip_prefix("replay:") {
        let path = PathBuf::from(file);
        let oracle = replay_oracle(&path, &space.spec)
            .map_err(|e| CliError::runtime(anyhow::anyhow!("replay oracle: {e}")))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "replay".into());
        Ok(ResolvedOracle {
            oracle,
            label,
            sources: vec![path],
        })
    } else if let Some(file) = arg.strip_prefix("ensemble:") {
        let path = PathBuf::from(file);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::usage(format!("ensemble {}: {e}", path.display())))?;
        let mut members = Vec::new();
        let mut sources = vec![path.clone()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let member = resolve_oracle(
                line,
                space,
                snas_core::seeding::mix(&[seed, i as u64]),
                depth + 1,
            )
            .map_err(|e| match e {
                CliError::Usage(msg) => {
                    CliError::usage(format!("ensemble {} line {}: {msg}", path.display(), i + 1))
                }
                other => other,
            })?;
            members.push(member.oracle);
            sources.extend(member.sources);
        }
        let oracle = ensemble_oracle(members)
            .map_err(|e| CliError::usage(format!("ensemble {}: {e}", path.display())))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "ensemble".into());
        Ok(ResolvedOracle {
            oracle,
            label,
            sources,
        })
    } else {
        Err(CliError::usage(format!(
            "--oracle must be synthetic:<profile>, replay:<file>, or ensemble:<file>, got {arg:?}"
        )))
    }
}

pub const MODEL_KEYS: [&str; 4] = ["low", "high", "mode", "roughness"];

pub fn load_accuracy_model(path: &Path) -> Result<AccuracyModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("accuracy model {}: {e}", path.display())))?;
    let map = parse_kv(&text)
        .map_err(|e| CliError::usage(format!("accuracy model {}: {e}", path.display())))?;
    reject_unknown_keys(&map, &MODEL_KEYS)
        .map_err(|e| CliError::usage(format!("accuracy model {}: {e}", path.display())))?;
    let low = take_parsed::<f64>(&map, "low")
        .map_err(CliError::usage)?
        .unwrap_or(10.0);
    let high = take_parsed::<f64>(&map, "high")
        .map_err(CliError::usage)?
        .unwrap_or(95.0);
    let roughness = take_parsed::<f64>(&map, "roughness")
        .map_err(CliError::usage)?
        .unwrap_or(0.25);
    let kind = match map.get("mode").map(|s| s.as_str()).unwrap_or("additive") {
        "additive" => AccuracyModelKind::Additive { roughness },
        "uniform" => AccuracyModelKind::Uniform,
        other => {
            return Err(CliError::usage(format!(
                "accuracy model {}: unknown mode {other:?} (additive or uniform)",
                path.display()
            )))
        }
    };
    let model = AccuracyModel { low, high, kind };
    model
        .validate()
        .map_err(|e| CliError::usage(format!("accuracy model {}: {e}", path.display())))?;
    Ok(model)
}
