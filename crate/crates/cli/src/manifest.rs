//! Run manifests: every results file is accompanied by a JSON manifest
//! recording the fully-resolved configuration, tool version, base seed, and
//! SHA-256 digests of all input files. Re-running the same manifest
//! reproduces the results byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub base_seed: u64,
    pub resolved: BTreeMap<String, String>,
    pub input_digests: BTreeMap<String, String>,
}

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::runtime(anyhow::anyhow!("digest {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_manifest(
    out_path: &Path,
    command: &str,
    base_seed: u64,
    resolved: BTreeMap<String, String>,
    inputs: &[PathBuf],
) -> Result<(), CliError> {
    let mut input_digests = BTreeMap::new();
    for input in inputs {
        input_digests.insert(input.display().to_string(), sha256_hex(input)?);
    }
    let manifest = Manifest {
        tool: "snas".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        base_seed,
        resolved,
        input_digests,
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::runtime(anyhow::anyhow!("manifest: {e}")))?;
    text.push('\n');
    std::fs::write(out_path, text)
        .map_err(|e| CliError::runtime(anyhow::anyhow!("manifest {}: {e}", out_path.display())))?;
    Ok(())
}
