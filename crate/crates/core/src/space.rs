//! Cell-based architecture search spaces.
//!
//! An architecture is a fixed-topology DAG cell: every directed edge of the
//! complete DAG on `num_nodes` nodes carries one operation, so the genome is
//! a fixed-length vector of op codes. Edges are ordered target-node-major:
//! (0->1), (0->2), (1->2), (0->3), (1->3), (2->3) for four nodes. That order
//! also defines the canonical pipe-separated text form and the benchmark CSV
//! layout. Encodings are compared as genomes; no graph-level semantic
//! deduplication is performed (tabular benchmarks index by genome).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::seeding::{fnv1a, mix, rng_from_seed, unit_open};

/// Default ceiling on the number of architectures `enumerate` will walk.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Operation vocabulary of the 4-node benchmark cell shape.
pub const NB201_OPS: [&str; 5] = [
    "zeroize",
    "skip_connect",
    "conv_3x3",
    "conv_1x1",
    "avg_pool_3x3",
];

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("invalid space spec: {0}")]
    InvalidSpec(String),
    #[error("mutation requires at least two operations in the space")]
    SingleOpMutation,
    #[error("encoding does not belong to this space: {0}")]
    SpecMismatch(String),
    #[error("parse error at position {position}: {detail}")]
    Parse { position: usize, detail: String },
    #[error("space of {size} architectures exceeds the enumeration cap {cap}")]
    CapExceeded { size: u128, cap: u128 },
    #[error("benchmark I/O error: {0}")]
    Io(String),
    #[error("benchmark schema error at row {row}: {detail}")]
    Schema { row: usize, detail: String },
    #[error("duplicate encoding at row {row}: {encoding}")]
    DuplicateEncoding { row: usize, encoding: String },
    #[error("accuracy {value} out of [0, 100] at row {row}")]
    AccuracyRange { row: usize, value: f64 },
    #[error("strict benchmark incomplete: expected {expected} architectures, found {found}")]
    Incomplete { expected: u128, found: usize },
    #[error("encoding not present in benchmark: {0}")]
    UnknownEncoding(String),
}

/// Architecture genome: one op index per edge, in the fixed edge order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellEncoding {
    genes: Vec<u8>,
}

impl CellEncoding {
    pub fn genes(&self) -> &[u8] {
        &self.genes
    }

    /// Stable 64-bit fingerprint of the genome.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(&self.genes)
    }

    pub fn hamming_distance(&self, other: &CellEncoding) -> usize {
        self.genes
            .iter()
            .zip(other.genes.iter())
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Shape of a search space: node count plus the ordered op vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceSpec {
    num_nodes: usize,
    ops: Vec<String>,
}

impl SpaceSpec {
    /// A single-op vocabulary is accepted (the space then has exactly one
    /// encoding); mutation requires at least two ops and errors otherwise.
    pub fn new(num_nodes: usize, ops: Vec<String>) -> Result<Self, SpaceError> {
        if num_nodes < 2 {
            return Err(SpaceError::InvalidSpec(format!(
                "need at least 2 nodes, got {num_nodes}"
            )));
        }
        if ops.is_empty() {
            return Err(SpaceError::InvalidSpec("empty op list".into()));
        }
        if ops.len() > 256 {
            return Err(SpaceError::InvalidSpec(format!(
                "at most 256 ops supported, got {}",
                ops.len()
            )));
        }
        for tag in &ops {
            if tag.is_empty()
                || tag.contains('|')
                || tag.contains(',')
                || tag.contains(char::is_whitespace)
            {
                return Err(SpaceError::InvalidSpec(format!("bad op tag {tag:?}")));
            }
        }
        let mut seen = ops.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != ops.len() {
            return Err(SpaceError::InvalidSpec("duplicate op tags".into()));
        }
        Ok(SpaceSpec { num_nodes, ops })
    }

    /// The 4-node, 5-op benchmark cell shape (15625 architectures).
    pub fn nb201_shape() -> Self {
        SpaceSpec::new(4, NB201_OPS.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.num_nodes * (self.num_nodes - 1) / 2
    }

    pub fn ops(&self) -> &[String] {
        &self.ops
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    /// Edge list in genome order, as (source, target) node pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.num_edges());
        for target in 1..self.num_nodes {
            for source in 0..target {
                edges.push((source, target));
            }
        }
        edges
    }

    /// Total architecture count, or None on overflow.
    pub fn size(&self) -> Option<u128> {
        let mut total: u128 = 1;
        for _ in 0..self.num_edges() {
            total = total.checked_mul(self.ops.len() as u128)?;
        }
        Some(total)
    }

    pub fn op_index(&self, tag: &str) -> Option<u8> {
        self.ops.iter().position(|t| t == tag).map(|i| i as u8)
    }

    fn check_member(&self, enc: &CellEncoding) -> Result<(), SpaceError> {
        if enc.genes.len() != self.num_edges() {
            return Err(SpaceError::SpecMismatch(format!(
                "expected {} genes, got {}",
                self.num_edges(),
                enc.genes.len()
            )));
        }
        if let Some(bad) = enc.genes.iter().find(|&&g| g as usize >= self.ops.len()) {
            return Err(SpaceError::SpecMismatch(format!(
                "gene {bad} outside op vocabulary of size {}",
                self.ops.len()
            )));
        }
        Ok(())
    }

    pub fn encoding_from_genes(&self, genes: Vec<u8>) -> Result<CellEncoding, SpaceError> {
        let enc = CellEncoding { genes };
        self.check_member(&enc)?;
        Ok(enc)
    }

    /// Enumerate every encoding once, in lexicographic gene order, under the
    /// default cap.
    pub fn enumerate(&self) -> Result<SpaceEnumerator<'_>, SpaceError> {
        self.enumerate_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_with_cap(&self, cap: u128) -> Result<SpaceEnumerator<'_>, SpaceError> {
        match self.size() {
            Some(size) if size <= cap => Ok(SpaceEnumerator {
                spec: self,
                next: Some(vec![0; self.num_edges()]),
            }),
            Some(size) => Err(SpaceError::CapExceeded { size, cap }),
            None => Err(SpaceError::CapExceeded {
                size: u128::MAX,
                cap,
            }),
        }
    }

    /// Uniform sample: each gene drawn independently from the op vocabulary.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> CellEncoding {
        let genes = (0..self.num_edges())
            .map(|_| rng.gen_range(0..self.ops.len()) as u8)
            .collect();
        CellEncoding { genes }
    }

    /// Operator-replacement mutation: one uniformly chosen edge is reassigned
    /// to a uniformly chosen different op, so the result is always at Hamming
    /// distance exactly 1.
    pub fn mutate<R: Rng>(
        &self,
        enc: &CellEncoding,
        rng: &mut R,
    ) -> Result<CellEncoding, SpaceError> {
        self.check_member(enc)?;
        if self.ops.len() < 2 {
            return Err(SpaceError::SingleOpMutation);
        }
        let edge = rng.gen_range(0..self.num_edges());
        let current = enc.genes[edge];
        let offset = rng.gen_range(1..self.ops.len() as u8);
        let replacement = (current + offset) % self.ops.len() as u8;
        let mut genes = enc.genes.clone();
        genes[edge] = replacement;
        Ok(CellEncoding { genes })
    }

    /// All Hamming-1 neighbors, edge-major then op order, excluding `enc`.
    pub fn mutations_all(&self, enc: &CellEncoding) -> Result<Vec<CellEncoding>, SpaceError> {
        self.check_member(enc)?;
        let mut out = Vec::with_capacity(self.num_edges() * (self.ops.len().saturating_sub(1)));
        for edge in 0..self.num_edges() {
            for op in 0..self.ops.len() as u8 {
                if op == enc.genes[edge] {
                    continue;
                }
                let mut genes = enc.genes.clone();
                genes[edge] = op;
                out.push(CellEncoding { genes });
            }
        }
        Ok(out)
    }

    /// Uniform per-gene crossover: each gene copied from either parent with
    /// probability one half.
    pub fn crossover<R: Rng>(
        &self,
        a: &CellEncoding,
        b: &CellEncoding,
        rng: &mut R,
    ) -> Result<CellEncoding, SpaceError> {
        self.check_member(a)?;
        self.check_member(b)?;
        let genes = a
            .genes
            .iter()
            .zip(b.genes.iter())
            .map(|(&ga, &gb)| if rng.gen_bool(0.5) { ga } else { gb })
            .collect();
        Ok(CellEncoding { genes })
    }

    /// Canonical text form: op tags joined by `|` in edge order.
    pub fn canonical_string(&self, enc: &CellEncoding) -> String {
        let mut out = String::new();
        for (i, &g) in enc.genes.iter().enumerate() {
            if i > 0 {
                out.push('|');
            }
            let _ = write!(out, "{}", self.ops[g as usize]);
        }
        out
    }

    /// Inverse of [`canonical_string`](Self::canonical_string). Positions in
    /// errors are 1-based fields.
    pub fn parse_encoding(&self, text: &str) -> Result<CellEncoding, SpaceError> {
        let fields: Vec<&str> = text.split('|').collect();
        if fields.len() != self.num_edges() {
            return Err(SpaceError::Parse {
                position: fields.len(),
                detail: format!("expected {} fields, got {}", self.num_edges(), fields.len()),
            });
        }
        let mut genes = Vec::with_capacity(fields.len());
        for (i, tag) in fields.iter().enumerate() {
            match self.op_index(tag) {
                Some(idx) => genes.push(idx),
                None => {
                    return Err(SpaceError::Parse {
                        position: i + 1,
                        detail: format!("unknown op tag {tag:?}"),
                    })
                }
            }
        }
        Ok(CellEncoding { genes })
    }
}

/// Lexicographic stream over a space, leftmost gene most significant.
pub struct SpaceEnumerator<'a> {
    spec: &'a SpaceSpec,
    next: Option<Vec<u8>>,
}

impl Iterator for SpaceEnumerator<'_> {
    type Item = CellEncoding;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let item = CellEncoding {
            genes: current.clone(),
        };
        let base = self.spec.ops.len() as u8;
        let mut digits = current;
        for pos in (0..digits.len()).rev() {
            if digits[pos] + 1 < base {
                digits[pos] += 1;
                for d in digits[pos + 1..].iter_mut() {
                    *d = 0;
                }
                self.next = Some(digits);
                return Some(item);
            }
        }
        // exhausted
        Some(item)
    }
}

/// Whether a benchmark must cover its whole space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// Every enumerable encoding must be present exactly once.
    Strict,
    /// Partial tables allowed; lookups on absent keys error.
    Sparse,
}

/// Ground-truth table mapping encodings to trained accuracy percentages.
#[derive(Debug, Clone)]
pub struct TabularBenchmark {
    spec: SpaceSpec,
    dataset: String,
    accuracies: HashMap<CellEncoding, f64>,
    acc_min: f64,
    acc_max: f64,
}

impl TabularBenchmark {
    pub fn from_entries(
        spec: SpaceSpec,
        dataset: impl Into<String>,
        entries: Vec<(CellEncoding, f64)>,
        mode: LoadMode,
    ) -> Result<Self, SpaceError> {
        let mut accuracies = HashMap::with_capacity(entries.len());
        for (row, (enc, acc)) in entries.into_iter().enumerate() {
            spec.check_member(&enc)?;
            if !(0.0..=100.0).contains(&acc) || !acc.is_finite() {
                return Err(SpaceError::AccuracyRange {
                    row: row + 1,
                    value: acc,
                });
            }
            if accuracies.insert(enc.clone(), acc).is_some() {
                return Err(SpaceError::DuplicateEncoding {
                    row: row + 1,
                    encoding: spec.canonical_string(&enc),
                });
            }
        }
        if accuracies.is_empty() {
            return Err(SpaceError::Incomplete {
                expected: spec.size().unwrap_or(0),
                found: 0,
            });
        }
        if mode == LoadMode::Strict {
            let expected = spec.size().ok_or_else(|| {
                SpaceError::InvalidSpec("space too large for a strict benchmark".into())
            })?;
            if accuracies.len() as u128 != expected {
                return Err(SpaceError::Incomplete {
                    expected,
                    found: accuracies.len(),
                });
            }
        }
        let acc_min = accuracies.values().cloned().fold(f64::INFINITY, f64::min);
        let acc_max = accuracies
            .values()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(TabularBenchmark {
            spec,
            dataset: dataset.into(),
            accuracies,
            acc_min,
            acc_max,
        })
    }

    /// Load a `encoding,accuracy` CSV.
    pub fn load_csv(
        path: impl AsRef<Path>,
        spec: &SpaceSpec,
        mode: LoadMode,
    ) -> Result<Self, SpaceError> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| SpaceError::Io(format!("{}: {e}", path.display())))?;
        {
            let headers = reader
                .headers()
                .map_err(|e| SpaceError::Io(e.to_string()))?;
            let expected = ["encoding", "accuracy"];
            if headers.iter().collect::<Vec<_>>() != expected {
                return Err(SpaceError::Schema {
                    row: 1,
                    detail: format!("header must be `encoding,accuracy`, got {headers:?}"),
                });
            }
        }
        let mut entries = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2; // 1-based, after the header
            let record = record.map_err(|e| SpaceError::Schema {
                row,
                detail: e.to_string(),
            })?;
            if record.len() != 2 {
                return Err(SpaceError::Schema {
                    row,
                    detail: format!("expected 2 fields, got {}", record.len()),
                });
            }
            let enc = spec
                .parse_encoding(&record[0])
                .map_err(|e| SpaceError::Schema {
                    row,
                    detail: e.to_string(),
                })?;
            let acc: f64 = record[1].parse().map_err(|e| SpaceError::Schema {
                row,
                detail: format!("bad accuracy {:?}: {e}", &record[1]),
            })?;
            if !(0.0..=100.0).contains(&acc) || !acc.is_finite() {
                return Err(SpaceError::AccuracyRange { row, value: acc });
            }
            entries.push((enc, acc));
        }
        // Re-check duplicates with file row numbers for a better message.
        let mut seen: HashMap<&CellEncoding, ()> = HashMap::new();
        for (i, (enc, _)) in entries.iter().enumerate() {
            if seen.insert(enc, ()).is_some() {
                return Err(SpaceError::DuplicateEncoding {
                    row: i + 2,
                    encoding: spec.canonical_string(enc),
                });
            }
        }
        let dataset = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "benchmark".into());
        TabularBenchmark::from_entries(spec.clone(), dataset, entries, mode)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "encoding,accuracy")?;
        let mut rows: Vec<(&CellEncoding, &f64)> = self.accuracies.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        for (enc, acc) in rows {
            writeln!(w, "{},{}", self.spec.canonical_string(enc), acc)?;
        }
        Ok(())
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn len(&self) -> usize {
        self.accuracies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accuracies.is_empty()
    }

    pub fn accuracy(&self, enc: &CellEncoding) -> Result<f64, SpaceError> {
        self.accuracies
            .get(enc)
            .copied()
            .ok_or_else(|| SpaceError::UnknownEncoding(self.spec.canonical_string(enc)))
    }

    /// (min, max) accuracy over the table.
    pub fn accuracy_range(&self) -> (f64, f64) {
        (self.acc_min, self.acc_max)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellEncoding, f64)> {
        self.accuracies.iter().map(|(k, &v)| (k, v))
    }
}

/// How synthetic ground-truth accuracies are laid over a space.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyModel {
    /// Lower accuracy bound, percent.
    pub low: f64,
    /// Upper accuracy bound, percent.
    pub high: f64,
    pub kind: AccuracyModelKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AccuracyModelKind {
    /// Per-(edge, op) additive effects plus arch-level noise; `roughness` in
    /// [0, 1] sets the noise share (0 = fully additive, smooth landscape).
    Additive { roughness: f64 },
    /// Independent hash-uniform accuracy per architecture.
    Uniform,
}

impl AccuracyModel {
    pub fn validate(&self) -> Result<(), SpaceError> {
        if !(0.0..=100.0).contains(&self.low)
            || !(0.0..=100.0).contains(&self.high)
            || self.low >= self.high
        {
            return Err(SpaceError::InvalidSpec(format!(
                "accuracy bounds must satisfy 0 <= low < high <= 100, got [{}, {}]",
                self.low, self.high
            )));
        }
        if let AccuracyModelKind::Additive { roughness } = self.kind {
            if !(0.0..=1.0).contains(&roughness) {
                return Err(SpaceError::InvalidSpec(format!(
                    "roughness must be in [0, 1], got {roughness}"
                )));
            }
        }
        Ok(())
    }

    pub fn default_additive() -> Self {
        AccuracyModel {
            low: 10.0,
            high: 95.0,
            kind: AccuracyModelKind::Additive { roughness: 0.25 },
        }
    }
}

const DOMAIN_ACC_NOISE: u64 = 0x41cc;

/// Synthesize a full ground-truth table for a space, deterministically from
/// the seed. Raw scores are MinMax-rescaled into [low, high].
pub fn synthesize_benchmark(
    spec: &SpaceSpec,
    model: &AccuracyModel,
    seed: u64,
) -> Result<TabularBenchmark, SpaceError> {
    model.validate()?;
    // Check the enumeration cap before allocating anything sized by the
    // space.
    let enumerator = spec.enumerate()?;
    let mut effects = vec![vec![0.0f64; spec.num_ops()]; spec.num_edges()];
    {
        let mut rng = rng_from_seed(mix(&[seed, fnv1a(b"edge-op-effects")]));
        for edge in effects.iter_mut() {
            for cell in edge.iter_mut() {
                *cell = standard_normal(&mut rng);
            }
        }
    }
    let mut entries: Vec<(CellEncoding, f64)> = Vec::new();
    for enc in enumerator {
        let raw = match model.kind {
            AccuracyModelKind::Additive { roughness } => {
                let signal: f64 = enc
                    .genes()
                    .iter()
                    .enumerate()
                    .map(|(i, &g)| effects[i][g as usize])
                    .sum();
                let scale = (spec.num_edges() as f64).sqrt();
                let noise = gaussian_from_hash(&[seed, DOMAIN_ACC_NOISE, enc.fingerprint()]);
                (1.0 - roughness) * signal / scale + roughness * noise
            }
            AccuracyModelKind::Uniform => {
                unit_open(mix(&[seed, DOMAIN_ACC_NOISE, enc.fingerprint()]))
            }
        };
        entries.push((enc, raw));
    }
    let raw_min = entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let raw_max = entries
        .iter()
        .map(|e| e.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let mid = (model.low + model.high) / 2.0;
    for entry in entries.iter_mut() {
        entry.1 = if raw_max == raw_min {
            mid
        } else {
            model.low + (model.high - model.low) * (entry.1 - raw_min) / (raw_max - raw_min)
        };
    }
    TabularBenchmark::from_entries(spec.clone(), "synthetic", entries, LoadMode::Strict)
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    crate::oracle::normal_quantile(unit_open(rng.gen::<u64>()))
}

fn gaussian_from_hash(parts: &[u64]) -> f64 {
    crate::oracle::normal_quantile(unit_open(mix(parts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    fn small_spec() -> SpaceSpec {
        SpaceSpec::new(
            3,
            vec!["zeroize".into(), "skip_connect".into(), "conv_3x3".into()],
        )
        .unwrap()
    }

    fn tiny_spec() -> SpaceSpec {
        SpaceSpec::new(2, vec!["zeroize".into(), "conv_3x3".into()]).unwrap()
    }

    #[test]
    fn nb201_shape_has_15625_architectures() {
        let spec = SpaceSpec::nb201_shape();
        assert_eq!(spec.num_edges(), 6);
        assert_eq!(spec.size(), Some(15625));
        assert_eq!(spec.enumerate().unwrap().count(), 15625);
    }

    #[test]
    fn enumeration_counts_and_uniqueness() {
        assert_eq!(tiny_spec().enumerate().unwrap().count(), 2);
        let encs: Vec<CellEncoding> = small_spec().enumerate().unwrap().collect();
        assert_eq!(encs.len(), 27);
        let mut dedup = encs.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 27);
        // lexicographic order
        assert!(encs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let spec = small_spec();
        assert!(matches!(
            spec.enumerate_with_cap(26),
            Err(SpaceError::CapExceeded { size: 27, cap: 26 })
        ));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = SpaceSpec::nb201_shape();
        let a = spec.sample_uniform(&mut rng_from_seed(9));
        let b = spec.sample_uniform(&mut rng_from_seed(9));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_single_op_space_yields_constant_encoding() {
        let spec = SpaceSpec::new(3, vec!["conv_3x3".into()]).unwrap();
        let enc = spec.sample_uniform(&mut rng_from_seed(1));
        assert_eq!(enc.genes(), &[0, 0, 0]);
    }

    #[test]
    fn sampling_frequencies_are_uniform() {
        let spec = tiny_spec();
        let mut rng = rng_from_seed(3);
        let draws = 100_000;
        let ones = (0..draws)
            .filter(|_| spec.sample_uniform(&mut rng).genes()[0] == 1)
            .count() as f64;
        // binomial 3-sigma band around p = 0.5
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((ones - draws as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn mutate_is_hamming_one() {
        let spec = SpaceSpec::nb201_shape();
        let mut rng = rng_from_seed(5);
        let base = spec.sample_uniform(&mut rng);
        for _ in 0..200 {
            let child = spec.mutate(&base, &mut rng).unwrap();
            assert_eq!(base.hamming_distance(&child), 1);
        }
    }

    #[test]
    fn mutate_one_edge_two_ops_flips_the_gene() {
        let spec = tiny_spec();
        let mut rng = rng_from_seed(8);
        let base = spec.encoding_from_genes(vec![0]).unwrap();
        let child = spec.mutate(&base, &mut rng).unwrap();
        assert_eq!(child.genes(), &[1]);
    }

    #[test]
    fn mutate_rejects_single_op_space() {
        let spec = SpaceSpec::new(3, vec!["conv_3x3".into()]).unwrap();
        let enc = spec.encoding_from_genes(vec![0, 0, 0]).unwrap();
        assert_eq!(
            spec.mutate(&enc, &mut rng_from_seed(0)),
            Err(SpaceError::SingleOpMutation)
        );
    }

    #[test]
    fn mutate_distribution_covers_edge_op_pairs_uniformly() {
        let spec = small_spec();
        let base = spec.encoding_from_genes(vec![0, 1, 2]).unwrap();
        let mut rng = rng_from_seed(17);
        let trials = 10_000;
        let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
        for _ in 0..trials {
            let child = spec.mutate(&base, &mut rng).unwrap();
            *counts.entry(child.genes().to_vec()).or_default() += 1;
        }
        // 3 edges x 2 alternative ops = 6 equally likely outcomes
        assert_eq!(counts.len(), 6);
        let expect = trials as f64 / 6.0;
        let sigma = (trials as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for &c in counts.values() {
            assert!(
                (c as f64 - expect).abs() < 4.0 * sigma,
                "count {c} vs expectation {expect}"
            );
        }
    }

    #[test]
    fn mutations_all_is_the_exact_hamming_ball() {
        let spec = SpaceSpec::nb201_shape();
        let enc = spec.encoding_from_genes(vec![0, 1, 2, 3, 4, 0]).unwrap();
        let all = spec.mutations_all(&enc).unwrap();
        assert_eq!(all.len(), 6 * 4);
        assert!(all.iter().all(|c| enc.hamming_distance(c) == 1));
        assert!(!all.contains(&enc));
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), all.len());

        // Exhaustive cross-check on the small space: the Hamming-1 ball and
        // nothing else.
        let spec = small_spec();
        let enc = spec.encoding_from_genes(vec![1, 1, 1]).unwrap();
        let neighbors = spec.mutations_all(&enc).unwrap();
        for other in spec.enumerate().unwrap() {
            let expected = enc.hamming_distance(&other) == 1;
            assert_eq!(neighbors.contains(&other), expected);
        }
    }

    #[test]
    fn mutations_all_single_neighbor_in_tiny_space() {
        let spec = tiny_spec();
        let enc = spec.encoding_from_genes(vec![1]).unwrap();
        let all = spec.mutations_all(&enc).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].genes(), &[0]);
    }

    #[test]
    fn crossover_identity_and_hull() {
        let spec = SpaceSpec::nb201_shape();
        let mut rng = rng_from_seed(2);
        let a = spec.sample_uniform(&mut rng);
        let same = spec.crossover(&a, &a, &mut rng).unwrap();
        assert_eq!(same, a);

        let b = spec.sample_uniform(&mut rng);
        for _ in 0..100 {
            let child = spec.crossover(&a, &b, &mut rng).unwrap();
            for (i, &g) in child.genes().iter().enumerate() {
                assert!(g == a.genes()[i] || g == b.genes()[i]);
            }
        }
    }

    #[test]
    fn crossover_choice_frequencies_are_even() {
        let spec = SpaceSpec::nb201_shape();
        let a = spec.encoding_from_genes(vec![0; 6]).unwrap();
        let b = spec.encoding_from_genes(vec![1; 6]).unwrap();
        let mut rng = rng_from_seed(23);
        let trials = 10_000;
        let mut from_a = [0usize; 6];
        for _ in 0..trials {
            let child = spec.crossover(&a, &b, &mut rng).unwrap();
            for (i, &g) in child.genes().iter().enumerate() {
                if g == 0 {
                    from_a[i] += 1;
                }
            }
        }
        let sigma = (trials as f64 * 0.25).sqrt();
        for &c in &from_a {
            assert!((c as f64 - trials as f64 / 2.0).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn crossover_rejects_mismatched_arity() {
        let spec = SpaceSpec::nb201_shape();
        let a = spec.encoding_from_genes(vec![0; 6]).unwrap();
        let b = CellEncoding { genes: vec![0; 3] };
        assert!(matches!(
            spec.crossover(&a, &b, &mut rng_from_seed(0)),
            Err(SpaceError::SpecMismatch(_))
        ));
    }

    #[test]
    fn canonical_string_round_trips_exhaustively() {
        let spec = small_spec();
        for enc in spec.enumerate().unwrap() {
            let text = spec.canonical_string(&enc);
            assert_eq!(spec.parse_encoding(&text).unwrap(), enc);
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        let spec = SpaceSpec::nb201_shape();
        let err = spec
            .parse_encoding("conv_3x3|bad_op|zeroize|zeroize|zeroize|zeroize")
            .unwrap_err();
        assert_eq!(
            err,
            SpaceError::Parse {
                position: 2,
                detail: "unknown op tag \"bad_op\"".into()
            }
        );
        let err = spec
            .parse_encoding("conv_3x3|zeroize|zeroize|zeroize|zeroize")
            .unwrap_err();
        assert!(matches!(err, SpaceError::Parse { position: 5, .. }));
    }

    #[test]
    fn benchmark_csv_round_trip_and_validation() {
        let spec = tiny_spec();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        std::fs::write(&path, "encoding,accuracy\nzeroize,50.5\nconv_3x3,92.25\n").unwrap();
        let bench = TabularBenchmark::load_csv(&path, &spec, LoadMode::Strict).unwrap();
        assert_eq!(bench.len(), 2);
        let enc = spec.parse_encoding("conv_3x3").unwrap();
        assert_eq!(bench.accuracy(&enc).unwrap(), 92.25);

        let mut out = Vec::new();
        bench.write_csv(&mut out).unwrap();
        let path2 = dir.path().join("bench2.csv");
        std::fs::write(&path2, &out).unwrap();
        let bench2 = TabularBenchmark::load_csv(&path2, &spec, LoadMode::Strict).unwrap();
        assert_eq!(bench2.accuracy(&enc).unwrap(), 92.25);
    }

    #[test]
    fn benchmark_rejects_out_of_range_accuracy() {
        let spec = tiny_spec();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        std::fs::write(&path, "encoding,accuracy\nzeroize,101.0\nconv_3x3,90.0\n").unwrap();
        let err = TabularBenchmark::load_csv(&path, &spec, LoadMode::Strict).unwrap_err();
        assert_eq!(
            err,
            SpaceError::AccuracyRange {
                row: 2,
                value: 101.0
            }
        );
    }

    #[test]
    fn strict_mode_requires_completeness() {
        let spec = tiny_spec();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        std::fs::write(&path, "encoding,accuracy\nzeroize,50.0\n").unwrap();
        let err = TabularBenchmark::load_csv(&path, &spec, LoadMode::Strict).unwrap_err();
        assert_eq!(
            err,
            SpaceError::Incomplete {
                expected: 2,
                found: 1
            }
        );
        assert!(TabularBenchmark::load_csv(&path, &spec, LoadMode::Sparse).is_ok());
    }

    #[test]
    fn duplicate_encodings_are_rejected() {
        let spec = tiny_spec();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        std::fs::write(
            &path,
            "encoding,accuracy\nzeroize,50.0\nzeroize,51.0\nconv_3x3,90.0\n",
        )
        .unwrap();
        let err = TabularBenchmark::load_csv(&path, &spec, LoadMode::Sparse).unwrap_err();
        assert!(matches!(err, SpaceError::DuplicateEncoding { row: 3, .. }));
    }

    #[test]
    fn synthesis_rejects_oversized_spaces_before_allocating() {
        let spec = SpaceSpec::new(10_000, vec!["a".into(), "b".into()]).unwrap();
        let err = synthesize_benchmark(&spec, &AccuracyModel::default_additive(), 0).unwrap_err();
        assert!(matches!(err, SpaceError::CapExceeded { .. }));
    }

    #[test]
    fn synthesized_benchmarks_are_deterministic_and_complete() {
        let spec = small_spec();
        let model = AccuracyModel::default_additive();
        let a = synthesize_benchmark(&spec, &model, 77).unwrap();
        let b = synthesize_benchmark(&spec, &model, 77).unwrap();
        assert_eq!(a.len(), 27);
        for enc in spec.enumerate().unwrap() {
            assert_eq!(a.accuracy(&enc).unwrap(), b.accuracy(&enc).unwrap());
        }
        let (lo, hi) = a.accuracy_range();
        assert!(lo >= model.low - 1e-9 && hi <= model.high + 1e-9);
        // distinct accuracies (continuous model)
        let mut accs: Vec<f64> = spec
            .enumerate()
            .unwrap()
            .map(|e| a.accuracy(&e).unwrap())
            .collect();
        accs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        accs.dedup();
        assert_eq!(accs.len(), 27);
    }
}
