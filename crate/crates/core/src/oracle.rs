//! Stochastic score sources standing in for zero-shot ranking functions.
//!
//! Three kinds of oracle produce score samples for an architecture:
//!
//! * synthetic — noise calibrated against a ground-truth accuracy table:
//!   the mean score rises with accuracy while the coefficient of variation
//!   falls, reproducing the empirical trend of real ranking functions;
//! * replay — samples exported from a real proxy pipeline, replayed from a
//!   JSON-Lines file in file order (cycling with a warning when exhausted);
//! * ensemble — one sample per member, each MinMax-normalized against that
//!   member's running observed range within the run, then summed.
//!
//! An [`Oracle`] is immutable and shareable across runs. All per-run
//! mutability (replay cursors, synthetic draw counters, ensemble
//! normalization windows) lives in an [`OracleState`], one per run.
//!
//! Synthetic draws are a pure function of (seed, encoding, draw index), so
//! equal seeds reproduce bit-identical score streams in any draw pattern.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::seeding::{mix, unit_open};
use crate::space::{CellEncoding, SpaceError, SpaceSpec, TabularBenchmark};
use crate::stats::{self, StatsError};

/// Ordered ranking-function observations for one architecture.
pub type ScoreSamples = Vec<f64>;

/// Scores are floored here to keep them strictly positive.
pub const SCORE_FLOOR: f64 = 1e-6;

/// Floor on the synthetic mean score; the bias term cannot push a mean to or
/// below zero.
const MEAN_FLOOR: f64 = 1e-3;

const DOMAIN_DRAW: u64 = 0xd7a3;
const DOMAIN_BIAS: u64 = 0xb1a5;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("benchmark accuracies are all equal; cannot calibrate noise")]
    DegenerateBenchmark,
    #[error("architecture not known to this oracle: {0}")]
    UnknownArchitecture(String),
    #[error("score file parse error at line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("score file I/O error: {0}")]
    Io(String),
    #[error("ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),
    #[error("evaluation count must be at least 1")]
    ZeroCount,
    #[error("oracle state does not match this oracle kind")]
    StateMismatch,
    #[error("invalid noise profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Calibration of the synthetic score noise.
///
/// For an architecture with normalized accuracy `a` in [0, 1], the mean
/// score is `1 + a^signal_gamma + bias(arch)` with a fixed per-architecture
/// bias drawn once from Normal(0, bias_sigma^2), and the target Var/Mean
/// coefficient of variation interpolates from `cv_at_worst` down to
/// `cv_at_best`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseProfile {
    pub cv_at_worst: f64,
    pub cv_at_best: f64,
    pub signal_gamma: f64,
    pub bias_sigma: f64,
    pub batch_size_label: u32,
}

impl NoiseProfile {
    pub fn new(
        cv_at_worst: f64,
        cv_at_best: f64,
        signal_gamma: f64,
        bias_sigma: f64,
        batch_size_label: u32,
    ) -> Result<Self, OracleError> {
        let profile = NoiseProfile {
            cv_at_worst,
            cv_at_best,
            signal_gamma,
            bias_sigma,
            batch_size_label,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let all_finite = self.cv_at_worst.is_finite()
            && self.cv_at_best.is_finite()
            && self.signal_gamma.is_finite()
            && self.bias_sigma.is_finite();
        if !all_finite {
            return Err(OracleError::InvalidProfile("non-finite field".into()));
        }
        if self.cv_at_best < 0.0 || self.cv_at_worst < self.cv_at_best {
            return Err(OracleError::InvalidProfile(format!(
                "need cv_at_worst >= cv_at_best >= 0, got {} and {}",
                self.cv_at_worst, self.cv_at_best
            )));
        }
        if self.signal_gamma <= 0.0 {
            return Err(OracleError::InvalidProfile(format!(
                "signal_gamma must be positive, got {}",
                self.signal_gamma
            )));
        }
        if self.bias_sigma < 0.0 {
            return Err(OracleError::InvalidProfile(format!(
                "bias_sigma must be non-negative, got {}",
                self.bias_sigma
            )));
        }
        Ok(())
    }

    /// Zero noise, zero bias: every draw equals the mean score exactly.
    pub fn noiseless() -> Self {
        NoiseProfile {
            cv_at_worst: 0.0,
            cv_at_best: 0.0,
            signal_gamma: 1.0,
            bias_sigma: 0.0,
            batch_size_label: 64,
        }
    }
}

/// A stochastic score source. Cheap to clone (tables are shared).
#[derive(Debug, Clone)]
pub enum Oracle {
    Synthetic(SyntheticOracle),
    Replay(Arc<ReplayData>),
    Ensemble(EnsembleOracle),
}

#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    bench: Arc<TabularBenchmark>,
    profile: NoiseProfile,
    seed: u64,
}

#[derive(Debug, Clone)]
pub struct EnsembleOracle {
    members: Vec<Oracle>,
}

/// Per-run mutable oracle bookkeeping; never share between concurrent runs.
#[derive(Debug, Clone)]
pub enum OracleState {
    Synthetic {
        draw_cursor: HashMap<CellEncoding, u64>,
    },
    Replay {
        cursor: HashMap<CellEncoding, usize>,
    },
    Ensemble {
        members: Vec<OracleState>,
        windows: Vec<MinMaxWindow>,
    },
}

/// Running observed min/max of one ensemble member within a run.
#[derive(Debug, Clone, Copy)]
pub struct MinMaxWindow {
    min: f64,
    max: f64,
    seen: bool,
}

impl MinMaxWindow {
    fn new() -> Self {
        MinMaxWindow {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            seen: false,
        }
    }

    /// Fold the value into the window, then normalize against it. Until two
    /// distinct values have been observed the contribution is 0.5.
    fn observe_and_normalize(&mut self, value: f64) -> f64 {
        self.min = self.min.min(value);
        self.max = self.max.max(value);
        self.seen = true;
        if self.max == self.min {
            0.5
        } else {
            (value - self.min) / (self.max - self.min)
        }
    }
}

/// Calibrated synthetic oracle over a ground-truth table.
///
/// The profile is taken as given; [`NoiseProfile::new`] is the validating
/// constructor (test code may build sign-flipped trends directly).
pub fn synthetic_oracle(
    bench: Arc<TabularBenchmark>,
    profile: NoiseProfile,
    seed: u64,
) -> Result<Oracle, OracleError> {
    let (lo, hi) = bench.accuracy_range();
    if bench.is_empty() || hi <= lo {
        return Err(OracleError::DegenerateBenchmark);
    }
    Ok(Oracle::Synthetic(SyntheticOracle {
        bench,
        profile,
        seed,
    }))
}

/// File-backed replay oracle; the spec supplies the op vocabulary for
/// decoding the stored encodings.
pub fn replay_oracle(path: impl AsRef<Path>, spec: &SpaceSpec) -> Result<Oracle, OracleError> {
    let data = ReplayData::load(path, spec)?;
    Ok(Oracle::Replay(Arc::new(data)))
}

/// Sum of members, each MinMax-normalized over its running observed range.
pub fn ensemble_oracle(members: Vec<Oracle>) -> Result<Oracle, OracleError> {
    if members.len() < 2 {
        return Err(OracleError::TooFewMembers(members.len()));
    }
    Ok(Oracle::Ensemble(EnsembleOracle { members }))
}

impl Oracle {
    pub fn new_state(&self) -> OracleState {
        match self {
            Oracle::Synthetic(_) => OracleState::Synthetic {
                draw_cursor: HashMap::new(),
            },
            Oracle::Replay(_) => OracleState::Replay {
                cursor: HashMap::new(),
            },
            Oracle::Ensemble(e) => OracleState::Ensemble {
                members: e.members.iter().map(|m| m.new_state()).collect(),
                windows: e.members.iter().map(|_| MinMaxWindow::new()).collect(),
            },
        }
    }

    /// Same oracle with the stochastic seed replaced; replay data, being
    /// file-backed, is unaffected.
    pub fn with_seed(&self, seed: u64) -> Oracle {
        match self {
            Oracle::Synthetic(s) => Oracle::Synthetic(SyntheticOracle {
                bench: Arc::clone(&s.bench),
                profile: s.profile,
                seed,
            }),
            Oracle::Replay(d) => Oracle::Replay(Arc::clone(d)),
            Oracle::Ensemble(e) => Oracle::Ensemble(EnsembleOracle {
                members: e
                    .members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.with_seed(mix(&[seed, i as u64])))
                    .collect(),
            }),
        }
    }

    /// Draw `count` fresh score samples for an architecture.
    pub fn evaluate(
        &self,
        state: &mut OracleState,
        arch: &CellEncoding,
        count: usize,
    ) -> Result<ScoreSamples, OracleError> {
        if count == 0 {
            return Err(OracleError::ZeroCount);
        }
        match (self, state) {
            (Oracle::Synthetic(oracle), OracleState::Synthetic { draw_cursor }) => {
                let cursor = draw_cursor.entry(arch.clone()).or_insert(0);
                let start = *cursor;
                *cursor += count as u64;
                (start..start + count as u64)
                    .map(|k| oracle.draw(arch, k))
                    .collect()
            }
            (Oracle::Replay(data), OracleState::Replay { cursor }) => {
                data.take(cursor, arch, count)
            }
            (Oracle::Ensemble(ensemble), OracleState::Ensemble { members, windows }) => {
                if members.len() != ensemble.members.len() {
                    return Err(OracleError::StateMismatch);
                }
                let mut out = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut total = 0.0;
                    for (i, member) in ensemble.members.iter().enumerate() {
                        let v = member.evaluate(&mut members[i], arch, 1)?[0];
                        total += windows[i].observe_and_normalize(v);
                    }
                    out.push(total);
                }
                Ok(out)
            }
            _ => Err(OracleError::StateMismatch),
        }
    }

    /// Batch-size metadata of the underlying profile, when one exists.
    pub fn batch_size_label(&self) -> Option<u32> {
        match self {
            Oracle::Synthetic(s) => Some(s.profile.batch_size_label),
            Oracle::Replay(_) => None,
            Oracle::Ensemble(e) => e.members.iter().find_map(|m| m.batch_size_label()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Oracle::Synthetic(s) => format!(
                "synthetic(cv {}..{}, gamma {}, bias {}, B {})",
                s.profile.cv_at_worst,
                s.profile.cv_at_best,
                s.profile.signal_gamma,
                s.profile.bias_sigma,
                s.profile.batch_size_label
            ),
            Oracle::Replay(d) => format!("replay({} architectures)", d.samples.len()),
            Oracle::Ensemble(e) => format!("ensemble({} members)", e.members.len()),
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl SyntheticOracle {
    /// Normalized accuracy, mean score, and target CV for an architecture.
    fn calibration(&self, arch: &CellEncoding) -> Result<(f64, f64), OracleError> {
        let acc = self.bench.accuracy(arch)?;
        let (lo, hi) = self.bench.accuracy_range();
        let a_hat = (acc - lo) / (hi - lo);
        let bias = if self.profile.bias_sigma == 0.0 {
            0.0
        } else {
            let u = unit_open(mix(&[self.seed, DOMAIN_BIAS, arch.fingerprint()]));
            self.profile.bias_sigma * normal_quantile(u)
        };
        let mean = (1.0 + a_hat.powf(self.profile.signal_gamma) + bias).max(MEAN_FLOOR);
        let cv =
            self.profile.cv_at_worst + (self.profile.cv_at_best - self.profile.cv_at_worst) * a_hat;
        Ok((mean, cv))
    }

    /// Draw k of the architecture's score stream: log-normal with mean
    /// exactly `mean` and variance exactly `cv * mean` (the Var/Mean
    /// convention), strictly positive by construction.
    fn draw(&self, arch: &CellEncoding, k: u64) -> Result<f64, OracleError> {
        let (mean, cv) = self.calibration(arch)?;
        if cv == 0.0 {
            return Ok(mean.max(SCORE_FLOOR));
        }
        let s2 = (cv / mean).ln_1p();
        let location = mean.ln() - s2 / 2.0;
        let u = unit_open(mix(&[self.seed, DOMAIN_DRAW, arch.fingerprint(), k]));
        let value = (location + s2.sqrt() * normal_quantile(u)).exp();
        Ok(value.max(SCORE_FLOOR))
    }

    /// Expected score for an architecture (exact mean of the draw
    /// distribution).
    pub fn mean_score(&self, arch: &CellEncoding) -> Result<f64, OracleError> {
        Ok(self.calibration(arch)?.0)
    }

    /// Target coefficient of variation for an architecture.
    pub fn target_cv(&self, arch: &CellEncoding) -> Result<f64, OracleError> {
        Ok(self.calibration(arch)?.1)
    }
}

/// Metadata attached to one exported score record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreMeta {
    pub ranking_function: String,
    pub batch_size: u32,
    pub num_evals: u32,
}

#[derive(Serialize, Deserialize)]
struct ScoreRecord {
    encoding: String,
    samples: Vec<f64>,
    meta: ScoreMeta,
}

/// Parsed contents of a score-sample file.
#[derive(Debug)]
pub struct ReplayData {
    samples: HashMap<CellEncoding, Vec<f64>>,
    spec: SpaceSpec,
}

impl ReplayData {
    fn load(path: impl AsRef<Path>, spec: &SpaceSpec) -> Result<Self, OracleError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| OracleError::Io(format!("{}: {e}", path.display())))?;
        let reader = BufReader::new(file);
        let mut samples = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| OracleError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ScoreRecord =
                serde_json::from_str(&line).map_err(|e| OracleError::Malformed {
                    line: line_no,
                    detail: e.to_string(),
                })?;
            let enc =
                spec.parse_encoding(&record.encoding)
                    .map_err(|e| OracleError::Malformed {
                        line: line_no,
                        detail: e.to_string(),
                    })?;
            if record.samples.is_empty() {
                return Err(OracleError::Malformed {
                    line: line_no,
                    detail: "empty sample list".into(),
                });
            }
            if record.samples.iter().any(|v| !v.is_finite()) {
                return Err(OracleError::Malformed {
                    line: line_no,
                    detail: "non-finite sample".into(),
                });
            }
            if samples.insert(enc, record.samples).is_some() {
                return Err(OracleError::Malformed {
                    line: line_no,
                    detail: format!("duplicate encoding {:?}", record.encoding),
                });
            }
        }
        Ok(ReplayData {
            samples,
            spec: spec.clone(),
        })
    }

    fn take(
        &self,
        cursor: &mut HashMap<CellEncoding, usize>,
        arch: &CellEncoding,
        count: usize,
    ) -> Result<ScoreSamples, OracleError> {
        let stored = self
            .samples
            .get(arch)
            .ok_or_else(|| OracleError::UnknownArchitecture(self.spec.canonical_string(arch)))?;
        let pos = cursor.entry(arch.clone()).or_insert(0);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            if *pos >= stored.len() && (*pos).is_multiple_of(stored.len()) {
                log::warn!(
                    "replay samples exhausted for {}; cycling from the start",
                    self.spec.canonical_string(arch)
                );
            }
            out.push(stored[*pos % stored.len()]);
            *pos += 1;
        }
        Ok(out)
    }
}

/// Write score records as JSON Lines, one object per architecture.
pub fn write_score_file<W: Write>(
    mut w: W,
    spec: &SpaceSpec,
    records: &[(CellEncoding, Vec<f64>, ScoreMeta)],
) -> Result<(), OracleError> {
    for (enc, samples, meta) in records {
        let record = ScoreRecord {
            encoding: spec.canonical_string(enc),
            samples: samples.clone(),
            meta: meta.clone(),
        };
        let line = serde_json::to_string(&record).map_err(|e| OracleError::Io(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| OracleError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Mean, Var/Mean coefficient of variation, and their raw sum for one sample
/// set. Experiment code MinMax-normalizes the two terms across its candidate
/// pool before summing; the raw parts are returned for that purpose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvAugmentedScore {
    pub mean: f64,
    pub cv: f64,
    pub sum: f64,
}

pub fn cv_augmented_score(samples: &[f64]) -> Result<CvAugmentedScore, StatsError> {
    let mean = stats::sample_mean(samples)?;
    let cv = stats::coefficient_of_variation(samples)?;
    Ok(CvAugmentedScore {
        mean,
        cv,
        sum: mean + cv,
    })
}
