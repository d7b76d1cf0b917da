//! Architecture comparison: statistical max / top-k, the averaging baseline,
//! sample caches, and memoized pairwise outcomes.
//!
//! [`stat_max`] walks the candidate list keeping an incumbent and replacing
//! it only when a one-sided Mann-Whitney test says the candidate is
//! stochastically greater at the significance threshold. The procedure is
//! deliberately not permutation invariant: when neither of a contested pair
//! dominates, the first-listed is retained, which plays the role of a
//! random tie breaker inside a randomized search.
//!
//! [`EvalCache`] implements the three sample-persistence policies:
//! `cached` draws once per architecture and stores, `on_the_fly` redraws at
//! every encounter, and `hybrid` accumulates a few extra draws per repeat
//! encounter. Under the cached policy (where sample sets never change) the
//! dominance verdict of each unordered pair is memoized so a comparison is
//! never recomputed.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::oracle::{Oracle, OracleError, OracleState, ScoreSamples};
use crate::space::CellEncoding;
use crate::stats::{mann_whitney_u, Alternative, StatsError};

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("need at least one sample set")]
    EmptyInput,
    #[error("k = {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// How sample sets are reduced to a selection decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvaluatorKind {
    /// Rank by sample mean; exact mean ties broken by a seeded uniform draw.
    Averaging,
    /// Stochastic-dominance testing at the given significance level.
    Statistical { threshold: f64 },
}

impl EvaluatorKind {
    /// The statistical evaluator at the 5% significance level.
    pub fn statistical_default() -> Self {
        EvaluatorKind::Statistical { threshold: 0.05 }
    }

    pub fn validate(&self) -> Result<(), CompareError> {
        if let EvaluatorKind::Statistical { threshold } = self {
            if !threshold.is_finite() || *threshold <= 0.0 || *threshold >= 1.0 {
                return Err(CompareError::InvalidArgument(
                    "significance threshold must lie strictly inside (0, 1)",
                ));
            }
        }
        Ok(())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            EvaluatorKind::Averaging => "averaging",
            EvaluatorKind::Statistical { .. } => "statistical",
        }
    }
}

/// Sample persistence across repeated encounters of one architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheKind {
    Cached,
    OnTheFly,
    Hybrid,
}

impl CacheKind {
    pub fn tag(&self) -> &'static str {
        match self {
            CacheKind::Cached => "cached",
            CacheKind::OnTheFly => "on_the_fly",
            CacheKind::Hybrid => "hybrid",
        }
    }
}

/// Cache policy: the persistence kind plus the draw counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CachePolicy {
    pub kind: CacheKind,
    /// V: draws charged on the first encounter of an architecture.
    pub initial_draws: usize,
    /// Extra draws appended per repeat encounter under the hybrid policy.
    pub hybrid_increment: usize,
}

impl Default for CachePolicy {
    fn default() -> Self {
        CachePolicy {
            kind: CacheKind::Cached,
            initial_draws: 10,
            hybrid_increment: 3,
        }
    }
}

impl CachePolicy {
    pub fn new(
        kind: CacheKind,
        initial_draws: usize,
        hybrid_increment: usize,
    ) -> Result<Self, CompareError> {
        if initial_draws == 0 {
            return Err(CompareError::InvalidArgument("initial_draws must be >= 1"));
        }
        if hybrid_increment == 0 {
            return Err(CompareError::InvalidArgument(
                "hybrid_increment must be >= 1",
            ));
        }
        Ok(CachePolicy {
            kind,
            initial_draws,
            hybrid_increment,
        })
    }
}

/// Dominance verdict for an unordered pair, stored against the
/// lexicographically smaller encoding first. At most one side can dominate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairVerdict {
    pub first_dominates: bool,
    pub second_dominates: bool,
}

/// Which argument of a pairwise comparison is preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    First,
    Second,
}

/// Per-run sample store and comparison memo.
#[derive(Debug)]
pub struct EvalCache {
    policy: CachePolicy,
    samples: HashMap<CellEncoding, ScoreSamples>,
    encounters: HashMap<CellEncoding, u64>,
    memo: HashMap<(CellEncoding, CellEncoding), PairVerdict>,
    fresh_draws: u64,
    memo_hits: u64,
}

impl EvalCache {
    pub fn new(policy: CachePolicy) -> Self {
        EvalCache {
            policy,
            samples: HashMap::new(),
            encounters: HashMap::new(),
            memo: HashMap::new(),
            fresh_draws: 0,
            memo_hits: 0,
        }
    }

    pub fn policy(&self) -> CachePolicy {
        self.policy
    }

    /// Total fresh oracle draws charged so far.
    pub fn fresh_draws(&self) -> u64 {
        self.fresh_draws
    }

    pub fn encounters(&self, arch: &CellEncoding) -> u64 {
        self.encounters.get(arch).copied().unwrap_or(0)
    }

    pub fn memo_hits(&self) -> u64 {
        self.memo_hits
    }

    /// Samples for an architecture under the cache policy. Every call is one
    /// encounter; only fresh draws are charged to the budget meter.
    pub fn get_samples(
        &mut self,
        oracle: &Oracle,
        state: &mut OracleState,
        arch: &CellEncoding,
    ) -> Result<ScoreSamples, CompareError> {
        *self.encounters.entry(arch.clone()).or_insert(0) += 1;
        let v = self.policy.initial_draws;
        match self.policy.kind {
            CacheKind::Cached => {
                if !self.samples.contains_key(arch) {
                    let draws = oracle.evaluate(state, arch, v)?;
                    self.fresh_draws += v as u64;
                    self.samples.insert(arch.clone(), draws);
                }
                Ok(self.samples[arch].clone())
            }
            CacheKind::OnTheFly => {
                let draws = oracle.evaluate(state, arch, v)?;
                self.fresh_draws += v as u64;
                Ok(draws)
            }
            CacheKind::Hybrid => {
                if let Some(existing) = self.samples.get_mut(arch) {
                    let extra = oracle.evaluate(state, arch, self.policy.hybrid_increment)?;
                    self.fresh_draws += self.policy.hybrid_increment as u64;
                    existing.extend(extra);
                } else {
                    let draws = oracle.evaluate(state, arch, v)?;
                    self.fresh_draws += v as u64;
                    self.samples.insert(arch.clone(), draws);
                }
                Ok(self.samples[arch].clone())
            }
        }
    }

    fn memo_enabled(&self, evaluator: &EvaluatorKind) -> bool {
        self.policy.kind == CacheKind::Cached
            && matches!(evaluator, EvaluatorKind::Statistical { .. })
    }

    fn memo_key(a: &CellEncoding, b: &CellEncoding) -> (CellEncoding, CellEncoding) {
        if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        }
    }

    /// Dominance verdict for (a, b) in argument order, memoized under the
    /// cached policy where the underlying samples never change.
    fn pair_verdict(
        &mut self,
        use_memo: bool,
        a: &CellEncoding,
        sa: &[f64],
        b: &CellEncoding,
        sb: &[f64],
        threshold: f64,
    ) -> Result<PairVerdict, CompareError> {
        let key = Self::memo_key(a, b);
        let flipped = key.0 != *a;
        if use_memo {
            if let Some(&stored) = self.memo.get(&key) {
                self.memo_hits += 1;
                return Ok(orient(stored, flipped));
            }
        }
        let a_dominates = mann_whitney_u(sa, sb, Alternative::FirstGreater)?.p_value < threshold;
        let b_dominates = mann_whitney_u(sb, sa, Alternative::FirstGreater)?.p_value < threshold;
        let verdict = PairVerdict {
            first_dominates: a_dominates,
            second_dominates: b_dominates,
        };
        if use_memo {
            self.memo.insert(key, orient(verdict, flipped));
        }
        Ok(verdict)
    }

    /// Index of the best architecture among parallel `archs` / `sets`,
    /// under the configured evaluator. Equivalent to [`stat_max`] /
    /// [`avg_max`] over the sets, with pairwise verdicts memoized when the
    /// cached policy makes them immutable.
    pub fn select_best<R: Rng>(
        &mut self,
        archs: &[CellEncoding],
        sets: &[ScoreSamples],
        evaluator: &EvaluatorKind,
        rng: &mut R,
    ) -> Result<usize, CompareError> {
        if archs.len() != sets.len() {
            return Err(CompareError::InvalidArgument(
                "archs and sets must be parallel",
            ));
        }
        if sets.is_empty() {
            return Err(CompareError::EmptyInput);
        }
        match evaluator {
            EvaluatorKind::Averaging => {
                // Mean-rank with the tie draw taken over distinct tied
                // architectures: a tournament slot duplicated by
                // with-replacement sampling is the same candidate, not a
                // second lottery ticket, and no randomness is spent when
                // every tied slot holds the same architecture.
                let mut means = Vec::with_capacity(sets.len());
                for s in sets {
                    means.push(crate::stats::sample_mean(s)?);
                }
                let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let tied: Vec<usize> = (0..means.len()).filter(|&i| means[i] == best).collect();
                let mut distinct: Vec<usize> = Vec::new();
                for &i in &tied {
                    if !distinct.iter().any(|&j| archs[j] == archs[i]) {
                        distinct.push(i);
                    }
                }
                if distinct.len() == 1 {
                    Ok(distinct[0])
                } else {
                    Ok(distinct[rng.gen_range(0..distinct.len())])
                }
            }
            EvaluatorKind::Statistical { threshold } => {
                let use_memo = self.memo_enabled(evaluator);
                let mut incumbent = 0;
                for candidate in 1..sets.len() {
                    let verdict = self.pair_verdict(
                        use_memo,
                        &archs[incumbent],
                        &sets[incumbent],
                        &archs[candidate],
                        &sets[candidate],
                        *threshold,
                    )?;
                    if verdict.second_dominates {
                        incumbent = candidate;
                    }
                }
                Ok(incumbent)
            }
        }
    }

    /// Top two distinct positions in selection order (statistical top-k with
    /// k = 2, or the two best means under averaging).
    pub fn select_top2<R: Rng>(
        &mut self,
        archs: &[CellEncoding],
        sets: &[ScoreSamples],
        evaluator: &EvaluatorKind,
        rng: &mut R,
    ) -> Result<(usize, usize), CompareError> {
        if sets.len() < 2 {
            return Err(CompareError::BadK {
                k: 2,
                n: sets.len(),
            });
        }
        let first = self.select_best(archs, sets, evaluator, rng)?;
        let mut rest_archs = Vec::with_capacity(archs.len() - 1);
        let mut rest_sets = Vec::with_capacity(sets.len() - 1);
        let mut remap = Vec::with_capacity(sets.len() - 1);
        for i in 0..sets.len() {
            if i != first {
                rest_archs.push(archs[i].clone());
                rest_sets.push(sets[i].clone());
                remap.push(i);
            }
        }
        let second = self.select_best(&rest_archs, &rest_sets, evaluator, rng)?;
        Ok((first, remap[second]))
    }

    /// Pairwise preference between two distinct architectures.
    ///
    /// Statistical mode tests both one-sided directions: a decisive
    /// direction wins, otherwise the first argument is preferred (the same
    /// convention as [`stat_max`]'s incumbent retention). Under the cached
    /// policy the dominance verdict is memoized on the unordered pair, so a
    /// repeat comparison in either argument order replays the stored
    /// outcome without fresh draws or a re-run test.
    pub fn compare_pair<R: Rng>(
        &mut self,
        evaluator: &EvaluatorKind,
        oracle: &Oracle,
        state: &mut OracleState,
        a: &CellEncoding,
        b: &CellEncoding,
        rng: &mut R,
    ) -> Result<Preference, CompareError> {
        if a == b {
            return Err(CompareError::InvalidArgument(
                "compare_pair needs two distinct architectures",
            ));
        }
        match evaluator {
            EvaluatorKind::Statistical { threshold } => {
                if self.memo_enabled(evaluator) {
                    let key = Self::memo_key(a, b);
                    if let Some(&stored) = self.memo.get(&key) {
                        self.memo_hits += 1;
                        let verdict = orient(stored, key.0 != *a);
                        return Ok(preference_from(verdict));
                    }
                }
                let sa = self.get_samples(oracle, state, a)?;
                let sb = self.get_samples(oracle, state, b)?;
                let use_memo = self.memo_enabled(evaluator);
                let verdict = self.pair_verdict(use_memo, a, &sa, b, &sb, *threshold)?;
                Ok(preference_from(verdict))
            }
            EvaluatorKind::Averaging => {
                let sa = self.get_samples(oracle, state, a)?;
                let sb = self.get_samples(oracle, state, b)?;
                let ma = crate::stats::sample_mean(&sa)?;
                let mb = crate::stats::sample_mean(&sb)?;
                if ma > mb {
                    Ok(Preference::First)
                } else if mb > ma {
                    Ok(Preference::Second)
                } else if rng.gen_bool(0.5) {
                    Ok(Preference::First)
                } else {
                    Ok(Preference::Second)
                }
            }
        }
    }
}

fn orient(v: PairVerdict, flipped: bool) -> PairVerdict {
    if flipped {
        PairVerdict {
            first_dominates: v.second_dominates,
            second_dominates: v.first_dominates,
        }
    } else {
        v
    }
}

fn preference_from(verdict: PairVerdict) -> Preference {
    if verdict.first_dominates {
        Preference::First
    } else if verdict.second_dominates {
        Preference::Second
    } else {
        Preference::First
    }
}

/// Statistical maximum over sample sets.
///
/// The first set is the incumbent; each later set replaces it only when the
/// one-sided test "candidate stochastically greater than incumbent" rejects
/// at `threshold`. Returns the final incumbent's index.
pub fn stat_max<S: AsRef<[f64]>>(sets: &[S], threshold: f64) -> Result<usize, CompareError> {
    if sets.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mut incumbent = 0;
    for candidate in 1..sets.len() {
        let p = mann_whitney_u(
            sets[candidate].as_ref(),
            sets[incumbent].as_ref(),
            Alternative::FirstGreater,
        )?
        .p_value;
        if p < threshold {
            incumbent = candidate;
        }
    }
    Ok(incumbent)
}

/// [`stat_max`] with literal randomization of contested pairs: when neither
/// side dominates, a fair coin decides whether the candidate replaces the
/// incumbent. Ablation variant of the default positional retention.
pub fn stat_max_randomized<S: AsRef<[f64]>, R: Rng>(
    sets: &[S],
    threshold: f64,
    rng: &mut R,
) -> Result<usize, CompareError> {
    if sets.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mut incumbent = 0;
    for candidate in 1..sets.len() {
        let cand_beats = mann_whitney_u(
            sets[candidate].as_ref(),
            sets[incumbent].as_ref(),
            Alternative::FirstGreater,
        )?
        .p_value
            < threshold;
        let inc_beats = mann_whitney_u(
            sets[incumbent].as_ref(),
            sets[candidate].as_ref(),
            Alternative::FirstGreater,
        )?
        .p_value
            < threshold;
        if cand_beats || (!inc_beats && rng.gen_bool(0.5)) {
            incumbent = candidate;
        }
    }
    Ok(incumbent)
}

/// Statistical top-k: repeat [`stat_max`], removing each winner while
/// preserving the relative order of the survivors. Returns original indices
/// in selection order.
pub fn stat_topk<S: AsRef<[f64]>>(
    k: usize,
    sets: &[S],
    threshold: f64,
) -> Result<Vec<usize>, CompareError> {
    if k == 0 || k > sets.len() {
        return Err(CompareError::BadK { k, n: sets.len() });
    }
    let mut alive: Vec<usize> = (0..sets.len()).collect();
    let mut winners = Vec::with_capacity(k);
    for _ in 0..k {
        let views: Vec<&[f64]> = alive.iter().map(|&i| sets[i].as_ref()).collect();
        let w = stat_max(&views, threshold)?;
        winners.push(alive.remove(w));
    }
    Ok(winners)
}

/// Index of the highest sample mean; exact mean ties broken by a seeded
/// uniform draw among the tied.
pub fn avg_max<S: AsRef<[f64]>, R: Rng>(sets: &[S], rng: &mut R) -> Result<usize, CompareError> {
    if sets.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mut means = Vec::with_capacity(sets.len());
    for s in sets {
        means.push(crate::stats::sample_mean(s.as_ref())?);
    }
    let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..means.len()).filter(|&i| means[i] == best).collect();
    if tied.len() == 1 {
        Ok(tied[0])
    } else {
        Ok(tied[rng.gen_range(0..tied.len())])
    }
}

/// Averaging top-k, the mean-ranking analogue of [`stat_topk`].
pub fn avg_topk<S: AsRef<[f64]>, R: Rng>(
    k: usize,
    sets: &[S],
    rng: &mut R,
) -> Result<Vec<usize>, CompareError> {
    if k == 0 || k > sets.len() {
        return Err(CompareError::BadK { k, n: sets.len() });
    }
    let mut alive: Vec<usize> = (0..sets.len()).collect();
    let mut winners = Vec::with_capacity(k);
    for _ in 0..k {
        let views: Vec<&[f64]> = alive.iter().map(|&i| sets[i].as_ref()).collect();
        let w = avg_max(&views, rng)?;
        winners.push(alive.remove(w));
    }
    Ok(winners)
}
