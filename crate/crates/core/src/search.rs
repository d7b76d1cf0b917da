//! Search algorithms over cell spaces: random search and three evolutionary
//! variants (REA, greedy, FreeREA), parameterized by evaluator, cache
//! policy, and oracle.
//!
//! Budget accounting follows the evolution-cycle convention: a run evolves
//! until its history holds at least `cycle_budget` evaluated architectures.
//! The algorithms spend that budget at different rates (REA adds one child
//! per cycle, FreeREA three, greedy a whole mutation neighborhood), so a
//! common cap compares them at equal history size, not equal cycle count.
//!
//! Ground-truth accuracy is invisible to the search: the oracle interface
//! exposes scores only, and [`SearchOutcome::with_accuracy`] attaches the
//! benchmark lookup after the fact.
//!
//! History entries snapshot the sample set recorded when the architecture
//! was evaluated, mirroring the (arch, rank) pairs the evolutionary loop
//! stores; the final selection ranks those snapshots and charges no fresh
//! draws.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::compare::{CachePolicy, CompareError, EvalCache, EvaluatorKind};
use crate::oracle::{Oracle, OracleError, OracleState, ScoreSamples};
use crate::seeding::rng_from_seed;
use crate::space::{CellEncoding, SpaceError, SpaceSpec, TabularBenchmark};

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("bad search config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Random,
    Rea,
    Greedy,
    FreeRea,
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Random => "random",
            Algorithm::Rea => "rea",
            Algorithm::Greedy => "greedy",
            Algorithm::FreeRea => "free_rea",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Algorithm::Random),
            "rea" => Ok(Algorithm::Rea),
            "greedy" => Ok(Algorithm::Greedy),
            "free_rea" | "free-rea" | "freerea" => Ok(Algorithm::FreeRea),
            other => Err(format!(
                "unknown algorithm {other:?} (expected random, rea, greedy, or free-rea)"
            )),
        }
    }
}

/// Full configuration of one search run.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    /// N: candidates drawn by random search.
    pub sample_count: usize,
    /// P: population size for the evolutionary algorithms.
    pub population_size: usize,
    /// S: tournament size.
    pub tournament_size: usize,
    /// C: history budget in evolution cycles.
    pub cycle_budget: usize,
    pub evaluator: EvaluatorKind,
    pub cache: CachePolicy,
    pub seed: u64,
    /// Ablation flag: literally randomize contested stat_max pairs instead
    /// of retaining the incumbent.
    pub random_tie_break: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Random,
            sample_count: 100,
            population_size: 25,
            tournament_size: 5,
            cycle_budget: 1000,
            evaluator: EvaluatorKind::statistical_default(),
            cache: CachePolicy::default(),
            seed: 0,
            random_tie_break: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, spec: &SpaceSpec) -> Result<(), SearchError> {
        self.evaluator.validate()?;
        match self.algorithm {
            Algorithm::Random => {
                if self.sample_count == 0 {
                    return Err(SearchError::BadConfig("sample_count must be >= 1".into()));
                }
            }
            Algorithm::Rea | Algorithm::Greedy | Algorithm::FreeRea => {
                if self.population_size == 0 || self.tournament_size == 0 {
                    return Err(SearchError::BadConfig(
                        "population and tournament sizes must be >= 1".into(),
                    ));
                }
                if self.tournament_size > self.population_size {
                    return Err(SearchError::BadConfig(format!(
                        "tournament size {} exceeds population size {}",
                        self.tournament_size, self.population_size
                    )));
                }
                if self.algorithm == Algorithm::FreeRea && self.population_size < 3 {
                    return Err(SearchError::BadConfig(
                        "free_rea needs a population of at least 3".into(),
                    ));
                }
                if self.algorithm == Algorithm::FreeRea && self.tournament_size < 2 {
                    return Err(SearchError::BadConfig(
                        "free_rea needs a tournament of at least 2".into(),
                    ));
                }
                if spec.num_ops() < 2 {
                    return Err(SearchError::BadConfig(
                        "mutation-based search needs at least two ops in the space".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Member of an evolutionary population; `birth_cycle` is the age key.
///
/// Members hold encodings only: every read of an architecture's score set,
/// tournament lookups included, goes through the cache policy, so the
/// on-the-fly policy re-evaluates an architecture at every encounter while
/// the cached policy replays the stored draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationMember {
    pub arch: CellEncoding,
    pub birth_cycle: u64,
}

/// Result of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub selected: CellEncoding,
    /// Ground-truth accuracy, attached post-hoc; never visible to the
    /// search itself.
    pub selected_accuracy: Option<f64>,
    pub cycles_used: u64,
    pub fresh_draws_used: u64,
    /// Every architecture evaluated into the history, with the cycle it was
    /// recorded on (cycle 0 covers initialization and random sampling).
    pub history: Vec<(CellEncoding, u64)>,
}

impl SearchOutcome {
    pub fn with_accuracy(mut self, bench: &TabularBenchmark) -> Result<Self, SpaceError> {
        self.selected_accuracy = Some(bench.accuracy(&self.selected)?);
        Ok(self)
    }
}

struct HistoryEntry {
    arch: CellEncoding,
    samples: ScoreSamples,
    cycle: u64,
}

struct Run<'a> {
    spec: &'a SpaceSpec,
    oracle: &'a Oracle,
    config: &'a SearchConfig,
    state: OracleState,
    cache: EvalCache,
    rng: ChaCha8Rng,
    history: Vec<HistoryEntry>,
    cycles: u64,
}

impl<'a> Run<'a> {
    fn new(spec: &'a SpaceSpec, oracle: &'a Oracle, config: &'a SearchConfig) -> Self {
        Run {
            spec,
            oracle,
            config,
            state: oracle.new_state(),
            cache: EvalCache::new(config.cache),
            rng: rng_from_seed(config.seed),
            history: Vec::new(),
            cycles: 0,
        }
    }

    fn fetch(&mut self, arch: &CellEncoding) -> Result<ScoreSamples, SearchError> {
        Ok(self.cache.get_samples(self.oracle, &mut self.state, arch)?)
    }

    fn record(&mut self, arch: CellEncoding, samples: ScoreSamples) {
        self.history.push(HistoryEntry {
            arch,
            samples,
            cycle: self.cycles,
        });
    }

    fn select_best(
        &mut self,
        archs: &[CellEncoding],
        sets: &[ScoreSamples],
    ) -> Result<usize, SearchError> {
        if self.config.random_tie_break {
            if let EvaluatorKind::Statistical { threshold } = self.config.evaluator {
                return Ok(crate::compare::stat_max_randomized(
                    sets,
                    threshold,
                    &mut self.rng,
                )?);
            }
        }
        Ok(self
            .cache
            .select_best(archs, sets, &self.config.evaluator, &mut self.rng)?)
    }

    fn select_top2(
        &mut self,
        archs: &[CellEncoding],
        sets: &[ScoreSamples],
    ) -> Result<(usize, usize), SearchError> {
        Ok(self
            .cache
            .select_top2(archs, sets, &self.config.evaluator, &mut self.rng)?)
    }

    /// Rank the recorded history snapshots and return the winner.
    fn best_of_history(&mut self) -> Result<CellEncoding, SearchError> {
        let archs: Vec<CellEncoding> = self.history.iter().map(|h| h.arch.clone()).collect();
        let sets: Vec<ScoreSamples> = self.history.iter().map(|h| h.samples.clone()).collect();
        let winner = self.select_best(&archs, &sets)?;
        Ok(archs[winner].clone())
    }

    fn outcome(mut self) -> Result<SearchOutcome, SearchError> {
        let selected = self.best_of_history()?;
        Ok(SearchOutcome {
            selected,
            selected_accuracy: None,
            cycles_used: self.cycles,
            fresh_draws_used: self.cache.fresh_draws(),
            history: self
                .history
                .iter()
                .map(|h| (h.arch.clone(), h.cycle))
                .collect(),
        })
    }

    fn init_population(&mut self) -> Result<VecDeque<PopulationMember>, SearchError> {
        let mut population = VecDeque::with_capacity(self.config.population_size);
        for i in 0..self.config.population_size {
            let arch = self.spec.sample_uniform(&mut self.rng);
            let samples = self.fetch(&arch)?;
            self.record(arch.clone(), samples);
            population.push_back(PopulationMember {
                arch,
                birth_cycle: i as u64,
            });
        }
        Ok(population)
    }

    /// Tournament of S members sampled with replacement; duplicates simply
    /// appear twice, and every slot reads its samples through the cache
    /// policy (one encounter per slot).
    fn tournament(
        &mut self,
        population: &VecDeque<PopulationMember>,
    ) -> Result<(Vec<CellEncoding>, Vec<ScoreSamples>), SearchError> {
        let mut archs = Vec::with_capacity(self.config.tournament_size);
        for _ in 0..self.config.tournament_size {
            let slot = rand::Rng::gen_range(&mut self.rng, 0..population.len());
            archs.push(population[slot].arch.clone());
        }
        let mut sets = Vec::with_capacity(archs.len());
        for arch in &archs {
            sets.push(self.fetch(arch)?);
        }
        Ok((archs, sets))
    }
}

/// Run the configured algorithm; dispatcher over the four searches.
pub fn run_search(
    spec: &SpaceSpec,
    oracle: &Oracle,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    config.validate(spec)?;
    match config.algorithm {
        Algorithm::Random => random_search(spec, oracle, config),
        Algorithm::Rea => rea_search(spec, oracle, config),
        Algorithm::Greedy => greedy_evo_search(spec, oracle, config),
        Algorithm::FreeRea => free_rea_search(spec, oracle, config),
    }
}

/// Sample N architectures uniformly with replacement, evaluate each, and
/// return the evaluator's winner. Duplicate draws share cached samples.
pub fn random_search(
    spec: &SpaceSpec,
    oracle: &Oracle,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    config.validate(spec)?;
    let mut run = Run::new(spec, oracle, config);
    for i in 0..config.sample_count {
        run.cycles = i as u64;
        let arch = run.spec.sample_uniform(&mut run.rng);
        let samples = run.fetch(&arch)?;
        run.record(arch, samples);
    }
    run.cycles = config.sample_count as u64;
    run.outcome()
}

/// Regularized evolution: tournament parent selection, one mutation per
/// cycle, oldest member removed.
pub fn rea_search(
    spec: &SpaceSpec,
    oracle: &Oracle,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    config.validate(spec)?;
    let mut run = Run::new(spec, oracle, config);
    let mut population = run.init_population()?;
    let mut birth = population.len() as u64;
    while run.history.len() < config.cycle_budget {
        run.cycles += 1;
        let (archs, sets) = run.tournament(&population)?;
        let parent = archs[run.select_best(&archs, &sets)?].clone();
        let child = run.spec.mutate(&parent, &mut run.rng)?;
        let samples = run.fetch(&child)?;
        run.record(child.clone(), samples);
        population.push_back(PopulationMember {
            arch: child,
            birth_cycle: birth,
        });
        birth += 1;
        population.pop_front();
    }
    run.outcome()
}

/// Greedy evolution: evaluate every Hamming-1 mutation of the tournament
/// parent, insert the best child, and push the whole neighborhood into the
/// history (each child consumes history budget).
pub fn greedy_evo_search(
    spec: &SpaceSpec,
    oracle: &Oracle,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    config.validate(spec)?;
    let mut run = Run::new(spec, oracle, config);
    let mut population = run.init_population()?;
    let mut birth = population.len() as u64;
    while run.history.len() < config.cycle_budget {
        run.cycles += 1;
        let (archs, sets) = run.tournament(&population)?;
        let parent = archs[run.select_best(&archs, &sets)?].clone();
        let children = run.spec.mutations_all(&parent)?;
        let mut child_sets = Vec::with_capacity(children.len());
        for child in &children {
            let samples = run.fetch(child)?;
            run.record(child.clone(), samples.clone());
            child_sets.push(samples);
        }
        let best = run.select_best(&children, &child_sets)?;
        population.push_back(PopulationMember {
            arch: children[best].clone(),
            birth_cycle: birth,
        });
        birth += 1;
        population.pop_front();
    }
    run.outcome()
}

/// FreeREA: the top two tournament members each produce a mutant, plus a
/// uniform-crossover child of both; all three join the population and the
/// three oldest members leave.
pub fn free_rea_search(
    spec: &SpaceSpec,
    oracle: &Oracle,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    config.validate(spec)?;
    let mut run = Run::new(spec, oracle, config);
    let mut population = run.init_population()?;
    let mut birth = population.len() as u64;
    while run.history.len() < config.cycle_budget {
        run.cycles += 1;
        let (archs, sets) = run.tournament(&population)?;
        let (first, second) = run.select_top2(&archs, &sets)?;
        let parent1 = archs[first].clone();
        let parent2 = archs[second].clone();
        let children = [
            run.spec.mutate(&parent1, &mut run.rng)?,
            run.spec.mutate(&parent2, &mut run.rng)?,
            run.spec.crossover(&parent1, &parent2, &mut run.rng)?,
        ];
        for child in children {
            let samples = run.fetch(&child)?;
            run.record(child.clone(), samples);
            population.push_back(PopulationMember {
                arch: child,
                birth_cycle: birth,
            });
            birth += 1;
        }
        for _ in 0..3 {
            population.pop_front();
        }
    }
    run.outcome()
}
