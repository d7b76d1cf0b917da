//! Stochastic-ordering architecture search.
//!
//! Zero-shot architecture search scores candidates with fast but noisy proxy
//! ("ranking") functions. Instead of averaging repeated evaluations, this
//! crate treats them as observations of a random variable and compares
//! architectures by testing for stochastic dominance with the Mann-Whitney
//! U-test. On top of that comparison primitive it provides:
//!
//! * [`stats`] — the U-test (exact and normal-approximate), the Var/Mean
//!   coefficient of variation, Kendall tau-b, and MinMax normalization;
//! * [`space`] — fixed-topology cell encodings, genetic operators,
//!   enumeration, and tabular accuracy benchmarks;
//! * [`oracle`] — stochastic score sources: calibrated synthetic noise,
//!   file-backed replay of real proxy samples, and normalized ensembles;
//! * [`compare`] — statistical max/top-k selection, sample caching policies,
//!   and memoized pairwise outcomes;
//! * [`search`] — random search and the REA, greedy, and FreeREA
//!   evolutionary algorithms, parameterized by evaluator and cache policy;
//! * [`analysis`] — the variation metric, correlation studies, the
//!   CV-as-ranker baseline, repeated-run experiment grids, and the
//!   significance-threshold sweep.
//!
//! Every run is a pure function of its seeds: equal seeds and configuration
//! reproduce bit-identical outcomes.

pub mod analysis;
pub mod compare;
pub mod oracle;
pub mod search;
pub mod seeding;
pub mod space;
pub mod stats;
