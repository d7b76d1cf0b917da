//! Monte-Carlo sanity check: an ensemble of a near-perfect member and a
//! near-uninformative member selects architectures between the two members'
//! solo results.

use std::sync::Arc;

use snas_core::oracle::{ensemble_oracle, synthetic_oracle, NoiseProfile, Oracle};
use snas_core::search::{run_search, Algorithm, SearchConfig};
use snas_core::seeding::{derive_seed, mix};
use snas_core::space::{synthesize_benchmark, AccuracyModel, SpaceSpec, TabularBenchmark};

fn mean_selected_accuracy(
    spec: &SpaceSpec,
    bench: &TabularBenchmark,
    oracle: &Oracle,
    seeds: u64,
) -> f64 {
    let mut total = 0.0;
    for run in 0..seeds {
        let seed = mix(&[99, run]);
        let config = SearchConfig {
            algorithm: Algorithm::Random,
            sample_count: 20,
            seed: derive_seed(seed, "search"),
            ..SearchConfig::default()
        };
        let seeded = oracle.with_seed(derive_seed(seed, "oracle"));
        let outcome = run_search(spec, &seeded, &config).unwrap();
        total += bench.accuracy(&outcome.selected).unwrap();
    }
    total / seeds as f64
}

#[test]
fn ensemble_quality_sits_between_its_members() {
    let spec = SpaceSpec::new(
        3,
        vec!["zeroize".into(), "skip_connect".into(), "conv_3x3".into()],
    )
    .unwrap();
    let bench =
        Arc::new(synthesize_benchmark(&spec, &AccuracyModel::default_additive(), 31).unwrap());

    // Near-perfect member: noiseless scores, strictly monotone in accuracy.
    let perfect = synthetic_oracle(Arc::clone(&bench), NoiseProfile::noiseless(), 0).unwrap();
    // Near-uninformative member: the per-architecture bias swamps the signal.
    let noise_profile = NoiseProfile::new(0.2, 0.2, 1.0, 40.0, 64).unwrap();
    let noise = synthetic_oracle(Arc::clone(&bench), noise_profile, 0).unwrap();
    let ensemble = ensemble_oracle(vec![perfect.clone(), noise.clone()]).unwrap();

    let seeds = 60;
    let solo_perfect = mean_selected_accuracy(&spec, &bench, &perfect, seeds);
    let solo_noise = mean_selected_accuracy(&spec, &bench, &noise, seeds);
    let combined = mean_selected_accuracy(&spec, &bench, &ensemble, seeds);

    assert!(
        solo_perfect > solo_noise + 5.0,
        "fixture must separate the members: perfect {solo_perfect:.2} vs noise {solo_noise:.2}"
    );
    assert!(
        combined <= solo_perfect && combined >= solo_noise,
        "ensemble {combined:.2} outside [{solo_noise:.2}, {solo_perfect:.2}]"
    );
}
