use std::sync::Arc;

use proptest::prelude::*;
use taskbot::catalog::{sample_catalog, CatalogIndex};
use taskbot::engine::Engine;
use taskbot::simulation::{
    replay, simulate, synthetic_rating_dataset, train_on_vectors, RatingFeatures, SimPolicy, FEATURE_NAMES,
};
use taskbot::DefaultEngine;

fn engine() -> DefaultEngine {
    Engine::new(Arc::new(CatalogIndex::build(sample_catalog()).unwrap()))
}

fn labels(rows: &[Vec<f64>], ratings: &[u8]) -> Vec<bool> {
    let model = train_on_vectors(rows, ratings).unwrap();
    rows.iter().map(|r| model.predict_vector(r).unwrap().label).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn scaling_a_feature_keeps_training_labels(
        seed in 0u64..1000,
        column in 0usize..FEATURE_NAMES.len(),
        factor in prop_oneof![0.001f64..0.1, 0.5f64..2.0, 10.0f64..1000.0],
    ) {
        let data = synthetic_rating_dataset(300, seed);
        let rows: Vec<Vec<f64>> = data.iter().map(|e| e.features.to_vector()).collect();
        let ratings: Vec<u8> = data.iter().map(|e| e.rating).collect();
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, v)| if j == column { v * factor } else { *v }).collect())
            .collect();
        prop_assert_eq!(labels(&rows, &ratings), labels(&scaled, &ratings));
    }

    #[test]
    fn replay_is_idempotent(seed in 0u64..10_000, max_turns in 1usize..40) {
        let e = engine();
        let t = simulate(&e, &SimPolicy::shipped(), e.catalog().embedder().as_ref(), seed, max_turns).unwrap();
        prop_assert!(t.turns.len() <= max_turns);
        let first = replay(&e, &t);
        let second = replay(&e, &t);
        prop_assert!(first.is_empty(), "{}", first.to_json().unwrap());
        prop_assert_eq!(first, second);
    }
}

#[test]
fn feature_vector_follows_names() {
    let f = RatingFeatures {
        turn_count: 12,
        fallback_count: 2,
        steps_read: 5,
        task_started: true,
        domain: taskbot::simulation::RatingDomain::Diy,
        taps_fraction: 0.25,
        sensitive_count: 1,
        search_count: 3,
    };
    let v: Vec<f64> = f.to_vector();
    assert_eq!(v.len(), FEATURE_NAMES.len());
    let at = |name: &str| v[FEATURE_NAMES.iter().position(|n| *n == name).unwrap()];
    assert_eq!(at("turn_count"), 12.0);
    assert_eq!(at("fallback_count"), 2.0);
    assert_eq!(at("steps_read"), 5.0);
    assert_eq!(at("task_started"), 1.0);
    assert_eq!((at("domain_recipe"), at("domain_diy")), (0.0, 1.0));
    assert_eq!(at("taps_fraction"), 0.25);
}
