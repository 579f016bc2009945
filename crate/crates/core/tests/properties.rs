mod common;

#[test]
fn generated_graphs_are_simple_and_symmetric() {
    common::simplicity(common::CASES).unwrap();
}

#[test]
fn corner_identity_holds() {
    common::corner_identity(common::CASES).unwrap();
}

#[test]
fn identification_is_monotone() {
    common::identification_monotonicity(common::CASES).unwrap();
}

#[test]
fn files_round_trip() {
    common::save_load_round_trip(common::CASES).unwrap();
}

#[test]
fn results_do_not_depend_on_thread_count() {
    common::thread_determinism(common::CASES).unwrap();
}

#[test]
fn fast_paths_match_naive_oracles() {
    common::enumeration_vs_naive(common::CASES).unwrap();
}

#[test]
fn estimator_and_detection_are_monotone() {
    common::estimator_and_detection_monotonicity(common::CASES).unwrap();
}
