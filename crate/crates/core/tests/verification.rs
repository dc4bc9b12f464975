use siegel_core::complex::build_complex;
use siegel_core::config::Configuration;
use siegel_core::corpus;
use siegel_core::error::Error;
use siegel_core::suite::{run_suite, SUITES};
use siegel_core::verify::{
    jacobian_rank, rigidity_check, sample_cube_face, sample_orthant, Stratum, DEFAULT_FD_STEP,
};

#[test]
fn rigidity_under_random_relabelings() {
    let mut rng = corpus::rng(31);
    for _ in 0..5 {
        let a = corpus::random_admissible_centered(&mut rng, 3, 7);
        let perm = corpus::random_permutation(&mut rng, a.m());
        let b = a.permute(&perm).unwrap();
        let r = rigidity_check(&a, &b, &perm, 3, &mut rng, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn rigidity_between_different_configurations() {
    // same complex (the 4-cycle), different geometry
    let a = corpus::example();
    let b: Configuration =
        serde_json::from_str(r#"{"d":2,"m":5,"A":[["0","0","1","2","-3"],["2","1","0","0","-3"]]}"#).unwrap();
    assert_eq!(build_complex(&a).unwrap(), build_complex(&b).unwrap());
    let id: Vec<usize> = (0..5).collect();
    let r = rigidity_check(&a, &b, &id, 5, &mut corpus::rng(0), 1e-8).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn rigidity_rejects_mismatched_sizes() {
    let err = rigidity_check(&corpus::example(), &corpus::segment(), &[0, 1], 1, &mut corpus::rng(0), 1e-8);
    assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn jacobian_rank_on_corpus_strata() {
    let mut rng = corpus::rng(32);
    for _ in 0..10 {
        let a = corpus::random_admissible_centered(&mut rng, 3, 7);
        let expected = a.m() - a.d() - 1;
        let k = build_complex(&a).unwrap();
        for sigma in k.maximal_index_sets().into_iter().take(3) {
            let x = sample_cube_face(&mut rng, a.m(), &sigma);
            let c = jacobian_rank(&a, &Stratum::CubeFace(sigma), &x, DEFAULT_FD_STEP).unwrap();
            assert_eq!(c.expected_rank, expected);
            assert!(c.full_rank(1e-4), "{c:?}");
        }
        let x = sample_orthant(&mut rng, &a).unwrap();
        let c = jacobian_rank(&a, &Stratum::Orthant, &x, DEFAULT_FD_STEP).unwrap();
        assert_eq!(c.expected_rank, expected);
        assert!(c.full_rank(1e-4), "{c:?}");
        assert!(c.rank <= a.m().min(c.expected_rank));
    }
}

#[test]
fn jacobian_needs_a_centered_configuration() {
    let a = corpus::uncentered();
    let err = jacobian_rank(&a, &Stratum::Orthant, &[0.25; 4], DEFAULT_FD_STEP);
    assert_eq!(err.unwrap_err(), Error::NotCentered);
}

#[test]
fn every_suite_passes_and_is_deterministic() {
    for name in SUITES {
        let r = run_suite(name, 0).unwrap();
        assert!(r.passed, "{}", serde_json::to_string_pretty(&r).unwrap());
        let again = run_suite(name, 0).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    }
}
