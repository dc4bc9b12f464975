use std::f64::consts::E;

use num::complex::Complex64;
use proptest::prelude::*;
use siegel_core::complex::build_complex;
use siegel_core::config::{AmbientPoint, Configuration};
use siegel_core::corpus;
use siegel_core::error::Error;
use siegel_core::leaf::SolverSettings;
use siegel_core::mac::{
    default_schedule, escape_check, mac_contains, project_combinatorial, project_plimit, sweep,
    CombinatorialProjector,
};

#[test]
fn uniqueness_under_reordered_scans() {
    let mut rng = corpus::rng(21);
    for _ in 0..10 {
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let z = if rand::Rng::random_bool(&mut rng, 0.5) {
            corpus::random_point(&mut rng, a.m())
        } else {
            corpus::random_stratum_point(&mut rng, &a).unwrap_or_else(|| corpus::random_point(&mut rng, a.m()))
        };
        let base = project_combinatorial(&a, &z).unwrap();
        let mut proj = CombinatorialProjector::new(&a).unwrap();
        for k in 0..10 {
            let order = corpus::random_permutation(&mut rng, proj.facet_count());
            proj.reorder(&order, k);
            let again = proj.project(&z).unwrap();
            assert!(again.y.max_abs_diff(&base.y) < 1e-9);
            assert!((again.r - base.r).abs() < 1e-9);
            for (s, t) in again.t_inf.iter().zip(&base.t_inf) {
                assert!((s - t).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn points_of_the_complex_are_fixed() {
    let mut rng = corpus::rng(22);
    for _ in 0..20 {
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let z = corpus::random_point(&mut rng, a.m());
        let y = project_combinatorial(&a, &z).unwrap().y;
        let again = project_combinatorial(&a, &y).unwrap();
        assert!(again.y.max_abs_diff(&y) < 1e-12);
        assert!(again.t_inf.iter().all(|t| t.abs() < 1e-12));
        assert!((again.r - 1.0).abs() < 1e-12);
    }
}

#[test]
fn stratum_points_keep_their_zeros() {
    let mut rng = corpus::rng(23);
    let mut seen = 0;
    while seen < 20 {
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let Some(z) = corpus::random_stratum_point(&mut rng, &a) else { continue };
        seen += 1;
        let p = project_combinatorial(&a, &z).unwrap();
        assert_eq!(p.y.zero_set(), z.zero_set());
        let k = build_complex(&a).unwrap();
        let membership = mac_contains(&k, &p.y, 1e-8).unwrap();
        assert!(membership.inside);
        assert!(z.zero_set().iter().all(|i| membership.strict_set.contains(&(i + 1))));
        assert!(p.reconstruction_error(&a, &z).unwrap() < 1e-9);
    }
}

#[test]
fn both_projectors_agree() {
    let mut rng = corpus::rng(24);
    let settings = SolverSettings::default();
    for _ in 0..15 {
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let z = corpus::random_point(&mut rng, a.m());
        let c = project_combinatorial(&a, &z).unwrap();
        let p = project_plimit(&a, &z, &default_schedule(), &settings).unwrap();
        let dt = c.t_inf.iter().zip(&p.result.t_inf).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dt < 1e-6, "{dt}");
        assert!(c.y.max_abs_diff(&p.result.y) < 1e-4);
        // the raw continuation is already close
        let raw = p.t_last.iter().zip(&c.t_inf).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(raw < 1e-2, "{raw}");
    }
}

#[test]
fn sweep_is_bracketed_and_cauchy() {
    let mut rng = corpus::rng(25);
    for _ in 0..10 {
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let z = corpus::random_point(&mut rng, a.m());
        let steps = sweep(&a, &z, &default_schedule(), &SolverSettings::default()).unwrap();
        let m = a.m() as f64;
        for s in &steps {
            assert!(s.x_inf >= m.powf(-1.0 / s.p) * (1.0 - 1e-12) && s.x_inf <= 1.0 + 1e-12);
        }
        assert!(steps[0].increment.is_none());
        let last = steps.last().unwrap().increment.unwrap();
        assert!(last < 1e-2, "{last}");
    }
}

#[test]
fn escape_from_off_complex_targets() {
    let mut rng = corpus::rng(26);
    let settings = SolverSettings::default();
    let a = corpus::example();
    let z = corpus::random_point(&mut rng, 5);
    for _ in 0..5 {
        let target = corpus::random_off_complex_target(&mut rng, &a).unwrap();
        let r = escape_check(&a, &z, &target, &default_schedule(), &settings).unwrap();
        assert!(r.escaped);
    }
}

#[test]
fn escape_preconditions() {
    let a = corpus::example();
    let z = AmbientPoint::real(&[1.0; 5]);
    let inside = AmbientPoint::real(&[0.5, 1.0, 0.5, 1.0, 1.0]);
    assert!(matches!(
        escape_check(&a, &z, &inside, &default_schedule(), &SolverSettings::default()),
        Err(Error::Precondition(_))
    ));
    assert_eq!(corpus::random_off_complex_target(&mut corpus::rng(0), &Configuration::zero_dimensional(4).unwrap()), None);
}

#[test]
fn segment_plimit_reconstructs() {
    let a = corpus::segment();
    let z = AmbientPoint::real(&[1.0, E * E]);
    let r = project_plimit(&a, &z, &default_schedule(), &SolverSettings::default()).unwrap();
    assert!(r.result.reconstruction_error(&a, &z).unwrap() < 1e-12);
    assert!((r.result.r - (-1.0f64).exp()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn torus_equivariance(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let mut rng = corpus::rng(seed);
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let z = corpus::random_point(&mut rng, a.m());
        let rot = vec![Complex64::from_polar(1.0, theta); a.m()];
        let base = project_combinatorial(&a, &z).unwrap();
        let turned = project_combinatorial(&a, &z.rotate(&rot)).unwrap();
        prop_assert!(turned.y.max_abs_diff(&base.y.rotate(&rot)) < 1e-12);
        for (s, t) in turned.t_inf.iter().zip(&base.t_inf) {
            prop_assert!((s - t).abs() < 1e-12);
        }
        prop_assert!((turned.r - base.r).abs() < 1e-12);
    }

    #[test]
    fn projections_land_in_the_complex(seed in any::<u64>()) {
        let mut rng = corpus::rng(seed);
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let z = corpus::random_point(&mut rng, a.m());
        let proj = CombinatorialProjector::new(&a).unwrap();
        let p = proj.project(&z).unwrap();
        let m = mac_contains(proj.complex(), &p.y, 1e-8).unwrap();
        prop_assert!(m.inside);
        let sigma: Vec<usize> = m.carrier.unwrap();
        prop_assert_eq!(sigma, p.sigma.clone());
        prop_assert!(p.reconstruction_error(&a, &z).unwrap() < 1e-9);
    }

    #[test]
    fn projection_is_constant_on_leaves(seed in any::<u64>()) {
        let mut rng = corpus::rng(seed);
        let a = corpus::random_admissible_centered(&mut rng, 3, 8);
        let z = corpus::random_point(&mut rng, a.m());
        let t0: Vec<f64> = (0..a.d()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let r0 = rand::Rng::random_range(&mut rng, 0.5..2.0);
        let moved = siegel_core::leaf::flow(&a, &z, &t0).unwrap().scale(r0);
        let base = project_combinatorial(&a, &z).unwrap();
        let other = project_combinatorial(&a, &moved).unwrap();
        prop_assert!(other.y.max_abs_diff(&base.y) < 1e-9);
    }
}
