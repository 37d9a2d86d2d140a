mod common;

use adaptive_interference::simulation::{brute_force_fit, brute_force_fit_decoupled};
use adaptive_interference::{fit, fit_decoupled, Error, Graph, InterferenceConfig, Observations};
use common::{fixture, reference_mismatches};

#[test]
fn observed_fit_matches_reference_on_random_fixtures() {
    let mut pruned_somewhere = false;
    for seed in 0..300 {
        let fx = fixture(seed);
        let fitted = fit(&fx.graph, &fx.obs, &fx.config).unwrap();
        let reference = brute_force_fit(&fx.graph, &fx.obs, &fx.config).unwrap();
        let diff = reference_mismatches(&fitted, &reference);
        assert!(diff.is_empty(), "seed {seed}: {diff:#?}");
        pruned_somewhere |= fitted.tree.kept_count() > 1;
    }
    assert!(pruned_somewhere, "fixtures never keep more than the root");
}

#[test]
fn decoupled_fit_matches_reference_on_random_fixtures() {
    let mut fitted_count = 0;
    for seed in 0..300 {
        let fx = fixture(seed);
        let fitted = fit_decoupled(&fx.graph, &fx.obs, &fx.synthetic, &fx.config);
        let reference = brute_force_fit_decoupled(&fx.graph, &fx.obs, &fx.synthetic, &fx.config);
        match (fitted, reference) {
            (Ok(a), Ok(b)) => {
                let diff = reference_mismatches(&a, &b);
                assert!(diff.is_empty(), "seed {seed}: {diff:#?}");
                fitted_count += 1;
            }
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            (a, b) => panic!("seed {seed}: {:?} vs {:?}", a.err(), b.err()),
        }
    }
    assert!(fitted_count > 250, "only {fitted_count} decoupled fits succeeded");
}

#[test]
fn all_controls_fixture_agrees_with_reference() {
    let graph = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
    let obs = Observations::unstratified(vec![0; 6], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let config = InterferenceConfig { lambda: 1.01, sigma_bar: 1e-3, ..Default::default() };
    let fitted = fit(&graph, &obs, &config).unwrap();
    let reference = brute_force_fit(&graph, &obs, &config).unwrap();
    assert!(reference_mismatches(&fitted, &reference).is_empty());
    assert_eq!(fitted.tree.kept_count(), 1);
    assert!(fitted.f_hat().iter().all(|&f| f == 3.5));
}

#[test]
fn reference_refuses_large_graphs() {
    let graph = Graph::lattice(4, 4, false).unwrap();
    let obs = Observations::unstratified(vec![0; 16], vec![0.0; 16]).unwrap();
    let err = brute_force_fit(&graph, &obs, &InterferenceConfig::default()).unwrap_err();
    assert!(matches!(err, Error::TooLarge(16)));
}
