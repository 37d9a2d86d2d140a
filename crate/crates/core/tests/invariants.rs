mod common;

use adaptive_interference::simulation::{
    simulate, DgpSpec, InterferenceSpec, NoiseSpec, PropensitySpec, StrataSpec, TauSpec,
};
use adaptive_interference::{fit, fit_decoupled, GraphSpec, InterferenceConfig, InterferenceFit};
use common::{fixture, permutation, permute, structure_violations};
use proptest::prelude::*;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn lattice_spec(seed: u64) -> DgpSpec {
    DgpSpec {
        graph: GraphSpec::Lattice { rows: 12, cols: 12, torus: true },
        strata: StrataSpec::default(),
        propensity: PropensitySpec::Constant(0.5),
        interference: InterferenceSpec::two_level(2, 4, 0.0, 2.0),
        tau: TauSpec::Constant(1.0),
        noise: NoiseSpec::Gaussian { sd: 0.5 },
        seed,
    }
}

fn same_fit(a: &InterferenceFit, b: &InterferenceFit) -> bool {
    a.digest() == b.digest()
        && a.m_hat() == b.m_hat()
        && a.f_hat().iter().zip(b.f_hat()).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fits_are_structurally_sound(seed in 0u64..10_000) {
        let fx = fixture(seed);
        let fitted = fit(&fx.graph, &fx.obs, &fx.config).unwrap();
        let bad = structure_violations(&fitted);
        prop_assert!(bad.is_empty(), "{:#?}", bad);
        if let Ok(decoupled) = fit_decoupled(&fx.graph, &fx.obs, &fx.synthetic, &fx.config) {
            let bad = structure_violations(&decoupled);
            prop_assert!(bad.is_empty(), "{:#?}", bad);
        }
    }

    #[test]
    fn relabelling_nodes_permutes_the_fit(seed in 0u64..10_000) {
        let fx = fixture(seed);
        let perm = permutation(fx.graph.n(), seed);
        let (graph, obs, synthetic) = permute(&fx.graph, &fx.obs, &fx.synthetic, &perm);
        let a = fit(&fx.graph, &fx.obs, &fx.config).unwrap();
        let b = fit(&graph, &obs, &fx.config).unwrap();
        prop_assert_eq!(&a.kept_keys().iter().map(|k| k.counts.clone()).collect::<Vec<_>>(),
                        &b.kept_keys().iter().map(|k| k.counts.clone()).collect::<Vec<_>>());
        for i in 0..fx.graph.n() {
            prop_assert_eq!(a.nodes[i].m_hat, b.nodes[perm[i]].m_hat);
            prop_assert_eq!(&a.nodes[i].key, &b.nodes[perm[i]].key);
            prop_assert!((a.nodes[i].f_hat - b.nodes[perm[i]].f_hat).abs() < 1e-12);
        }
        if let (Ok(a), Ok(b)) = (
            fit_decoupled(&fx.graph, &fx.obs, &fx.synthetic, &fx.config),
            fit_decoupled(&graph, &obs, &synthetic, &fx.config),
        ) {
            for i in 0..fx.graph.n() {
                prop_assert_eq!(a.nodes[i].m_hat, b.nodes[perm[i]].m_hat);
            }
        }
    }

    #[test]
    fn treated_outcomes_do_not_move_f_hat(seed in 0u64..10_000, shift in -50.0f64..50.0) {
        let fx = fixture(seed);
        let y: Vec<f64> = (0..fx.obs.len())
            .map(|i| if fx.obs.is_treated(i) { fx.obs.y()[i] + shift } else { fx.obs.y()[i] })
            .collect();
        let moved = fx.obs.with_outcomes(y).unwrap();
        let a = fit(&fx.graph, &fx.obs, &fx.config).unwrap();
        let b = fit(&fx.graph, &moved, &fx.config).unwrap();
        prop_assert!(same_fit(&a, &b));
    }

    #[test]
    fn decoupled_keys_ignore_outcomes(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let fx = fixture(seed);
        let y: Vec<f64> = fx.obs.y().iter().map(|v| v * scale + 1.0).collect();
        let moved = fx.obs.with_outcomes(y).unwrap();
        if let (Ok(a), Ok(b)) = (
            fit_decoupled(&fx.graph, &fx.obs, &fx.synthetic, &fx.config),
            fit_decoupled(&fx.graph, &moved, &fx.synthetic, &fx.config),
        ) {
            prop_assert_eq!(a.index.keys().cloned().collect::<Vec<_>>(), b.index.keys().cloned().collect::<Vec<_>>());
            prop_assert_eq!(a.index.dropped(), b.index.dropped());
        }
    }
}

#[test]
fn thread_count_does_not_change_lattice_fits() {
    for seed in 0..4 {
        let spec = lattice_spec(seed);
        let data = simulate(&spec).unwrap();
        let obs = data.observations();
        let config = InterferenceConfig { sigma_bar: 0.1, ..Default::default() };
        let one = in_pool(1, || fit(&data.graph, &obs, &config).unwrap());
        let many = in_pool(4, || fit(&data.graph, &obs, &config).unwrap());
        assert!(same_fit(&one, &many));
        assert!(structure_violations(&one).is_empty());

        let again = in_pool(3, || simulate(&spec).unwrap());
        assert_eq!(serde_json::to_string(&data).unwrap(), serde_json::to_string(&again).unwrap());
    }
}
