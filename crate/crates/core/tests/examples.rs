macro_rules! example_test {
    ($module:ident, $test:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(graph_layers, graph_layers_runs, "graph_layers.rs");
example_test!(pattern_tree, pattern_tree_runs, "pattern_tree.rs");
example_test!(fit_interference, fit_interference_runs, "fit_interference.rs");
example_test!(decoupled_fit, decoupled_fit_runs, "decoupled_fit.rs");
example_test!(effect_estimates, effect_estimates_runs, "effect_estimates.rs");
example_test!(adte, adte_runs, "adte.rs");
example_test!(simulate_lattice, simulate_lattice_runs, "simulate_lattice.rs");
example_test!(monte_carlo, monte_carlo_runs, "monte_carlo.rs");
