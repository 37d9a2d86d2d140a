// A short Monte-Carlo study of the doubly robust estimator.

use adaptive_interference::simulation::{
    monte_carlo, DgpSpec, EstimatorConfig, FitMode, InterferenceSpec, NoiseSpec, PropensitySource,
    PropensitySpec, StrataSpec, TauSpec,
};
use adaptive_interference::{GraphSpec, InterferenceConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DgpSpec {
        graph: GraphSpec::Lattice { rows: 12, cols: 12, torus: true },
        strata: StrataSpec::default(),
        propensity: PropensitySpec::Constant(0.5),
        interference: InterferenceSpec::two_level(2, 4, 0.0, 2.0),
        tau: TauSpec::Constant(1.0),
        noise: NoiseSpec::Gaussian { sd: 0.5 },
        seed: 42,
    };
    for mode in [FitMode::Oracle, FitMode::Observed, FitMode::Decoupled] {
        let est = EstimatorConfig {
            interference: InterferenceConfig { sigma_bar: 0.5, ..Default::default() },
            mode,
            propensity: PropensitySource::Truth,
            level: 0.95,
        };
        let s = monte_carlo(&spec, 50, &est)?.summary;
        println!(
            "{mode:?}: DR bias {:+.4} sd {:.4}, coverage {:.2}, mean max|f-hat - f| {:.3}",
            s.dr.bias, s.dr.sd, s.coverage, s.mean_max_abs_f_error
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
