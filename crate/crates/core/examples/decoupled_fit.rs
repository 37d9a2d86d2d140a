// Patterns drawn from synthetic labels, independent of the observed assignment.

use adaptive_interference::rng::StreamKey;
use adaptive_interference::simulation::{
    brute_force_fit_decoupled, simulate, DgpSpec, InterferenceSpec, NoiseSpec, PropensitySpec, StrataSpec,
    TauSpec,
};
use adaptive_interference::{fit_decoupled, GraphSpec, InterferenceConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DgpSpec {
        graph: GraphSpec::ErdosRenyi { n: 10, p: 0.3 },
        strata: StrataSpec::default(),
        propensity: PropensitySpec::Constant(0.4),
        interference: InterferenceSpec::LayeredLinear { coefficients: vec![1.0, 0.25], intercept: 0.0 },
        tau: TauSpec::Constant(2.0),
        noise: NoiseSpec::Gaussian { sd: 0.2 },
        seed: 3,
    };
    let data = simulate(&spec)?;
    let obs = data.observations();
    let synthetic: Vec<u8> = (0..data.n())
        .map(|i| u8::from(StreamKey::new(99, "synthetic", 0, i as u64).uniform() < 0.4))
        .collect();
    let config = InterferenceConfig { sigma_bar: 0.2, ..Default::default() };

    let fitted = fit_decoupled(&data.graph, &obs, &synthetic, &config)?;
    let reference = brute_force_fit_decoupled(&data.graph, &obs, &synthetic, &config)?;
    assert_eq!(fitted.m_hat(), reference.nodes.iter().map(|n| n.m_hat).collect::<Vec<_>>());
    println!("synthetic labels {synthetic:?}");
    println!("m-hat {:?}", fitted.m_hat());
    println!("keys without real controls: {}", fitted.diagnostics.dropped_keys.len());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
