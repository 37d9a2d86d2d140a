// Fits the interference term on a simulated torus and compares it with the truth.

use adaptive_interference::simulation::{
    simulate, DgpSpec, InterferenceSpec, NoiseSpec, PropensitySpec, StrataSpec, TauSpec,
};
use adaptive_interference::{fit, GraphSpec, InterferenceConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DgpSpec {
        graph: GraphSpec::Lattice { rows: 20, cols: 20, torus: true },
        strata: StrataSpec::default(),
        propensity: PropensitySpec::Constant(0.5),
        interference: InterferenceSpec::two_level(2, 4, 0.0, 2.0),
        tau: TauSpec::Constant(1.0),
        noise: NoiseSpec::Gaussian { sd: 0.5 },
        seed: 11,
    };
    let data = simulate(&spec)?;
    let config = InterferenceConfig { sigma_bar: 0.5, ..Default::default() };
    let fitted = fit(&data.graph, &data.observations(), &config)?;

    for key in fitted.kept_keys() {
        println!("kept {}: |V| = {}, f-hat = {:.3}", key.counts, key.n_controls, key.f_hat);
    }
    let max_err = fitted
        .f_hat()
        .iter()
        .zip(&data.f)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("D_n = {}, max |f-hat - f| = {max_err:.3}", fitted.diagnostics.d_n);
    println!("digest {}", fitted.digest());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
