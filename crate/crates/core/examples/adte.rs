// Average direct effect over all units with a stratified effect regression.

use adaptive_interference::simulation::{
    simulate, DgpSpec, InterferenceSpec, NoiseSpec, PropensitySpec, StrataSpec, StratumAssignment, TauSpec,
};
use adaptive_interference::{
    estimate_adte, estimate_propensity, estimate_tau_of_x, fit, GraphSpec, InterferenceConfig,
    PropensityModel,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DgpSpec {
        graph: GraphSpec::Lattice { rows: 30, cols: 30, torus: true },
        strata: StrataSpec { count: 2, assignment: StratumAssignment::Modulo },
        propensity: PropensitySpec::PerStratum(vec![0.3, 0.6]),
        interference: InterferenceSpec::two_level(2, 4, 0.0, 1.0),
        tau: TauSpec::PerStratum(vec![0.5, 1.5]),
        noise: NoiseSpec::Gaussian { sd: 0.3 },
        seed: 8,
    };
    let data = simulate(&spec)?;
    let obs = data.observations();
    let fitted = fit(&data.graph, &obs, &InterferenceConfig { sigma_bar: 0.3, ..Default::default() })?;
    let f_hat = fitted.f_hat();

    let tau_of_x = estimate_tau_of_x(&obs, &f_hat)?;
    let e_hat = estimate_propensity(&obs, &PropensityModel::stratified())?;
    let adte = estimate_adte(&obs, &f_hat, &e_hat, &tau_of_x)?;
    println!("tau(x) = {tau_of_x:?}");
    println!("true ADTE {:.4}", data.true_adte);
    println!("OR-a {:.4}  OR-b {:.4}  DR {:.4}", adte.or_a.tau_hat, adte.or_b.tau_hat, adte.dr.tau_hat);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
