// Outcome-regression and doubly robust estimates with a conservative interval.

use adaptive_interference::simulation::{
    simulate, DgpSpec, InterferenceSpec, NoiseSpec, PropensitySpec, StrataSpec, TauSpec,
};
use adaptive_interference::{
    estimate_dr, estimate_or, estimate_propensity, fit, GraphSpec, InterferenceConfig, PropensityModel,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DgpSpec {
        graph: GraphSpec::Lattice { rows: 30, cols: 30, torus: true },
        strata: StrataSpec::default(),
        propensity: PropensitySpec::Constant(0.5),
        interference: InterferenceSpec::two_level(2, 4, 0.0, 2.0),
        tau: TauSpec::Constant(1.0),
        noise: NoiseSpec::Gaussian { sd: 0.5 },
        seed: 2024,
    };
    let data = simulate(&spec)?;
    let obs = data.observations();
    let fitted = fit(&data.graph, &obs, &InterferenceConfig { sigma_bar: 0.5, ..Default::default() })?;
    let f_hat = fitted.f_hat();

    let e_hat = estimate_propensity(&obs, &PropensityModel::stratified())?;
    let or = estimate_or(&obs, &f_hat)?;
    let dr = estimate_dr(&obs, &f_hat, &e_hat, 0.95)?;
    println!("true ADTT {:.4}", data.true_adtt.unwrap_or(f64::NAN));
    println!("OR {:.4}", or.tau_hat);
    let (lo, hi) = dr.ci.expect("DR reports an interval");
    println!("DR {:.4}  95% CI [{lo:.4}, {hi:.4}]", dr.tau_hat);

    let zero = estimate_propensity(&obs, &PropensityModel::constant(0.0))?;
    assert!((estimate_dr(&obs, &f_hat, &zero, 0.95)?.tau_hat - or.tau_hat).abs() < 1e-12);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
