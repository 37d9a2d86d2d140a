// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use adaptive_interference::estimators::Propensities;
use adaptive_interference::simulation::{
    brute_force_fit, brute_force_fit_decoupled, monte_carlo, simulate_on, DgpSpec, EstimatorConfig, FitMode,
    InterferenceSpec, McReport, NoiseSpec, PropensitySource, PropensitySpec, StrataSpec, TauSpec,
};
use adaptive_interference::{
    estimate_adte, estimate_dr, estimate_or, estimate_propensity, estimate_tau_of_x, fit, fit_decoupled,
    variance_conservative, variance_plugin, Graph, GraphSpec, InterferenceConfig, Observations, PropensityModel,
};
use common::{fixture, permutation, permute, reference_mismatches, structure_violations};

const SIGMA: f64 = 0.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn lattice(side: usize, seed: u64) -> DgpSpec {
    DgpSpec {
        graph: GraphSpec::Lattice { rows: side, cols: side, torus: true },
        strata: StrataSpec::default(),
        propensity: PropensitySpec::Constant(0.5),
        interference: InterferenceSpec::two_level(2, 4, 0.0, 2.0),
        tau: TauSpec::Constant(1.0),
        noise: NoiseSpec::Gaussian { sd: SIGMA },
        seed,
    }
}

fn interference() -> InterferenceConfig {
    InterferenceConfig { lambda: 2.0, delta: 0.05, sigma_bar: SIGMA, ..Default::default() }
}

fn estimator(mode: FitMode, n: usize) -> EstimatorConfig {
    EstimatorConfig {
        interference: interference(),
        mode,
        propensity: PropensitySource::Model(PropensityModel::supplied(vec![0.5; n])),
        level: 0.95,
    }
}

fn timed(limit: Duration, elapsed: Duration, pass: bool, detail: String) -> Outcome {
    let in_time = elapsed <= limit;
    Outcome {
        pass: pass && in_time,
        detail: format!("{detail}; {:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()),
    }
}

fn brute_force_equivalence() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut decoupled = 0;
    for seed in 0..100 {
        let fx = fixture(seed);
        let a = fit(&fx.graph, &fx.obs, &fx.config).unwrap();
        let b = brute_force_fit(&fx.graph, &fx.obs, &fx.config).unwrap();
        if !reference_mismatches(&a, &b).is_empty() {
            failures.push(seed);
        }
        match (
            fit_decoupled(&fx.graph, &fx.obs, &fx.synthetic, &fx.config),
            brute_force_fit_decoupled(&fx.graph, &fx.obs, &fx.synthetic, &fx.config),
        ) {
            (Ok(a), Ok(b)) => {
                decoupled += 1;
                if !reference_mismatches(&a, &b).is_empty() {
                    failures.push(seed);
                }
            }
            (Err(a), Err(b)) if a.to_string() == b.to_string() => {}
            _ => failures.push(seed),
        }
    }
    timed(
        Duration::from_secs(30),
        start.elapsed(),
        failures.is_empty(),
        format!("100 fixtures, {decoupled} decoupled fits, mismatched seeds {failures:?}"),
    )
}

fn bound_violation_frequency() -> (Outcome, McReport) {
    let start = Instant::now();
    let report = monte_carlo(&lattice(20, 2), 200, &estimator(FitMode::Observed, 400)).unwrap();
    let freq = report.summary.violation_frequency.unwrap();
    let outcome = timed(
        Duration::from_secs(300),
        start.elapsed(),
        freq <= 0.05 + 0.05,
        format!("violation frequency {freq:.3} <= 0.100 over 200 reps"),
    );
    (outcome, report)
}

fn rate_decay() -> (Outcome, Vec<McReport>) {
    let start = Instant::now();
    let reports: Vec<McReport> = [10, 20, 40]
        .iter()
        .map(|&side| monte_carlo(&lattice(side, 3), 100, &estimator(FitMode::Observed, side * side)).unwrap())
        .collect();
    let means: Vec<f64> = reports.iter().map(|r| r.summary.mean_max_abs_f_error).collect();
    let ratio = means[2] / means[0];
    let decreasing = means[0] > means[1] && means[1] > means[2];
    let outcome = timed(
        Duration::from_secs(300),
        start.elapsed(),
        decreasing && ratio <= 0.6,
        format!(
            "mean max error 10x10 {:.3}, 20x20 {:.3}, 40x40 {:.3}; ratio {ratio:.3} <= 0.6",
            means[0], means[1], means[2]
        ),
    );
    (outcome, reports)
}

fn dr_normality() -> (Outcome, McReport) {
    let start = Instant::now();
    let report = monte_carlo(&lattice(20, 4), 1000, &estimator(FitMode::Oracle, 400)).unwrap();
    let s = &report.summary;
    let se = s.dr.sd / 1000f64.sqrt();
    let unbiased = s.dr.bias.abs() <= 3.0 * se;
    let covered = (0.935..=0.965).contains(&s.coverage_oracle);
    let normal = s.ks_distance <= 0.05;
    let outcome = timed(
        Duration::from_secs(300),
        start.elapsed(),
        unbiased && covered && normal,
        format!(
            "bias {:+.4} (3 SE {:.4}), oracle coverage {:.3} in [0.935, 0.965], KS {:.4} <= 0.05",
            s.dr.bias,
            3.0 * se,
            s.coverage_oracle,
            s.ks_distance
        ),
    );
    (outcome, report)
}

fn conservative_variance() -> (Outcome, McReport) {
    let start = Instant::now();
    let report = monte_carlo(&lattice(40, 5), 1000, &estimator(FitMode::Decoupled, 1600)).unwrap();
    let s = &report.summary;
    let pass = s.coverage >= 0.93 && s.mean_var_conservative >= 0.95 * s.mean_var_oracle;
    let outcome = timed(
        Duration::from_secs(300),
        start.elapsed(),
        pass,
        format!(
            "coverage {:.3} >= 0.93, mean conservative variance {:.4} >= 0.95 x oracle {:.4}",
            s.coverage, s.mean_var_conservative, s.mean_var_oracle
        ),
    );
    (outcome, report)
}

fn algebraic_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let fx = fixture(seed);
        if fx.obs.n_treated() == 0 {
            continue;
        }
        let f_hat = fit(&fx.graph, &fx.obs, &fx.config).unwrap().f_hat();
        let zero = Propensities::constant(fx.obs.len(), 0.0);
        let or = estimate_or(&fx.obs, &f_hat).unwrap();
        let dr0 = estimate_dr(&fx.obs, &f_hat, &zero, 0.95).unwrap();
        worst = worst.max((or.tau_hat - dr0.tau_hat).abs());

        let half = Propensities::constant(fx.obs.len(), 0.5);
        let dr = estimate_dr(&fx.obs, &f_hat, &half, 0.95).unwrap();
        let conservative = variance_conservative(&fx.obs, &f_hat, &half, dr.tau_hat).unwrap();
        let plugin = variance_plugin(&fx.obs, &f_hat, &half, &vec![dr.tau_hat; fx.obs.len()]).unwrap();
        worst = worst.max((conservative - plugin).abs());
    }
    for side in [4usize, 6] {
        let n = side * side;
        let z: Vec<u8> = (0..n).map(|i| ((i + i / side) % 2) as u8).collect();
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.5 * f64::from(z[i]) + f[i]).collect();
        let obs = Observations::unstratified(z, y).unwrap();
        let e = estimate_propensity(&obs, &PropensityModel::stratified()).unwrap();
        let tau_of_x = estimate_tau_of_x(&obs, &f).unwrap();
        let adte = estimate_adte(&obs, &f, &e, &tau_of_x).unwrap();
        for est in [adte.or_a, adte.or_b, adte.dr] {
            worst = worst.max((est.tau_hat - 1.5).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("largest identity gap {worst:.2e} <= 1e-12"),
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

/// Invariant violations of one fit, `None` when the fit itself is refused.
fn fit_problems(
    label: &str,
    graph: &Graph,
    obs: &Observations,
    synthetic: Option<&[u8]>,
    config: &InterferenceConfig,
) -> Option<Vec<String>> {
    let run = |g: &Graph, o: &Observations, s: Option<&[u8]>| match s {
        Some(s) => fit_decoupled(g, o, s, config),
        None => fit(g, o, config),
    };
    let a = run(graph, obs, synthetic).ok()?;
    let mut problems: Vec<String> = structure_violations(&a).into_iter().map(|v| format!("{label}: {v}")).collect();
    let b = in_pool(1, || run(graph, obs, synthetic).unwrap());
    let c = in_pool(4, || run(graph, obs, synthetic).unwrap());
    if b.digest() != c.digest() || b.f_hat() != c.f_hat() || a.f_hat() != b.f_hat() {
        problems.push(format!("{label}: thread count changes the fit"));
    }
    let perm = permutation(graph.n(), 17);
    let labels = synthetic.map_or_else(|| obs.z().to_vec(), <[u8]>::to_vec);
    let (pg, po, pl) = permute(graph, obs, &labels, &perm);
    let p = run(&pg, &po, synthetic.map(|_| pl.as_slice())).unwrap();
    let equivariant = (0..graph.n()).all(|i| {
        let (x, y) = (&a.nodes[i], &p.nodes[perm[i]]);
        x.m_hat == y.m_hat && x.key == y.key && (x.f_hat - y.f_hat).abs() <= 1e-12
    });
    if !equivariant {
        problems.push(format!("{label}: relabelling is not equivariant"));
    }
    Some(problems)
}

fn structural_invariants(reports: &[&McReport]) -> Outcome {
    let start = Instant::now();
    let mut problems: Vec<String> = Vec::new();
    let mut checked = 0;
    let mut rerun_problems: Vec<String> = Vec::new();
    let mut check = |label: String, graph: &Graph, obs: &Observations, synthetic: Option<&[u8]>, config: &InterferenceConfig| {
        if let Some(found) = fit_problems(&label, graph, obs, synthetic, config) {
            checked += 1;
            problems.extend(found);
        }
    };

    for seed in 0..100 {
        let fx = fixture(seed);
        check(format!("fixture {seed}"), &fx.graph, &fx.obs, None, &fx.config);
        check(format!("fixture {seed} decoupled"), &fx.graph, &fx.obs, Some(&fx.synthetic), &fx.config);
    }
    for report in reports {
        let spec = &report.spec;
        let graph = spec.build_graph().unwrap();
        for rep in 0..3 {
            let data = simulate_on(spec, &graph, rep).unwrap();
            let obs = data.observations();
            let synthetic: Vec<u8> = (0..data.n())
                .map(|i| u8::from(adaptive_interference::rng::StreamKey::new(spec.seed, "synthetic", rep, i as u64).uniform() < 0.5))
                .collect();
            let label = format!("{}-node lattice rep {rep}", data.n());
            check(label.clone(), &graph, &obs, None, &report.estimator.interference);
            check(format!("{label} decoupled"), &graph, &obs, Some(&synthetic), &report.estimator.interference);
        }
        let reps = 20;
        let one = in_pool(1, || monte_carlo(spec, reps, &report.estimator).unwrap());
        let many = in_pool(4, || monte_carlo(spec, reps, &report.estimator).unwrap());
        let (a, b) = (serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
        let prefix_matches = one.rows[..] == report.rows[..reps];
        if a != b || !prefix_matches {
            rerun_problems.push(format!("{}-node Monte Carlo rerun differs", graph.n()));
        }
    }
    problems.extend(rerun_problems);
    problems.truncate(5);
    timed(
        Duration::from_secs(300),
        start.elapsed(),
        problems.is_empty(),
        format!("{checked} fits checked, problems {problems:?}"),
    )
}

fn main() {
    let mut lines = Vec::new();
    lines.push(("1 brute-force equivalence", brute_force_equivalence()));
    let (c2, r2) = bound_violation_frequency();
    lines.push(("2 oracle-inequality event frequency", c2));
    let (c3, r3) = rate_decay();
    lines.push(("3 rate decay across lattice sizes", c3));
    let (c4, r4) = dr_normality();
    lines.push(("4 DR unbiasedness and normality", c4));
    let (c5, r5) = conservative_variance();
    lines.push(("5 conservative variance coverage", c5));
    lines.push(("6 algebraic identities", algebraic_identities()));
    let mut reports = vec![&r2, &r4, &r5];
    reports.extend(r3.iter());
    lines.push(("7 structural invariants", structural_invariants(&reports)));

    let mut all = true;
    for (name, outcome) in &lines {
        all &= outcome.pass;
        println!("criterion {name}: {} ({})", if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    if !all {
        std::process::exit(1);
    }
}
