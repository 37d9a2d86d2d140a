//! Monte-Carlo harness. Replications are independent, run in parallel and
//! are reproducible from `(spec.seed, rep)` alone.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_dr, estimate_or, estimate_propensity, normal_quantile, PropensityModel, Propensities,
};
use crate::interference::{fit, fit_decoupled, InterferenceConfig, SigmaMode};
use crate::rng::StreamKey;

use super::{oracle_variance, simulate_on, oracle_inequality_bounds, DgpSpec, SimulatedData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Pattern tree from the observed labels.
    #[default]
    Observed,
    /// Pattern tree from fresh synthetic labels drawn per replication.
    Decoupled,
    /// True interference values, no fitting.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PropensitySource {
    /// True propensities of the design, passed through as supplied values.
    #[default]
    Truth,
    Model(PropensityModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub interference: InterferenceConfig,
    pub mode: FitMode,
    pub propensity: PropensitySource,
    pub level: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            interference: InterferenceConfig::default(),
            mode: FitMode::Observed,
            propensity: PropensitySource::Truth,
            level: 0.95,
        }
    }
}

/// One replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub rep: u64,
    pub n_treated: usize,
    pub tau_true: f64,
    pub tau_or: f64,
    pub tau_dr: f64,
    pub var_conservative: f64,
    pub var_oracle: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
    pub covered_oracle: bool,
    /// `sqrt(N_1) (τ̂^DR - τ) / sqrt(Σ_n)` with the oracle variance.
    pub standardized: f64,
    pub max_abs_f_error: f64,
    /// Whether some node exceeded its oracle-inequality bound (observed fits only).
    pub bound_violated: Option<bool>,
    pub mean_m_hat: f64,
    pub d_n: usize,
    pub n_kept: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
}

impl Stats {
    fn of_errors(errors: &[f64]) -> Self {
        let k = errors.len() as f64;
        let bias = errors.iter().sum::<f64>() / k;
        let var = if errors.len() > 1 {
            errors.iter().map(|e| (e - bias).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / k).sqrt();
        Self {
            bias,
            sd: var.sqrt(),
            rmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub reps: usize,
    pub or: Stats,
    pub dr: Stats,
    pub coverage: f64,
    pub coverage_oracle: f64,
    pub mean_var_conservative: f64,
    pub mean_var_oracle: f64,
    pub mean_max_abs_f_error: f64,
    pub median_max_abs_f_error: f64,
    pub violation_frequency: Option<f64>,
    pub ks_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub schema_version: u32,
    pub spec: DgpSpec,
    pub estimator: EstimatorConfig,
    pub summary: McSummary,
    pub rows: Vec<McRow>,
}

impl McReport {
    /// One CSV row per replication.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Input(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Kolmogorov-Smirnov distance between a sample and the standard normal.
pub fn ks_distance_normal(sample: &[f64]) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let k = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = normal.cdf(x);
            ((i + 1) as f64 / k - c).max(c - i as f64 / k)
        })
        .fold(0.0, f64::max)
}

pub fn monte_carlo(spec: &DgpSpec, reps: usize, est: &EstimatorConfig) -> Result<McReport> {
    if reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    spec.validate()?;
    est.interference.validate()?;
    if est.mode != FitMode::Oracle
        && est.interference.sigma_mode == SigmaMode::Supplied
        && spec.noise.scale() > est.interference.sigma_bar
    {
        return Err(Error::Config(format!(
            "noise scale {} exceeds sigma_bar {}",
            spec.noise.scale(),
            est.interference.sigma_bar
        )));
    }
    let graph = spec.build_graph()?;
    let rows: Vec<McRow> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let data = simulate_on(spec, &graph, rep)?;
            replicate(spec, est, &data, rep)
        })
        .collect::<Result<_>>()?;
    let summary = summarize(&rows);
    Ok(McReport {
        schema_version: crate::SCHEMA_VERSION,
        spec: spec.clone(),
        estimator: est.clone(),
        summary,
        rows,
    })
}

fn replicate(spec: &DgpSpec, est: &EstimatorConfig, data: &SimulatedData, rep: u64) -> Result<McRow> {
    let obs = data.observations();
    let propensities = match &est.propensity {
        PropensitySource::Truth => Propensities {
            values: data.e.clone(),
            degenerate_input: None,
        },
        PropensitySource::Model(model) => estimate_propensity(&obs, model)?,
    };

    let (f_hat, bound_violated, mean_m_hat, d_n, n_kept) = match est.mode {
        FitMode::Oracle => (data.f.clone(), None, 0.0, 0, 0),
        FitMode::Observed | FitMode::Decoupled => {
            let fitted = if est.mode == FitMode::Observed {
                fit(&data.graph, &obs, &est.interference)?
            } else {
                let synthetic: Vec<u8> = (0..data.n())
                    .map(|i| {
                        let u = StreamKey::new(spec.seed, "synthetic", rep, i as u64).uniform();
                        u8::from(u < propensities.values[i])
                    })
                    .collect();
                fit_decoupled(&data.graph, &obs, &synthetic, &est.interference)?
            };
            let f_hat = fitted.f_hat();
            let violated = (est.mode == FitMode::Observed).then(|| {
                oracle_inequality_bounds(data, &fitted)
                    .iter()
                    .enumerate()
                    .any(|(i, b)| (data.f[i] - f_hat[i]).abs() > *b)
            });
            let mean_m = fitted.m_hat().iter().sum::<usize>() as f64 / data.n() as f64;
            (f_hat, violated, mean_m, fitted.diagnostics.d_n, fitted.diagnostics.n_kept)
        }
    };

    let or = estimate_or(&obs, &f_hat)?;
    let dr = estimate_dr(&obs, &f_hat, &propensities, est.level)?;
    let tau_true = data.true_adtt.ok_or(Error::NoTreated)?;
    let var_oracle = oracle_variance(data, spec, &data.e)?;
    let n1 = dr.n_treated as f64;
    let (ci_low, ci_high) = dr.ci.expect("DR reports an interval");
    let half_oracle = normal_quantile(est.level) * (var_oracle / n1).sqrt();
    let max_abs_f_error = (0..data.n())
        .map(|i| (f_hat[i] - data.f[i]).abs())
        .fold(0.0, f64::max);

    Ok(McRow {
        rep,
        n_treated: dr.n_treated,
        tau_true,
        tau_or: or.tau_hat,
        tau_dr: dr.tau_hat,
        var_conservative: dr.variance.unwrap_or(f64::NAN),
        var_oracle,
        ci_low,
        ci_high,
        covered: ci_low <= tau_true && tau_true <= ci_high,
        covered_oracle: (dr.tau_hat - tau_true).abs() <= half_oracle,
        standardized: n1.sqrt() * (dr.tau_hat - tau_true) / var_oracle.sqrt(),
        max_abs_f_error,
        bound_violated,
        mean_m_hat,
        d_n,
        n_kept,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    s / k as f64
}

fn summarize(rows: &[McRow]) -> McSummary {
    let or_err: Vec<f64> = rows.iter().map(|r| r.tau_or - r.tau_true).collect();
    let dr_err: Vec<f64> = rows.iter().map(|r| r.tau_dr - r.tau_true).collect();
    let mut max_err: Vec<f64> = rows.iter().map(|r| r.max_abs_f_error).collect();
    max_err.sort_by(f64::total_cmp);
    let median = if max_err.len() % 2 == 1 {
        max_err[max_err.len() / 2]
    } else {
        0.5 * (max_err[max_err.len() / 2 - 1] + max_err[max_err.len() / 2])
    };
    let violations: Vec<bool> = rows.iter().filter_map(|r| r.bound_violated).collect();
    let standardized: Vec<f64> = rows.iter().map(|r| r.standardized).collect();
    McSummary {
        reps: rows.len(),
        or: Stats::of_errors(&or_err),
        dr: Stats::of_errors(&dr_err),
        coverage: mean(rows.iter().map(|r| f64::from(u8::from(r.covered)))),
        coverage_oracle: mean(rows.iter().map(|r| f64::from(u8::from(r.covered_oracle)))),
        mean_var_conservative: mean(rows.iter().map(|r| r.var_conservative)),
        mean_var_oracle: mean(rows.iter().map(|r| r.var_oracle)),
        mean_max_abs_f_error: mean(max_err.iter().copied()),
        median_max_abs_f_error: median,
        violation_frequency: (!violations.is_empty())
            .then(|| mean(violations.iter().map(|&v| f64::from(u8::from(v))))),
        ks_distance: ks_distance_normal(&standardized),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSpec;
    use crate::simulation::*;

    fn spec(sd: f64) -> DgpSpec {
        spec_sized(10, sd)
    }

    fn spec_sized(side: usize, sd: f64) -> DgpSpec {
        DgpSpec {
            graph: GraphSpec::Lattice {
                rows: side,
                cols: side,
                torus: true,
            },
            strata: StrataSpec::default(),
            propensity: PropensitySpec::Constant(0.5),
            interference: InterferenceSpec::two_level(2, 4, 0.0, 2.0),
            tau: TauSpec::Constant(1.0),
            noise: NoiseSpec::Gaussian { sd },
            seed: 5,
        }
    }

    #[test]
    fn ks_distance_of_quantiles_is_small() {
        let normal = Normal::standard();
        let sample: Vec<f64> = (0..1000).map(|i| normal.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        assert!(ks_distance_normal(&sample) <= 0.001);
        assert!(ks_distance_normal(&vec![10.0; 50]) > 0.99);
    }

    #[test]
    fn single_rep_summary_matches_row() {
        let report = monte_carlo(&spec(0.5), 1, &EstimatorConfig {
            interference: InterferenceConfig { sigma_bar: 0.5, ..Default::default() },
            ..Default::default()
        })
        .unwrap();
        let row = &report.rows[0];
        assert_eq!(report.summary.or.bias, row.tau_or - row.tau_true);
        assert_eq!(report.summary.mean_max_abs_f_error, row.max_abs_f_error);
        assert_eq!(report.summary.dr.sd, 0.0);
    }

    #[test]
    fn noiseless_threshold_recovers_exactly() {
        let est = EstimatorConfig {
            interference: InterferenceConfig { sigma_bar: 0.01, ..Default::default() },
            ..Default::default()
        };
        let report = monte_carlo(&spec_sized(20, 0.0), 20, &est).unwrap();
        assert!(report.summary.or.bias.abs() < 1e-12, "{:?}", report.summary);
        assert_eq!(report.summary.violation_frequency, Some(0.0));
        assert_eq!(report.summary.mean_max_abs_f_error, 0.0);
    }

    #[test]
    fn rejects_noise_above_sigma_bar() {
        let est = EstimatorConfig {
            interference: InterferenceConfig { sigma_bar: 0.1, ..Default::default() },
            ..Default::default()
        };
        assert!(monte_carlo(&spec(0.5), 3, &est).is_err());
    }
}
