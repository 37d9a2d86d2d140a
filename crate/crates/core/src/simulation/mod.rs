//! Data-generating processes, oracle quantities, the brute-force reference
//! pipeline and the Monte-Carlo harness.
//!
//! Outcomes follow `y_i = z_i τ_i + f_i + ε_i` where `f_i` depends on the
//! treatment labels of the other nodes through their distance layers.

mod brute;
mod lim;
mod mc;
mod oracle;

pub use brute::{brute_force_fit, brute_force_fit_decoupled, ReferenceFit};
pub use mc::{
    ks_distance_normal, monte_carlo, EstimatorConfig, FitMode, McReport, McRow, McSummary,
    PropensitySource, Stats,
};
pub use oracle::{oracle_variance, oracle_inequality_bounds, true_approx_error};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec};
use crate::observations::Observations;
use crate::patterns::{signature, PatternKey};
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StratumAssignment {
    /// `x_i = i mod count`.
    #[default]
    Modulo,
    /// Uniform over strata from the `"stratum"` stream.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataSpec {
    pub count: u32,
    #[serde(default)]
    pub assignment: StratumAssignment,
}

impl Default for StrataSpec {
    fn default() -> Self {
        Self {
            count: 1,
            assignment: StratumAssignment::Modulo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropensitySpec {
    Constant(f64),
    PerStratum(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub key: PatternKey,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceSpec {
    /// `f` is a lookup of the depth-`depth` signature; missing keys get `default`.
    Threshold {
        depth: usize,
        values: Vec<TableEntry>,
        default: f64,
    },
    /// `f = intercept + Σ_k μ_k T_k`.
    LayeredLinear {
        coefficients: Vec<f64>,
        #[serde(default)]
        intercept: f64,
    },
    /// `μ_k = scale · exp(-4k²)` for `k = 1..=depth`.
    Decay {
        scale: f64,
        #[serde(default = "default_decay_depth")]
        depth: usize,
    },
    /// `Y = α + β Ã Y + γ Ã z + ξ` with row-normalized adjacency `Ã`.
    LinearInMeans { alpha: f64, beta: f64, gamma: f64 },
}

fn default_decay_depth() -> usize {
    crate::interference::DEFAULT_MAX_DEPTH_CAP
}

impl InterferenceSpec {
    /// Two-level threshold on the number of treated neighbours:
    /// `high` when `T_1 >= cutoff`, `low` otherwise.
    pub fn two_level(cutoff: u32, max_degree: u32, low: f64, high: f64) -> Self {
        InterferenceSpec::Threshold {
            depth: 1,
            values: (cutoff..=max_degree)
                .map(|t| TableEntry {
                    key: PatternKey::new(vec![t]),
                    value: high,
                })
                .collect(),
            default: low,
        }
    }

    /// Per-layer coefficients of the linear kinds.
    pub fn layer_coefficients(&self) -> Option<Vec<f64>> {
        match self {
            InterferenceSpec::LayeredLinear { coefficients, .. } => Some(coefficients.clone()),
            InterferenceSpec::Decay { scale, depth } => Some(
                (1..=*depth)
                    .map(|k| scale * (-4.0 * (k * k) as f64).exp())
                    .collect(),
            ),
            _ => None,
        }
    }

    /// True interference values under labels `z` (count-based kinds only).
    pub fn evaluate(&self, graph: &Graph, z: &[u8]) -> Result<Vec<f64>> {
        let n = graph.n();
        match self {
            InterferenceSpec::Threshold {
                depth,
                values,
                default,
            } => {
                let table: std::collections::BTreeMap<&PatternKey, f64> =
                    values.iter().map(|e| (&e.key, e.value)).collect();
                Ok((0..n)
                    .map(|i| {
                        let key = signature(graph, z, i, *depth);
                        table.get(&key).copied().unwrap_or(*default)
                    })
                    .collect())
            }
            InterferenceSpec::LayeredLinear { .. } | InterferenceSpec::Decay { .. } => {
                let mu = self.layer_coefficients().unwrap_or_default();
                let base = match self {
                    InterferenceSpec::LayeredLinear { intercept, .. } => *intercept,
                    _ => 0.0,
                };
                Ok((0..n)
                    .map(|i| {
                        let key = signature(graph, z, i, mu.len());
                        base + key
                            .counts()
                            .iter()
                            .zip(&mu)
                            .map(|(&t, m)| m * f64::from(t))
                            .sum::<f64>()
                    })
                    .collect())
            }
            InterferenceSpec::LinearInMeans { .. } => Err(Error::Config(
                "linear-in-means interference is produced by the equilibrium solve".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSpec {
    Constant(f64),
    PerStratum(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { sd: f64 },
    Uniform { half_width: f64 },
}

impl NoiseSpec {
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sd } => sd * sd,
            NoiseSpec::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// Sub-Gaussian scale of the noise.
    pub fn scale(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sd } => sd,
            NoiseSpec::Uniform { half_width } => half_width,
        }
    }
}

/// Full description of a simulated design; serialized as the DGP config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub graph: GraphSpec,
    #[serde(default)]
    pub strata: StrataSpec,
    pub propensity: PropensitySpec,
    pub interference: InterferenceSpec,
    pub tau: TauSpec,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        let strata = self.strata.count;
        if strata == 0 {
            return Err(Error::Config("need at least one stratum".into()));
        }
        let per_stratum_len = |name: &str, len: usize| {
            if len != strata as usize {
                Err(Error::Config(format!("{name} table has {len} entries for {strata} strata")))
            } else {
                Ok(())
            }
        };
        match &self.propensity {
            PropensitySpec::Constant(e) => check_probability(*e)?,
            PropensitySpec::PerStratum(es) => {
                per_stratum_len("propensity", es.len())?;
                es.iter().try_for_each(|&e| check_probability(e))?;
            }
        }
        if let TauSpec::PerStratum(ts) = &self.tau {
            per_stratum_len("tau", ts.len())?;
        }
        match self.noise {
            NoiseSpec::Gaussian { sd } if !(sd >= 0.0 && sd.is_finite()) => {
                return Err(Error::Config(format!("noise sd must be >= 0, got {sd}")));
            }
            NoiseSpec::Uniform { half_width } if !(half_width >= 0.0 && half_width.is_finite()) => {
                return Err(Error::Config(format!("noise half-width must be >= 0, got {half_width}")));
            }
            _ => {}
        }
        if let InterferenceSpec::LinearInMeans { beta, .. } = self.interference {
            if beta.is_nan() || beta.abs() >= 1.0 {
                return Err(Error::Config(format!("linear-in-means needs |beta| < 1, got {beta}")));
            }
        }
        Ok(())
    }

    pub fn build_graph(&self) -> Result<Graph> {
        self.graph.build(self.seed)
    }

    fn stratum(&self, rep: u64, i: usize) -> u32 {
        match self.strata.assignment {
            StratumAssignment::Modulo => (i % self.strata.count as usize) as u32,
            StratumAssignment::Random => {
                let u = StreamKey::new(self.seed, "stratum", rep, i as u64).uniform();
                ((u * f64::from(self.strata.count)) as u32).min(self.strata.count - 1)
            }
        }
    }

    pub fn propensity_of(&self, x: u32) -> f64 {
        match &self.propensity {
            PropensitySpec::Constant(e) => *e,
            PropensitySpec::PerStratum(es) => es[x as usize],
        }
    }

    pub fn tau_of(&self, x: u32) -> f64 {
        match &self.tau {
            TauSpec::Constant(t) => *t,
            TauSpec::PerStratum(ts) => ts[x as usize],
        }
    }

    fn noise(&self, rep: u64, i: usize) -> f64 {
        let key = StreamKey::new(self.seed, "noise", rep, i as u64);
        match self.noise {
            NoiseSpec::Gaussian { sd } => {
                let draw: f64 = StandardNormal.sample(&mut key.rng());
                sd * draw
            }
            NoiseSpec::Uniform { half_width } => (2.0 * key.uniform() - 1.0) * half_width,
        }
    }
}

fn check_probability(e: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::Config(format!("probability {e} outside [0, 1]")));
    }
    Ok(())
}

/// One simulated draw with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedData {
    #[serde(skip)]
    pub graph: Graph,
    pub x: Vec<u32>,
    pub z: Vec<u8>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub tau: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// True propensity `e(x_i)`.
    pub e: Vec<f64>,
    /// Mean of `τ_i` over treated nodes; `None` without treated nodes.
    pub true_adtt: Option<f64>,
    pub true_adte: f64,
    /// Max-norm residual of the linear-in-means fixed point, when applicable.
    pub equilibrium_residual: Option<f64>,
}

impl Default for Graph {
    fn default() -> Self {
        Graph::from_edges(0, &[]).expect("empty graph")
    }
}

impl SimulatedData {
    pub fn observations(&self) -> Observations {
        Observations::new(self.z.clone(), self.y.clone(), self.x.clone())
            .expect("simulated columns are consistent")
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }
}

/// Draw replication 0 of `spec`.
pub fn simulate(spec: &DgpSpec) -> Result<SimulatedData> {
    let graph = spec.build_graph()?;
    simulate_on(spec, &graph, 0)
}

/// Draw replication `rep` of `spec` on a prebuilt graph.
pub fn simulate_on(spec: &DgpSpec, graph: &Graph, rep: u64) -> Result<SimulatedData> {
    spec.validate()?;
    let n = graph.n();
    let x: Vec<u32> = (0..n).map(|i| spec.stratum(rep, i)).collect();
    let e: Vec<f64> = x.iter().map(|&s| spec.propensity_of(s)).collect();
    let z: Vec<u8> = (0..n)
        .map(|i| u8::from(StreamKey::new(spec.seed, "treat", rep, i as u64).uniform() < e[i]))
        .collect();
    let base_tau: Vec<f64> = x.iter().map(|&s| spec.tau_of(s)).collect();
    let xi: Vec<f64> = (0..n).map(|i| spec.noise(rep, i)).collect();

    let (f, tau, epsilon, equilibrium_residual) = match spec.interference {
        InterferenceSpec::LinearInMeans { alpha, beta, gamma } => {
            let eq = lim::solve(graph, &z, &xi, alpha, beta, gamma)?;
            let tau = base_tau.iter().zip(&eq.direct).map(|(t, d)| t + d).collect();
            (eq.interference, tau, eq.noise, Some(eq.residual))
        }
        _ => (spec.interference.evaluate(graph, &z)?, base_tau, xi, None),
    };

    let y: Vec<f64> = (0..n)
        .map(|i| f64::from(z[i]) * tau[i] + f[i] + epsilon[i])
        .collect();
    let n1 = z.iter().filter(|&&t| t == 1).count();
    let true_adtt = (n1 > 0).then(|| {
        (0..n).filter(|&i| z[i] == 1).map(|i| tau[i]).sum::<f64>() / n1 as f64
    });
    let true_adte = if n == 0 { 0.0 } else { tau.iter().sum::<f64>() / n as f64 };
    Ok(SimulatedData {
        graph: graph.clone(),
        x,
        z,
        y,
        f,
        tau,
        epsilon,
        e,
        true_adtt,
        true_adte,
        equilibrium_residual,
    })
}
