//! Direct-effect estimators on interference-adjusted outcomes `Y_i - f̂_i`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::observations::Observations;

pub const DEFAULT_CLIP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropensityKind {
    /// Fixed `e0` for every node, used as given (no clipping).
    Constant(f64),
    /// Per-stratum treated frequency.
    Stratified,
    /// Per-node values.
    Supplied(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityModel {
    pub kind: PropensityKind,
    pub clip: f64,
}

impl PropensityModel {
    pub fn constant(e0: f64) -> Self {
        Self {
            kind: PropensityKind::Constant(e0),
            clip: DEFAULT_CLIP,
        }
    }

    pub fn stratified() -> Self {
        Self {
            kind: PropensityKind::Stratified,
            clip: DEFAULT_CLIP,
        }
    }

    pub fn supplied(values: Vec<f64>) -> Self {
        Self {
            kind: PropensityKind::Supplied(values),
            clip: DEFAULT_CLIP,
        }
    }

    pub fn with_clip(mut self, clip: f64) -> Self {
        self.clip = clip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0 && self.clip < 0.5) {
            return Err(Error::Config(format!("clip must lie in (0, 0.5), got {}", self.clip)));
        }
        if let PropensityKind::Constant(e0) = self.kind {
            if !(0.0..1.0).contains(&e0) {
                return Err(Error::Config(format!("constant propensity must lie in [0, 1), got {e0}")));
            }
        }
        Ok(())
    }
}

/// Per-node propensity estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Propensities {
    pub values: Vec<f64>,
    /// First supplied value that was exactly 0 or 1 before clipping.
    pub degenerate_input: Option<(usize, f64)>,
}

impl Propensities {
    pub fn constant(n: usize, e: f64) -> Self {
        Self {
            values: vec![e; n],
            degenerate_input: None,
        }
    }
}

fn clip(e: f64, c: f64) -> f64 {
    e.max(c).min(1.0 - c)
}

pub fn estimate_propensity(obs: &Observations, model: &PropensityModel) -> Result<Propensities> {
    model.validate()?;
    let n = obs.len();
    match &model.kind {
        PropensityKind::Constant(e0) => Ok(Propensities::constant(n, *e0)),
        PropensityKind::Stratified => {
            let mut counts: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
            for i in 0..n {
                let entry = counts.entry(obs.x()[i]).or_default();
                entry.0 += usize::from(obs.z()[i]);
                entry.1 += 1;
            }
            let values = (0..n)
                .map(|i| {
                    let (treated, size) = counts[&obs.x()[i]];
                    clip(treated as f64 / size as f64, model.clip)
                })
                .collect();
            Ok(Propensities {
                values,
                degenerate_input: None,
            })
        }
        PropensityKind::Supplied(raw) => {
            if raw.len() != n {
                return Err(Error::Input(format!("{} propensities for {n} nodes", raw.len())));
            }
            if let Some(i) = raw.iter().position(|e| !(0.0..=1.0).contains(e)) {
                return Err(Error::Input(format!("propensity {} at node {i} outside [0, 1]", raw[i])));
            }
            let degenerate_input = raw
                .iter()
                .position(|&e| e == 0.0 || e == 1.0)
                .map(|i| (i, raw[i]));
            Ok(Propensities {
                values: raw.iter().map(|&e| clip(e, model.clip)).collect(),
                degenerate_input,
            })
        }
    }
}

/// Per-stratum propensity table assigned by an explicit stratum list.
pub fn stratum_frequencies(obs: &Observations, strata: &[u32]) -> Result<BTreeMap<u32, f64>> {
    let mut out = BTreeMap::new();
    for &s in strata {
        let (t, size) = (0..obs.len())
            .filter(|&i| obs.x()[i] == s)
            .fold((0, 0), |(t, size), i| (t + usize::from(obs.z()[i]), size + 1));
        if size == 0 {
            return Err(Error::EmptyStratum(s));
        }
        out.insert(s, t as f64 / size as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "OR")]
    Or,
    #[serde(rename = "DR")]
    Dr,
    #[serde(rename = "ADTE-OR-a")]
    AdteOrA,
    #[serde(rename = "ADTE-OR-b")]
    AdteOrB,
    #[serde(rename = "ADTE-DR")]
    AdteDr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    Conservative,
    Plugin,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub method: Method,
    pub tau_hat: f64,
    pub variance: Option<f64>,
    pub variance_kind: VarianceKind,
    pub ci: Option<(f64, f64)>,
    pub level: Option<f64>,
    pub n_treated: usize,
}

impl EffectEstimate {
    fn point(method: Method, tau_hat: f64, n_treated: usize) -> Self {
        Self {
            method,
            tau_hat,
            variance: None,
            variance_kind: VarianceKind::None,
            ci: None,
            level: None,
            n_treated,
        }
    }
}

fn check_lengths(obs: &Observations, f_hat: &[f64], other: Option<&[f64]>) -> Result<()> {
    if f_hat.len() != obs.len() || other.is_some_and(|e| e.len() != obs.len()) {
        return Err(Error::Input("per-node vectors must match the node count".into()));
    }
    Ok(())
}

fn treated_count(obs: &Observations) -> Result<usize> {
    match obs.n_treated() {
        0 => Err(Error::NoTreated),
        n => Ok(n),
    }
}

/// `Σ Z_i (Y_i - f̂_i) / N_1`. No variance is reported.
pub fn estimate_or(obs: &Observations, f_hat: &[f64]) -> Result<EffectEstimate> {
    check_lengths(obs, f_hat, None)?;
    let n1 = treated_count(obs)?;
    let sum: f64 = (0..obs.len())
        .filter(|&i| obs.is_treated(i))
        .map(|i| obs.y()[i] - f_hat[i])
        .sum();
    Ok(EffectEstimate::point(Method::Or, sum / n1 as f64, n1))
}

/// Score of node `i`: `Z(Y - τ - f̂) - (1 - Z)(Y - f̂) ê / (1 - ê)`.
#[inline]
fn score(z: u8, y: f64, f: f64, e: f64, tau: f64) -> f64 {
    if z == 1 {
        y - tau - f
    } else {
        -(y - f) * e / (1.0 - e)
    }
}

fn dr_point(obs: &Observations, f_hat: &[f64], e_hat: &[f64]) -> f64 {
    let sum: f64 = (0..obs.len())
        .map(|i| score(obs.z()[i], obs.y()[i], f_hat[i], e_hat[i], 0.0))
        .sum();
    sum / obs.n_treated() as f64
}

/// Two-sided standard normal quantile for confidence `level`.
pub fn normal_quantile(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + level / 2.0)
}

/// Doubly robust estimate with the conservative variance and a normal
/// interval of half-width `z · sqrt(Σ̃ / N_1)`.
pub fn estimate_dr(
    obs: &Observations,
    f_hat: &[f64],
    propensities: &Propensities,
    level: f64,
) -> Result<EffectEstimate> {
    let e_hat = &propensities.values;
    check_lengths(obs, f_hat, Some(e_hat))?;
    let n1 = treated_count(obs)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("level must lie in (0, 1), got {level}")));
    }
    let tau_hat = dr_point(obs, f_hat, e_hat);
    let variance = variance_conservative(obs, f_hat, propensities, tau_hat)?;
    let half = normal_quantile(level) * (variance / n1 as f64).sqrt();
    Ok(EffectEstimate {
        method: Method::Dr,
        tau_hat,
        variance: Some(variance),
        variance_kind: VarianceKind::Conservative,
        ci: Some((tau_hat - half, tau_hat + half)),
        level: Some(level),
        n_treated: n1,
    })
}

/// `Σ̃_n`: mean over treated count of squared scores with `τ = τ̂^DR`.
pub fn variance_conservative(
    obs: &Observations,
    f_hat: &[f64],
    propensities: &Propensities,
    tau_hat: f64,
) -> Result<f64> {
    let tau = vec![tau_hat; obs.len()];
    variance_plugin(obs, f_hat, propensities, &tau)
}

/// `Σ̂_n`: like [`variance_conservative`] but with per-node `τ̂_i`.
pub fn variance_plugin(
    obs: &Observations,
    f_hat: &[f64],
    propensities: &Propensities,
    tau_i: &[f64],
) -> Result<f64> {
    let e_hat = &propensities.values;
    check_lengths(obs, f_hat, Some(e_hat))?;
    check_lengths(obs, tau_i, None)?;
    let n1 = treated_count(obs)?;
    let ss: f64 = (0..obs.len())
        .map(|i| score(obs.z()[i], obs.y()[i], f_hat[i], e_hat[i], tau_i[i]).powi(2))
        .sum();
    Ok(ss / n1 as f64)
}

/// Stratified mean of treated residuals `Y_i - f̂_i`; every stratum present
/// must contain a treated node.
pub fn estimate_tau_of_x(obs: &Observations, f_hat: &[f64]) -> Result<BTreeMap<u32, f64>> {
    check_lengths(obs, f_hat, None)?;
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for i in 0..obs.len() {
        let entry = acc.entry(obs.x()[i]).or_insert((0.0, 0));
        if obs.is_treated(i) {
            entry.0 += obs.y()[i] - f_hat[i];
            entry.1 += 1;
        }
    }
    let missing: Vec<u32> = acc.iter().filter(|(_, v)| v.1 == 0).map(|(&s, _)| s).collect();
    if !missing.is_empty() {
        return Err(Error::StrataWithoutTreated(missing));
    }
    Ok(acc.into_iter().map(|(s, (sum, k))| (s, sum / k as f64)).collect())
}

/// Expands a stratum table to per-node values.
pub fn tau_per_node(obs: &Observations, tau_of_x: &BTreeMap<u32, f64>) -> Result<Vec<f64>> {
    obs.x()
        .iter()
        .map(|s| {
            tau_of_x
                .get(s)
                .copied()
                .ok_or(Error::StrataWithoutTreated(vec![*s]))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdteEstimates {
    pub or_a: EffectEstimate,
    pub or_b: EffectEstimate,
    pub dr: EffectEstimate,
}

/// The three average-direct-effect estimators over all nodes.
pub fn estimate_adte(
    obs: &Observations,
    f_hat: &[f64],
    propensities: &Propensities,
    tau_of_x: &BTreeMap<u32, f64>,
) -> Result<AdteEstimates> {
    let e_hat = &propensities.values;
    check_lengths(obs, f_hat, Some(e_hat))?;
    if let Some((node, value)) = propensities.degenerate_input {
        return Err(Error::DegeneratePropensity { node, value });
    }
    if let Some(i) = e_hat.iter().position(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::DegeneratePropensity { node: i, value: e_hat[i] });
    }
    let tau = tau_per_node(obs, tau_of_x)?;
    let n = obs.len() as f64;
    let n1 = obs.n_treated();
    let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
    for i in 0..obs.len() {
        let (y, f, e, t) = (obs.y()[i], f_hat[i], e_hat[i], tau[i]);
        a += t;
        if obs.is_treated(i) {
            b += y - f;
            d += t + (y - t - f) / e;
        } else {
            b += t;
            d += t - (y - f) / (1.0 - e);
        }
    }
    Ok(AdteEstimates {
        or_a: EffectEstimate::point(Method::AdteOrA, a / n, n1),
        or_b: EffectEstimate::point(Method::AdteOrB, b / n, n1),
        dr: EffectEstimate::point(Method::AdteDr, d / n, n1),
    })
}

/// Estimate report: estimates, configuration echo and fit digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub estimates: Vec<EffectEstimate>,
    pub config: serde_json::Value,
    pub fit_digest: Option<String>,
}
