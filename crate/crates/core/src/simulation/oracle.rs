use crate::error::{Error, Result};
use crate::graph::Bfs;
use crate::interference::InterferenceFit;
use crate::patterns::{layer_counts, PatternKey, ROOT};

use super::{DgpSpec, SimulatedData};

/// Largest gap of the true interference over all nodes (treated or not)
/// whose signature at depth `key.depth()` equals `key`.
pub fn true_approx_error(data: &SimulatedData, key: &PatternKey) -> Result<f64> {
    let mut bfs = Bfs::new(data.n());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..data.n() {
        let path = layer_counts(&data.graph, &data.z, i, key.depth(), &mut bfs);
        if path == key.counts() {
            lo = lo.min(data.f[i]);
            hi = hi.max(data.f[i]);
        }
    }
    if lo > hi {
        return Err(Error::Input(format!("no node has pattern {key}")));
    }
    Ok(hi - lo)
}

/// Conditional score variance with the true nuisances and known noise law:
/// `(1/N_1) Σ_i [Z_i s² + (1 - Z_i) s² (e_i / (1 - e_i))²]`.
pub fn oracle_variance(data: &SimulatedData, spec: &DgpSpec, e: &[f64]) -> Result<f64> {
    let s2 = spec.noise.variance();
    let n1 = data.z.iter().filter(|&&t| t == 1).count();
    if n1 == 0 {
        return Err(Error::NoTreated);
    }
    let total: f64 = (0..data.n())
        .map(|i| {
            if data.z[i] == 1 {
                s2
            } else {
                let odds = e[i] / (1.0 - e[i]);
                s2 * odds * odds
            }
        })
        .sum();
    Ok(total / n1 as f64)
}

/// Per-node right-hand side of the uniform oracle inequality
/// `min_m λ/(λ-1) r(g_m) + 3λσ̄ sqrt(2 log(2n²/δ)/|V_{g_m}|)`, minimised
/// over depths `m >= 1` along the node's path whose key has controls. Nodes
/// with no such depth use the root.
pub fn oracle_inequality_bounds(data: &SimulatedData, fit: &InterferenceFit) -> Vec<f64> {
    let cfg = &fit.config;
    let index = &fit.index;
    let n = index.n() as f64;
    let log_term = 2.0 * (2.0 * n * n / cfg.delta).ln();
    let lambda = cfg.lambda;

    let approx_error: Vec<f64> = (0..index.len())
        .map(|id| {
            let (lo, hi) = index
                .members(id)
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(data.f[i]), hi.max(data.f[i]))
                });
            hi - lo
        })
        .collect();
    let term = |id: usize| {
        let v = index.controls(id).len() as f64;
        lambda / (lambda - 1.0) * approx_error[id]
            + 3.0 * lambda * cfg.sigma_bar * (log_term / v).sqrt()
    };

    (0..index.n())
        .map(|i| {
            let keys = index.node_keys(i);
            keys.iter()
                .copied()
                .filter(|&id| id != ROOT && !index.controls(id).is_empty())
                .map(term)
                .reduce(f64::min)
                .unwrap_or_else(|| term(ROOT))
        })
        .collect()
}
