//! Linear-in-means equilibrium and its decomposition into direct effect,
//! interference and propagated noise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub(super) struct Equilibrium {
    /// Own-treatment coefficient `γ Σ_k β^k (Ã^{k+1})_{ii}`.
    pub direct: Vec<f64>,
    /// `α/(1-β) + γ Σ_k β^k (Ã^{k+1} z_{-i})_i`.
    pub interference: Vec<f64>,
    /// `Σ_k β^k (Ã^k ξ)_i`.
    pub noise: Vec<f64>,
    pub residual: f64,
}

const MAX_ITER: usize = 100_000;

fn row_normalized_apply(graph: &Graph, v: &[f64]) -> Vec<f64> {
    (0..graph.n())
        .map(|i| {
            let nb = graph.neighbors(i);
            if nb.is_empty() {
                0.0
            } else {
                nb.iter().map(|&j| v[j]).sum::<f64>() / nb.len() as f64
            }
        })
        .collect()
}

/// `(I - βÃ)^{-1} v` by fixed-point iteration.
fn resolvent(graph: &Graph, beta: f64, v: &[f64]) -> Result<Vec<f64>> {
    let mut u = v.to_vec();
    for _ in 0..MAX_ITER {
        let au = row_normalized_apply(graph, &u);
        let next: Vec<f64> = v.iter().zip(&au).map(|(vi, a)| vi + beta * a).collect();
        let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let size = next.iter().map(|a| a.abs()).fold(0.0, f64::max);
        u = next;
        if !change.is_finite() {
            return Err(Error::SingularSystem);
        }
        if change <= 1e-15 * (1.0 + size) {
            return Ok(u);
        }
    }
    Err(Error::SingularSystem)
}

/// Diagonal of `Σ_k β^k Ã^{k+1}` via truncated random-walk return masses.
fn direct_diagonal(graph: &Graph, beta: f64) -> Vec<f64> {
    let n = graph.n();
    let steps = if beta == 0.0 {
        1
    } else {
        ((1e-18f64).ln() / beta.abs().ln()).ceil() as usize + 1
    };
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut mass = vec![0.0; n];
            let mut active = vec![i];
            mass[i] = 1.0;
            let mut total = 0.0;
            let mut weight = 1.0;
            for _ in 0..steps {
                let mut next = vec![0.0; n];
                let mut next_active = Vec::new();
                for &u in &active {
                    let nb = graph.neighbors(u);
                    if nb.is_empty() {
                        continue;
                    }
                    let share = mass[u] / nb.len() as f64;
                    for &v in nb {
                        if next[v] == 0.0 {
                            next_active.push(v);
                        }
                        next[v] += share;
                    }
                }
                // row vector e_i^T Ã^{k+1}; its i-th entry is the return mass
                total += weight * next[i];
                weight *= beta;
                mass = next;
                active = next_active;
                if active.is_empty() {
                    break;
                }
            }
            total
        })
        .collect()
}

pub(super) fn solve(
    graph: &Graph,
    z: &[u8],
    xi: &[f64],
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<Equilibrium> {
    if beta.is_nan() || beta.abs() >= 1.0 {
        return Err(Error::SingularSystem);
    }
    let zf: Vec<f64> = z.iter().map(|&t| f64::from(t)).collect();
    let spill = resolvent(graph, beta, &row_normalized_apply(graph, &zf))?;
    let noise = resolvent(graph, beta, xi)?;
    let diag = direct_diagonal(graph, beta);
    let baseline = alpha / (1.0 - beta);

    let direct: Vec<f64> = diag.iter().map(|d| gamma * d).collect();
    let interference: Vec<f64> = (0..graph.n())
        .map(|i| baseline + gamma * (spill[i] - diag[i] * zf[i]))
        .collect();

    // fixed-point check on the assembled equilibrium outcome
    let y: Vec<f64> = (0..graph.n())
        .map(|i| baseline + gamma * spill[i] + noise[i])
        .collect();
    let ay = row_normalized_apply(graph, &y);
    let az = row_normalized_apply(graph, &zf);
    let residual = (0..graph.n())
        .map(|i| (y[i] - (alpha + beta * ay[i] + gamma * az[i] + xi[i])).abs())
        .fold(0.0, f64::max);

    Ok(Equilibrium {
        direct,
        interference,
        noise,
        residual,
    })
}
