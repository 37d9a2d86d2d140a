//! Literal reference implementation of the interference estimator for tiny
//! graphs: fresh BFS for every signature, set comprehensions for the key
//! set, a triple loop for pruning. No tries, no caching.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::interference::{InterferenceConfig, NodeFit, ResolvedConfig};
use crate::observations::Observations;
use crate::patterns::PatternKey;

const LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFit {
    pub kept: BTreeSet<PatternKey>,
    pub f_hat: BTreeMap<PatternKey, f64>,
    pub nodes: Vec<NodeFit>,
}

/// Depths at which node `i` has a signature: `1..=min(max_depth, ecc(i))`.
fn signatures(graph: &Graph, labels: &[u8], i: usize, max_depth: usize) -> Vec<PatternKey> {
    let mut out = Vec::new();
    for m in 1..=max_depth {
        let layers = graph.bfs_layers(i, m);
        if layers[m - 1].is_empty() {
            break;
        }
        let counts = layers
            .iter()
            .map(|layer| layer.iter().filter(|&&j| labels[j] == 1).count() as u32)
            .collect();
        out.push(PatternKey::new(counts));
    }
    out
}

pub fn brute_force_fit(graph: &Graph, obs: &Observations, config: &InterferenceConfig) -> Result<ReferenceFit> {
    reference(graph, obs, None, config)
}

pub fn brute_force_fit_decoupled(
    graph: &Graph,
    obs: &Observations,
    synthetic_labels: &[u8],
    config: &InterferenceConfig,
) -> Result<ReferenceFit> {
    reference(graph, obs, Some(synthetic_labels), config)
}

fn reference(
    graph: &Graph,
    obs: &Observations,
    synthetic: Option<&[u8]>,
    config: &InterferenceConfig,
) -> Result<ReferenceFit> {
    let n = graph.n();
    if n > LIMIT {
        return Err(Error::TooLarge(n));
    }
    if obs.n_controls() == 0 {
        return Err(Error::NoControls);
    }
    let cfg = config.resolve(graph, obs)?;
    let z = obs.z();
    let real: Vec<Vec<PatternKey>> = (0..n).map(|i| signatures(graph, z, i, cfg.max_depth)).collect();

    // candidate keys
    let mut keys: BTreeSet<PatternKey> = BTreeSet::new();
    keys.insert(PatternKey::root());
    match synthetic {
        None => {
            for i in (0..n).filter(|&i| z[i] == 0) {
                keys.extend(real[i].iter().cloned());
            }
        }
        Some(labels) => {
            for i in 0..n {
                keys.extend(signatures(graph, labels, i, cfg.max_depth));
            }
        }
    }

    // V_g from real labels
    let controls_of = |g: &PatternKey| -> Vec<usize> {
        (0..n)
            .filter(|&i| z[i] == 0 && (g.is_root() || real[i].contains(g)))
            .collect()
    };
    let mut f_hat = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    for g in &keys {
        let v = controls_of(g);
        if v.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for &i in &v {
            sum += obs.y()[i];
        }
        f_hat.insert(g.clone(), sum / v.len() as f64);
        sizes.insert(g.clone(), v.len());
    }
    let estimable: Vec<&PatternKey> = f_hat.keys().collect();

    let kept: BTreeSet<PatternKey> = estimable
        .iter()
        .filter(|g| {
            if g.is_root() {
                return true;
            }
            let parent = g.parent().expect("non-root");
            estimable.iter().any(|g1| {
                g1.descends_from(g)
                    && estimable.iter().any(|g2| {
                        g2.descends_from(&parent)
                            && exceeds(f_hat[*g1], sizes[*g1], f_hat[*g2], sizes[*g2], &cfg, n)
                    })
            })
        })
        .map(|g| (*g).clone())
        .collect();

    let nodes = (0..n)
        .map(|i| {
            let mut best = PatternKey::root();
            for g in &real[i] {
                if kept.contains(g) && g.depth() > best.depth() {
                    best = g.clone();
                }
            }
            NodeFit {
                m_hat: best.depth(),
                f_hat: f_hat[&best],
                key: best,
            }
        })
        .collect();

    Ok(ReferenceFit { kept, f_hat, nodes })
}

fn exceeds(f1: f64, v1: usize, f2: f64, v2: usize, cfg: &ResolvedConfig, n: usize) -> bool {
    let n = n as f64;
    let scale = cfg.lambda * cfg.sigma_bar * (2.0 * (2.0 * n * n / cfg.delta).ln()).sqrt();
    (f1 - f2).abs() > scale * (1.0 / (v1 as f64).sqrt() + 1.0 / (v2 as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_large_graphs() {
        let g = Graph::lattice(4, 4, false).unwrap();
        let obs = Observations::unstratified(vec![0; 16], vec![0.0; 16]).unwrap();
        assert!(matches!(
            brute_force_fit(&g, &obs, &InterferenceConfig::default()),
            Err(Error::TooLarge(16))
        ));
    }

    #[test]
    fn path_fixture() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let obs = Observations::unstratified(vec![0, 1, 0, 0, 0], vec![5.0, 0.0, 5.0, 1.0, 1.0]).unwrap();
        let cfg = InterferenceConfig {
            lambda: 2.0,
            delta: 0.5,
            sigma_bar: 0.1,
            max_depth: Some(1),
            ..Default::default()
        };
        let fit = brute_force_fit(&g, &obs, &cfg).unwrap();
        let f: Vec<f64> = fit.nodes.iter().map(|n| n.f_hat).collect();
        assert_eq!(f, vec![5.0, 1.0, 5.0, 1.0, 1.0]);
        assert_eq!(fit.kept.len(), 3);
    }
}
