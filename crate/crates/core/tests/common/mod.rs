#![allow(dead_code)]

use std::collections::BTreeSet;

use adaptive_interference::patterns::ROOT;
use adaptive_interference::rng::StreamKey;
use adaptive_interference::simulation::ReferenceFit;
use adaptive_interference::{Graph, InterferenceConfig, InterferenceFit, Observations, PatternKey, SigmaMode};
use rand_distr::{Distribution, StandardNormal};

/// Random Erdős–Rényi graph on at most eight nodes with labels, outcomes,
/// synthetic labels and a tuning config.
pub struct Fixture {
    pub graph: Graph,
    pub obs: Observations,
    pub synthetic: Vec<u8>,
    pub config: InterferenceConfig,
}

pub fn fixture(seed: u64) -> Fixture {
    let base = StreamKey::new(seed, "fixture", 0, 0);
    let n = 2 + (base.child(0).uniform() * 7.0) as usize;
    let graph = Graph::erdos_renyi(n, 0.4, seed).unwrap();

    let mut z: Vec<u8> = (0..n)
        .map(|i| u8::from(StreamKey::new(seed, "treat", 0, i as u64).uniform() < 0.5))
        .collect();
    if z.iter().all(|&zi| zi == 1) {
        let i = (base.child(1).uniform() * n as f64) as usize;
        z[i] = 0;
    }
    let synthetic = (0..n)
        .map(|i| u8::from(StreamKey::new(seed, "synthetic", 0, i as u64).uniform() < 0.5))
        .collect();
    let y = (0..n)
        .map(|i| {
            let noise: f64 = StandardNormal.sample(&mut StreamKey::new(seed, "noise", 0, i as u64).rng());
            3.0 * f64::from(z[i]) + noise
        })
        .collect();

    // Small noise levels make pruning decisions go both ways on tiny graphs.
    let sigmas = [0.002, 0.01, 0.05, 0.2, 1.0];
    let sigma_bar = sigmas[(base.child(2).uniform() * sigmas.len() as f64) as usize];
    let lambda = 1.0 + base.child(6).uniform() * 2.0;
    let sigma_mode = if base.child(3).uniform() < 0.25 {
        SigmaMode::PooledControlSd
    } else {
        SigmaMode::Supplied
    };
    let max_depth = if base.child(4).uniform() < 0.5 {
        None
    } else {
        Some(1 + (base.child(5).uniform() * 3.0) as usize)
    };
    Fixture {
        graph,
        obs: Observations::unstratified(z, y).unwrap(),
        synthetic,
        config: InterferenceConfig {
            lambda,
            delta: 0.05,
            sigma_bar,
            sigma_mode,
            max_depth,
            ..Default::default()
        },
    }
}

/// Differences between an optimized fit and the reference, empty when equal.
pub fn reference_mismatches(fit: &InterferenceFit, reference: &ReferenceFit) -> Vec<String> {
    let mut out = Vec::new();
    let kept: BTreeSet<PatternKey> = fit.tree.kept_ids().map(|id| fit.index.key(id).clone()).collect();
    if kept != reference.kept {
        out.push(format!("kept keys {kept:?} vs {:?}", reference.kept));
    }
    for id in fit.tree.kept_ids() {
        let key = fit.index.key(id);
        if let Some(&f) = reference.f_hat.get(key) {
            if (fit.tree.stats(id).f_hat - f).abs() > 1e-12 {
                out.push(format!("f-hat of {key}: {} vs {f}", fit.tree.stats(id).f_hat));
            }
        }
    }
    for (i, (a, b)) in fit.nodes.iter().zip(&reference.nodes).enumerate() {
        if a.m_hat != b.m_hat || a.key != b.key || (a.f_hat - b.f_hat).abs() > 1e-12 {
            out.push(format!("node {i}: {a:?} vs {b:?}"));
        }
    }
    out
}

/// Structural violations of a fit's index and kept set, empty when sound.
pub fn structure_violations(fit: &InterferenceFit) -> Vec<String> {
    let index = &fit.index;
    let mut out = Vec::new();
    for id in 0..index.len() {
        let key = index.key(id);
        if fit.tree.is_kept(id) && id != ROOT {
            let parent = index.parent(id).expect("non-root key has a parent");
            if !fit.tree.is_kept(parent) {
                out.push(format!("{key} kept without its parent"));
            }
        }
        if let Some(parent) = index.parent(id) {
            if key.parent().ok().as_ref() != Some(index.key(parent)) {
                out.push(format!("{key} is not a one-count extension of {}", index.key(parent)));
            }
            let pm: BTreeSet<usize> = index.members(parent).iter().copied().collect();
            let pc: BTreeSet<usize> = index.controls(parent).iter().copied().collect();
            if !index.members(id).iter().all(|i| pm.contains(i)) || !index.controls(id).iter().all(|i| pc.contains(i)) {
                out.push(format!("{key} is not nested in its parent"));
            }
        }
        let mut seen = BTreeSet::new();
        for child in index.children(id) {
            for &i in index.members(child) {
                if !seen.insert(i) {
                    out.push(format!("node {i} in two children of {key}"));
                }
            }
        }
        for &i in index.members(id) {
            if !index.node_keys(i).contains(&id) {
                out.push(format!("node {i} is a member of {key} off its path"));
            }
        }
    }
    if !fit.tree.is_kept(ROOT) {
        out.push("root not kept".into());
    }
    for (i, node) in fit.nodes.iter().enumerate() {
        let on_path = index.node_keys(i).iter().any(|&id| index.key(id) == &node.key);
        if !on_path {
            out.push(format!("node {i} selected {} off its path", node.key));
        }
    }
    out
}

/// Relabels nodes by `perm` (old id `i` becomes `perm[i]`).
pub fn permute(graph: &Graph, obs: &Observations, labels: &[u8], perm: &[usize]) -> (Graph, Observations, Vec<u8>) {
    let n = graph.n();
    let edges: Vec<(usize, usize)> = graph.edges().into_iter().map(|(u, v)| (perm[u], perm[v])).collect();
    let (mut z, mut y, mut x, mut l) = (vec![0; n], vec![0.0; n], vec![0; n], vec![0; n]);
    for i in 0..n {
        z[perm[i]] = obs.z()[i];
        y[perm[i]] = obs.y()[i];
        x[perm[i]] = obs.x()[i];
        l[perm[i]] = labels[i];
    }
    (Graph::from_edges(n, &edges).unwrap(), Observations::new(z, y, x).unwrap(), l)
}

/// Deterministic permutation of `0..n` from a seed.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = (0..n)
        .map(|i| (StreamKey::new(seed, "perm", 0, i as u64).uniform(), i))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut perm = vec![0; n];
    for (new, &(_, old)) in keyed.iter().enumerate() {
        perm[old] = new;
    }
    perm
}
