//! Adaptive interference estimation.
//!
//! Control outcomes are averaged per pattern key, the pattern tree is pruned
//! with a Lepski-type rule that keeps a key only when some descendant of it
//! and some descendant of its parent disagree by more than their combined
//! noise radii, and every node is finally assigned the deepest kept key along
//! its own signature path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Bfs, Graph};
use crate::observations::Observations;
use crate::patterns::{KeyId, PatternIndex, PatternKey, ROOT};

pub const DEFAULT_MAX_DEPTH_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    #[default]
    Supplied,
    /// Sample standard deviation of all control outcomes.
    PooledControlSd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PatternSource {
    #[default]
    Observed,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceConfig {
    pub lambda: f64,
    pub delta: f64,
    pub sigma_bar: f64,
    pub sigma_mode: SigmaMode,
    /// `None` means `min(diameter, 10)`.
    pub max_depth: Option<usize>,
    pub pattern_source: PatternSource,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            delta: 0.05,
            sigma_bar: 1.0,
            sigma_mode: SigmaMode::Supplied,
            max_depth: None,
            pattern_source: PatternSource::Observed,
        }
    }
}

impl InterferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_nan() || self.lambda <= 1.0 || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must exceed 1, got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.sigma_mode == SigmaMode::Supplied && !(self.sigma_bar > 0.0 && self.sigma_bar.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_bar must be positive, got {}",
                self.sigma_bar
            )));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max depth must be at least 1".into()));
        }
        Ok(())
    }

    /// Fixes sigma and the depth cap against the data.
    pub fn resolve(&self, graph: &Graph, obs: &Observations) -> Result<ResolvedConfig> {
        self.validate()?;
        let sigma_bar = match self.sigma_mode {
            SigmaMode::Supplied => self.sigma_bar,
            SigmaMode::PooledControlSd => pooled_control_sd(obs)?,
        };
        let max_depth = match self.max_depth {
            Some(m) => m,
            None => graph.diameter().clamp(1, DEFAULT_MAX_DEPTH_CAP),
        };
        Ok(ResolvedConfig {
            lambda: self.lambda,
            delta: self.delta,
            sigma_bar,
            sigma_mode: self.sigma_mode,
            max_depth,
            pattern_source: self.pattern_source,
        })
    }
}

/// Configuration with sigma and depth cap fixed; echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub lambda: f64,
    pub delta: f64,
    pub sigma_bar: f64,
    pub sigma_mode: SigmaMode,
    pub max_depth: usize,
    pub pattern_source: PatternSource,
}

fn pooled_control_sd(obs: &Observations) -> Result<f64> {
    let ys: Vec<f64> = (0..obs.len())
        .filter(|&i| !obs.is_treated(i))
        .map(|i| obs.y()[i])
        .collect();
    if ys.is_empty() {
        return Err(Error::NoControls);
    }
    if ys.len() == 1 {
        return Ok(0.0);
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>();
    Ok((ss / (ys.len() - 1) as f64).sqrt())
}

/// Noise radius `σ̄ · sqrt(2 log(2n²/δ) / |V_g|)`.
pub fn alpha(n_controls: usize, sigma_bar: f64, delta: f64, n: usize) -> f64 {
    let n = n as f64;
    sigma_bar * (2.0 * (2.0 * n * n / delta).ln() / n_controls as f64).sqrt()
}

/// Mean of the control outcomes in `V_g`.
pub fn leaf_mean(index: &PatternIndex, id: KeyId) -> Result<f64> {
    let count = index.controls(id).len();
    if count == 0 {
        return Err(Error::UnestimableKey(index.key(id).to_string()));
    }
    Ok(index.control_sum(id) / count as f64)
}

/// The pruning inequality exactly as stated:
/// `|f' - f''| > λ σ̄ sqrt(2 log(2n²/δ)) (1/sqrt|V'| + 1/sqrt|V''|)`.
fn separated(f1: f64, v1: usize, f2: f64, v2: usize, cfg: &ResolvedConfig, n: usize) -> bool {
    let n = n as f64;
    let scale = cfg.lambda * cfg.sigma_bar * (2.0 * (2.0 * n * n / cfg.delta).ln()).sqrt();
    (f1 - f2).abs() > scale * (1.0 / (v1 as f64).sqrt() + 1.0 / (v2 as f64).sqrt())
}

/// Per-key statistics cached by [`prune`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyStats {
    pub f_hat: f64,
    pub n_controls: usize,
    pub alpha: f64,
}

/// The kept set `K̂` over the keys of a [`PatternIndex`].
#[derive(Debug, Clone)]
pub struct PrunedTree {
    kept: Vec<bool>,
    stats: Vec<KeyStats>,
}

impl PrunedTree {
    pub fn is_kept(&self, id: KeyId) -> bool {
        self.kept[id]
    }

    pub fn stats(&self, id: KeyId) -> KeyStats {
        self.stats[id]
    }

    pub fn kept_ids(&self) -> impl Iterator<Item = KeyId> + '_ {
        self.kept.iter().enumerate().filter(|(_, &k)| k).map(|(id, _)| id)
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }
}

/// Keeps `g` when some `g' ⪰ g` and `g'' ⪰ par(g)` in the index satisfy the
/// strict separation inequality. The root is always kept.
///
/// Each key is first decided from subtree envelopes of `f̂ ∓ λα`, which is
/// equivalent to the pairwise scan; keys whose envelope margin falls inside
/// a rounding band are re-decided by the literal pairwise scan.
pub fn prune(index: &PatternIndex, cfg: &ResolvedConfig) -> PrunedTree {
    let n = index.n();
    let stats: Vec<KeyStats> = (0..index.len())
        .map(|id| {
            let n_controls = index.controls(id).len();
            KeyStats {
                f_hat: leaf_mean(index, id).unwrap_or(f64::NAN),
                n_controls,
                alpha: alpha(n_controls, cfg.sigma_bar, cfg.delta, n),
            }
        })
        .collect();

    // subtree envelopes, children after parents in depth-first order
    let order = index.depth_first();
    let mut max_low = vec![f64::NEG_INFINITY; index.len()];
    let mut min_high = vec![f64::INFINITY; index.len()];
    let mut scale: f64 = 1.0;
    for &id in order.iter().rev() {
        let s = stats[id];
        if s.n_controls == 0 {
            continue;
        }
        let radius = cfg.lambda * s.alpha;
        scale = scale.max(s.f_hat.abs() + radius);
        let mut lo = s.f_hat - radius;
        let mut hi = s.f_hat + radius;
        for c in index.children(id) {
            lo = lo.max(max_low[c]);
            hi = hi.min(min_high[c]);
        }
        max_low[id] = lo;
        min_high[id] = hi;
    }
    let band = 1e-9 * scale;

    let kept: Vec<bool> = (0..index.len())
        .into_par_iter()
        .map(|id| {
            let Some(parent) = index.parent(id) else {
                return true;
            };
            let margin = (max_low[id] - min_high[parent]).max(max_low[parent] - min_high[id]);
            if margin > band {
                true
            } else if margin < -band {
                false
            } else {
                pairwise_witness(index, &stats, id, parent, cfg, n)
            }
        })
        .collect();

    debug_assert!((0..index.len()).all(|id| !kept[id] || index.parent(id).is_none_or(|p| kept[p])));
    PrunedTree { kept, stats }
}

fn subtree(index: &PatternIndex, id: KeyId) -> Vec<KeyId> {
    let mut out = Vec::new();
    let mut stack = vec![id];
    while let Some(at) = stack.pop() {
        out.push(at);
        stack.extend(index.children(at));
    }
    out
}

fn pairwise_witness(
    index: &PatternIndex,
    stats: &[KeyStats],
    id: KeyId,
    parent: KeyId,
    cfg: &ResolvedConfig,
    n: usize,
) -> bool {
    let under_parent: Vec<KeyId> = subtree(index, parent)
        .into_iter()
        .filter(|&k| stats[k].n_controls > 0)
        .collect();
    subtree(index, id)
        .into_iter()
        .filter(|&k| stats[k].n_controls > 0)
        .any(|a| {
            under_parent.iter().any(|&b| {
                separated(
                    stats[a].f_hat,
                    stats[a].n_controls,
                    stats[b].f_hat,
                    stats[b].n_controls,
                    cfg,
                    n,
                )
            })
        })
}

/// Selected depth, key and interference estimate of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFit {
    pub m_hat: usize,
    pub key: PatternKey,
    pub f_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub d_n: usize,
    /// Nodes whose selection fell back to the root.
    pub fallback_count: usize,
    pub n_keys: usize,
    pub n_kept: usize,
    /// Synthetic keys removed for lack of real controls.
    pub dropped_keys: Vec<PatternKey>,
}

/// Result of an interference fit.
#[derive(Debug, Clone)]
pub struct InterferenceFit {
    pub config: ResolvedConfig,
    pub index: PatternIndex,
    pub tree: PrunedTree,
    pub nodes: Vec<NodeFit>,
    pub diagnostics: Diagnostics,
}

impl InterferenceFit {
    pub fn f_hat(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.f_hat).collect()
    }

    pub fn m_hat(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.m_hat).collect()
    }

    /// Kept keys in depth-first order.
    pub fn kept_keys(&self) -> Vec<KeptKey> {
        self.index
            .depth_first()
            .into_iter()
            .filter(|&id| self.tree.is_kept(id))
            .map(|id| {
                let s = self.tree.stats(id);
                KeptKey {
                    counts: self.index.key(id).clone(),
                    n_controls: s.n_controls,
                    n_members: self.index.members(id).len(),
                    f_hat: s.f_hat,
                    alpha: s.alpha,
                }
            })
            .collect()
    }

    /// SHA-256 of the kept-key table.
    pub fn digest(&self) -> String {
        let table = serde_json::to_vec(&self.kept_keys()).expect("kept keys serialize");
        hex::encode(Sha256::digest(&table))
    }

    pub fn report(&self, obs: &Observations) -> FitReport {
        FitReport {
            schema_version: crate::SCHEMA_VERSION,
            config: self.config.clone(),
            kept_keys: self.kept_keys(),
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, nf)| NodeRow {
                    id,
                    z: obs.z()[id],
                    m_hat: nf.m_hat,
                    f_hat: nf.f_hat,
                })
                .collect(),
            diagnostics: self.diagnostics.clone(),
            digest: self.digest(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeptKey {
    pub counts: PatternKey,
    pub n_controls: usize,
    pub n_members: usize,
    pub f_hat: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub id: usize,
    pub z: u8,
    pub m_hat: usize,
    pub f_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub config: ResolvedConfig,
    pub kept_keys: Vec<KeptKey>,
    pub nodes: Vec<NodeRow>,
    pub diagnostics: Diagnostics,
    pub digest: String,
}

/// Builds the observed pattern index, prunes it and selects per-node depths.
/// With `pattern_source = synthetic` use [`fit_decoupled`] instead.
pub fn fit(graph: &Graph, obs: &Observations, config: &InterferenceConfig) -> Result<InterferenceFit> {
    if config.pattern_source == PatternSource::Synthetic {
        return Err(Error::Config(
            "synthetic pattern source requires synthetic labels (use fit_decoupled)".into(),
        ));
    }
    let cfg = config.resolve(graph, obs)?;
    let index = PatternIndex::build(graph, obs, cfg.max_depth)?;
    Ok(finish(graph, cfg, index))
}

/// Key set from `synthetic_labels` (drawn independently of outcomes and
/// treatments); memberships, means and pruning from the real data.
pub fn fit_decoupled(
    graph: &Graph,
    obs: &Observations,
    synthetic_labels: &[u8],
    config: &InterferenceConfig,
) -> Result<InterferenceFit> {
    let mut cfg = config.resolve(graph, obs)?;
    cfg.pattern_source = PatternSource::Synthetic;
    let index = PatternIndex::build_decoupled(graph, obs, synthetic_labels, cfg.max_depth)?;
    Ok(finish(graph, cfg, index))
}

fn finish(graph: &Graph, cfg: ResolvedConfig, index: PatternIndex) -> InterferenceFit {
    let tree = prune(&index, &cfg);
    let nodes: Vec<NodeFit> = (0..index.n())
        .into_par_iter()
        .map(|i| select(&index, &tree, i))
        .collect();
    let m_hats: Vec<usize> = nodes.iter().map(|n| n.m_hat).collect();
    let diagnostics = Diagnostics {
        d_n: compute_dn(graph, &m_hats),
        fallback_count: m_hats.iter().filter(|&&m| m == 0).count(),
        n_keys: index.len(),
        n_kept: tree.kept_count(),
        dropped_keys: index.dropped().to_vec(),
    };
    InterferenceFit {
        config: cfg,
        index,
        tree,
        nodes,
        diagnostics,
    }
}

/// Deepest kept key on node `i`'s signature path; the root otherwise.
fn select(index: &PatternIndex, tree: &PrunedTree, i: usize) -> NodeFit {
    let best = index
        .node_keys(i)
        .into_iter()
        .filter(|&id| tree.is_kept(id))
        .max_by_key(|&id| index.key(id).depth())
        .unwrap_or(ROOT);
    let key = index.key(best).clone();
    NodeFit {
        m_hat: key.depth(),
        key,
        f_hat: tree.stats(best).f_hat,
    }
}

/// Largest number of selected neighbourhoods (`m̂_k`-hop balls) that contain
/// a single node.
pub fn compute_dn(graph: &Graph, m_hats: &[usize]) -> usize {
    let mut hits = vec![0usize; graph.n()];
    let mut bfs = Bfs::new(graph.n());
    for (ego, &m) in m_hats.iter().enumerate() {
        hits[ego] += 1;
        bfs.run(graph, ego, m, |_, layer| {
            for &j in layer {
                hits[j] += 1;
            }
        });
    }
    hits.into_iter().max().unwrap_or(0)
}
