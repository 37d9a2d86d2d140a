//! Treated-count signatures and the pattern tree built from them.
//!
//! A node's depth-`m` signature is the sequence of treated counts in its
//! distance layers `1..=m`. Signatures of one node are prefixes of each
//! other, so the set of observed signatures forms a tree rooted at the empty
//! sequence. [`PatternIndex`] stores that tree as a trie together with the
//! control membership set `V_g`, the full membership set `V̄_g` and the
//! cached control outcome sum of every key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Bfs, Graph};
use crate::observations::Observations;

/// Per-layer treated counts `(T_1, ..., T_m)`; the empty key is the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternKey(Vec<u32>);

impl PatternKey {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Drops the last count.
    pub fn parent(&self) -> Result<PatternKey> {
        match self.0.split_last() {
            Some((_, head)) => Ok(Self(head.to_vec())),
            None => Err(Error::RootHasNoParent),
        }
    }

    /// `self ⪰ ancestor`: `ancestor` is a prefix of `self` (reflexive).
    pub fn descends_from(&self, ancestor: &PatternKey) -> bool {
        self.0.starts_with(&ancestor.0)
    }

    pub fn truncated(&self, depth: usize) -> PatternKey {
        Self(self.0[..depth.min(self.0.len())].to_vec())
    }

    pub fn child(&self, count: u32) -> PatternKey {
        let mut counts = self.0.clone();
        counts.push(count);
        Self(counts)
    }
}

impl fmt::Display for PatternKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Depth-`depth` signature of `ego` under `labels`. Layers beyond the
/// eccentricity count as zero; the ego's own label never contributes.
pub fn signature(graph: &Graph, labels: &[u8], ego: usize, depth: usize) -> PatternKey {
    let counts = graph
        .bfs_layers(ego, depth)
        .iter()
        .map(|layer| layer.iter().filter(|&&j| labels[j] == 1).count() as u32)
        .collect();
    PatternKey(counts)
}

/// Treated counts of the nonempty layers `1..=min(max_depth, ecc(ego))`.
pub fn layer_counts(
    graph: &Graph,
    labels: &[u8],
    ego: usize,
    max_depth: usize,
    bfs: &mut Bfs,
) -> Vec<u32> {
    let mut counts = Vec::new();
    bfs.run(graph, ego, max_depth, |_, layer| {
        counts.push(layer.iter().filter(|&&j| labels[j] == 1).count() as u32)
    });
    counts
}

/// Layer counts of every node, computed in parallel.
pub fn all_layer_counts(graph: &Graph, labels: &[u8], max_depth: usize) -> Vec<Vec<u32>> {
    let n = graph.n();
    (0..n)
        .into_par_iter()
        .map_init(
            || Bfs::new(n),
            |bfs, ego| layer_counts(graph, labels, ego, max_depth, bfs),
        )
        .collect()
}

/// Keys produced by every node (treated or not) under synthetic labels,
/// plus the root.
pub fn build_synthetic_pattern_set(
    graph: &Graph,
    synthetic_labels: &[u8],
    max_depth: usize,
) -> Result<BTreeSet<PatternKey>> {
    check_labels(graph, synthetic_labels)?;
    check_depth(max_depth)?;
    let mut keys = BTreeSet::new();
    keys.insert(PatternKey::root());
    for path in all_layer_counts(graph, synthetic_labels, max_depth) {
        for m in 1..=path.len() {
            keys.insert(PatternKey(path[..m].to_vec()));
        }
    }
    Ok(keys)
}

fn check_labels(graph: &Graph, labels: &[u8]) -> Result<()> {
    if labels.len() != graph.n() {
        return Err(Error::Input(format!(
            "{} labels for a graph with {} nodes",
            labels.len(),
            graph.n()
        )));
    }
    Ok(())
}

fn check_depth(max_depth: usize) -> Result<()> {
    if max_depth == 0 {
        return Err(Error::Config("max depth must be at least 1".into()));
    }
    Ok(())
}

/// Arena slot of a key in a [`PatternIndex`].
pub type KeyId = usize;

#[derive(Debug, Clone)]
struct Entry {
    key: PatternKey,
    parent: Option<KeyId>,
    children: BTreeMap<u32, KeyId>,
    controls: Vec<usize>,
    members: Vec<usize>,
    control_sum: f64,
}

impl Entry {
    fn new(key: PatternKey, parent: Option<KeyId>) -> Self {
        Self {
            key,
            parent,
            children: BTreeMap::new(),
            controls: Vec::new(),
            members: Vec::new(),
            control_sum: 0.0,
        }
    }
}

/// Trie of pattern keys with membership sets and cached control sums.
#[derive(Debug, Clone)]
pub struct PatternIndex {
    n: usize,
    max_depth: usize,
    entries: Vec<Entry>,
    paths: Vec<Vec<u32>>,
    dropped: Vec<PatternKey>,
}

pub const ROOT: KeyId = 0;

impl PatternIndex {
    /// Keys are the signatures of control nodes at depths
    /// `1..=min(max_depth, ecc)`, plus the root.
    pub fn build(graph: &Graph, obs: &Observations, max_depth: usize) -> Result<Self> {
        check_labels(graph, obs.z())?;
        check_depth(max_depth)?;
        if obs.n_controls() == 0 {
            return Err(Error::NoControls);
        }
        let paths = all_layer_counts(graph, obs.z(), max_depth);
        let mut index = Self::empty(graph.n(), max_depth, paths);
        for i in (0..obs.len()).filter(|&i| !obs.is_treated(i)) {
            let path = index.paths[i].clone();
            index.insert_path(&path);
        }
        index.assign_members(obs);
        Ok(index)
    }

    /// Keys come from `synthetic_labels` over all nodes; memberships use the
    /// real labels in `obs`. Keys left without a real control are dropped and
    /// listed in [`PatternIndex::dropped`].
    pub fn build_decoupled(
        graph: &Graph,
        obs: &Observations,
        synthetic_labels: &[u8],
        max_depth: usize,
    ) -> Result<Self> {
        check_labels(graph, obs.z())?;
        check_labels(graph, synthetic_labels)?;
        check_depth(max_depth)?;
        if obs.n_controls() == 0 {
            return Err(Error::NoControls);
        }
        let paths = all_layer_counts(graph, obs.z(), max_depth);
        let mut index = Self::empty(graph.n(), max_depth, paths);
        for path in all_layer_counts(graph, synthetic_labels, max_depth) {
            index.insert_path(&path);
        }
        index.assign_members(obs);
        index.drop_uncontrolled();
        Ok(index)
    }

    fn empty(n: usize, max_depth: usize, paths: Vec<Vec<u32>>) -> Self {
        Self {
            n,
            max_depth,
            entries: vec![Entry::new(PatternKey::root(), None)],
            paths,
            dropped: Vec::new(),
        }
    }

    fn insert_path(&mut self, path: &[u32]) {
        let mut at = ROOT;
        for &count in path {
            at = match self.entries[at].children.get(&count) {
                Some(&child) => child,
                None => {
                    let id = self.entries.len();
                    let key = self.entries[at].key.child(count);
                    self.entries.push(Entry::new(key, Some(at)));
                    self.entries[at].children.insert(count, id);
                    id
                }
            };
        }
    }

    fn assign_members(&mut self, obs: &Observations) {
        for i in 0..obs.len() {
            let control = !obs.is_treated(i);
            let y = obs.y()[i];
            let mut at = Some(ROOT);
            let mut depth = 0;
            while let Some(id) = at {
                let entry = &mut self.entries[id];
                entry.members.push(i);
                if control {
                    entry.controls.push(i);
                    entry.control_sum += y;
                }
                at = self.paths[i]
                    .get(depth)
                    .and_then(|c| self.entries[id].children.get(c).copied());
                depth += 1;
            }
        }
    }

    fn drop_uncontrolled(&mut self) {
        if self.entries.iter().all(|e| !e.controls.is_empty()) {
            return;
        }
        let old = std::mem::take(&mut self.entries);
        let mut remap = vec![usize::MAX; old.len()];
        let mut order = Vec::with_capacity(old.len());
        let mut stack = vec![ROOT];
        while let Some(id) = stack.pop() {
            if old[id].controls.is_empty() {
                collect_subtree(&old, id, &mut self.dropped);
                continue;
            }
            remap[id] = order.len();
            order.push(id);
            stack.extend(old[id].children.values().rev());
        }
        let mut entries: Vec<Entry> = order.iter().map(|&id| old[id].clone()).collect();
        for entry in &mut entries {
            entry.parent = entry.parent.map(|p| remap[p]);
            entry.children = entry
                .children
                .iter()
                .filter(|(_, &c)| remap[c] != usize::MAX)
                .map(|(&count, &c)| (count, remap[c]))
                .collect();
        }
        self.entries = entries;
        self.dropped.sort();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn key(&self, id: KeyId) -> &PatternKey {
        &self.entries[id].key
    }

    pub fn parent(&self, id: KeyId) -> Option<KeyId> {
        self.entries[id].parent
    }

    pub fn children(&self, id: KeyId) -> impl Iterator<Item = KeyId> + '_ {
        self.entries[id].children.values().copied()
    }

    /// Control members `V_g`, ascending.
    pub fn controls(&self, id: KeyId) -> &[usize] {
        &self.entries[id].controls
    }

    /// All members `V̄_g`, ascending.
    pub fn members(&self, id: KeyId) -> &[usize] {
        &self.entries[id].members
    }

    pub fn control_sum(&self, id: KeyId) -> f64 {
        self.entries[id].control_sum
    }

    /// Real-label layer counts of node `i`, capped at the max depth.
    pub fn path(&self, i: usize) -> &[u32] {
        &self.paths[i]
    }

    /// Keys removed by the decoupled build for lack of real controls.
    pub fn dropped(&self) -> &[PatternKey] {
        &self.dropped
    }

    pub fn lookup(&self, key: &PatternKey) -> Option<KeyId> {
        let mut at = ROOT;
        for c in key.counts() {
            at = *self.entries[at].children.get(c)?;
        }
        Some(at)
    }

    pub fn keys(&self) -> impl Iterator<Item = &PatternKey> + '_ {
        self.entries.iter().map(|e| &e.key)
    }

    /// Key ids in depth-first order with children ascending by count.
    pub fn depth_first(&self) -> Vec<KeyId> {
        let mut out = Vec::with_capacity(self.entries.len());
        let mut stack = vec![ROOT];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.entries[id].children.values().rev());
        }
        out
    }

    /// Key ids along node `i`'s real signature path, root first.
    pub fn node_keys(&self, i: usize) -> Vec<KeyId> {
        let mut out = vec![ROOT];
        let mut at = ROOT;
        for c in &self.paths[i] {
            match self.entries[at].children.get(c) {
                Some(&child) => {
                    out.push(child);
                    at = child;
                }
                None => break,
            }
        }
        out
    }

    /// One line per key: `depth<TAB>counts<TAB>|V_g|<TAB>|V̄_g|`, depth-first.
    /// Only keys accepted by `filter` are written.
    pub fn write_dump<W: Write>(
        &self,
        out: &mut W,
        filter: impl Fn(KeyId) -> bool,
    ) -> std::io::Result<()> {
        for id in self.depth_first().into_iter().filter(|&id| filter(id)) {
            let e = &self.entries[id];
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                e.key.depth(),
                e.key,
                e.controls.len(),
                e.members.len()
            )?;
        }
        Ok(())
    }

    /// Nested JSON mirror of the trie, restricted to keys accepted by
    /// `filter` (a rejected key hides its subtree).
    pub fn dump_json(&self, filter: impl Fn(KeyId) -> bool) -> Option<DumpNode> {
        fn walk(index: &PatternIndex, id: KeyId, filter: &dyn Fn(KeyId) -> bool) -> Option<DumpNode> {
            if !filter(id) {
                return None;
            }
            let e = &index.entries[id];
            Some(DumpNode {
                depth: e.key.depth(),
                counts: e.key.clone(),
                n_controls: e.controls.len(),
                n_members: e.members.len(),
                children: e
                    .children
                    .values()
                    .filter_map(|&c| walk(index, c, filter))
                    .collect(),
            })
        }
        walk(self, ROOT, &filter)
    }
}

fn collect_subtree(entries: &[Entry], id: KeyId, into: &mut Vec<PatternKey>) {
    into.push(entries[id].key.clone());
    for &c in entries[id].children.values() {
        collect_subtree(entries, c, into);
    }
}

/// JSON form of one trie node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpNode {
    pub depth: usize,
    pub counts: PatternKey,
    pub n_controls: usize,
    pub n_members: usize,
    pub children: Vec<DumpNode>,
}
