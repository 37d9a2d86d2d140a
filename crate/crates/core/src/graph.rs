//! Undirected simple graphs, distance layers and deterministic generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Immutable undirected simple graph on dense node ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list, symmetrizing and deduplicating.
    /// Self-loops and out-of-range ids are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!(
                    "edge ({u},{v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Input(format!("self-loop at node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list.iter().filter(|&&v| v > u) {
                out.push((u, v));
            }
        }
        out
    }

    /// Nodes at shortest-path distance exactly `k` from `ego`, for `k = 1..=max_depth`.
    /// Always returns `max_depth` layers; layers past the eccentricity are empty.
    pub fn bfs_layers(&self, ego: usize, max_depth: usize) -> Vec<Vec<usize>> {
        let mut bfs = Bfs::new(self.n());
        let mut layers = Vec::with_capacity(max_depth);
        bfs.run(self, ego, max_depth, |_, layer| layers.push(layer.to_vec()));
        layers.resize(max_depth, Vec::new());
        for layer in &mut layers {
            layer.sort_unstable();
        }
        layers
    }

    /// All nodes within distance `radius` of `ego`, including `ego`.
    pub fn ball(&self, ego: usize, radius: usize) -> Vec<usize> {
        let mut out = vec![ego];
        let mut bfs = Bfs::new(self.n());
        bfs.run(self, ego, radius, |_, layer| out.extend_from_slice(layer));
        out.sort_unstable();
        out
    }

    pub fn eccentricity(&self, ego: usize) -> usize {
        let mut bfs = Bfs::new(self.n());
        let mut ecc = 0;
        bfs.run(self, ego, usize::MAX, |depth, _| ecc = depth);
        ecc
    }

    /// Largest eccentricity over all nodes (per connected component).
    pub fn diameter(&self) -> usize {
        let mut bfs = Bfs::new(self.n());
        let mut diameter = 0;
        for ego in 0..self.n() {
            bfs.run(self, ego, usize::MAX, |depth, _| diameter = diameter.max(depth));
        }
        diameter
    }

    /// 4-neighbour grid on `rows x cols` nodes, node id `r * cols + c`.
    /// On a torus parallel wraparound edges collapse into one simple edge.
    pub fn lattice(rows: usize, cols: usize, torus: bool) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::Input(format!(
                "lattice needs rows, cols >= 2, got {rows}x{cols}"
            )));
        }
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                } else if torus {
                    edges.push((id(r, c), id(r, 0)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                } else if torus {
                    edges.push((id(r, c), id(0, c)));
                }
            }
        }
        Self::from_edges(rows * cols, &edges)
    }

    /// G(n, p): each unordered pair is drawn from its own counter-based stream.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("erdos_renyi needs n >= 1".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!("edge probability {p} outside [0, 1]")));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            let row = StreamKey::new(seed, "edge", 0, u as u64);
            for v in (u + 1)..n {
                if row.child(v as u64).uniform() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::from_edges(n, &edges)
    }
}

/// Reusable breadth-first search workspace (generation-stamped visit marks).
#[derive(Debug, Clone)]
pub struct Bfs {
    stamp: Vec<u32>,
    generation: u32,
    current: Vec<usize>,
    next: Vec<usize>,
}

impl Bfs {
    pub fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            generation: 0,
            current: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Visits the nonempty layers `1..=max_depth` around `ego`, calling
    /// `visit(depth, layer)`. Layer order inside a call is unspecified.
    pub fn run<F>(&mut self, graph: &Graph, ego: usize, max_depth: usize, mut visit: F)
    where
        F: FnMut(usize, &[usize]),
    {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        let generation = self.generation;
        self.stamp[ego] = generation;
        self.current.clear();
        self.current.push(ego);
        let mut depth = 0;
        while depth < max_depth {
            self.next.clear();
            for &u in &self.current {
                for &v in graph.neighbors(u) {
                    if self.stamp[v] != generation {
                        self.stamp[v] = generation;
                        self.next.push(v);
                    }
                }
            }
            if self.next.is_empty() {
                break;
            }
            depth += 1;
            visit(depth, &self.next);
            std::mem::swap(&mut self.current, &mut self.next);
        }
    }
}

/// Serializable description of a generated graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSpec {
    Lattice { rows: usize, cols: usize, torus: bool },
    ErdosRenyi { n: usize, p: f64 },
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph> {
        match *self {
            GraphSpec::Lattice { rows, cols, torus } => Graph::lattice(rows, cols, torus),
            GraphSpec::ErdosRenyi { n, p } => Graph::erdos_renyi(n, p, seed),
        }
    }
}
