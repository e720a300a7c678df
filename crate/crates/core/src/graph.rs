//! Undirected weighted simple graphs in compressed sparse row form.
//!
//! Both orientations of every edge are stored, so `W` is available row-wise.
//! Only strictly positive weights are kept; a pair whose summed weight is zero
//! is not an edge. Nodes carry their original (external) ids so that results
//! can be reported in the caller's numbering.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::compensated_sum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(u64),
    #[error("invalid weight {weight} on edge ({u}, {v}): weights must be finite and nonnegative")]
    InvalidWeight { u: u64, v: u64, weight: f64 },
    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("node {0} is isolated (zero strength)")]
    IsolatedNode(u64),
    #[error("edge probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("graph needs at least {required} nodes, got {actual}")]
    TooFewNodes { required: usize, actual: usize },
    #[error("scale factor {0} must be finite and positive")]
    InvalidScale(f64),
}

/// Collects edges keyed by external node ids and produces a [`Graph`].
///
/// Duplicate edges are summed. Node ids are relabeled to `0..n` in ascending
/// id order.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    nodes: BTreeMap<u64, ()>,
    edges: Vec<(u64, u64, f64)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a node that may have no edges.
    pub fn add_node(&mut self, id: u64) -> &mut Self {
        self.nodes.insert(id, ());
        self
    }

    pub fn add_edge(&mut self, u: u64, v: u64, weight: f64) -> Result<&mut Self, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(GraphError::InvalidWeight { u, v, weight });
        }
        self.nodes.insert(u, ());
        self.nodes.insert(v, ());
        self.edges.push((u.min(v), u.max(v), weight));
        Ok(self)
    }

    pub fn build(self) -> Graph {
        let node_ids: Vec<u64> = self.nodes.keys().copied().collect();
        let index = |id: u64| node_ids.binary_search(&id).expect("registered node");
        let edges = self
            .edges
            .into_iter()
            .map(|(u, v, w)| (index(u), index(v), w))
            .collect();
        Graph::assemble(node_ids, edges)
    }
}

/// Immutable sparse undirected weighted simple graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    edge_count: usize,
    node_ids: Vec<u64>,
}

impl Graph {
    /// Builds a graph on nodes `0..n` (external ids equal to indices).
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut checked = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            for index in [u, v] {
                if index >= n {
                    return Err(GraphError::NodeOutOfRange { index, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u as u64));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(GraphError::InvalidWeight {
                    u: u as u64,
                    v: v as u64,
                    weight: w,
                });
            }
            checked.push((u.min(v), u.max(v), w));
        }
        Ok(Self::assemble((0..n as u64).collect(), checked))
    }

    /// Like [`from_edges`](Self::from_edges) but with explicit external ids.
    pub fn from_edges_with_ids(
        node_ids: Vec<u64>,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, GraphError> {
        let mut g = Self::from_edges(node_ids.len(), edges)?;
        g.node_ids = node_ids;
        Ok(g)
    }

    /// `edges` must be `(min, max, w)` with valid indices and weights.
    fn assemble(node_ids: Vec<u64>, mut edges: Vec<(usize, usize, f64)>) -> Self {
        let n = node_ids.len();
        edges.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => merged.push((u, v, w)),
            }
        }
        merged.retain(|e| e.2 > 0.0);

        let mut degree = vec![0usize; n];
        for &(u, v, _) in &merged {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let nnz = *offsets.last().unwrap();
        let mut targets = vec![0usize; nnz];
        let mut weights = vec![0.0; nnz];
        let mut cursor = offsets[..n].to_vec();
        // Lexicographic (u, v) order fills each row in ascending column order:
        // row r first receives its lower neighbors (as the `v` side, in order
        // of `u`), then its upper neighbors.
        let mut by_target: Vec<(usize, usize, f64)> = merged.iter().map(|&(u, v, w)| (v, u, w)).collect();
        by_target.sort_by_key(|e| (e.0, e.1));
        for &(v, u, w) in &by_target {
            targets[cursor[v]] = u;
            weights[cursor[v]] = w;
            cursor[v] += 1;
        }
        for &(u, v, w) in &merged {
            targets[cursor[u]] = v;
            weights[cursor[u]] = w;
            cursor[u] += 1;
        }
        Self {
            offsets,
            targets,
            weights,
            edge_count: merged.len(),
            node_ids,
        }
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// Number of unordered pairs with positive weight.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    /// Neighbors of `i` in ascending index order, with weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// `W_ij`, zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.targets[range.clone()].binary_search(&j) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    pub(crate) fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    pub fn strengths(&self) -> StrengthVector {
        let per_node: Vec<f64> = (0..self.n())
            .map(|i| compensated_sum(self.neighbors(i).map(|(_, w)| w)))
            .collect();
        let total = compensated_sum(per_node.iter().copied());
        StrengthVector { per_node, total }
    }

    /// `W_N = S^{-1/2} W S^{-1/2}` on the same sparsity pattern.
    pub fn normalize_weights(&self) -> Result<Graph, GraphError> {
        let strengths = self.strengths();
        if let Some(i) = strengths.per_node.iter().position(|&s| s <= 0.0) {
            return Err(GraphError::IsolatedNode(self.node_ids[i]));
        }
        let root: Vec<f64> = strengths.per_node.iter().map(|&s| libm::sqrt(s)).collect();
        let mut out = self.clone();
        for i in 0..self.n() {
            for p in self.offsets[i]..self.offsets[i + 1] {
                let j = self.targets[p];
                out.weights[p] = self.weights[p] / (root[i] * root[j]);
            }
        }
        Ok(out)
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scale_weights(&self, factor: f64) -> Result<Graph, GraphError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(GraphError::InvalidScale(factor));
        }
        let mut out = self.clone();
        for w in &mut out.weights {
            *w *= factor;
        }
        Ok(out)
    }

    pub fn connected_components(&self) -> ComponentLabeling {
        components_from_csr(&self.offsets, &self.targets, |p| self.weights[p] > 0.0)
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.connected_components().count == 1
    }

    /// Subgraph induced by `nodes` (indices, any order). External ids are kept;
    /// the result is indexed in ascending order of the given indices.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut keep: Vec<usize> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut position = vec![usize::MAX; self.n()];
        for (new, &old) in keep.iter().enumerate() {
            position[old] = new;
        }
        let edges = self
            .edges()
            .filter(|&(i, j, _)| position[i] != usize::MAX && position[j] != usize::MAX)
            .map(|(i, j, w)| (position[i], position[j], w))
            .collect();
        let ids = keep.iter().map(|&i| self.node_ids[i]).collect();
        Graph::assemble(ids, edges)
    }

    /// The largest connected component; ties go to the component containing
    /// the smallest node index.
    pub fn largest_component(&self) -> Graph {
        let labels = self.connected_components();
        let best = (0..labels.count)
            .max_by(|&a, &b| labels.sizes[a].cmp(&labels.sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let members: Vec<usize> = (0..self.n()).filter(|&i| labels.labels[i] == best).collect();
        self.induced_subgraph(&members)
    }
}

pub(crate) fn components_from_csr(
    offsets: &[usize],
    targets: &[usize],
    is_edge: impl Fn(usize) -> bool,
) -> ComponentLabeling {
    let n = offsets.len() - 1;
    let mut labels = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for root in 0..n {
        if labels[root] != usize::MAX {
            continue;
        }
        let label = sizes.len();
        labels[root] = label;
        let mut size = 0;
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            size += 1;
            for p in offsets[i]..offsets[i + 1] {
                let j = targets[p];
                if j != i && is_edge(p) && labels[j] == usize::MAX {
                    labels[j] = label;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    ComponentLabeling {
        count: sizes.len(),
        labels,
        sizes,
    }
}

/// Per-node strengths `s_i = sum_j W_ij` and their total `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthVector {
    pub per_node: Vec<f64>,
    pub total: f64,
}

/// Connected components over positive-weight edges. Labels are numbered in
/// order of each component's smallest node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<usize>,
    /// Number of components (`delta`).
    pub count: usize,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn members(&self, label: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |&(_, &l)| l == label)
            .map(|(i, _)| i)
    }
}

/// Outcome of [`erdos_renyi`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErdosRenyiSample {
    pub graph: Graph,
    /// Samples drawn, including the accepted one.
    pub attempts: usize,
    /// Every attempt was disconnected and `graph` is the largest component
    /// of the last one.
    pub fell_back_to_largest_component: bool,
}

/// Resampling budget before [`erdos_renyi`] settles for the largest component.
pub const ER_MAX_ATTEMPTS: usize = 100;

/// `G(n, p)` with unit weights, resampled until connected.
///
/// Attempt `a` draws from ChaCha8 stream `a` of `seed`, so output is a pure
/// function of `(n, p, seed)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<ErdosRenyiSample, GraphError> {
    if n < 2 {
        return Err(GraphError::TooFewNodes { required: 2, actual: n });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::InvalidProbability(p));
    }
    let mut last = None;
    for attempt in 0..ER_MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let graph = sample_gnp(n, p, &mut rng);
        if graph.is_connected() {
            return Ok(ErdosRenyiSample {
                graph,
                attempts: attempt + 1,
                fell_back_to_largest_component: false,
            });
        }
        last = Some(graph);
    }
    let graph = last.expect("at least one attempt").largest_component();
    Ok(ErdosRenyiSample {
        graph,
        attempts: ER_MAX_ATTEMPTS,
        fell_back_to_largest_component: true,
    })
}

/// One `G(n, p)` draw using geometric skips between successive included pairs.
fn sample_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    if p >= 1.0 {
        for v in 1..n {
            for w in 0..v {
                edges.push((w, v, 1.0));
            }
        }
    } else {
        // Pairs (w, v) with w < v enumerated row by row; each skip length is
        // geometric with success probability p.
        let log_q = libm::log(1.0 - p);
        let mut v: usize = 1;
        let mut w: i64 = -1;
        while v < n {
            let r: f64 = rng.random();
            let skip = libm::floor(libm::log(1.0 - r) / log_q);
            w += 1 + skip as i64;
            while v < n && w >= v as i64 {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((w as usize, v, 1.0));
            }
        }
    }
    Graph::assemble((0..n as u64).collect(), edges)
}
