//! User-guided spectral clustering as a resumable state machine.
//!
//! A session normalizes the input weights to `W_N = S^{-1/2} W S^{-1/2}`,
//! builds the Laplacian of `W_N`, and then, one [`Session::step`] at a time,
//! adds one eigenpair, clusters the rows of `V_K` into `K` groups and scores
//! the result. Clustering starts at `K = 2`. The caller decides when to
//! [`Session::stop`].
//!
//! On a disconnected graph with `delta` components the kernel already holds
//! `delta` eigenpairs; steps up to `K = delta` reuse them and later steps
//! extend the basis as usual, so the history still reads `2, 3, ...`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::clock::Clock;
use crate::cluster::{kmeans, normalize_rows, ClusterAssignment, ClusterError, KMeansConfig};
use crate::eigensolve::{extend_basis, kernel_basis, EigenBasis, SolveError, SolverConfig};
use crate::graph::{Graph, GraphError};
use crate::laplacian::{LaplacianKind, LaplacianMatrix};
use crate::metrics::{metrics_bundle, MetricsError, MetricsRecord};

/// Graph on which modularity and normalized cut are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MetricGraph {
    /// The input weights `W`.
    #[default]
    Original,
    /// The normalized weights `W_N` the Laplacian is built from.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionConfig {
    pub kind: LaplacianKind,
    pub solver: SolverConfig,
    pub metric_graph: MetricGraph,
    pub kmeans: KMeansConfig,
    /// Scale embedding rows to unit length before k-means.
    pub normalize_rows: bool,
    /// Optional cap on `K`; `None` lets the session run to `n`.
    pub k_max: Option<usize>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            kind: LaplacianKind::Unnormalized,
            solver: SolverConfig::lanczos(),
            metric_graph: MetricGraph::Original,
            kmeans: KMeansConfig::default(),
            normalize_rows: false,
            k_max: None,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        self.solver.validate()?;
        if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
            return Err(SessionError::InvalidConfig("kmeans restarts and max_iter must be at least 1"));
        }
        if matches!(self.k_max, Some(k) if k < 2) {
            return Err(SessionError::InvalidConfig("k_max must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SessionStatus {
    Running,
    Stopped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryEntry {
    pub k: usize,
    pub assignment: ClusterAssignment,
    pub metrics: MetricsRecord,
    /// Time spent extending the eigenbasis.
    pub solve_nanos: u64,
    /// Whole step: eigenpair, k-means and metrics.
    pub step_nanos: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalReport {
    pub k: usize,
    pub assignment: ClusterAssignment,
    pub metrics: MetricsRecord,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph has {0} nodes; clustering needs at least 2")]
    TooSmall(usize),
    #[error("session is stopped")]
    Stopped,
    #[error("session failed earlier: {0}")]
    Failed(String),
    #[error("no clustering has been computed yet")]
    NoHistory,
    #[error("spectrum exhausted: K = {n} is the last step")]
    SpectrumExhausted { n: usize },
    #[error("K cap {0} reached")]
    KMaxReached(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("snapshot is inconsistent: {0}")]
    BadSnapshot(&'static str),
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    graph: Graph,
    normalized: Graph,
    laplacian: LaplacianMatrix,
    basis: EigenBasis,
    history: Vec<HistoryEntry>,
    status: SessionStatus,
    warnings: Vec<String>,
}

fn mix(seed: u64, k: usize) -> u64 {
    let mut z = seed.wrapping_add((k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Session {
    pub fn new(graph: Graph, config: SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        if graph.n() < 2 {
            return Err(SessionError::TooSmall(graph.n()));
        }
        let normalized = graph.normalize_weights()?;
        let laplacian = LaplacianMatrix::new(&normalized, config.kind)?;
        let labeling = laplacian.connected_components();
        let mut warnings = Vec::new();
        if labeling.count > 1 {
            warnings.push(format!(
                "graph has {} connected components; the kernel holds {} eigenpairs",
                labeling.count, labeling.count
            ));
        }
        let basis = kernel_basis(&laplacian, &labeling);
        Ok(Self {
            config,
            graph,
            normalized,
            laplacian,
            basis,
            history: Vec::new(),
            status: SessionStatus::Running,
            warnings,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn normalized_graph(&self) -> &Graph {
        &self.normalized
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn status(&self) -> &SessionStatus {
        &self.status
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Number of eigenpairs held.
    pub fn k_current(&self) -> usize {
        self.basis.k()
    }

    /// `K` of the latest clustering, if any.
    pub fn last_k(&self) -> Option<usize> {
        self.history.last().map(|h| h.k)
    }

    pub fn entry(&self, k: usize) -> Option<&HistoryEntry> {
        self.history.iter().find(|h| h.k == k)
    }

    fn check_running(&self) -> Result<(), SessionError> {
        match &self.status {
            SessionStatus::Running => Ok(()),
            SessionStatus::Stopped => Err(SessionError::Stopped),
            SessionStatus::Failed(reason) => Err(SessionError::Failed(reason.clone())),
        }
    }

    /// Advances to the next `K`. A solver failure marks the session failed;
    /// the history up to that point is kept.
    pub fn step<C: Clock + ?Sized>(&mut self, clock: &C) -> Result<&HistoryEntry, SessionError> {
        self.check_running()?;
        let n = self.graph.n();
        let k = self.last_k().map_or(2, |k| k + 1);
        if k > n {
            return Err(SessionError::SpectrumExhausted { n });
        }
        if let Some(cap) = self.config.k_max {
            if k > cap {
                return Err(SessionError::KMaxReached(cap));
            }
        }
        let started = clock.now_nanos();
        while self.basis.k() < k {
            if let Err(e) = extend_basis(&self.laplacian, &mut self.basis, &self.config.solver) {
                self.status = SessionStatus::Failed(format!("{e}"));
                return Err(e.into());
            }
        }
        let solved = clock.now_nanos();
        let mut rows = self.basis.embedding(k);
        if self.config.normalize_rows {
            normalize_rows(&mut rows, k);
        }
        let km = KMeansConfig {
            seed: mix(self.config.kmeans.seed, k),
            ..self.config.kmeans
        };
        let assignment = kmeans(&rows, k, k, &km)?;
        let metric_graph = match self.config.metric_graph {
            MetricGraph::Original => &self.graph,
            MetricGraph::Normalized => &self.normalized,
        };
        let metrics = metrics_bundle(metric_graph, &self.basis, &self.laplacian, &assignment)?;
        let finished = clock.now_nanos();
        self.history.push(HistoryEntry {
            k,
            assignment,
            metrics,
            solve_nanos: solved.saturating_sub(started),
            step_nanos: finished.saturating_sub(started),
        });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Ends the session and reports the latest clustering.
    pub fn stop(&mut self) -> Result<FinalReport, SessionError> {
        if self.status == SessionStatus::Stopped {
            return Err(SessionError::Stopped);
        }
        let last = self.history.last().ok_or(SessionError::NoHistory)?.clone();
        self.status = SessionStatus::Stopped;
        Ok(FinalReport {
            k: last.k,
            assignment: last.assignment,
            metrics: last.metrics,
            history: self.history.clone(),
        })
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            config: self.config,
            node_ids: self.graph.node_ids().to_vec(),
            edges: self.graph.edges().collect(),
            basis_values: self.basis.values().to_vec(),
            basis_vectors: self.basis.vectors().to_vec(),
            history: self.history.clone(),
            status: self.status.clone(),
        }
    }

    /// Rebuilds a session from a snapshot; continuing it gives the same
    /// results as continuing the original.
    pub fn restore(snapshot: SessionSnapshot) -> Result<Self, SessionError> {
        let graph = Graph::from_edges_with_ids(snapshot.node_ids, &snapshot.edges)?;
        let mut session = Self::new(graph, snapshot.config)?;
        let kernel_dim = session.basis.kernel_dim();
        let n = session.graph.n();
        let basis = EigenBasis::from_parts(
            session.laplacian.kind(),
            n,
            kernel_dim,
            session.laplacian.total_strength(),
            session.laplacian.spectral_shift(),
            snapshot.basis_values,
            snapshot.basis_vectors,
        )
        .ok_or(SessionError::BadSnapshot("basis dimensions"))?;
        if basis.k() < kernel_dim {
            return Err(SessionError::BadSnapshot("basis smaller than the kernel"));
        }
        for (i, h) in snapshot.history.iter().enumerate() {
            if h.k != i + 2 || h.assignment.labels().len() != n || h.k > basis.k() {
                return Err(SessionError::BadSnapshot("history"));
            }
        }
        let expected = snapshot.history.last().map_or(kernel_dim, |h| h.k.max(kernel_dim));
        if basis.k() != expected {
            return Err(SessionError::BadSnapshot("basis size does not match history"));
        }
        session.basis = basis;
        session.history = snapshot.history;
        session.status = snapshot.status;
        Ok(session)
    }
}

/// Everything needed to resume a session.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionSnapshot {
    pub config: SessionConfig,
    pub node_ids: Vec<u64>,
    pub edges: Vec<(usize, usize, f64)>,
    pub basis_values: Vec<f64>,
    pub basis_vectors: Vec<f64>,
    pub history: Vec<HistoryEntry>,
    pub status: SessionStatus,
}
