//! HTTP/JSON session service under `/v1`.
//!
//! | method | path | body / query | success |
//! |---|---|---|---|
//! | POST | `/v1/sessions` | [`CreateRequest`] | 201 [`SessionCreated`] |
//! | POST | `/v1/sessions/{id}/step` | none | 200 [`StepRecord`] |
//! | GET | `/v1/sessions/{id}` | | 200 [`SessionView`] |
//! | GET | `/v1/sessions/{id}/clusters/{k}` | | 200 [`ClustersView`] |
//! | POST | `/v1/sessions/{id}/stop` | none | 200 [`FinalView`] |
//! | GET | `/v1/sessions/{id}/export` | `format=csv\|json` | 200 CSV or [`ExportView`] |
//!
//! Every error is `{"code": ..., "message": ...}`, plus `diagnostics` on
//! solver failures. Mutations of one session are serialized behind its lock
//! and run on the blocking pool; reads share the lock. Every mutation writes
//! a checkpoint to `<data dir>/sessions/<id>.json`, and sessions found there
//! are resumed at startup.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use lapinc_core::eigensolve::{LeadingSolver, SolveError};
use lapinc_core::session::{HistoryEntry, MetricGraph, SessionStatus};
use lapinc_core::{Graph, GraphBuilder, LaplacianKind, MetricsRecord, Session, SessionConfig, SessionError};

use crate::artifacts::{label_rows, load_checkpoint, metrics_csv, save_checkpoint, LabelRow};
use crate::clock::StdClock;
use crate::formats::{load_edge_list, load_graph, load_matrix_market, EdgeListOptions, GraphFormat};

pub const API_VERSION: &str = "v1";
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_MAX_BODY_BYTES: usize = 4 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Request bodies above this are refused with 413; larger graphs go
    /// through file references.
    pub max_body_bytes: usize,
    pub checkpoints: bool,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
            checkpoints: true,
        }
    }

    fn checkpoint_dir(&self) -> PathBuf {
        self.data_dir.join("sessions")
    }
}

struct Slot {
    session: RwLock<Session>,
}

pub struct AppState {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    /// Creates the state and resumes any checkpointed sessions.
    pub fn open(config: ServiceConfig) -> std::io::Result<Arc<Self>> {
        let mut sessions = HashMap::new();
        if config.checkpoints {
            let dir = config.checkpoint_dir();
            std::fs::create_dir_all(&dir)?;
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
                    continue;
                };
                match load_checkpoint(&path).map_err(|e| e.to_string()).and_then(|snap| {
                    Session::restore(snap).map_err(|e| e.to_string())
                }) {
                    Ok(session) => {
                        sessions.insert(
                            id,
                            Arc::new(Slot {
                                session: RwLock::new(session),
                            }),
                        );
                    }
                    Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping unreadable checkpoint"),
                }
            }
        }
        Ok(Arc::new(Self {
            config,
            sessions: RwLock::new(sessions),
        }))
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session table lock").len()
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id:?}")))
    }

    fn checkpoint(&self, id: &str, session: &Session) {
        if !self.config.checkpoints {
            return;
        }
        let path = self.config.checkpoint_dir().join(format!("{id}.json"));
        if let Err(e) = save_checkpoint(&path, &session.snapshot()) {
            tracing::warn!(session = id, error = %e, "checkpoint failed");
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_body_bytes;
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/step", post(step_session))
        .route("/v1/sessions/{id}/clusters/{k}", get(get_clusters))
        .route("/v1/sessions/{id}/stop", post(stop_session))
        .route("/v1/sessions/{id}/export", get(export_session))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, sessions = state.session_count(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub diagnostics: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            diagnostics: None,
        }
    }

    fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(d) = self.diagnostics {
            body["diagnostics"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::Stopped => Self::new(StatusCode::CONFLICT, "session_stopped", message),
            SessionError::Failed(_) => Self::new(StatusCode::CONFLICT, "session_failed", message),
            SessionError::NoHistory => Self::new(StatusCode::CONFLICT, "no_history", message),
            SessionError::SpectrumExhausted { .. } => Self::new(StatusCode::CONFLICT, "spectrum_exhausted", message),
            SessionError::KMaxReached(_) => Self::new(StatusCode::CONFLICT, "k_max_reached", message),
            SessionError::InvalidConfig(_) | SessionError::Solve(SolveError::InvalidConfig(_)) => {
                Self::unprocessable("invalid_config", message)
            }
            SessionError::Graph(_) | SessionError::TooSmall(_) => Self::unprocessable("invalid_graph", message),
            SessionError::Solve(ref s) => {
                let diagnostics = match s {
                    SolveError::NotConverged(f) => json!({
                        "k": f.k,
                        "iterations": f.iterations,
                        "residual": f.residual,
                        "theta": f.theta,
                    }),
                    other => json!({ "detail": format!("{other:?}") }),
                };
                Self {
                    diagnostics: Some(diagnostics),
                    ..Self::new(StatusCode::INTERNAL_SERVER_ERROR, "solver_failure", message)
                }
            }
            SessionError::Cluster(_) | SessionError::Metrics(_) | SessionError::BadSnapshot(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

/// Where the graph comes from. Exactly one of `edges`, `text`, `file`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// `[u, v]` or `[u, v, w]` with non-negative integer ids.
    pub edges: Option<Vec<Vec<f64>>>,
    /// Extra node ids, e.g. for nodes that only appear here.
    pub nodes: Option<Vec<u64>>,
    /// File contents in `format` (edge list by default).
    pub text: Option<String>,
    /// Path relative to the data directory.
    pub file: Option<String>,
    pub format: Option<GraphFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsOn {
    W,
    Wn,
}

/// Session settings; everything is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub kind: Option<LaplacianKind>,
    pub metrics_on: Option<MetricsOn>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub solver: Option<LeadingSolver>,
    pub k_max: Option<usize>,
    pub normalize_rows: Option<bool>,
    pub kmeans_restarts: Option<usize>,
}

impl ConfigSpec {
    pub fn to_config(&self) -> SessionConfig {
        let mut c = SessionConfig::default();
        if let Some(kind) = self.kind {
            c.kind = kind;
        }
        if let Some(m) = self.metrics_on {
            c.metric_graph = match m {
                MetricsOn::W => MetricGraph::Original,
                MetricsOn::Wn => MetricGraph::Normalized,
            };
        }
        if let Some(seed) = self.seed {
            c.solver.seed = seed;
            c.kmeans.seed = seed;
        }
        if let Some(tol) = self.tol {
            c.solver.tol = tol;
        }
        if self.max_iters.is_some() {
            c.solver.max_iters = self.max_iters;
        }
        if let Some(s) = self.solver {
            c.solver.leading = s;
        }
        c.k_max = self.k_max;
        if let Some(r) = self.normalize_rows {
            c.normalize_rows = r;
        }
        if let Some(r) = self.kmeans_restarts {
            c.kmeans.restarts = r;
        }
        c
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub graph: GraphSpec,
    #[serde(default)]
    pub config: ConfigSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub status: String,
    pub n: usize,
    pub edges: usize,
    pub kernel_dim: usize,
    pub total_strength: f64,
    pub warnings: Vec<String>,
}

/// One step of the history as sent over the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(flatten)]
    pub metrics: MetricsRecord,
    pub cluster_sizes: Vec<usize>,
    pub solve_ms: f64,
    pub step_ms: f64,
}

impl From<&HistoryEntry> for StepRecord {
    fn from(h: &HistoryEntry) -> Self {
        Self {
            metrics: h.metrics,
            cluster_sizes: h.assignment.sizes(),
            solve_ms: h.solve_nanos as f64 / 1e6,
            step_ms: h.step_nanos as f64 / 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: String,
    pub failure: Option<String>,
    pub n: usize,
    pub edges: usize,
    pub kernel_dim: usize,
    pub k_current: usize,
    pub warnings: Vec<String>,
    pub history: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersView {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub labels: Vec<LabelRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalView {
    pub k: usize,
    pub result: StepRecord,
    pub history: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportView {
    pub id: String,
    pub status: String,
    pub history: Vec<MetricsRecord>,
}

fn status_parts(s: &SessionStatus) -> (String, Option<String>) {
    match s {
        SessionStatus::Running => ("running".into(), None),
        SessionStatus::Stopped => ("stopped".into(), None),
        SessionStatus::Failed(reason) => ("failed".into(), Some(reason.clone())),
    }
}

fn node_id(x: f64) -> Result<u64, ApiError> {
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) {
        Ok(x as u64)
    } else {
        Err(ApiError::unprocessable("invalid_graph", format!("node id {x} is not a non-negative integer")))
    }
}

fn inline_graph(edges: &[Vec<f64>], nodes: &[u64]) -> Result<Graph, ApiError> {
    let mut b = GraphBuilder::new();
    for &id in nodes {
        b.add_node(id);
    }
    for (i, e) in edges.iter().enumerate() {
        let (u, v, w) = match e.as_slice() {
            [u, v] => (node_id(*u)?, node_id(*v)?, 1.0),
            [u, v, w] => (node_id(*u)?, node_id(*v)?, *w),
            _ => {
                return Err(ApiError::unprocessable(
                    "invalid_graph",
                    format!("edge {i} must be [u, v] or [u, v, w]"),
                ))
            }
        };
        b.add_edge(u, v, w)
            .map_err(|err| ApiError::unprocessable("invalid_graph", format!("edge {i}: {err}")))?;
    }
    Ok(b.build())
}

/// Resolves a file reference inside the data directory. Absolute paths and
/// `..` are refused.
fn data_file(data_dir: &Path, rel: &str) -> Result<PathBuf, ApiError> {
    let p = Path::new(rel);
    if rel.is_empty() || !p.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(ApiError::unprocessable(
            "invalid_graph",
            "file must be a relative path inside the data directory",
        ));
    }
    Ok(data_dir.join(p))
}

fn load_spec(spec: &GraphSpec, data_dir: &Path) -> Result<Graph, ApiError> {
    let given = [spec.edges.is_some(), spec.text.is_some(), spec.file.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(ApiError::unprocessable(
            "invalid_request",
            "graph needs exactly one of edges, text, file",
        ));
    }
    let bad = |e: crate::formats::FormatError| ApiError::unprocessable("invalid_graph", e.to_string());
    if let Some(edges) = &spec.edges {
        return inline_graph(edges, spec.nodes.as_deref().unwrap_or(&[]));
    }
    let graph = if let Some(text) = &spec.text {
        match spec.format.unwrap_or(GraphFormat::EdgeList) {
            GraphFormat::EdgeList => load_edge_list(text.as_bytes(), EdgeListOptions::default()),
            GraphFormat::MatrixMarket => load_matrix_market(text.as_bytes()),
        }
        .map_err(bad)?
    } else {
        let path = data_file(data_dir, spec.file.as_deref().unwrap_or_default())?;
        load_graph(&path, spec.format).map_err(bad)?
    };
    if let Some(extra) = &spec.nodes {
        if !extra.is_empty() {
            return Err(ApiError::unprocessable("invalid_request", "nodes only applies to inline edges"));
        }
    }
    Ok(graph)
}

fn body_error(rejection: BytesRejection) -> ApiError {
    if rejection.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            "request body too large; upload the graph to the data directory and send a file reference",
        )
    } else {
        ApiError::new(rejection.status(), "invalid_request", rejection.body_text())
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let body = body.map_err(body_error)?;
    let req: CreateRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::unprocessable("invalid_request", e.to_string()))?;
    let created = blocking(move || {
        let graph = load_spec(&req.graph, &state.config.data_dir)?;
        let session = Session::new(graph, req.config.to_config())?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        state.checkpoint(&id, &session);
        let created = SessionCreated {
            id: id.clone(),
            status: status_parts(session.status()).0,
            n: session.graph().n(),
            edges: session.graph().edge_count(),
            kernel_dim: session.basis().kernel_dim(),
            total_strength: session.laplacian().total_strength(),
            warnings: session.warnings().to_vec(),
        };
        state.sessions.write().expect("session table lock").insert(
            id,
            Arc::new(Slot {
                session: RwLock::new(session),
            }),
        );
        Ok(created)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn step_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<StepRecord>, ApiError> {
    let slot = state.slot(&id)?;
    let record = blocking(move || {
        let mut session = slot.session.write().expect("session lock");
        let result = session.step(&StdClock::new()).map(StepRecord::from);
        // A failed step can change the status, so persist either way.
        state.checkpoint(&id, &session);
        Ok(result?)
    })
    .await?;
    Ok(Json(record))
}

async fn stop_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<FinalView>, ApiError> {
    let slot = state.slot(&id)?;
    let view = blocking(move || {
        let mut session = slot.session.write().expect("session lock");
        let report = session.stop()?;
        state.checkpoint(&id, &session);
        let last = report.history.last().expect("stop requires history");
        Ok(FinalView {
            k: report.k,
            result: StepRecord::from(last),
            history: report.history.iter().map(StepRecord::from).collect(),
        })
    })
    .await?;
    Ok(Json(view))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionView>, ApiError> {
    let slot = state.slot(&id)?;
    let view = blocking(move || {
        let session = slot.session.read().expect("session lock");
        let (status, failure) = status_parts(session.status());
        Ok(SessionView {
            id,
            status,
            failure,
            n: session.graph().n(),
            edges: session.graph().edge_count(),
            kernel_dim: session.basis().kernel_dim(),
            k_current: session.last_k().unwrap_or(0),
            warnings: session.warnings().to_vec(),
            history: session.history().iter().map(StepRecord::from).collect(),
        })
    })
    .await?;
    Ok(Json(view))
}

async fn get_clusters(
    State(state): State<Arc<AppState>>,
    UrlPath((id, k)): UrlPath<(String, String)>,
) -> Result<Json<ClustersView>, ApiError> {
    let k: usize = k
        .parse()
        .map_err(|_| ApiError::unprocessable("invalid_request", format!("K must be a positive integer, got {k:?}")))?;
    let slot = state.slot(&id)?;
    let view = blocking(move || {
        let session = slot.session.read().expect("session lock");
        let entry = session
            .entry(k)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_k", format!("no clustering for K = {k}")))?;
        Ok(ClustersView {
            k,
            sizes: entry.assignment.sizes(),
            labels: label_rows(session.graph(), &entry.assignment),
        })
    })
    .await?;
    Ok(Json(view))
}

async fn export_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let format = query.get("format").map(String::as_str).unwrap_or("json").to_string();
    if format != "csv" && format != "json" {
        return Err(ApiError::unprocessable("invalid_format", format!("format must be csv or json, got {format:?}")));
    }
    let slot = state.slot(&id)?;
    blocking(move || {
        let session = slot.session.read().expect("session lock");
        let records: Vec<MetricsRecord> = session.history().iter().map(|h| h.metrics).collect();
        if format == "csv" {
            let text = metrics_csv(&records)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
            Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], text).into_response())
        } else {
            Ok(Json(ExportView {
                id,
                status: status_parts(session.status()).0,
                history: records,
            })
            .into_response())
        }
    })
    .await
}
