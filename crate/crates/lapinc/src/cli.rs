//! `lapinc` command line.
//!
//! Exit codes: `0` success, `1` unparsable arguments or input, `2` a
//! precondition failed (unreadable file, bad `K`, invalid graph), `3` a solver
//! did not converge or the bench audit failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use lapinc_core::eigensolve::{extend_basis, kernel_basis, LeadingSolver, SolveError, SolverConfig};
use lapinc_core::lanczos::{batch_smallest, lanczos_io_smallest, LanczosError, LanczosIoParams};
use lapinc_core::session::MetricGraph;
use lapinc_core::{build_laplacian, EigenBasis, Graph, LaplacianKind, Session, SessionConfig, SessionError};

use crate::artifacts::{history_metrics, labels_csv, metrics_csv, metrics_json, write_basis, BasisFile, ToleranceReport};
use crate::bench::{records_csv, run_bench, summary_table, BenchError, BenchParams, Method};
use crate::clock::StdClock;
use crate::formats::{load_graph, FormatError, GraphFormat};
use crate::service::{self, AppState, ServiceConfig};

pub const EXIT_PARSE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lapinc", version, about = "Incremental Laplacian eigenpairs and user-guided spectral clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the K smallest eigenpairs of a graph Laplacian.
    Solve(SolveArgs),
    /// Cluster a graph for K = 2..=K and write labels and metrics.
    Cluster(ClusterArgs),
    /// Time the three eigensolvers on Erdős–Rényi graphs.
    Bench(BenchArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Unnormalized,
    Normalized,
}

impl From<KindArg> for LaplacianKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Unnormalized => LaplacianKind::Unnormalized,
            KindArg::Normalized => LaplacianKind::Normalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Inc,
    Lanczos,
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeadingArg {
    Power,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricsOnArg {
    W,
    Wn,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "unnormalized")]
    pub kind: KindArg,
    /// Residual tolerance relative to the spectral shift.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leading-pair solver behind each incremental step.
    #[arg(long, value_enum, default_value = "lanczos")]
    pub solver: LeadingArg,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl SolverArgs {
    fn solver_config(&self) -> SolverConfig {
        let base = match self.solver {
            LeadingArg::Power => SolverConfig::default(),
            LeadingArg::Lanczos => SolverConfig::lanczos(),
        };
        SolverConfig {
            tol: self.tol,
            seed: self.seed,
            max_iters: self.max_iters,
            leading: match self.solver {
                LeadingArg::Power => LeadingSolver::Power,
                LeadingArg::Lanczos => LeadingSolver::Lanczos,
            },
            ..base
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Edge list or MatrixMarket (`.mtx`) file.
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<GraphFormat>,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "inc")]
    pub method: MethodArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the eigenbasis as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<GraphFormat>,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Graph the metrics are evaluated on: input weights or normalized ones.
    #[arg(long, value_enum, default_value = "w")]
    pub metrics_on: MetricsOnArg,
    /// Scale embedding rows to unit length before k-means.
    #[arg(long)]
    pub normalize_rows: bool,
    /// Output directory for labels.csv, metrics.csv, metrics.json, basis.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Graph sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "500")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Any of incremental_io, lanczos_io, batch (or inc, lanczos).
    #[arg(long, value_delimiter = ',', default_value = "incremental_io,lanczos_io,batch")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "unnormalized")]
    pub kind: KindArg,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
    /// Also write the mean ± sd table here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub no_warmup: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "LAPINC_PORT", default_value_t = service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = "LAPINC_DATA_DIR", default_value = "lapinc-data")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = service::DEFAULT_MAX_BODY_BYTES)]
    pub max_body_bytes: usize,
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn parse(m: impl ToString) -> Self {
        Self {
            code: EXIT_PARSE,
            message: m.to_string(),
        }
    }

    fn precondition(m: impl ToString) -> Self {
        Self {
            code: EXIT_PRECONDITION,
            message: m.to_string(),
        }
    }

    fn convergence(m: impl ToString) -> Self {
        Self {
            code: EXIT_CONVERGENCE,
            message: m.to_string(),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(_) => Failure::precondition(e),
            _ => Failure::parse(e),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotConverged(_)
            | SolveError::NotMonotone { .. }
            | SolveError::StartStalled { .. }
            | SolveError::Lanczos(LanczosError::Tridiagonal(_)) => Failure::convergence(e),
            _ => Failure::precondition(e),
        }
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Solve(s) => s.into(),
            other => Failure::precondition(other),
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::precondition(format!("{}: {e}", path.display()))
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Runs a command and returns what it prints on success.
pub fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Solve(a) => solve(&a),
        Command::Cluster(a) => cluster(&a),
        Command::Bench(a) => bench(&a),
        Command::Serve(a) => serve(&a).map(|_| String::new()),
    }
}

fn read_graph(path: &Path, format: Option<GraphFormat>) -> Result<Graph, Failure> {
    load_graph(path, format).map_err(|e| match e {
        FormatError::Io(io) => Failure::precondition(format!("{}: {io}", path.display())),
        other => Failure::parse(format!("{}: {other}", path.display())),
    })
}

/// Per-pair work: leading-solver iterations for `inc`, matrix-vector
/// products beyond the initial Krylov space for `lanczos`, unknown for
/// `batch` and kernel pairs.
fn solve_basis(
    method: MethodArg,
    g: &Graph,
    k: usize,
    kind: LaplacianKind,
    cfg: &SolverConfig,
) -> Result<(lapinc_core::LaplacianMatrix, EigenBasis, Vec<Option<usize>>), Failure> {
    let l = build_laplacian(g, kind).map_err(Failure::precondition)?;
    let n = l.n();
    if k == 0 || k > n {
        return Err(Failure::precondition(format!("K = {k} must be between 1 and n = {n}")));
    }
    cfg.validate()?;
    let (basis, work) = match method {
        MethodArg::Inc => {
            let mut basis = kernel_basis(&l, &l.connected_components());
            if basis.k() >= k {
                (basis.truncated(k), vec![None; k])
            } else {
                let mut work = vec![None; basis.k()];
                while basis.k() < k {
                    work.push(Some(extend_basis(&l, &mut basis, cfg)?.iterations));
                }
                (basis, work)
            }
        }
        MethodArg::Lanczos => {
            let params = LanczosIoParams {
                tolerance: Some(cfg.tol * l.spectral_shift()),
                ..LanczosIoParams::default()
            };
            let (basis, result) = lanczos_io_smallest(&l, k, params, cfg.seed, &StdClock::new())?;
            let mut work = vec![None; basis.k() - result.log.len()];
            work.extend(result.log.iter().map(|entry| Some(entry.matvecs)));
            (basis, work)
        }
        MethodArg::Batch => {
            let basis = batch_smallest(&l, k, cfg)?;
            (basis, vec![None; k])
        }
    };
    Ok((l, basis, work))
}

fn solve(a: &SolveArgs) -> Result<String, Failure> {
    let g = read_graph(&a.graph, a.format)?;
    let cfg = a.solver.solver_config();
    let kind = LaplacianKind::from(a.solver.kind);
    let (l, basis, work) = solve_basis(a.method, &g, a.k, kind, &cfg)?;
    let report = ToleranceReport::measure(&basis, &l, cfg.tol);
    let mut out = String::new();
    let method = match a.method {
        MethodArg::Inc => "inc",
        MethodArg::Lanczos => "lanczos",
        MethodArg::Batch => "batch",
    };
    let _ = writeln!(out, "method={method} kind={} n={} K={}", kind.as_str(), g.n(), a.k);
    let values: Vec<String> = basis.values().iter().map(|v| format!("{v:.12}")).collect();
    let _ = writeln!(out, "values: {}", values.join(" "));
    let _ = writeln!(out, "{:>4} {:>20} {:>10} {:>10}", "k", "value", "residual", "iterations");
    for (i, (&v, &r)) in basis.values().iter().zip(&report.residuals).enumerate() {
        let it = work[i].map_or("-".to_string(), |w| w.to_string());
        let _ = writeln!(out, "{:>4} {:>20.12} {:>10.1e} {:>10}", i + 1, v, r, it);
    }
    let _ = writeln!(out, "orthogonality error {:.1e}", report.orthogonality_error);
    if let Some(path) = &a.out {
        write_basis(path, &BasisFile::new(&basis, report)).map_err(|e| Failure::precondition(format!("{}: {e}", path.display())))?;
    }
    Ok(out)
}

fn cluster(a: &ClusterArgs) -> Result<String, Failure> {
    if a.k < 2 {
        return Err(Failure::precondition(format!("K must be at least 2, got {}", a.k)));
    }
    let g = read_graph(&a.graph, a.format)?;
    let mut config = SessionConfig {
        kind: a.solver.kind.into(),
        solver: a.solver.solver_config(),
        metric_graph: match a.metrics_on {
            MetricsOnArg::W => MetricGraph::Original,
            MetricsOnArg::Wn => MetricGraph::Normalized,
        },
        normalize_rows: a.normalize_rows,
        ..SessionConfig::default()
    };
    config.kmeans.seed = a.solver.seed;
    let mut session = Session::new(g, config)?;
    if a.k > session.graph().n() {
        return Err(Failure::precondition(format!("K = {} exceeds n = {}", a.k, session.graph().n())));
    }
    for w in session.warnings() {
        eprintln!("warning: {w}");
    }
    let clock = StdClock::new();
    while session.last_k().map_or(true, |k| k < a.k) {
        session.step(&clock)?;
    }
    let report = session.stop()?;
    std::fs::create_dir_all(&a.out).map_err(io_failure(&a.out))?;
    let metrics = history_metrics(&report.history);
    let write = |name: &str, text: String| -> Result<(), Failure> {
        let path = a.out.join(name);
        std::fs::write(&path, text).map_err(io_failure(&path))
    };
    let artifact = |e: crate::artifacts::ArtifactError| Failure::precondition(e);
    write("labels.csv", labels_csv(session.graph(), &report.assignment).map_err(artifact)?)?;
    write("metrics.csv", metrics_csv(&metrics).map_err(artifact)?)?;
    write("metrics.json", metrics_json(&metrics).map_err(artifact)?)?;
    let basis = session.basis();
    let tolerance = ToleranceReport::measure(basis, session.laplacian(), config.solver.tol);
    write("basis.json", BasisFile::new(basis, tolerance).to_json().map_err(artifact)?)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>12} {:>10} {:>12} {:>10} {:>10}",
        "K", "modularity", "scaled_nc", "median_size", "max_size", "energy"
    );
    for m in &metrics {
        let _ = writeln!(
            out,
            "{:>3} {:>12.6} {:>10.6} {:>12.6} {:>10.6} {:>10.6}",
            m.k, m.modularity, m.scaled_nc, m.scaled_median_size, m.scaled_max_size, m.scaled_spectrum_energy
        );
    }
    let _ = writeln!(out, "cluster sizes at K={}: {:?}", report.k, report.assignment.sizes());
    Ok(out)
}

fn bench(a: &BenchArgs) -> Result<String, Failure> {
    let params = BenchParams {
        sizes: a.sizes.clone(),
        p: a.p,
        k_max: a.kmax,
        trials: a.trials,
        methods: a.methods.clone(),
        seed: a.seed,
        kind: a.kind.into(),
        solver: SolverConfig::lanczos(),
        warmup: !a.no_warmup,
    };
    let outcome = match run_bench(&params) {
        Ok(o) => o,
        Err(BenchError::Audit { n, detail, dump }) => {
            let path = a.out.with_extension("audit.json");
            let text = serde_json::to_string_pretty(&dump).map_err(Failure::precondition)?;
            std::fs::write(&path, text).map_err(io_failure(&path))?;
            return Err(Failure::convergence(format!(
                "audit failed for n = {n}: {detail}; dump written to {}",
                path.display()
            )));
        }
        Err(BenchError::Solve(e)) => return Err(e.into()),
        Err(e) => return Err(Failure::precondition(e)),
    };
    let csv = records_csv(&outcome.records).map_err(Failure::precondition)?;
    std::fs::write(&a.out, csv).map_err(io_failure(&a.out))?;
    let table = summary_table(&outcome.summary);
    if let Some(path) = &a.summary {
        std::fs::write(path, &table).map_err(io_failure(path))?;
    }
    let mut out = table;
    for (n, gap) in outcome.audits {
        let _ = writeln!(out, "audit n={n}: max eigenvalue difference {gap:.1e} * s");
    }
    let _ = writeln!(out, "{} records written to {}", outcome.records.len(), a.out.display());
    Ok(out)
}

fn serve(a: &ServeArgs) -> Result<(), Failure> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .try_init();
    let config = ServiceConfig {
        max_body_bytes: a.max_body_bytes,
        ..ServiceConfig::new(&a.data_dir)
    };
    let state = AppState::open(config).map_err(io_failure(&a.data_dir))?;
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::precondition)?;
    runtime
        .block_on(service::serve(SocketAddr::new(a.host, a.port), state))
        .map_err(Failure::precondition)
}
