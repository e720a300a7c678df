//! Timing sweep over Erdős–Rényi graphs comparing the incremental solver with
//! the two Lanczos baselines.
//!
//! Every method walks `K = 2..=k_max` on the same graph and records the time
//! each `K` took plus the running total. One warm-up pass per `(method, n)` is
//! run and discarded first. Trial 0 of every `n` doubles as an audit: the
//! methods' eigenvalues at `k_max` must agree within `1e-7 * s`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use lapinc_core::eigensolve::{extend_basis, kernel_basis, SolveError, SolverConfig};
use lapinc_core::graph::erdos_renyi;
use lapinc_core::lanczos::{batch_smallest, LanczosIo, LanczosIoParams};
use lapinc_core::linalg::dot;
use lapinc_core::{build_laplacian, SymmetricOperator, Graph, GraphError, LaplacianKind, LaplacianMatrix};

use crate::clock::StdClock;

/// Relative eigenvalue agreement required on audit trials.
pub const AUDIT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IncrementalIo,
    LanczosIo,
    Batch,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::IncrementalIo, Method::LanczosIo, Method::Batch];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::IncrementalIo => "incremental_io",
            Method::LanczosIo => "lanczos_io",
            Method::Batch => "batch",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "incremental_io" | "inc" => Ok(Method::IncrementalIo),
            "lanczos_io" | "lanczos" => Ok(Method::LanczosIo),
            "batch" => Ok(Method::Batch),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: Method,
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub wall_time_ms: f64,
    pub cumulative_ms: f64,
    pub residual: f64,
    pub trial: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub sizes: Vec<usize>,
    pub p: f64,
    pub k_max: usize,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub kind: LaplacianKind,
    pub solver: SolverConfig,
    pub warmup: bool,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            sizes: vec![500],
            p: 0.1,
            k_max: 10,
            trials: 5,
            methods: Method::ALL.to_vec(),
            seed: 1,
            kind: LaplacianKind::Unnormalized,
            solver: SolverConfig::lanczos(),
            warmup: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid bench parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("audit failed for n = {n}: {detail}")]
    Audit { n: usize, detail: String, dump: AuditDump },
}

/// Everything needed to reproduce a failed audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditDump {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub total_strength: f64,
    pub tolerance: f64,
    pub values: BTreeMap<String, Vec<f64>>,
    pub edges: Vec<(u64, u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub mean_cumulative_ms: f64,
    pub sd_cumulative_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub summary: Vec<SummaryRow>,
    /// `(n, largest eigenvalue disagreement / s)` per audit trial.
    pub audits: Vec<(usize, f64)>,
}

/// Per-`K` timings and the eigenvalues reached at `k_max`.
pub struct MethodRun {
    /// `(K, wall ms, residual)`.
    pub steps: Vec<(usize, f64, f64)>,
    pub values: Vec<f64>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn rayleigh(l: &LaplacianMatrix, v: &[f64]) -> f64 {
    let mut lv = vec![0.0; v.len()];
    l.apply(v, &mut lv);
    dot(v, &lv) / dot(v, v)
}

fn max_residual(l: &LaplacianMatrix, basis: &lapinc_core::EigenBasis) -> f64 {
    basis.residuals(l).into_iter().fold(0.0, f64::max)
}

/// Runs one method over `K = 2..=k_max`. Residual checks happen outside the
/// timed sections.
pub fn run_method(
    method: Method,
    l: &LaplacianMatrix,
    k_max: usize,
    solver: &SolverConfig,
) -> Result<MethodRun, BenchError> {
    let mut steps = Vec::with_capacity(k_max.saturating_sub(1));
    let labeling = l.connected_components();
    let values = match method {
        Method::IncrementalIo => {
            let start = Instant::now();
            let mut basis = kernel_basis(l, &labeling);
            let mut setup = elapsed_ms(start);
            for k in 2..=k_max {
                let start = Instant::now();
                while basis.k() < k {
                    extend_basis(l, &mut basis, solver)?;
                }
                let ms = elapsed_ms(start) + std::mem::take(&mut setup);
                let residual = basis.residuals(l).last().copied().unwrap_or(0.0);
                steps.push((k, ms, residual));
            }
            basis.values().to_vec()
        }
        Method::LanczosIo => {
            let start = Instant::now();
            let op = lapinc_core::lanczos::ShiftedOperator::new(l);
            let delta = labeling.count;
            let mut io = LanczosIo::new(&op, LanczosIoParams::default(), op.kernel().to_vec(), solver.seed)
                .map_err(SolveError::from)?;
            let mut setup = elapsed_ms(start);
            let clock = StdClock::new();
            for k in 2..=k_max {
                let start = Instant::now();
                let mut residual = 0.0;
                while delta + io.k() < k {
                    residual = io.advance(&clock).map_err(SolveError::from)?.residual;
                }
                let ms = elapsed_ms(start) + std::mem::take(&mut setup);
                steps.push((k, ms, residual));
            }
            let (_, vectors) = io.pairs();
            let mut values = vec![0.0; delta.min(k_max)];
            values.extend(vectors.chunks_exact(l.n()).map(|v| rayleigh(l, v)));
            values
        }
        Method::Batch => {
            let mut last = Vec::new();
            for k in 2..=k_max {
                let start = Instant::now();
                let basis = batch_smallest(l, k, solver)?;
                let ms = elapsed_ms(start);
                steps.push((k, ms, max_residual(l, &basis)));
                last = basis.values().to_vec();
            }
            last
        }
    };
    Ok(MethodRun { steps, values })
}

fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    seed.wrapping_mul(1_000_003)
        .wrapping_add((n as u64).wrapping_mul(7919))
        .wrapping_add(trial as u64)
}

fn graph_for(n: usize, p: f64, seed: u64) -> Result<Graph, BenchError> {
    Ok(erdos_renyi(n, p, seed)?.graph)
}

fn validate(params: &BenchParams) -> Result<(), BenchError> {
    if params.sizes.is_empty() || params.methods.is_empty() {
        return Err(BenchError::Params("need at least one size and one method".into()));
    }
    if params.k_max < 2 {
        return Err(BenchError::Params("k_max must be at least 2".into()));
    }
    if params.trials == 0 {
        return Err(BenchError::Params("trials must be at least 1".into()));
    }
    if let Some(&n) = params.sizes.iter().find(|&&n| n < params.k_max) {
        return Err(BenchError::Params(format!("n = {n} is smaller than k_max = {}", params.k_max)));
    }
    params.solver.validate()?;
    Ok(())
}

pub fn run_bench(params: &BenchParams) -> Result<BenchOutcome, BenchError> {
    validate(params)?;
    let mut records = Vec::new();
    let mut audits = Vec::new();
    for &n in &params.sizes {
        if params.warmup {
            let g = graph_for(n, params.p, trial_seed(params.seed, n, usize::MAX))?;
            let l = build_laplacian(&g, params.kind)?;
            for &m in &params.methods {
                run_method(m, &l, params.k_max, &params.solver)?;
            }
        }
        for trial in 0..params.trials {
            let seed = trial_seed(params.seed, n, trial);
            let g = graph_for(n, params.p, seed)?;
            let l = build_laplacian(&g, params.kind)?;
            let mut finals = BTreeMap::new();
            for &m in &params.methods {
                let run = run_method(m, &l, params.k_max, &params.solver)?;
                let mut cumulative = 0.0;
                for (k, ms, residual) in run.steps {
                    cumulative += ms;
                    records.push(BenchRecord {
                        method: m,
                        n: g.n(),
                        p: params.p,
                        k,
                        wall_time_ms: ms,
                        cumulative_ms: cumulative,
                        residual,
                        trial,
                        seed,
                    });
                }
                finals.insert(m.as_str().to_string(), run.values);
            }
            if trial == 0 {
                let s = l.total_strength();
                let gap = audit_gap(&finals);
                audits.push((n, gap / s.max(f64::MIN_POSITIVE)));
                if gap > AUDIT_TOLERANCE * s {
                    let ids = g.node_ids();
                    return Err(BenchError::Audit {
                        n,
                        detail: format!("eigenvalues differ by {gap:e} > {:e}", AUDIT_TOLERANCE * s),
                        dump: AuditDump {
                            n,
                            p: params.p,
                            seed,
                            total_strength: s,
                            tolerance: AUDIT_TOLERANCE * s,
                            values: finals,
                            edges: g.edges().map(|(i, j, w)| (ids[i], ids[j], w)).collect(),
                        },
                    });
                }
            }
        }
    }
    let summary = summarize(&records);
    Ok(BenchOutcome {
        records,
        summary,
        audits,
    })
}

/// Largest absolute difference between any two methods' eigenvalues.
pub fn audit_gap(values: &BTreeMap<String, Vec<f64>>) -> f64 {
    let lists: Vec<&Vec<f64>> = values.values().collect();
    let mut gap = 0.0f64;
    for a in &lists {
        for b in &lists {
            if a.len() != b.len() {
                return f64::INFINITY;
            }
            for (x, y) in a.iter().zip(b.iter()) {
                gap = gap.max((x - y).abs());
            }
        }
    }
    gap
}

/// Mean and sample standard deviation of the cumulative time per
/// `(method, n, K)`.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.n, r.k)).or_default().push(r.cumulative_ms);
    }
    groups
        .into_iter()
        .map(|((method, n, k), xs)| {
            let count = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / count;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                method,
                n,
                k,
                trials: xs.len(),
                mean_cumulative_ms: mean,
                sd_cumulative_ms: var.sqrt(),
            }
        })
        .collect()
}

pub fn records_csv(records: &[BenchRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv writes utf-8"))
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = format!("{:<15} {:>6} {:>3} {:>22}\n", "method", "n", "K", "cumulative ms");
    for r in rows {
        out.push_str(&format!(
            "{:<15} {:>6} {:>3} {:>12.3} ± {:<8.3}\n",
            r.method.as_str(),
            r.n,
            r.k,
            r.mean_cumulative_ms,
            r.sd_cumulative_ms
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let rec = |trial, cumulative_ms| BenchRecord {
            method: Method::Batch,
            n: 10,
            p: 0.5,
            k: 2,
            wall_time_ms: cumulative_ms,
            cumulative_ms,
            residual: 0.0,
            trial,
            seed: 0,
        };
        let rows = summarize(&[rec(0, 1.0), rec(1, 3.0)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_cumulative_ms, 2.0);
        assert!((rows[0].sd_cumulative_ms - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn audit_gap_detects_disagreement() {
        let mut v = BTreeMap::new();
        v.insert("a".to_string(), vec![0.0, 1.0]);
        v.insert("b".to_string(), vec![0.0, 1.5]);
        assert_eq!(audit_gap(&v), 0.5);
        v.insert("c".to_string(), vec![0.0]);
        assert_eq!(audit_gap(&v), f64::INFINITY);
    }

    #[test]
    fn parameter_checks() {
        let bad = BenchParams {
            k_max: 1,
            ..BenchParams::default()
        };
        assert!(matches!(run_bench(&bad), Err(BenchError::Params(_))));
        let bad = BenchParams {
            sizes: vec![5],
            ..BenchParams::default()
        };
        assert!(matches!(run_bench(&bad), Err(BenchError::Params(_))));
    }
}
