//! Serialized outputs: eigenbasis JSON, metric tables, label files, and
//! session checkpoints.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so
//! values and vectors survive a write/read cycle bit for bit.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lapinc_core::eigensolve::EigenBasis;
use lapinc_core::session::{HistoryEntry, SessionSnapshot};
use lapinc_core::{ClusterAssignment, Graph, LaplacianKind, LaplacianMatrix, MetricsRecord};

pub const BASIS_FORMAT: &str = "lapinc-eigenbasis";
pub const CHECKPOINT_FORMAT: &str = "lapinc-session";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected format {found:?} (version {version}); expected {expected:?} version {FORMAT_VERSION}")]
    WrongFormat {
        expected: &'static str,
        found: String,
        version: u32,
    },
    #[error("inconsistent eigenbasis: {0}")]
    Inconsistent(&'static str),
}

/// Accuracy summary stored next to a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    /// Solver tolerance the basis was computed with.
    pub tol: f64,
    /// `max |V^T V - I|`.
    pub orthogonality_error: f64,
    /// `||L v_i - lambda_i v_i||` per pair.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

impl ToleranceReport {
    pub fn measure(basis: &EigenBasis, l: &LaplacianMatrix, tol: f64) -> Self {
        let residuals = basis.residuals(l);
        let max_residual = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
        Self {
            tol,
            orthogonality_error: basis.orthogonality_error(),
            residuals,
            max_residual,
        }
    }
}

/// On-disk eigenbasis. `vectors` is column-major, `n` rows by `k` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisFile {
    pub format: String,
    pub version: u32,
    pub kind: LaplacianKind,
    pub n: usize,
    pub k: usize,
    pub kernel_dim: usize,
    pub total_strength: f64,
    pub shift: f64,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub tolerance: ToleranceReport,
}

impl BasisFile {
    pub fn new(basis: &EigenBasis, tolerance: ToleranceReport) -> Self {
        Self {
            format: BASIS_FORMAT.into(),
            version: FORMAT_VERSION,
            kind: basis.kind(),
            n: basis.n(),
            k: basis.k(),
            kernel_dim: basis.kernel_dim(),
            total_strength: basis.total_strength(),
            shift: basis.shift(),
            values: basis.values().to_vec(),
            vectors: basis.vectors().to_vec(),
            tolerance,
        }
    }

    pub fn into_basis(self) -> Result<EigenBasis, ArtifactError> {
        if self.format != BASIS_FORMAT || self.version != FORMAT_VERSION {
            return Err(ArtifactError::WrongFormat {
                expected: BASIS_FORMAT,
                found: self.format,
                version: self.version,
            });
        }
        if self.values.len() != self.k {
            return Err(ArtifactError::Inconsistent("values length differs from k"));
        }
        EigenBasis::from_parts(
            self.kind,
            self.n,
            self.kernel_dim,
            self.total_strength,
            self.shift,
            self.values,
            self.vectors,
        )
        .ok_or(ArtifactError::Inconsistent("vectors length differs from n * k"))
    }

    pub fn to_json(&self) -> Result<String, ArtifactError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn write_basis(path: &Path, file: &BasisFile) -> Result<(), ArtifactError> {
    std::fs::write(path, file.to_json()?)?;
    Ok(())
}

pub fn read_basis(path: &Path) -> Result<EigenBasis, ArtifactError> {
    BasisFile::from_json(&std::fs::read_to_string(path)?)?.into_basis()
}

/// Metric history as CSV: header plus one row per `K`.
pub fn metrics_csv(records: &[MetricsRecord]) -> Result<String, ArtifactError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "k",
            "modularity",
            "scaled_nc",
            "scaled_median_size",
            "scaled_max_size",
            "scaled_spectrum_energy",
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv writes utf-8"))
}

pub fn metrics_from_csv(text: &str) -> Result<Vec<MetricsRecord>, ArtifactError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn metrics_json(records: &[MetricsRecord]) -> Result<String, ArtifactError> {
    Ok(serde_json::to_string_pretty(records)?)
}

pub fn metrics_from_json(text: &str) -> Result<Vec<MetricsRecord>, ArtifactError> {
    Ok(serde_json::from_str(text)?)
}

pub fn history_metrics(history: &[HistoryEntry]) -> Vec<MetricsRecord> {
    history.iter().map(|h| h.metrics).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub node: u64,
    pub cluster: usize,
}

pub fn label_rows(g: &Graph, a: &ClusterAssignment) -> Vec<LabelRow> {
    g.node_ids()
        .iter()
        .zip(a.labels())
        .map(|(&node, &cluster)| LabelRow { node, cluster })
        .collect()
}

/// Two-column CSV `node,cluster` using the original node ids.
pub fn labels_csv(g: &Graph, a: &ClusterAssignment) -> Result<String, ArtifactError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in label_rows(g, a) {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv writes utf-8"))
}

pub fn labels_from_csv(text: &str) -> Result<Vec<LabelRow>, ArtifactError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    session: SessionSnapshot,
}

pub fn checkpoint_json(snapshot: &SessionSnapshot) -> Result<String, ArtifactError> {
    Ok(serde_json::to_string(&CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: FORMAT_VERSION,
        session: snapshot.clone(),
    })?)
}

pub fn checkpoint_from_json(text: &str) -> Result<SessionSnapshot, ArtifactError> {
    let file: CheckpointFile = serde_json::from_str(text)?;
    if file.format != CHECKPOINT_FORMAT || file.version != FORMAT_VERSION {
        return Err(ArtifactError::WrongFormat {
            expected: CHECKPOINT_FORMAT,
            found: file.format,
            version: file.version,
        });
    }
    Ok(file.session)
}

/// Writes through a temporary file and renames, so a crash never leaves a
/// truncated checkpoint.
pub fn save_checkpoint(path: &Path, snapshot: &SessionSnapshot) -> Result<(), ArtifactError> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(checkpoint_json(snapshot)?.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<SessionSnapshot, ArtifactError> {
    checkpoint_from_json(&std::fs::read_to_string(path)?)
}
