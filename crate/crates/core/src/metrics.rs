//! Clustering quality metrics.
//!
//! Cluster weights use ordered-pair sums: `W(A, B) = sum_{i in A, j in B} w_ij`.
//! An internal edge therefore counts twice in `W(A, A)`, and `W(V, V)` equals
//! the total strength `s`.

use alloc::vec;
use alloc::vec::Vec;

use crate::cluster::ClusterAssignment;
use crate::eigensolve::EigenBasis;
use crate::graph::Graph;
use crate::laplacian::LaplacianMatrix;
use crate::linalg::compensated_sum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("assignment has {labels} labels but the graph has {n} nodes")]
    SizeMismatch { labels: usize, n: usize },
    #[error("cluster {0} has zero total strength")]
    ZeroStrengthCluster(usize),
    #[error("K = {k} exceeds the {available} eigenvalues available")]
    NotEnoughEigenvalues { k: usize, available: usize },
    #[error("Laplacian trace is zero (graph has no edges)")]
    ZeroTrace,
}

/// One row of the per-`K` metric history.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsRecord {
    pub k: usize,
    pub modularity: f64,
    pub scaled_nc: f64,
    pub scaled_median_size: f64,
    pub scaled_max_size: f64,
    pub scaled_spectrum_energy: f64,
}

/// Per-cluster `W(C, C)` and `W(C, V)`.
fn cluster_weights(g: &Graph, a: &ClusterAssignment) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let labels = a.labels();
    if labels.len() != g.n() {
        return Err(MetricsError::SizeMismatch {
            labels: labels.len(),
            n: g.n(),
        });
    }
    let mut internal = vec![0.0; a.k()];
    let mut volume = vec![0.0; a.k()];
    for i in 0..g.n() {
        let c = labels[i];
        for (j, w) in g.neighbors(i) {
            volume[c] += w;
            if labels[j] == c {
                internal[c] += w;
            }
        }
    }
    Ok((internal, volume))
}

/// `sum_i [W(C_i, C_i) / s - (W(C_i, V) / s)^2]`; `0` for an edgeless graph.
pub fn modularity(g: &Graph, a: &ClusterAssignment) -> Result<f64, MetricsError> {
    let (internal, volume) = cluster_weights(g, a)?;
    let s = compensated_sum(volume.iter().copied());
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(compensated_sum(
        internal.iter().zip(&volume).map(|(&i, &v)| i / s - (v / s) * (v / s)),
    ))
}

/// `(NC, NC / K)` with `NC = sum_i W(C_i, complement) / W(C_i, V)`.
pub fn scaled_normalized_cut(g: &Graph, a: &ClusterAssignment) -> Result<(f64, f64), MetricsError> {
    let (internal, volume) = cluster_weights(g, a)?;
    let mut terms = Vec::with_capacity(a.k());
    for (c, (&i, &v)) in internal.iter().zip(&volume).enumerate() {
        if v <= 0.0 {
            return Err(MetricsError::ZeroStrengthCluster(c));
        }
        terms.push((v - i) / v);
    }
    let nc = compensated_sum(terms);
    Ok((nc, nc / a.k() as f64))
}

/// Lower median and maximum cluster size, both divided by `n`.
pub fn cluster_size_stats(a: &ClusterAssignment, n: usize) -> (f64, f64) {
    let mut sizes = a.sizes();
    sizes.sort_unstable();
    if sizes.is_empty() || n == 0 {
        return (0.0, 0.0);
    }
    let median = sizes[(sizes.len() - 1) / 2];
    let max = sizes[sizes.len() - 1];
    (median as f64 / n as f64, max as f64 / n as f64)
}

/// `sum_{i <= K} lambda_i / trace(L)`, clamped to `[0, 1]`.
pub fn scaled_spectrum_energy(basis: &EigenBasis, l: &LaplacianMatrix, k: usize) -> Result<f64, MetricsError> {
    if k > basis.k() {
        return Err(MetricsError::NotEnoughEigenvalues {
            k,
            available: basis.k(),
        });
    }
    let trace = l.trace();
    if trace == 0.0 {
        return Err(MetricsError::ZeroTrace);
    }
    let partial = compensated_sum(basis.values()[..k].iter().copied());
    Ok((partial / trace).clamp(0.0, 1.0))
}

/// All metrics for the clustering `a` of the embedding from the first `a.k()`
/// eigenpairs. Modularity and cuts are evaluated on `g_metric`.
pub fn metrics_bundle(
    g_metric: &Graph,
    basis: &EigenBasis,
    l: &LaplacianMatrix,
    a: &ClusterAssignment,
) -> Result<MetricsRecord, MetricsError> {
    let k = a.k();
    let modularity = modularity(g_metric, a)?;
    let (_, scaled_nc) = scaled_normalized_cut(g_metric, a)?;
    let (scaled_median_size, scaled_max_size) = cluster_size_stats(a, g_metric.n());
    let scaled_spectrum_energy = scaled_spectrum_energy(basis, l, k)?;
    Ok(MetricsRecord {
        k,
        modularity,
        scaled_nc,
        scaled_median_size,
        scaled_max_size,
        scaled_spectrum_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{extend_to, SolverConfig};
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use approx::assert_abs_diff_eq;

    fn two_triangles() -> Graph {
        Graph::from_edges(
            6,
            &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)],
        )
        .unwrap()
    }

    fn part(labels: &[usize], k: usize) -> ClusterAssignment {
        ClusterAssignment::from_labels(labels.to_vec(), k, 0.0).unwrap()
    }

    #[test]
    fn modularity_examples() {
        let g = two_triangles();
        assert_abs_diff_eq!(modularity(&g, &part(&[0, 0, 0, 1, 1, 1], 2)).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(modularity(&g, &part(&[0; 6], 1)).unwrap(), 0.0, epsilon = 1e-15);
        let e = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_abs_diff_eq!(modularity(&e, &part(&[0, 1], 2)).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn normalized_cut_examples() {
        let g = two_triangles();
        assert_eq!(scaled_normalized_cut(&g, &part(&[0, 0, 0, 1, 1, 1], 2)).unwrap(), (0.0, 0.0));
        let e = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(scaled_normalized_cut(&e, &part(&[0, 1], 2)).unwrap(), (2.0, 1.0));
        let p3 = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let (nc, snc) = scaled_normalized_cut(&p3, &part(&[0, 0, 1], 2)).unwrap();
        assert_abs_diff_eq!(nc, 4.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(snc, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_strength_cluster() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(
            scaled_normalized_cut(&g, &part(&[0, 0, 1], 2)).unwrap_err(),
            MetricsError::ZeroStrengthCluster(1)
        );
    }

    #[test]
    fn size_stats_examples() {
        assert_eq!(cluster_size_stats(&part(&[0, 0, 0, 1, 1, 1], 2), 6), (0.5, 0.5));
        assert_eq!(cluster_size_stats(&part(&[0, 1, 1, 2, 2, 2], 3), 6), (2.0 / 6.0, 3.0 / 6.0));
        assert_eq!(cluster_size_stats(&part(&[0, 1, 2, 2, 2, 2], 3), 6), (1.0 / 6.0, 4.0 / 6.0));
    }

    #[test]
    fn spectrum_energy_examples() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let b = extend_to(&l, &l.connected_components(), 3, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(scaled_spectrum_energy(&b, &l, 2).unwrap(), 0.25, epsilon = 1e-10);
        assert_eq!(scaled_spectrum_energy(&b, &l, 1).unwrap(), 0.0);
        assert_abs_diff_eq!(scaled_spectrum_energy(&b, &l, 3).unwrap(), 1.0, epsilon = 1e-10);
        assert!(matches!(
            scaled_spectrum_energy(&b, &l, 4),
            Err(MetricsError::NotEnoughEigenvalues { k: 4, available: 3 })
        ));
        let empty = Graph::from_edges(2, &[]).unwrap();
        let l0 = build_laplacian(&empty, LaplacianKind::Unnormalized).unwrap();
        let b0 = crate::eigensolve::kernel_basis(&l0, &l0.connected_components());
        assert_eq!(scaled_spectrum_energy(&b0, &l0, 1).unwrap_err(), MetricsError::ZeroTrace);
    }

    #[test]
    fn bundle_two_triangles() {
        let g = two_triangles();
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let b = extend_to(&l, &l.connected_components(), 2, &SolverConfig::default()).unwrap();
        let r = metrics_bundle(&g, &b, &l, &part(&[0, 0, 0, 1, 1, 1], 2)).unwrap();
        assert_abs_diff_eq!(r.modularity, 0.5, epsilon = 1e-15);
        assert_eq!(r.scaled_nc, 0.0);
        assert_eq!((r.scaled_median_size, r.scaled_max_size), (0.5, 0.5));
        assert_eq!(r.scaled_spectrum_energy, 0.0);
        let one = metrics_bundle(&g, &b, &l, &part(&[0; 6], 1)).unwrap();
        assert_eq!(one.modularity, 0.0);
        assert_eq!(one.scaled_nc, 0.0);
    }
}
