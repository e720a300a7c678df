//! K-means on spectral embeddings: k-means++ seeding, Lloyd iterations,
//! best of several restarts.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("cluster count must be at least 1")]
    NoClusters,
    #[error("row data has length {len}, not a multiple of dimension {dim}")]
    Shape { len: usize, dim: usize },
    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },
    #[error("label {label} at node {node} is outside 0..{k}")]
    LabelOutOfRange { node: usize, label: usize, k: usize },
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KMeansConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 10,
            max_iter: 100,
        }
    }
}

/// Partition of `n` nodes into `k` nonempty clusters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    inertia: f64,
}

impl ClusterAssignment {
    /// Wraps an existing labeling. Every id in `0..k` must be used.
    pub fn from_labels(labels: Vec<usize>, k: usize, inertia: f64) -> Result<Self, ClusterError> {
        let mut seen = vec![false; k];
        for (node, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(ClusterError::LabelOutOfRange { node, label, k });
            }
            seen[label] = true;
        }
        if let Some(c) = seen.iter().position(|&s| !s) {
            return Err(ClusterError::EmptyCluster(c));
        }
        Ok(Self { labels, k, inertia })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// True when both assignments induce the same partition.
    pub fn same_partition(&self, other: &ClusterAssignment) -> bool {
        if self.labels.len() != other.labels.len() || self.k != other.k {
            return false;
        }
        let mut forward = vec![usize::MAX; self.k];
        let mut backward = vec![usize::MAX; other.k];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            if forward[a] == usize::MAX && backward[b] == usize::MAX {
                forward[a] = b;
                backward[b] = a;
            } else if forward[a] != b || backward[b] != a {
                return false;
            }
        }
        true
    }
}

/// Scales each row of a row-major matrix to unit length; zero rows stay zero.
pub fn normalize_rows(rows: &mut [f64], dim: usize) {
    for row in rows.chunks_exact_mut(dim.max(1)) {
        let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Run {
    labels: Vec<usize>,
    inertia: f64,
}

/// Clusters the rows of a row-major `n x dim` matrix into `k` groups.
///
/// Labels are renumbered in order of first appearance, so node 0 is always
/// in cluster 0.
pub fn kmeans(rows: &[f64], dim: usize, k: usize, cfg: &KMeansConfig) -> Result<ClusterAssignment, ClusterError> {
    if dim == 0 || rows.len() % dim != 0 {
        return Err(ClusterError::Shape { len: rows.len(), dim });
    }
    let n = rows.len() / dim;
    if k == 0 {
        return Err(ClusterError::NoClusters);
    }
    if k > n {
        return Err(ClusterError::TooManyClusters { k, n });
    }
    if let Some(p) = rows.iter().position(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite { row: p / dim });
    }
    let mut best: Option<Run> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let run = lloyd(rows, dim, n, k, cfg.max_iter, &mut rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    let labels = best
        .labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect();
    Ok(ClusterAssignment {
        labels,
        k,
        inertia: best.inertia,
    })
}

fn plus_plus(rows: &[f64], dim: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(&rows[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = rows.chunks_exact(dim).map(|r| sq_dist(r, &centers[..dim])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = rows[pick * dim..(pick + 1) * dim].to_vec();
        for (d, r) in d2.iter_mut().zip(rows.chunks_exact(dim)) {
            *d = d.min(sq_dist(r, &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

fn assign(rows: &[f64], dim: usize, centers: &[f64], labels: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, r) in rows.chunks_exact(dim).enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.chunks_exact(dim).enumerate() {
            let d = sq_dist(r, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if labels[i] != best {
            labels[i] = best;
            changed = true;
        }
        inertia += best_d;
    }
    (changed, inertia)
}

/// Recomputes centroids; an empty cluster takes the point farthest from its
/// own centroid among clusters with more than one member.
fn update(rows: &[f64], dim: usize, k: usize, labels: &mut [usize], centers: &mut [f64]) {
    loop {
        let mut counts = vec![0usize; k];
        centers.iter_mut().for_each(|c| *c = 0.0);
        for (r, &l) in rows.chunks_exact(dim).zip(labels.iter()) {
            counts[l] += 1;
            for (c, v) in centers[l * dim..(l + 1) * dim].iter_mut().zip(r) {
                *c += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                centers[c * dim..(c + 1) * dim].iter_mut().for_each(|v| *v *= inv);
            }
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, r) in rows.chunks_exact(dim).enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let d = sq_dist(r, &centers[l * dim..(l + 1) * dim]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n leaves a cluster with two members");
        labels[i] = empty;
    }
}

fn lloyd(rows: &[f64], dim: usize, n: usize, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> Run {
    let mut centers = plus_plus(rows, dim, n, k, rng);
    let mut labels = vec![usize::MAX; n];
    assign(rows, dim, &centers, &mut labels);
    for _ in 0..max_iter {
        update(rows, dim, k, &mut labels, &mut centers);
        let (changed, _) = assign(rows, dim, &centers, &mut labels);
        if !changed {
            break;
        }
    }
    // Final labels may leave a cluster empty if the last pass moved points;
    // repair and report the inertia of the returned labeling.
    update(rows, dim, k, &mut labels, &mut centers);
    let inertia = rows
        .chunks_exact(dim)
        .zip(&labels)
        .map(|(r, &l)| sq_dist(r, &centers[l * dim..(l + 1) * dim]))
        .sum();
    Run { labels, inertia }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_pairs() {
        let a = kmeans(&[0.0, 0.1, 5.0, 5.1], 1, 2, &KMeansConfig::default()).unwrap();
        assert_eq!(a.labels(), &[0, 0, 1, 1]);
        assert!((a.inertia() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn identical_rows() {
        let rows = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        let a = kmeans(&rows, 2, 1, &KMeansConfig::default()).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0]);
        assert_eq!(a.inertia(), 0.0);
        let a = kmeans(&rows, 2, 3, &KMeansConfig::default()).unwrap();
        assert_eq!(a.sizes(), vec![1, 1, 1]);
    }

    #[test]
    fn errors() {
        let cfg = KMeansConfig::default();
        assert_eq!(
            kmeans(&[0.0, 1.0], 1, 3, &cfg).unwrap_err(),
            ClusterError::TooManyClusters { k: 3, n: 2 }
        );
        assert_eq!(kmeans(&[0.0, f64::NAN], 1, 1, &cfg).unwrap_err(), ClusterError::NonFinite { row: 1 });
        assert!(matches!(kmeans(&[0.0, 1.0, 2.0], 2, 1, &cfg), Err(ClusterError::Shape { .. })));
    }

    #[test]
    fn from_labels_checks() {
        assert!(ClusterAssignment::from_labels(vec![0, 1, 1], 2, 0.0).is_ok());
        assert_eq!(
            ClusterAssignment::from_labels(vec![0, 0], 2, 0.0).unwrap_err(),
            ClusterError::EmptyCluster(1)
        );
        assert!(matches!(
            ClusterAssignment::from_labels(vec![0, 2], 2, 0.0),
            Err(ClusterError::LabelOutOfRange { node: 1, label: 2, k: 2 })
        ));
    }

    #[test]
    fn partition_equality_ignores_ids() {
        let a = ClusterAssignment::from_labels(vec![0, 0, 1, 2], 3, 0.0).unwrap();
        let b = ClusterAssignment::from_labels(vec![2, 2, 0, 1], 3, 0.0).unwrap();
        let c = ClusterAssignment::from_labels(vec![0, 1, 1, 2], 3, 0.0).unwrap();
        assert!(a.same_partition(&b));
        assert!(!a.same_partition(&c));
    }

    #[test]
    fn deterministic() {
        let rows: Vec<f64> = (0..200).map(|i| libm::sin(i as f64 * 0.37)).collect();
        let cfg = KMeansConfig {
            seed: 11,
            ..KMeansConfig::default()
        };
        let a = kmeans(&rows, 2, 4, &cfg).unwrap();
        let b = kmeans(&rows, 2, 4, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels()[0], 0);
    }

    #[test]
    fn row_normalization() {
        let mut rows = [3.0, 4.0, 0.0, 0.0];
        normalize_rows(&mut rows, 2);
        assert_eq!(rows, [0.6, 0.8, 0.0, 0.0]);
    }
}
