//! Unnormalized (`L = S - W`) and normalized (`L_N = I - S^{-1/2} W S^{-1/2}`)
//! graph Laplacians in CSR form.

use alloc::vec::Vec;

use crate::graph::{components_from_csr, ComponentLabeling, Graph, GraphError, StrengthVector};
use crate::linalg::{compensated_sum, SymmetricOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LaplacianKind {
    Unnormalized,
    Normalized,
}

impl LaplacianKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LaplacianKind::Unnormalized => "unnormalized",
            LaplacianKind::Normalized => "normalized",
        }
    }
}

/// Sparse symmetric Laplacian. Each row stores the diagonal plus the
/// neighbors of the node, in ascending column order.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    kind: LaplacianKind,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    strengths: StrengthVector,
}

pub fn build_laplacian(g: &Graph, kind: LaplacianKind) -> Result<LaplacianMatrix, GraphError> {
    LaplacianMatrix::new(g, kind)
}

impl LaplacianMatrix {
    pub fn new(g: &Graph, kind: LaplacianKind) -> Result<Self, GraphError> {
        let strengths = g.strengths();
        let n = g.n();
        let root: Vec<f64> = match kind {
            LaplacianKind::Unnormalized => Vec::new(),
            LaplacianKind::Normalized => {
                if let Some(i) = strengths.per_node.iter().position(|&s| s <= 0.0) {
                    return Err(GraphError::IsolatedNode(g.node_ids()[i]));
                }
                strengths.per_node.iter().map(|&s| libm::sqrt(s)).collect()
            }
        };
        let (g_offsets, _, _) = g.csr();
        let nnz = g_offsets[n] + n;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        offsets.push(0);
        for i in 0..n {
            let diagonal = match kind {
                LaplacianKind::Unnormalized => strengths.per_node[i],
                LaplacianKind::Normalized => 1.0,
            };
            let mut placed = false;
            for (j, w) in g.neighbors(i) {
                if !placed && j > i {
                    cols.push(i);
                    vals.push(diagonal);
                    placed = true;
                }
                cols.push(j);
                vals.push(match kind {
                    LaplacianKind::Unnormalized => -w,
                    LaplacianKind::Normalized => -w / (root[i] * root[j]),
                });
            }
            if !placed {
                cols.push(i);
                vals.push(diagonal);
            }
            offsets.push(cols.len());
        }
        Ok(Self {
            kind,
            offsets,
            cols,
            vals,
            strengths,
        })
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Strengths of the graph the Laplacian was built from.
    pub fn strengths(&self) -> &StrengthVector {
        &self.strengths
    }

    pub fn total_strength(&self) -> f64 {
        self.strengths.total
    }

    /// Deflation shift: `s` for the unnormalized kind, `2` for the normalized
    /// one. Both bound the largest eigenvalue from above.
    pub fn spectral_shift(&self) -> f64 {
        match self.kind {
            LaplacianKind::Unnormalized => self.strengths.total,
            LaplacianKind::Normalized => 2.0,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(p) => self.vals[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        compensated_sum((0..self.n()).map(|i| self.get(i, i)))
    }

    /// Row `i` as `(column, value)` pairs, diagonal included.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    /// Components of the underlying graph, read from the off-diagonal pattern.
    pub fn connected_components(&self) -> ComponentLabeling {
        components_from_csr(&self.offsets, &self.cols, |p| self.vals[p] != 0.0)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = alloc::vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                out[i * n + j] = v;
            }
        }
        out
    }
}

impl SymmetricOperator for LaplacianMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *out = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn path3_unnormalized_rows() {
        let l = build_laplacian(&path3(), LaplacianKind::Unnormalized).unwrap();
        assert_eq!(l.to_dense(), vec![1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(l.trace(), 4.0);
        assert_eq!(l.nnz(), 7);
    }

    #[test]
    fn single_edge_normalized() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let l = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        assert_eq!(l.to_dense(), vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn normalized_rejects_isolated_node() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(
            build_laplacian(&g, LaplacianKind::Normalized).unwrap_err(),
            GraphError::IsolatedNode(2)
        );
        // Unnormalized accepts it as a zero row.
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        assert_eq!(l.row(2).collect::<Vec<_>>(), vec![(2, 0.0)]);
    }

    #[test]
    fn diagonal_sits_in_column_order() {
        let g = Graph::from_edges(4, &[(0, 2, 1.0), (2, 3, 1.0), (1, 2, 1.0)]).unwrap();
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let cols: Vec<usize> = l.row(2).map(|(j, _)| j).collect();
        assert_eq!(cols, vec![0, 1, 2, 3]);
        assert_eq!(l.get(2, 2), 3.0);
    }

    #[test]
    fn shifts() {
        let l = build_laplacian(&path3(), LaplacianKind::Unnormalized).unwrap();
        assert_eq!(l.spectral_shift(), 4.0);
        let ln = build_laplacian(&path3(), LaplacianKind::Normalized).unwrap();
        assert_eq!(ln.spectral_shift(), 2.0);
    }
}
