//! Dense brute-force eigendecomposition of a Laplacian, used to check the
//! sparse solvers. It shares no code with the incremental path beyond the
//! Laplacian itself.

use crate::laplacian::LaplacianMatrix;
use crate::linalg::{dense_symmetric_eigen, DenseSymmetric, QlNoConvergence, SymmetricEigen};

/// Largest `n` the dense oracle will materialize.
pub const DENSE_ORACLE_MAX_N: usize = 2000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("dense oracle limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    NoConvergence(#[from] QlNoConvergence),
}

/// All eigenpairs of `l`, values ascending, vectors orthonormal.
pub fn dense_oracle(l: &LaplacianMatrix) -> Result<SymmetricEigen, OracleError> {
    let n = l.n();
    if n > DENSE_ORACLE_MAX_N {
        return Err(OracleError::TooLarge {
            n,
            max: DENSE_ORACLE_MAX_N,
        });
    }
    let dense = DenseSymmetric::from_row_major(n, l.to_dense()).expect("square");
    Ok(dense_symmetric_eigen(&dense)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use approx::assert_abs_diff_eq;

    fn values(edges: &[(usize, usize, f64)], n: usize) -> alloc::vec::Vec<f64> {
        let g = Graph::from_edges(n, edges).unwrap();
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        dense_oracle(&l).unwrap().values
    }

    #[test]
    fn analytic_spectra() {
        let p3 = values(&[(0, 1, 1.0), (1, 2, 1.0)], 3);
        for (a, b) in p3.iter().zip([0.0, 1.0, 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-13);
        }
        let k3 = values(&[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], 3);
        for (a, b) in k3.iter().zip([0.0, 3.0, 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-13);
        }
        assert_eq!(values(&[], 2), alloc::vec![0.0, 0.0]);
    }

    #[test]
    fn guard() {
        let g = Graph::from_edges(DENSE_ORACLE_MAX_N + 1, &[]).unwrap();
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        assert!(matches!(dense_oracle(&l), Err(OracleError::TooLarge { .. })));
    }
}
