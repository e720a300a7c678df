#![allow(dead_code)]

pub mod schema;


use lapinc_core::graph::erdos_renyi;
use lapinc_core::{Graph, LaplacianMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected `G(n, p)` with weights uniform in `[0.5, 2)`.
pub fn weighted_er(n: usize, p: f64, seed: u64) -> Graph {
    let g = erdos_renyi(n, p, seed).unwrap().graph;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let edges: Vec<(usize, usize, f64)> = g.edges().map(|(i, j, _)| (i, j, rng.random_range(0.5..2.0))).collect();
    Graph::from_edges_with_ids(g.node_ids().to_vec(), &edges).unwrap()
}

/// Edge probability that makes `G(n, p)` comfortably connected.
pub fn connected_p(n: usize) -> f64 {
    (4.0 * (n as f64).ln() / n as f64).min(1.0)
}

/// Eigenvalues ascending and the matching unit vectors, from nalgebra.
pub fn nalgebra_eigen(dense_row_major: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = DMatrix::from_row_slice(n, n, dense_row_major);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

pub fn laplacian_eigen(l: &LaplacianMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    nalgebra_eigen(&l.to_dense(), l.n())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
