//! Incremental computation of the smallest eigenpairs of graph Laplacians.
//!
//! Given the `K` smallest eigenpairs of a Laplacian `L`, the `(K+1)`-th is the
//! leading eigenpair of a deflated, shifted operator
//!
//! ```text
//! L~ = L + sum_{k<=K} (sigma - lambda_k) v_k v_k^T - sigma I
//! ```
//!
//! where `sigma` is the total strength `s` for the unnormalized Laplacian and
//! `2` for the normalized one. Every deflated direction maps to eigenvalue `0`,
//! every remaining eigenvalue `lambda_i` maps to `lambda_i - sigma <= 0`, so
//! the most negative eigenvalue of `L~` belongs to `lambda_{K+1}`. The crate
//! builds on that:
//!
//! - [`graph`] and [`laplacian`]: sparse weighted graphs, strengths, both
//!   Laplacian kinds, components, and an Erdős–Rényi generator.
//! - [`eigensolve`]: the deflated operator, power-iteration and Lanczos
//!   leading-pair solvers, and sequential basis extension.
//! - [`oracle`]: a dense symmetric eigensolver used as an independent check.
//! - [`lanczos`]: Lanczos of increasing orders and a from-scratch batch solver,
//!   the two comparison baselines.
//! - [`cluster`] and [`metrics`]: k-means on spectral embeddings and the five
//!   clustering quality metrics.
//! - [`session`]: the user-guided loop that advances `K` one step at a time.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod clock;
pub mod cluster;
pub mod eigensolve;
pub mod graph;
pub mod lanczos;
pub mod laplacian;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod session;

pub use clock::{Clock, NoClock};
pub use cluster::{kmeans, ClusterAssignment, ClusterError, KMeansConfig};
pub use eigensolve::{
    extend_to, kernel_basis, next_eigenpair, DeflatedOperator, EigenBasis, Eigenpair,
    LeadingSolver, SolveError, SolverConfig,
};
pub use graph::{ComponentLabeling, Graph, GraphBuilder, GraphError, StrengthVector};
pub use laplacian::{build_laplacian, LaplacianKind, LaplacianMatrix};
pub use linalg::SymmetricOperator;
pub use metrics::MetricsRecord;
pub use session::{Session, SessionConfig, SessionError, SessionStatus};
