//! Incremental eigenpairs through deflation.
//!
//! [`next_eigenpair`] turns the `K` known smallest eigenpairs into the
//! `(K+1)`-th by finding the leading (most negative) eigenpair of
//! [`DeflatedOperator`]. Two leading-pair solvers are available: plain power
//! iteration and an explicitly restarted Lanczos iteration. Power iteration
//! converges at rate `(sigma - lambda_{K+2}) / (sigma - lambda_{K+1})`, which
//! for the unnormalized Laplacian (`sigma = s`) is very close to one on all but
//! small graphs; Lanczos is insensitive to the shift and is the practical
//! choice there.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::ComponentLabeling;
use crate::lanczos::{LanczosError, LanczosState};
use crate::laplacian::{LaplacianKind, LaplacianMatrix};
use crate::linalg::{axpy, dot, fill_random, norm2, normalize, project_out, tridiagonal_eigen, SymmetricOperator};

/// Restarts allowed when the start vector falls inside the deflated span.
pub const MAX_START_RESTARTS: usize = 5;

/// Relative magnitude within which two entries count as tied for sign
/// canonicalization.
const SIGN_TIE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LeadingSolver {
    #[default]
    Power,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    /// Relative residual tolerance: converged when `||L~x - theta x|| <= tol * sigma`.
    pub tol: f64,
    /// Cap on operator applications per leading pair; `None` picks
    /// [`default_max_iters`].
    pub max_iters: Option<usize>,
    pub seed: u64,
    /// Power iteration re-orthogonalizes against the basis this often.
    pub reorthogonalize_every: usize,
    pub leading: LeadingSolver,
    /// Lanczos vectors kept before an explicit restart.
    pub krylov_dim: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: None,
            seed: 0,
            reorthogonalize_every: 10,
            leading: LeadingSolver::Power,
            krylov_dim: 120,
        }
    }
}

impl SolverConfig {
    pub fn lanczos() -> Self {
        Self {
            leading: LeadingSolver::Lanczos,
            ..Self::default()
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(SolveError::InvalidConfig("tol must be positive and finite"));
        }
        if self.max_iters == Some(0) {
            return Err(SolveError::InvalidConfig("max_iters must be at least 1"));
        }
        if self.reorthogonalize_every == 0 {
            return Err(SolveError::InvalidConfig("reorthogonalize_every must be at least 1"));
        }
        if self.krylov_dim < 2 {
            return Err(SolveError::InvalidConfig("krylov_dim must be at least 2"));
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iters.unwrap_or_else(|| default_max_iters(n))
    }
}

/// `10 * ceil((ln n)^2) + 1000`.
pub fn default_max_iters(n: usize) -> usize {
    let ln = libm::log(n.max(1) as f64);
    10 * libm::ceil(ln * ln) as usize + 1000
}

/// Best iterate of a run that hit its iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFailure {
    /// Basis size when the failure happened.
    pub k: usize,
    pub iterations: usize,
    pub residual: f64,
    pub theta: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("vector has length {got}, operator dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis does not belong to this Laplacian")]
    BasisMismatch,
    #[error("spectrum exhausted: all {n} eigenpairs are already known")]
    SpectrumExhausted { n: usize },
    #[error("K = {k} is out of range for n = {n}")]
    TargetOutOfRange { k: usize, n: usize },
    #[error("K = {k} is below the kernel dimension {delta}")]
    BelowKernel { k: usize, delta: usize },
    #[error(
        "no convergence at K = {}: residual {:e} after {} iterations",
        .0.k, .0.residual, .0.iterations
    )]
    NotConverged(Box<ConvergenceFailure>),
    #[error("start vector stayed inside the deflated span after {restarts} restarts")]
    StartStalled { restarts: usize },
    #[error("eigenvalue {value} at K = {k} is below the previous eigenvalue {previous}")]
    NotMonotone { k: usize, value: f64, previous: f64 },
    #[error(transparent)]
    Lanczos(#[from] LanczosError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// The `K` smallest eigenpairs of a Laplacian, values ascending, vectors
/// stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    kind: LaplacianKind,
    n: usize,
    values: Vec<f64>,
    vectors: Vec<f64>,
    kernel_dim: usize,
    total_strength: f64,
    shift: f64,
}

impl EigenBasis {
    /// Reassembles a basis from stored parts. Returns `None` when the lengths
    /// disagree or `kernel_dim` exceeds the number of pairs.
    pub fn from_parts(
        kind: LaplacianKind,
        n: usize,
        kernel_dim: usize,
        total_strength: f64,
        shift: f64,
        values: Vec<f64>,
        vectors: Vec<f64>,
    ) -> Option<Self> {
        if vectors.len() != values.len() * n || kernel_dim > values.len() {
            return None;
        }
        Some(Self {
            kind,
            n,
            values,
            vectors,
            kernel_dim,
            total_strength,
            shift,
        })
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of eigenpairs held.
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column-major `n x K`.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }

    pub fn pair(&self, j: usize) -> Eigenpair {
        Eigenpair {
            value: self.values[j],
            vector: self.column(j).to_vec(),
        }
    }

    /// Number of connected components (`delta`).
    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn total_strength(&self) -> f64 {
        self.total_strength
    }

    /// Deflation shift `sigma`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// The first `k` pairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.k());
        Self {
            values: self.values[..k].to_vec(),
            vectors: self.vectors[..k * self.n].to_vec(),
            kernel_dim: self.kernel_dim.min(k),
            ..self.clone()
        }
    }

    pub(crate) fn push_unchecked(&mut self, value: f64, vector: &[f64]) {
        debug_assert_eq!(vector.len(), self.n);
        self.values.push(value);
        self.vectors.extend_from_slice(vector);
    }

    /// Spectral embedding from the first `k` columns, row-major `n x k`.
    pub fn embedding(&self, k: usize) -> Vec<f64> {
        let k = k.min(self.k());
        let mut rows = vec![0.0; self.n * k];
        for j in 0..k {
            for (i, &v) in self.column(j).iter().enumerate() {
                rows[i * k + j] = v;
            }
        }
        rows
    }

    /// `max |V^T V - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.k() {
            for b in a..self.k() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.column(a), self.column(b)) - target).abs());
            }
        }
        worst
    }

    /// `||L v_i - lambda_i v_i||` for every pair.
    pub fn residuals(&self, l: &LaplacianMatrix) -> Vec<f64> {
        let mut lv = vec![0.0; self.n];
        (0..self.k())
            .map(|j| {
                let v = self.column(j);
                l.apply(v, &mut lv);
                axpy(-self.values[j], v, &mut lv);
                norm2(&lv)
            })
            .collect()
    }
}

/// Canonical kernel basis: unit-normalized component indicators, weighted by
/// `sqrt(strength)` for the normalized Laplacian. All values are `0`.
pub fn kernel_basis(l: &LaplacianMatrix, labeling: &ComponentLabeling) -> EigenBasis {
    let n = l.n();
    let delta = labeling.count;
    let strengths = &l.strengths().per_node;
    let mut vectors = vec![0.0; n * delta];
    for (i, &c) in labeling.labels.iter().enumerate() {
        vectors[c * n + i] = match l.kind() {
            LaplacianKind::Unnormalized => 1.0,
            LaplacianKind::Normalized => libm::sqrt(strengths[i]),
        };
    }
    for col in vectors.chunks_exact_mut(n.max(1)) {
        normalize(col);
    }
    EigenBasis {
        kind: l.kind(),
        n,
        values: vec![0.0; delta],
        vectors,
        kernel_dim: delta,
        total_strength: l.total_strength(),
        shift: l.spectral_shift(),
    }
}

/// `L~ = L + sum_k (sigma - lambda_k) v_k v_k^T - sigma I` for the pairs in
/// `basis`.
#[derive(Debug, Clone, Copy)]
pub struct DeflatedOperator<'a> {
    base: &'a LaplacianMatrix,
    basis: &'a EigenBasis,
    shift: f64,
}

impl<'a> DeflatedOperator<'a> {
    pub fn new(base: &'a LaplacianMatrix, basis: &'a EigenBasis) -> Result<Self, SolveError> {
        if basis.n != base.n() || basis.kind != base.kind() {
            return Err(SolveError::BasisMismatch);
        }
        Ok(Self {
            base,
            basis,
            shift: base.spectral_shift(),
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn basis(&self) -> &EigenBasis {
        self.basis
    }

    pub fn base(&self) -> &LaplacianMatrix {
        self.base
    }

    /// Checked application.
    pub fn apply_deflated(&self, x: &[f64]) -> Result<Vec<f64>, SolveError> {
        if x.len() != self.base.n() {
            return Err(SolveError::DimensionMismatch {
                expected: self.base.n(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        Ok(y)
    }
}

impl SymmetricOperator for DeflatedOperator<'_> {
    fn dim(&self) -> usize {
        self.base.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        axpy(-self.shift, x, y);
        for (j, &lambda) in self.basis.values.iter().enumerate() {
            let v = self.basis.column(j);
            let c = (self.shift - lambda) * dot(v, x);
            axpy(c, v, y);
        }
    }
}

/// Leading eigenpair of a deflated operator.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingPair {
    /// Eigenvalue of `L~` (negative for a nontrivial pair).
    pub theta: f64,
    pub vector: Vec<f64>,
    /// Operator applications used.
    pub iterations: usize,
    pub residual: f64,
}

fn step_seed(seed: u64, k: usize) -> u64 {
    // SplitMix64 finalizer over (seed, k) so each K gets its own stream.
    let mut z = seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded random unit vector orthogonal to the basis columns.
fn random_start(rng: &mut ChaCha8Rng, basis: &EigenBasis) -> Result<Vec<f64>, SolveError> {
    let mut x = vec![0.0; basis.n];
    for _ in 0..=MAX_START_RESTARTS {
        fill_random(rng, &mut x);
        let before = norm2(&x);
        project_out(&mut x, &basis.vectors);
        if normalize(&mut x) > 1e-8 * before {
            return Ok(x);
        }
    }
    Err(SolveError::StartStalled {
        restarts: MAX_START_RESTARTS,
    })
}

/// Power iteration on `op`.
pub fn leading_eigenpair_power(op: &DeflatedOperator<'_>, cfg: &SolverConfig) -> Result<LeadingPair, SolveError> {
    cfg.validate()?;
    let n = op.dim();
    let k = op.basis.k();
    if k >= n {
        return Err(SolveError::SpectrumExhausted { n });
    }
    let threshold = cfg.tol * op.shift;
    let cap = cfg.iteration_cap(n);
    let mut rng = ChaCha8Rng::seed_from_u64(step_seed(cfg.seed, k));
    let mut x = random_start(&mut rng, op.basis)?;
    let mut y = vec![0.0; n];
    let mut restarts = 0;
    let mut best = LeadingPair {
        theta: 0.0,
        vector: x.clone(),
        iterations: 0,
        residual: f64::INFINITY,
    };
    for it in 1..=cap {
        op.apply(&x, &mut y);
        let theta = dot(&x, &y);
        let norm_y = norm2(&y);
        let mut r = y.clone();
        axpy(-theta, &x, &mut r);
        let residual = norm2(&r);
        if residual < best.residual {
            best = LeadingPair {
                theta,
                vector: x.clone(),
                iterations: it,
                residual,
            };
        }
        if residual <= threshold {
            return Ok(LeadingPair {
                theta,
                vector: x,
                iterations: it,
                residual,
            });
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(norm_y > f64::MIN_POSITIVE) {
            restarts += 1;
            if restarts > MAX_START_RESTARTS {
                return Err(SolveError::StartStalled { restarts });
            }
            x = random_start(&mut rng, op.basis)?;
            continue;
        }
        x.copy_from_slice(&y);
        x.iter_mut().for_each(|v| *v /= norm_y);
        if it % cfg.reorthogonalize_every == 0 {
            project_out(&mut x, &op.basis.vectors);
            normalize(&mut x);
        }
    }
    best.iterations = cap;
    Err(SolveError::NotConverged(Box::new(ConvergenceFailure {
        k,
        iterations: cap,
        residual: best.residual,
        theta: best.theta,
        vector: best.vector,
    })))
}

/// How often the restarted Lanczos solver inspects its Ritz pairs.
const LANCZOS_CHECK_STRIDE: usize = 5;

/// Explicitly restarted Lanczos on `op`, with the basis columns locked out of
/// the Krylov space. Restarts from the current best Ritz vector once
/// `cfg.krylov_dim` vectors are held.
pub fn leading_eigenpair_lanczos(op: &DeflatedOperator<'_>, cfg: &SolverConfig) -> Result<LeadingPair, SolveError> {
    cfg.validate()?;
    let n = op.dim();
    let k = op.basis.k();
    if k >= n {
        return Err(SolveError::SpectrumExhausted { n });
    }
    let threshold = cfg.tol * op.shift;
    let cap = cfg.iteration_cap(n);
    let seed = step_seed(cfg.seed, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = random_start(&mut rng, op.basis)?;
    let mut used = 0;
    let mut best = LeadingPair {
        theta: 0.0,
        vector: start.clone(),
        iterations: 0,
        residual: f64::INFINITY,
    };
    let mut y = vec![0.0; n];
    for restart in 0u64.. {
        let mut st = LanczosState::new(op, Some(&start), op.basis.vectors.clone(), seed.wrapping_add(restart))?;
        loop {
            let at_cap = st.z() >= cfg.krylov_dim;
            let out_of_budget = used + st.matvecs() >= cap;
            if st.is_complete() || at_cap || out_of_budget || st.z() % LANCZOS_CHECK_STRIDE == 0 {
                let eig = tridiagonal_eigen(st.alpha(), st.beta()).map_err(LanczosError::from)?;
                let z = st.z();
                let (lo, hi) = (eig.values[0], eig.values[z - 1]);
                let j = if lo.abs() >= hi.abs() { 0 } else { z - 1 };
                let u = eig.vector(j);
                let estimate = (st.tail_beta() * u[z - 1]).abs();
                if estimate <= 0.5 * threshold || st.is_complete() || at_cap || out_of_budget {
                    let mut x = vec![0.0; n];
                    for (i, &c) in u.iter().enumerate() {
                        axpy(c, st.column(i), &mut x);
                    }
                    project_out(&mut x, &op.basis.vectors);
                    normalize(&mut x);
                    op.apply(&x, &mut y);
                    let theta = dot(&x, &y);
                    axpy(-theta, &x, &mut y);
                    let residual = norm2(&y);
                    let iterations = used + st.matvecs() + 1;
                    if residual < best.residual {
                        best = LeadingPair {
                            theta,
                            vector: x.clone(),
                            iterations,
                            residual,
                        };
                    }
                    if residual <= threshold {
                        return Ok(LeadingPair {
                            theta,
                            vector: x,
                            iterations,
                            residual,
                        });
                    }
                    if out_of_budget {
                        return Err(SolveError::NotConverged(Box::new(ConvergenceFailure {
                            k,
                            iterations,
                            residual: best.residual,
                            theta: best.theta,
                            vector: best.vector,
                        })));
                    }
                    if st.is_complete() || at_cap {
                        used = iterations;
                        start = x;
                        break;
                    }
                }
            }
            st.append(op);
        }
    }
    unreachable!("restart loop only exits by returning")
}

/// Dispatches to the configured leading-pair solver.
pub fn leading_eigenpair(op: &DeflatedOperator<'_>, cfg: &SolverConfig) -> Result<LeadingPair, SolveError> {
    match cfg.leading {
        LeadingSolver::Power => leading_eigenpair_power(op, cfg),
        LeadingSolver::Lanczos => leading_eigenpair_lanczos(op, cfg),
    }
}

/// Flips `v` so its largest-magnitude entry is positive. Entries within a
/// relative `1e-8` of the maximum count as tied; the lowest index wins.
pub fn canonicalize_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|&x| x.abs() >= max * (1.0 - SIGN_TIE))
        .expect("max is attained");
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// The `(K+1)`-th smallest eigenpair of `l` given the first `K` in `basis`.
///
/// The value returned is the Rayleigh quotient `x^T L x` of the final vector,
/// which equals `theta + sigma` in exact arithmetic without the cancellation.
pub fn next_eigenpair(l: &LaplacianMatrix, basis: &EigenBasis, cfg: &SolverConfig) -> Result<Eigenpair, SolveError> {
    next_eigenpair_traced(l, basis, cfg).map(|(pair, _)| pair)
}

/// Solver effort behind one eigenpair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub iterations: usize,
    /// Residual of the leading pair of the deflated operator.
    pub residual: f64,
}

/// [`next_eigenpair`] plus the leading solver's iteration count and residual.
pub fn next_eigenpair_traced(
    l: &LaplacianMatrix,
    basis: &EigenBasis,
    cfg: &SolverConfig,
) -> Result<(Eigenpair, StepTrace), SolveError> {
    let k = basis.k();
    if k < basis.kernel_dim {
        return Err(SolveError::BelowKernel {
            k,
            delta: basis.kernel_dim,
        });
    }
    let op = DeflatedOperator::new(l, basis)?;
    let lead = leading_eigenpair(&op, cfg)?;
    let trace = StepTrace {
        iterations: lead.iterations,
        residual: lead.residual,
    };
    let mut vector = lead.vector;
    project_out(&mut vector, &basis.vectors);
    normalize(&mut vector);
    canonicalize_sign(&mut vector);
    let mut lv = vec![0.0; l.n()];
    l.apply(&vector, &mut lv);
    let value = dot(&vector, &lv);
    if let Some(&previous) = basis.values.last() {
        if value < previous - cfg.tol * op.shift {
            return Err(SolveError::NotMonotone { k, value, previous });
        }
    }
    Ok((Eigenpair { value, vector }, trace))
}

/// Appends the next eigenpair to `basis`.
pub fn extend_basis(l: &LaplacianMatrix, basis: &mut EigenBasis, cfg: &SolverConfig) -> Result<StepTrace, SolveError> {
    let (pair, trace) = next_eigenpair_traced(l, basis, cfg)?;
    basis.push_unchecked(pair.value, &pair.vector);
    Ok(trace)
}

/// Kernel basis extended one pair at a time up to `k_target` pairs.
pub fn extend_to(
    l: &LaplacianMatrix,
    labeling: &ComponentLabeling,
    k_target: usize,
    cfg: &SolverConfig,
) -> Result<EigenBasis, SolveError> {
    cfg.validate()?;
    let n = l.n();
    if k_target > n {
        return Err(SolveError::TargetOutOfRange { k: k_target, n });
    }
    if k_target < labeling.count {
        return Err(SolveError::BelowKernel {
            k: k_target,
            delta: labeling.count,
        });
    }
    let mut basis = kernel_basis(l, labeling);
    while basis.k() < k_target {
        extend_basis(l, &mut basis, cfg)?;
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::laplacian::build_laplacian;
    use approx::assert_abs_diff_eq;

    fn lap(n: usize, edges: &[(usize, usize, f64)], kind: LaplacianKind) -> LaplacianMatrix {
        build_laplacian(&Graph::from_edges(n, edges).unwrap(), kind).unwrap()
    }

    fn path3() -> LaplacianMatrix {
        lap(3, &[(0, 1, 1.0), (1, 2, 1.0)], LaplacianKind::Unnormalized)
    }

    fn assert_vec(a: &[f64], b: &[f64], eps: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(*x, *y, epsilon = eps);
        }
    }

    #[test]
    fn kernel_basis_examples() {
        let l = path3();
        let b = kernel_basis(&l, &l.connected_components());
        let c = 1.0 / libm::sqrt(3.0);
        assert_vec(b.vectors(), &[c, c, c], 1e-15);
        assert_eq!(b.values(), &[0.0]);

        let l = lap(4, &[(0, 1, 1.0), (2, 3, 1.0)], LaplacianKind::Unnormalized);
        let b = kernel_basis(&l, &l.connected_components());
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_vec(b.vectors(), &[h, h, 0.0, 0.0, 0.0, 0.0, h, h], 1e-15);

        let l = lap(2, &[(0, 1, 4.0)], LaplacianKind::Normalized);
        let b = kernel_basis(&l, &l.connected_components());
        assert_vec(b.vectors(), &[h, h], 1e-15);
    }

    #[test]
    fn apply_deflated_examples() {
        let l = path3();
        let mut b = kernel_basis(&l, &l.connected_components());
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let v2 = [h, 0.0, -h];
        {
            let op = DeflatedOperator::new(&l, &b).unwrap();
            assert_vec(&op.apply_deflated(&v2).unwrap(), &[-3.0 * h, 0.0, 3.0 * h], 1e-14);
            let c = 1.0 / libm::sqrt(3.0);
            assert_vec(&op.apply_deflated(&[c, c, c]).unwrap(), &[0.0; 3], 1e-14);
            assert!(matches!(
                op.apply_deflated(&[1.0]),
                Err(SolveError::DimensionMismatch { expected: 3, got: 1 })
            ));
        }
        b.push_unchecked(1.0, &v2);
        let op = DeflatedOperator::new(&l, &b).unwrap();
        let r = 1.0 / libm::sqrt(6.0);
        let v3 = [r, -2.0 * r, r];
        let expected: Vec<f64> = v3.iter().map(|x| -x).collect();
        assert_vec(&op.apply_deflated(&v3).unwrap(), &expected, 1e-14);
    }

    #[test]
    fn power_examples() {
        let l = path3();
        let cfg = SolverConfig::default();
        let b = kernel_basis(&l, &l.connected_components());
        let lead = leading_eigenpair_power(&DeflatedOperator::new(&l, &b).unwrap(), &cfg).unwrap();
        assert_abs_diff_eq!(lead.theta, -3.0, epsilon = 1e-9);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(dot(&lead.vector, &[h, 0.0, -h]).abs(), 1.0, epsilon = 1e-9);

        let b2 = extend_to(&l, &l.connected_components(), 2, &cfg).unwrap();
        let lead = leading_eigenpair_power(&DeflatedOperator::new(&l, &b2).unwrap(), &cfg).unwrap();
        assert_abs_diff_eq!(lead.theta, -1.0, epsilon = 1e-9);

        let k3 = lap(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], LaplacianKind::Unnormalized);
        let b = kernel_basis(&k3, &k3.connected_components());
        let lead = leading_eigenpair_power(&DeflatedOperator::new(&k3, &b).unwrap(), &cfg).unwrap();
        assert_abs_diff_eq!(lead.theta, -3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lead.vector.iter().sum::<f64>(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn next_eigenpair_examples() {
        for leading in [LeadingSolver::Power, LeadingSolver::Lanczos] {
            let cfg = SolverConfig {
                leading,
                ..SolverConfig::default()
            };
            let l = path3();
            let mut b = kernel_basis(&l, &l.connected_components());
            let p = next_eigenpair(&l, &b, &cfg).unwrap();
            let h = core::f64::consts::FRAC_1_SQRT_2;
            assert_abs_diff_eq!(p.value, 1.0, epsilon = 1e-9);
            assert_vec(&p.vector, &[h, 0.0, -h], 1e-9);
            b.push_unchecked(p.value, &p.vector);
            let p = next_eigenpair(&l, &b, &cfg).unwrap();
            // The middle entry has the largest magnitude, so it is made positive.
            let r = 1.0 / libm::sqrt(6.0);
            assert_abs_diff_eq!(p.value, 3.0, epsilon = 1e-9);
            assert_vec(&p.vector, &[-r, 2.0 * r, -r], 1e-9);

            let e = lap(2, &[(0, 1, 1.0)], LaplacianKind::Normalized);
            let b = kernel_basis(&e, &e.connected_components());
            let p = next_eigenpair(&e, &b, &cfg).unwrap();
            assert_abs_diff_eq!(p.value, 2.0, epsilon = 1e-9);
            assert_vec(&p.vector, &[h, -h], 1e-9);
        }
    }

    #[test]
    fn extend_to_examples() {
        let cfg = SolverConfig::default();
        let l = path3();
        let b = extend_to(&l, &l.connected_components(), 3, &cfg).unwrap();
        assert_vec(b.values(), &[0.0, 1.0, 3.0], 1e-9);
        assert!(matches!(
            next_eigenpair(&l, &b, &cfg),
            Err(SolveError::SpectrumExhausted { n: 3 })
        ));

        let l = lap(4, &[(0, 1, 1.0), (2, 3, 1.0)], LaplacianKind::Unnormalized);
        let b = extend_to(&l, &l.connected_components(), 4, &cfg).unwrap();
        assert_vec(b.values(), &[0.0, 0.0, 2.0, 2.0], 1e-9);
        assert!(b.orthogonality_error() < 1e-12);
        assert!(matches!(
            extend_to(&l, &l.connected_components(), 1, &cfg),
            Err(SolveError::BelowKernel { k: 1, delta: 2 })
        ));

        let l = path3();
        let b = extend_to(&l, &l.connected_components(), 1, &cfg).unwrap();
        assert_eq!(b.values(), &[0.0]);
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let l = lap(
            6,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0)],
            LaplacianKind::Unnormalized,
        );
        let cfg = SolverConfig {
            max_iters: Some(2),
            ..SolverConfig::default()
        };
        let b = kernel_basis(&l, &l.connected_components());
        match next_eigenpair(&l, &b, &cfg) {
            Err(SolveError::NotConverged(f)) => {
                assert_eq!(f.k, 1);
                assert_eq!(f.iterations, 2);
                assert_eq!(f.vector.len(), 6);
                assert!(f.residual > 0.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            max_iters: Some(0),
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(default_max_iters(1), 1000);
        // ln(100)^2 = 21.2 -> 22
        assert_eq!(default_max_iters(100), 1220);
    }

    #[test]
    fn sign_canonicalization() {
        let mut v = [0.1, -0.9, 0.3];
        canonicalize_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.3]);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let mut tie = [-h, h];
        canonicalize_sign(&mut tie);
        assert_eq!(tie, [h, -h]);
    }
}
