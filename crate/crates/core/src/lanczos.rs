//! Lanczos baselines.
//!
//! [`LanczosState`] runs the symmetric three-term recurrence with full
//! reorthogonalization and keeps every Lanczos vector, so it can be extended
//! later. On top of it:
//!
//! - [`LanczosIo`] / [`lanczos_io`]: Lanczos of increasing orders. For each
//!   `K` it tests the `K`-th Ritz pair and, while its residual exceeds the
//!   tolerance, appends `Z_aug` more vectors to the stored basis.
//! - [`batch_smallest`]: recomputes the `K` smallest Laplacian eigenpairs
//!   from a fresh start on every call.
//!
//! The recurrence may be constrained to the orthogonal complement of a set of
//! *locked* vectors. The Laplacian wrappers lock the kernel basis, so the
//! shifted operator's trivial leading pairs never enter the Krylov space and
//! are re-inserted analytically.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clock::Clock;
use crate::eigensolve::{canonicalize_sign, kernel_basis, EigenBasis, SolveError, SolverConfig};
use crate::laplacian::LaplacianMatrix;
use crate::linalg::{
    axpy, dot, fill_random, norm2, normalize, project_out, tridiagonal_eigen, QlNoConvergence,
    SymmetricOperator,
};

/// Relative size of `beta` below which the recurrence is treated as broken down.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-13;

/// Default number of initial Lanczos vectors.
pub const DEFAULT_Z_INI: usize = 20;
/// Default number of vectors appended per extension.
pub const DEFAULT_Z_AUG: usize = 10;

/// Vectors the batch solver appends between convergence checks.
const BATCH_CHECK_STRIDE: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LanczosError {
    #[error("requested {k} Ritz pairs but only {z} Lanczos vectors exist")]
    TooManyPairs { k: usize, z: usize },
    #[error("operator has no room outside the locked subspace (n = {n}, locked = {locked})")]
    NoFreeDirection { n: usize, locked: usize },
    #[error("start vector has length {got}, operator dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Tridiagonal(#[from] QlNoConvergence),
}

/// Stored Lanczos vectors `Q` and the tridiagonal `T = Q^T M Q`.
#[derive(Debug, Clone)]
pub struct LanczosState {
    n: usize,
    q: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    tail: Vec<f64>,
    tail_beta: f64,
    locked: Vec<f64>,
    complete: bool,
    breakdowns: usize,
    norm_estimate: f64,
    matvecs: usize,
    rng: ChaCha8Rng,
}

impl LanczosState {
    /// Starts the recurrence with one Lanczos vector. `start` defaults to a
    /// seeded random vector; it is projected off `locked` (column-major,
    /// `n` rows) before use.
    pub fn new<M: SymmetricOperator + ?Sized>(
        op: &M,
        start: Option<&[f64]>,
        locked: Vec<f64>,
        seed: u64,
    ) -> Result<Self, LanczosError> {
        let n = op.dim();
        let locked_count = locked.len().checked_div(n).unwrap_or(0);
        if n == 0 || locked_count >= n {
            return Err(LanczosError::NoFreeDirection {
                n,
                locked: locked_count,
            });
        }
        let mut st = Self {
            n,
            q: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            tail: vec![0.0; n],
            tail_beta: 0.0,
            locked,
            complete: false,
            breakdowns: 0,
            norm_estimate: 0.0,
            matvecs: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let mut first = match start {
            Some(v) if v.len() != n => {
                return Err(LanczosError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                })
            }
            Some(v) => {
                let mut v = v.to_vec();
                project_out(&mut v, &st.locked);
                v
            }
            None => vec![0.0; n],
        };
        if normalize(&mut first) <= 1e-10 {
            first = st.fresh_direction().ok_or(LanczosError::NoFreeDirection {
                n,
                locked: locked_count,
            })?;
        }
        st.q.extend_from_slice(&first);
        st.advance(op);
        Ok(st)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of Lanczos vectors (`Z`).
    pub fn z(&self) -> usize {
        self.alpha.len()
    }

    /// Diagonal of `T`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Off-diagonal of `T` (`Z - 1` entries).
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Norm of the residual after the last step: the coupling between the
    /// last stored vector and the next one. Zero when the Krylov space is
    /// invariant or exhausted.
    pub fn tail_beta(&self) -> f64 {
        self.tail_beta
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.q[j * self.n..(j + 1) * self.n]
    }

    /// `Q`, column-major.
    pub fn basis(&self) -> &[f64] {
        &self.q
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn breakdowns(&self) -> usize {
        self.breakdowns
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Running lower bound on `||M||` (largest `||M q_j||` seen).
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }

    fn capacity(&self) -> usize {
        self.n - self.locked.len() / self.n
    }

    /// `T` as a dense row-major `Z x Z` matrix.
    pub fn tridiagonal(&self) -> Vec<f64> {
        let z = self.z();
        let mut t = vec![0.0; z * z];
        for i in 0..z {
            t[i * z + i] = self.alpha[i];
            if i + 1 < z {
                t[i * z + i + 1] = self.beta[i];
                t[(i + 1) * z + i] = self.beta[i];
            }
        }
        t
    }

    /// Random unit vector orthogonal to `locked` and `Q`.
    fn fresh_direction(&mut self) -> Option<Vec<f64>> {
        let mut v = vec![0.0; self.n];
        for _ in 0..3 {
            fill_random(&mut self.rng, &mut v);
            let before = norm2(&v);
            project_out(&mut v, &self.locked);
            project_out(&mut v, &self.q);
            if normalize(&mut v) > 1e-8 * before {
                return Some(v);
            }
        }
        None
    }

    /// Computes `alpha` and the residual for the last stored vector.
    fn advance<M: SymmetricOperator + ?Sized>(&mut self, op: &M) {
        let n = self.n;
        let z = self.z();
        let last = &self.q[z * n..(z + 1) * n];
        let mut w = vec![0.0; n];
        op.apply(last, &mut w);
        self.matvecs += 1;
        self.norm_estimate = self.norm_estimate.max(norm2(&w));
        let mut a = dot(last, &w);
        axpy(-a, last, &mut w);
        if let Some(&b) = self.beta.last() {
            axpy(-b, &self.q[(z - 1) * n..z * n], &mut w);
        }
        project_out(&mut w, &self.locked);
        // Full reorthogonalization against Q; the correction along the last
        // vector is folded back into alpha.
        for _ in 0..2 {
            for (j, col) in self.q.chunks_exact(n).enumerate() {
                let c = dot(col, &w);
                axpy(-c, col, &mut w);
                if j == z {
                    a += c;
                }
            }
        }
        self.alpha.push(a);
        self.tail_beta = norm2(&w);
        self.tail = w;
        if self.z() >= self.capacity() {
            self.complete = true;
            self.tail_beta = 0.0;
        }
    }

    /// Appends one Lanczos vector. Returns `false` once the space is exhausted.
    pub fn append<M: SymmetricOperator + ?Sized>(&mut self, op: &M) -> bool {
        if self.complete {
            return false;
        }
        let next = if self.tail_beta > BREAKDOWN_TOLERANCE * self.norm_estimate {
            let mut v = core::mem::take(&mut self.tail);
            let inv = 1.0 / self.tail_beta;
            v.iter_mut().for_each(|x| *x *= inv);
            self.beta.push(self.tail_beta);
            v
        } else {
            self.breakdowns += 1;
            match self.fresh_direction() {
                Some(v) => {
                    self.beta.push(0.0);
                    v
                }
                None => {
                    self.complete = true;
                    self.tail_beta = 0.0;
                    return false;
                }
            }
        };
        self.q.extend_from_slice(&next);
        self.advance(op);
        true
    }

    /// Appends up to `count` vectors; returns how many were added.
    pub fn grow<M: SymmetricOperator + ?Sized>(&mut self, op: &M, count: usize) -> usize {
        let mut added = 0;
        while added < count && self.append(op) {
            added += 1;
        }
        added
    }

    /// The `k` leading Ritz pairs of `T`: largest magnitude first, ties
    /// broken toward the larger value. On the shifted Laplacian, whose free
    /// spectrum is `<= 0`, these are the most negative values.
    pub fn ritz_pairs(&self, k: usize) -> Result<RitzSet, LanczosError> {
        let z = self.z();
        if k > z {
            return Err(LanczosError::TooManyPairs { k, z });
        }
        let eig = tridiagonal_eigen(&self.alpha, &self.beta)?;
        let mut order: Vec<usize> = (0..z).collect();
        order.sort_by(|&a, &b| {
            let (ta, tb) = (eig.values[a], eig.values[b]);
            tb.abs().total_cmp(&ta.abs()).then(tb.total_cmp(&ta))
        });
        let mut values = Vec::with_capacity(k);
        let mut vectors = Vec::with_capacity(k * z);
        let mut residuals = Vec::with_capacity(k);
        for &j in &order[..k] {
            values.push(eig.values[j]);
            let u = eig.vector(j);
            vectors.extend_from_slice(u);
            residuals.push((self.tail_beta * u[z - 1]).abs());
        }
        Ok(RitzSet {
            z,
            values,
            vectors,
            residuals,
        })
    }

    /// `Q u` for every Ritz vector in `rs`, column-major `n x K`.
    pub fn ritz_vectors(&self, rs: &RitzSet) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * rs.k()];
        for (i, u) in rs.vectors.chunks_exact(rs.z).enumerate() {
            let target = &mut out[i * n..(i + 1) * n];
            for (j, &c) in u.iter().enumerate() {
                axpy(c, &self.q[j * n..(j + 1) * n], target);
            }
        }
        out
    }
}

/// Leading eigenpairs `(t_i, u_i)` of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzSet {
    /// Size of `T` the pairs were computed from.
    pub z: usize,
    /// Largest magnitude first.
    pub values: Vec<f64>,
    /// `u_i` column-major, `z` rows each.
    pub vectors: Vec<f64>,
    /// `|beta_Z * u_i[Z]|` per pair.
    pub residuals: Vec<f64>,
}

impl RitzSet {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.z..(i + 1) * self.z]
    }
}

/// Builds a state with `z_ini` vectors (fewer if the space runs out, in which
/// case the state is flagged complete).
pub fn lanczos_init<M: SymmetricOperator + ?Sized>(
    op: &M,
    z_ini: usize,
    seed: u64,
) -> Result<LanczosState, LanczosError> {
    let mut st = LanczosState::new(op, None, Vec::new(), seed)?;
    st.grow(op, z_ini.saturating_sub(1));
    Ok(st)
}

/// Appends `z_aug` vectors, continuing the recurrence from the stored ones.
pub fn lanczos_extend<M: SymmetricOperator + ?Sized>(st: &mut LanczosState, op: &M, z_aug: usize) -> usize {
    st.grow(op, z_aug)
}

/// Residual estimate of the `k`-th (1-based) Ritz pair: `|beta_Z * U[Z, k]|`,
/// where `beta_Z` couples the last stored Lanczos vector to the next one.
/// Bounds `||M Q u_k - t_k Q u_k||` up to rounding.
pub fn ritz_residual(st: &LanczosState, rs: &RitzSet, k: usize) -> f64 {
    if st.is_complete() {
        return 0.0;
    }
    let u = rs.vector(k - 1);
    (st.tail_beta() * u[rs.z - 1]).abs()
}

/// `||M||_2` estimated by `iterations` power steps from a seeded start.
pub fn estimate_norm<M: SymmetricOperator + ?Sized>(op: &M, iterations: usize, seed: u64) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    fill_random(&mut rng, &mut x);
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        op.apply(&x, &mut y);
        estimate = norm2(&y);
        if estimate == 0.0 {
            break;
        }
        x.copy_from_slice(&y);
        normalize(&mut x);
    }
    estimate
}

/// `M = L + sigma * V_delta V_delta^T - sigma I` with `V_delta` the kernel
/// basis of `L` and `sigma` its deflation shift. For a connected graph this is
/// `L + (s/n) 1 1^T - s I`. Its leading eigenpairs are the smallest nontrivial
/// eigenpairs of `L` shifted by `-sigma`; the kernel maps to `0`.
#[derive(Debug, Clone)]
pub struct ShiftedOperator<'a> {
    laplacian: &'a LaplacianMatrix,
    kernel: Vec<f64>,
    shift: f64,
}

impl<'a> ShiftedOperator<'a> {
    pub fn new(laplacian: &'a LaplacianMatrix) -> Self {
        let kernel = kernel_basis(laplacian, &laplacian.connected_components());
        Self {
            laplacian,
            kernel: kernel.vectors().to_vec(),
            shift: laplacian.spectral_shift(),
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Kernel basis of the Laplacian, column-major.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
}

/// `M = L + (s/n) 1 1^T - s I` for a connected graph's unnormalized Laplacian.
pub fn shifted_operator(laplacian: &LaplacianMatrix, s: f64) -> ShiftedOperator<'_> {
    let n = laplacian.n();
    let c = 1.0 / libm::sqrt(n as f64);
    ShiftedOperator {
        laplacian,
        kernel: vec![c; n],
        shift: s,
    }
}

impl SymmetricOperator for ShiftedOperator<'_> {
    fn dim(&self) -> usize {
        self.laplacian.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.laplacian.apply(x, y);
        axpy(-self.shift, x, y);
        for col in self.kernel.chunks_exact(x.len()) {
            let c = self.shift * dot(col, x);
            axpy(c, col, y);
        }
    }
}

/// Lanczos-IO parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LanczosIoParams {
    pub z_ini: usize,
    pub z_aug: usize,
    /// Ritz residual tolerance; `None` means `machine epsilon * ||M||` with
    /// `||M||` estimated by 50 power iterations.
    pub tolerance: Option<f64>,
}

impl Default for LanczosIoParams {
    fn default() -> Self {
        Self {
            z_ini: DEFAULT_Z_INI,
            z_aug: DEFAULT_Z_AUG,
            tolerance: None,
        }
    }
}

/// Per-`K` record of a Lanczos-IO run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorkLogEntry {
    pub k: usize,
    /// Lanczos vectors held after this `K` converged.
    pub z: usize,
    /// Extensions performed for this `K`.
    pub extensions: usize,
    /// Operator applications for this `K`.
    pub matvecs: usize,
    pub elapsed_nanos: u64,
    pub residual: f64,
}

/// Lanczos of increasing orders, one `K` at a time.
pub struct LanczosIo<'a, M: SymmetricOperator + ?Sized> {
    op: &'a M,
    state: LanczosState,
    params: LanczosIoParams,
    tolerance: f64,
    k: usize,
    ritz: Option<RitzSet>,
    log: Vec<WorkLogEntry>,
}

impl<'a, M: SymmetricOperator + ?Sized> LanczosIo<'a, M> {
    /// Initializes with `z_ini` vectors. `locked` columns are kept out of
    /// the Krylov space.
    pub fn new(op: &'a M, params: LanczosIoParams, locked: Vec<f64>, seed: u64) -> Result<Self, LanczosError> {
        let tolerance = match params.tolerance {
            Some(t) => t,
            None => f64::EPSILON * estimate_norm(op, 50, seed ^ 0x9e37_79b9_7f4a_7c15),
        };
        let mut state = LanczosState::new(op, None, locked, seed)?;
        state.grow(op, params.z_ini.saturating_sub(1));
        Ok(Self {
            op,
            state,
            params,
            tolerance,
            k: 0,
            ritz: None,
            log: Vec::new(),
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn state(&self) -> &LanczosState {
        &self.state
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn log(&self) -> &[WorkLogEntry] {
        &self.log
    }

    /// Largest `K` reachable: the dimension of the free space.
    pub fn max_k(&self) -> usize {
        self.state.capacity()
    }

    /// Advances to `K + 1`: extends until the new `K`-th Ritz residual meets
    /// the tolerance or the space is exhausted.
    pub fn advance<C: Clock + ?Sized>(&mut self, clock: &C) -> Result<WorkLogEntry, LanczosError> {
        let started = clock.now_nanos();
        let k = self.k + 1;
        let max_k = self.max_k();
        if k > max_k {
            return Err(LanczosError::TooManyPairs { k, z: max_k });
        }
        let matvecs_before = self.state.matvecs();
        let mut extensions = 0;
        loop {
            while self.state.z() < k && self.state.append(self.op) {}
            let rs = self.state.ritz_pairs(k)?;
            let residual = ritz_residual(&self.state, &rs, k);
            if residual <= self.tolerance || self.state.is_complete() {
                self.ritz = Some(rs);
                let entry = WorkLogEntry {
                    k,
                    z: self.state.z(),
                    extensions,
                    matvecs: self.state.matvecs() - matvecs_before,
                    elapsed_nanos: clock.now_nanos().saturating_sub(started),
                    residual,
                };
                self.k = k;
                self.log.push(entry);
                return Ok(entry);
            }
            self.state.grow(self.op, self.params.z_aug);
            extensions += 1;
        }
    }

    /// Current `K` leading pairs: values (largest magnitude first) and vectors
    /// (column-major `n x K`).
    pub fn pairs(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.ritz {
            Some(rs) => (rs.values.clone(), self.state.ritz_vectors(rs)),
            None => (Vec::new(), Vec::new()),
        }
    }
}

/// Output of [`lanczos_io`].
#[derive(Debug, Clone)]
pub struct LanczosIoResult {
    /// Leading eigenvalues of `M`, largest magnitude first.
    pub values: Vec<f64>,
    /// Matching vectors, column-major.
    pub vectors: Vec<f64>,
    pub log: Vec<WorkLogEntry>,
    /// The Krylov space filled the whole free space; pairs are exact.
    pub exhausted: bool,
    pub tolerance: f64,
}

/// Runs Lanczos-IO for `K = 1..=k_target` on `op`.
pub fn lanczos_io<M: SymmetricOperator + ?Sized, C: Clock + ?Sized>(
    op: &M,
    k_target: usize,
    params: LanczosIoParams,
    seed: u64,
    clock: &C,
) -> Result<LanczosIoResult, LanczosError> {
    lanczos_io_locked(op, k_target, params, Vec::new(), seed, clock)
}

fn lanczos_io_locked<M: SymmetricOperator + ?Sized, C: Clock + ?Sized>(
    op: &M,
    k_target: usize,
    params: LanczosIoParams,
    locked: Vec<f64>,
    seed: u64,
    clock: &C,
) -> Result<LanczosIoResult, LanczosError> {
    let mut io = LanczosIo::new(op, params, locked, seed)?;
    if k_target > io.max_k() {
        return Err(LanczosError::TooManyPairs {
            k: k_target,
            z: io.max_k(),
        });
    }
    for _ in 0..k_target {
        io.advance(clock)?;
    }
    let (values, vectors) = io.pairs();
    Ok(LanczosIoResult {
        values,
        vectors,
        exhausted: io.state.is_complete(),
        tolerance: io.tolerance,
        log: io.log,
    })
}

/// Smallest `k_target` eigenpairs of `L` via Lanczos-IO on the shifted
/// operator. The kernel is locked out of the Krylov space and prepended
/// analytically, so the result is ordered like an incremental basis.
pub fn lanczos_io_smallest<C: Clock + ?Sized>(
    l: &LaplacianMatrix,
    k_target: usize,
    params: LanczosIoParams,
    seed: u64,
    clock: &C,
) -> Result<(EigenBasis, LanczosIoResult), SolveError> {
    let n = l.n();
    if k_target > n {
        return Err(SolveError::TargetOutOfRange { k: k_target, n });
    }
    let op = ShiftedOperator::new(l);
    let mut basis = kernel_basis(l, &l.connected_components());
    let delta = basis.k();
    if k_target <= delta {
        let empty = LanczosIoResult {
            values: Vec::new(),
            vectors: Vec::new(),
            log: Vec::new(),
            exhausted: false,
            tolerance: 0.0,
        };
        return Ok((basis.truncated(k_target), empty));
    }
    let result = lanczos_io_locked(&op, k_target - delta, params, op.kernel().to_vec(), seed, clock)?;
    push_shifted_pairs(l, &mut basis, &result.vectors);
    Ok((basis, result))
}

/// Appends pairs given as eigenvectors of the shifted operator, most
/// negative shifted value first. Values are re-evaluated as Rayleigh quotients of `L`.
fn push_shifted_pairs(l: &LaplacianMatrix, basis: &mut EigenBasis, vectors: &[f64]) {
    let n = l.n();
    let mut lv = vec![0.0; n];
    for col in vectors.chunks_exact(n) {
        let mut v = col.to_vec();
        normalize(&mut v);
        canonicalize_sign(&mut v);
        l.apply(&v, &mut lv);
        let value = dot(&v, &lv);
        basis.push_unchecked(value, &v);
    }
}

/// The `k` smallest eigenpairs of `L`, recomputed from scratch: a fresh
/// seeded Lanczos run on the shifted operator grows its Krylov space until
/// every wanted Ritz pair has residual `<= cfg.tol * sigma`.
pub fn batch_smallest(l: &LaplacianMatrix, k: usize, cfg: &SolverConfig) -> Result<EigenBasis, SolveError> {
    let n = l.n();
    if k > n {
        return Err(SolveError::TargetOutOfRange { k, n });
    }
    let op = ShiftedOperator::new(l);
    let mut basis = kernel_basis(l, &l.connected_components());
    let delta = basis.k();
    if k <= delta {
        return Ok(basis.truncated(k));
    }
    let wanted = k - delta;
    let threshold = cfg.tol * op.shift();
    let mut st = LanczosState::new(&op, None, op.kernel().to_vec(), cfg.seed)?;
    st.grow(&op, (2 * wanted + DEFAULT_Z_AUG).max(DEFAULT_Z_INI) - 1);
    let rs = loop {
        if st.z() >= wanted {
            let rs = st.ritz_pairs(wanted)?;
            let worst = rs.residuals.iter().fold(0.0f64, |a, &b| a.max(b));
            if worst <= threshold || st.is_complete() {
                break rs;
            }
        }
        // Once the free space is exhausted `grow` adds nothing and the state
        // is complete, which ends the loop above.
        st.grow(&op, BATCH_CHECK_STRIDE);
    };
    let vectors = st.ritz_vectors(&rs);
    push_shifted_pairs(l, &mut basis, &vectors);
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::NoClock;
    use crate::graph::Graph;
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use crate::linalg::DenseSymmetric;
    use approx::assert_abs_diff_eq;

    fn path3() -> LaplacianMatrix {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        build_laplacian(&g, LaplacianKind::Unnormalized).unwrap()
    }

    #[test]
    fn shifted_operator_on_path3() {
        let l = path3();
        let m = shifted_operator(&l, 4.0);
        let mut y = [0.0; 3];
        let c = 1.0 / libm::sqrt(3.0);
        m.apply(&[c, c, c], &mut y);
        for v in y {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let v2 = [h, 0.0, -h];
        m.apply(&v2, &mut y);
        for (a, b) in y.iter().zip(v2) {
            assert_abs_diff_eq!(*a, -3.0 * b, epsilon = 1e-14);
        }
        let dense = DenseSymmetric::from_operator(&m);
        let eig = crate::linalg::dense_symmetric_eigen(&dense).unwrap();
        for (a, b) in eig.values.iter().zip([-3.0, -1.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn init_recovers_diagonal_spectrum() {
        let m = DenseSymmetric::diagonal(&[3.0, 2.0, 1.0]);
        let st = lanczos_init(&m, 3, 5).unwrap();
        assert!(st.is_complete());
        let rs = st.ritz_pairs(3).unwrap();
        for (a, b) in rs.values.iter().zip([3.0, 2.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
        let rs2 = st.ritz_pairs(2).unwrap();
        assert_abs_diff_eq!(rs2.values[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rs2.values[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn identity_breaks_down_immediately() {
        let m = DenseSymmetric::diagonal(&[1.0, 1.0, 1.0]);
        let st = lanczos_init(&m, 3, 1).unwrap();
        assert_eq!(st.beta()[0], 0.0);
        assert!(st.breakdowns() >= 1);
        assert!(st.is_complete());
        for a in st.alpha() {
            assert_abs_diff_eq!(*a, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn too_many_pairs() {
        let m = DenseSymmetric::diagonal(&[3.0, 2.0, 1.0]);
        let st = lanczos_init(&m, 2, 1).unwrap();
        assert!(matches!(st.ritz_pairs(3), Err(LanczosError::TooManyPairs { k: 3, z: 2 })));
    }

    #[test]
    fn extend_to_full_space() {
        let m = DenseSymmetric::diagonal(&[3.0, 2.0, 1.0]);
        let mut st = lanczos_init(&m, 2, 9).unwrap();
        assert!(!st.is_complete());
        lanczos_extend(&mut st, &m, 10);
        assert_eq!(st.z(), 3);
        assert!(st.is_complete());
        let before = st.z();
        assert_eq!(lanczos_extend(&mut st, &m, 10), 0);
        assert_eq!(st.z(), before);
        let rs = st.ritz_pairs(3).unwrap();
        for (a, b) in rs.values.iter().zip([3.0, 2.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn ritz_pairs_of_small_tridiagonals() {
        // State whose T is [[2, 1], [1, 2]]: build it directly.
        let st = LanczosState {
            n: 2,
            q: vec![1.0, 0.0, 0.0, 1.0],
            alpha: vec![2.0, 2.0],
            beta: vec![1.0],
            tail: vec![0.0; 2],
            tail_beta: 0.0,
            locked: Vec::new(),
            complete: true,
            breakdowns: 0,
            norm_estimate: 3.0,
            matvecs: 2,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        let rs = st.ritz_pairs(2).unwrap();
        assert_abs_diff_eq!(rs.values[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rs.values[1], 1.0, epsilon = 1e-14);

        let diag = LanczosState {
            alpha: vec![5.0, 1.0],
            beta: vec![0.0],
            ..st.clone()
        };
        let rs = diag.ritz_pairs(2).unwrap();
        assert_eq!(rs.values, vec![5.0, 1.0]);
    }

    #[test]
    fn ritz_residual_formula() {
        let mut st = LanczosState {
            n: 2,
            q: vec![1.0, 0.0, 0.0, 1.0],
            alpha: vec![2.0, 2.0],
            beta: vec![1.0],
            tail: vec![0.0; 2],
            tail_beta: 0.5,
            locked: Vec::new(),
            complete: false,
            breakdowns: 0,
            norm_estimate: 3.0,
            matvecs: 2,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        let rs = RitzSet {
            z: 2,
            values: vec![3.0],
            vectors: vec![0.0, 0.2],
            residuals: vec![0.1],
        };
        assert_abs_diff_eq!(ritz_residual(&st, &rs, 1), 0.1, epsilon = 1e-15);
        let zero_bottom = RitzSet {
            vectors: vec![1.0, 0.0],
            ..rs.clone()
        };
        assert_eq!(ritz_residual(&st, &zero_bottom, 1), 0.0);
        st.tail_beta = 0.0;
        assert_eq!(ritz_residual(&st, &rs, 1), 0.0);
    }

    #[test]
    fn lanczos_io_on_diagonal() {
        let m = DenseSymmetric::diagonal(&[3.0, 2.0, 1.0]);
        let r = lanczos_io(&m, 3, LanczosIoParams::default(), 4, &NoClock).unwrap();
        for (a, b) in r.values.iter().zip([3.0, 2.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
        assert_eq!(r.log.len(), 3);
    }

    #[test]
    fn infinite_tolerance_never_extends() {
        let diag: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let m = DenseSymmetric::diagonal(&diag);
        let params = LanczosIoParams {
            tolerance: Some(f64::INFINITY),
            ..LanczosIoParams::default()
        };
        let r = lanczos_io(&m, 5, params, 4, &NoClock).unwrap();
        assert!(r.log.iter().all(|e| e.extensions == 0 && e.z == DEFAULT_Z_INI));
    }

    #[test]
    fn path3_filters_trivial_pair() {
        let l = path3();
        // Plain run on M over the whole space: {-3, -1, 0} by magnitude.
        let m = shifted_operator(&l, 4.0);
        let r = lanczos_io(&m, 3, LanczosIoParams::default(), 2, &NoClock).unwrap();
        for (a, b) in r.values.iter().zip([-3.0, -1.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        // The 0 belongs to the constant vector; with the kernel locked the
        // mapped values come out as {0, 1, 3}.
        let (basis, _) = lanczos_io_smallest(&l, 3, LanczosIoParams::default(), 2, &NoClock).unwrap();
        for (a, b) in basis.values().iter().zip([0.0, 1.0, 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn batch_examples() {
        let cfg = SolverConfig::default();
        let b = batch_smallest(&path3(), 3, &cfg).unwrap();
        for (a, e) in b.values().iter().zip([0.0, 1.0, 3.0]) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-12);
        }
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let b = batch_smallest(&l, 2, &cfg).unwrap();
        assert_eq!(b.values(), &[0.0, 0.0]);
        let b = batch_smallest(&l, 4, &cfg).unwrap();
        for (a, e) in b.values().iter().zip([0.0, 0.0, 2.0, 2.0]) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-12);
        }
    }
}
