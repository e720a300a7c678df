//! Small dense linear-algebra kit: vector kernels, compensated summation,
//! symmetric operators, and a tridiagonal/dense symmetric eigensolver
//! (Householder reduction followed by implicit QL, after EISPACK `tred2`/`tql2`).

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

/// A real symmetric linear operator applied matrix-free.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `y <- A x`. Both slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// Dense symmetric matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    /// Builds from row-major data. Returns `None` unless `data.len() == n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == n * n).then_some(Self { n, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self { n, data }
    }

    /// Materializes an operator column by column: column `j` is `A e_j`.
    /// The result is symmetrized as `(A + A^T) / 2`.
    pub fn from_operator<A: SymmetricOperator + ?Sized>(op: &A) -> Self {
        let n = op.dim();
        let mut data = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            op.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, out) in self.data.chunks_exact(self.n).zip(y.iter_mut()) {
            *out = dot(row, x);
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators; keeps the loop vectorizable.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in (4 * chunks)..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y <- y + alpha x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(x: &mut [f64], alpha: f64) {
    for v in x {
        *v *= alpha;
    }
}

/// Scales `x` to unit norm and returns the previous norm. Leaves `x`
/// untouched when the norm is zero or not finite.
pub fn normalize(x: &mut [f64]) -> f64 {
    let nrm = norm2(x);
    if nrm > 0.0 && nrm.is_finite() {
        scale(x, 1.0 / nrm);
    }
    nrm
}

/// Neumaier's improved Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Removes from `x` its components along the columns of `basis`
/// (column-major, `x.len()` rows). Two passes of classical Gram-Schmidt.
pub fn project_out(x: &mut [f64], basis: &[f64]) {
    let n = x.len();
    if n == 0 {
        return;
    }
    for _ in 0..2 {
        for col in basis.chunks_exact(n) {
            let c = dot(col, x);
            axpy(-c, col, x);
        }
    }
}

/// Fills `x` with independent uniform draws from `[-1, 1)`.
pub fn fill_random<R: Rng + ?Sized>(rng: &mut R, x: &mut [f64]) {
    for v in x {
        *v = rng.random_range(-1.0..1.0);
    }
}

/// Eigendecomposition of a symmetric matrix. Values ascending; `vectors`
/// holds the matching unit eigenvectors column-major (`n` rows, `n` columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.vectors[j * n..(j + 1) * n]
    }
}

/// The implicit QL iteration failed to deflate an eigenvalue within its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("symmetric QL iteration did not converge for eigenvalue {index}")]
pub struct QlNoConvergence {
    pub index: usize,
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples rows `i` and `i + 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SymmetricEigen, QlNoConvergence> {
    let n = diag.len();
    assert!(n == 0 || off.len() + 1 >= n, "off-diagonal too short");
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    let m = n.saturating_sub(1);
    e[..m].copy_from_slice(&off[..m]);
    // Row-major accumulator, starts at identity.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    tql2(n, &mut d, &mut e, &mut v)?;
    Ok(sorted_eigen(n, d, &v))
}

/// Full eigendecomposition of a dense symmetric matrix. Only the lower
/// triangle of `a` is read.
pub fn dense_symmetric_eigen(a: &DenseSymmetric) -> Result<SymmetricEigen, QlNoConvergence> {
    let n = a.n();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let mut v = a.as_row_major().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    // tred2 leaves the subdiagonal in e[1..]; tql2 wants it in e[..n-1].
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    tql2(n, &mut d, &mut e, &mut v)?;
    Ok(sorted_eigen(n, d, &v))
}

fn sorted_eigen(n: usize, d: Vec<f64>, v: &[f64]) -> SymmetricEigen {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        for k in 0..n {
            vectors.push(v[k * n + j]);
        }
    }
    SymmetricEigen { values, vectors }
}

/// Householder reduction of a symmetric matrix (row-major in `v`) to
/// tridiagonal form. On return `v` holds the orthogonal transform, `d` the
/// diagonal, and `e[1..]` the subdiagonal.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix
/// (`d` diagonal, `e[i]` couples `i` and `i + 1`), accumulating rotations
/// into the row-major `v`.
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], v: &mut [f64]) -> Result<(), QlNoConvergence> {
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    e[n - 1] = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > 60 {
                    return Err(QlNoConvergence { index: l });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let row = k * n;
                        h = v[row + i + 1];
                        v[row + i + 1] = s * v[row + i] + c * h;
                        v[row + i] = c * v[row + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tridiagonal_two_by_two() {
        let eig = tridiagonal_eigen(&[2.0, 2.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(eig.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 3.0, epsilon = 1e-14);
        let v = eig.vector(1);
        assert_abs_diff_eq!(v[0].abs(), core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(v[0], v[1], epsilon = 1e-14);
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let eig = tridiagonal_eigen(&[5.0, 1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert_eq!(eig.values, vec![1.0, 3.0, 5.0]);
        assert_eq!(eig.vector(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn dense_matches_nalgebra_on_random_matrices() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 3, 7, 20, 41] {
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    data[i * n + j] = x;
                    data[j * n + i] = x;
                }
            }
            let ours = dense_symmetric_eigen(&DenseSymmetric::from_row_major(n, data.clone()).unwrap()).unwrap();
            let theirs = nalgebra::DMatrix::from_row_slice(n, n, &data).symmetric_eigen();
            let mut reference: Vec<f64> = theirs.eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            for (a, b) in ours.values.iter().zip(&reference) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            // A v = lambda v for every returned pair.
            let a = DenseSymmetric::from_row_major(n, data).unwrap();
            let mut av = vec![0.0; n];
            for j in 0..n {
                a.apply(ours.vector(j), &mut av);
                for k in 0..n {
                    assert_abs_diff_eq!(av[k], ours.values[j] * ours.vector(j)[k], epsilon = 1e-11);
                }
                assert_abs_diff_eq!(norm2(ours.vector(j)), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn project_out_leaves_orthogonal_remainder() {
        let basis = [1.0, 0.0, 0.0, 0.0, 0.6, 0.8];
        let mut x = [3.0, 1.0, 1.0];
        project_out(&mut x, &basis);
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(0.6 * x[1] + 0.8 * x[2], 0.0, epsilon = 1e-15);
    }
}
