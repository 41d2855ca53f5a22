//! Dense linear algebra kernels.
//!
//! Everything operates on a row-major [`DenseMatrix`] of `f64`. The sizes
//! involved are modest (a few hundred rows at most), so the routines favour
//! simplicity and exact error semantics over blocking:
//!
//! * [`cholesky_psd`] - outer-product Cholesky with complete (diagonal)
//!   pivoting for positive *semi*definite matrices, returning the numerical
//!   rank and a factor valid for rank-deficient input;
//! * [`min_eigenvalue_bound`] - certified lower bound on the smallest
//!   eigenvalue by bisection on the shift that keeps a Cholesky alive;
//! * [`woodbury_solve`] - solve `(diag(d) + U U') beta = rhs` through the
//!   low-rank update formula in `O(m p^2 + p^3)`;
//! * [`LuFactor`] - dense LU with partial pivoting, with transposed solves
//!   for the simplex engine.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric: entries ({i},{j}) and ({j},{i}) differ by {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("matrix is not positive semidefinite: pivot {value:e} at index {index}")]
    NotPsd { index: usize, value: f64 },
    #[error("linear system is numerically singular")]
    SingularSystem,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from explicit rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        DenseMatrix { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest entry in absolute value (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self' * x` without forming the transpose.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += xi * v;
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Worst asymmetry `|m_ij - m_ji|` together with its index pair.
    pub fn max_asymmetry(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                let d = (self[(i, j)] - self[(j, i)]).abs();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factorization of a symmetric positive semidefinite matrix with
/// complete (diagonal) pivoting.
///
/// The factor is kept as columns in original row order, so
/// `m = F F'` with `F = factor_columns()` of shape `n x rank`. Pivots are
/// chosen as the largest remaining diagonal entry (lowest index on ties);
/// the factorization stops once the best pivot drops to
/// `tol * max(initial diagonal)` and the numerical rank is the number of
/// accepted pivots.
#[derive(Debug, Clone)]
pub struct SymFactor {
    n: usize,
    rank: usize,
    /// `cols[t][i]` is the entry of pivot column `t` at original row `i`.
    cols: Vec<Vec<f64>>,
    /// Pivot sequence: `perm[t]` is the original index chosen at step `t`.
    perm: Vec<usize>,
}

impl SymFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// The factor as an `n x rank` matrix `F` with `m ~= F F'`,
    /// rows in original order.
    pub fn factor_columns(&self) -> DenseMatrix {
        let mut f = DenseMatrix::zeros(self.n, self.rank);
        for (t, col) in self.cols.iter().enumerate() {
            for i in 0..self.n {
                f[(i, t)] = col[i];
            }
        }
        f
    }

    /// `F F'`, for testing reconstruction error.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for col in &self.cols {
            for i in 0..self.n {
                if col[i] == 0.0 {
                    continue;
                }
                for j in 0..self.n {
                    m[(i, j)] += col[i] * col[j];
                }
            }
        }
        m
    }

    /// Solve `m z = rhs`. Requires full rank.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if self.rank < self.n {
            return Err(LinalgError::SingularSystem);
        }
        assert_eq!(rhs.len(), self.n);
        // In pivot order the factor is lower triangular: L[s][t] = cols[t][perm[s]].
        let n = self.n;
        let mut z = vec![0.0; n];
        for t in 0..n {
            let mut v = rhs[self.perm[t]];
            for c in 0..t {
                v -= self.cols[c][self.perm[t]] * z[c];
            }
            z[t] = v / self.cols[t][self.perm[t]];
        }
        let mut w = vec![0.0; n];
        for t in (0..n).rev() {
            let mut v = z[t];
            for c in (t + 1)..n {
                v -= self.cols[t][self.perm[c]] * w[c];
            }
            w[t] = v / self.cols[t][self.perm[t]];
        }
        let mut out = vec![0.0; n];
        for t in 0..n {
            out[self.perm[t]] = w[t];
        }
        Ok(out)
    }
}

/// Pivoted Cholesky of a symmetric PSD matrix; see [`SymFactor`].
///
/// Fails with `NotSymmetric` when the asymmetry exceeds `tol * (1 + max|m|)`
/// and with `NotPsd` when a remaining diagonal entry falls below
/// `-tol * max(1, max|m|)`.
pub fn cholesky_psd(m: &DenseMatrix, tol: f64) -> Result<SymFactor, LinalgError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "cholesky of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.max_abs();
    let (ai, aj, asym) = m.max_asymmetry();
    if asym > tol * (1.0 + scale) {
        return Err(LinalgError::NotSymmetric { i: ai, j: aj, diff: asym });
    }

    let mut d: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    let max_init_diag = d.iter().fold(0.0_f64, |a, &v| a.max(v));
    let stop = tol * max_init_diag.max(0.0);
    let neg = tol * scale.max(1.0);

    let mut done = vec![false; n];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut perm = Vec::new();
    let mut rank = n;
    for t in 0..n {
        let mut p = usize::MAX;
        for i in 0..n {
            if !done[i] && (p == usize::MAX || d[i] > d[p]) {
                p = i;
            }
        }
        if d[p] <= stop {
            for i in 0..n {
                if !done[i] && d[i] < -neg {
                    return Err(LinalgError::NotPsd { index: i, value: d[i] });
                }
            }
            // A PSD residual with negligible diagonal must be negligible
            // everywhere; a large off-diagonal residual betrays an
            // indefinite matrix whose pivots all happened to be small.
            let resid_tol = stop + neg;
            for i in 0..n {
                if done[i] {
                    continue;
                }
                for j in (i + 1)..n {
                    if done[j] {
                        continue;
                    }
                    let mut v = m[(i, j)];
                    for c in &cols {
                        v -= c[i] * c[j];
                    }
                    if v.abs() > resid_tol {
                        return Err(LinalgError::NotPsd { index: i, value: v });
                    }
                }
            }
            rank = t;
            break;
        }
        let s = d[p].sqrt();
        let mut col = vec![0.0; n];
        col[p] = s;
        for i in 0..n {
            if done[i] || i == p {
                continue;
            }
            let mut v = m[(i, p)];
            for c in &cols {
                v -= c[i] * c[p];
            }
            let l = v / s;
            col[i] = l;
            d[i] -= l * l;
        }
        done[p] = true;
        perm.push(p);
        cols.push(col);
    }
    Ok(SymFactor { n, rank, cols, perm })
}

/// Certified lower bound on the smallest eigenvalue of a symmetric matrix.
///
/// Bisects on the largest shift `lambda` for which `m - lambda I` still
/// admits a PSD Cholesky; the returned value satisfies
/// `lambda <= lambda_min(m) <= lambda + 1e-6 * max|m|`.
pub fn min_eigenvalue_bound(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    assert_eq!(m.cols(), n, "square matrix required");
    if n == 0 {
        return 0.0;
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let width = 1e-6 * scale;

    let shifted_psd = |lambda: f64| -> bool {
        let mut w = m.clone();
        for i in 0..n {
            w[(i, i)] -= lambda;
        }
        cholesky_psd(&w, 1e-12).is_ok()
    };

    // Gershgorin gives a shift that always succeeds; the smallest diagonal
    // entry always dominates the smallest eigenvalue.
    let mut lo = f64::INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        lo = lo.min(m[(i, i)] - off);
        hi = hi.min(m[(i, i)]);
    }
    if shifted_psd(hi) {
        return hi;
    }
    let mut iter = 0;
    while hi - lo > width && iter < 200 {
        let mid = 0.5 * (lo + hi);
        if shifted_psd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
    }
    lo
}

/// Solve `(diag(d) + U U') beta = rhs` where `d > 0` entrywise and `U` is
/// `m x p` with small `p`, via the low-rank update formula:
/// one `p x p` capacitance solve instead of an `m x m` factorization.
pub fn woodbury_solve(d: &[f64], u: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let m = d.len();
    let p = u.cols();
    if u.rows() != m || rhs.len() != m {
        return Err(LinalgError::DimensionMismatch(format!(
            "woodbury with d of length {}, U {}x{}, rhs of length {}",
            m,
            u.rows(),
            u.cols(),
            rhs.len()
        )));
    }
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(LinalgError::SingularSystem);
    }
    let z: Vec<f64> = rhs.iter().zip(d).map(|(r, di)| r / di).collect();
    if p == 0 {
        return Ok(z);
    }
    // Capacitance S = I + U' D^-1 U.
    let mut s = DenseMatrix::identity(p);
    for i in 0..m {
        let row = u.row(i);
        let inv = 1.0 / d[i];
        for a in 0..p {
            if row[a] == 0.0 {
                continue;
            }
            let ra = row[a] * inv;
            for b in a..p {
                s[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            s[(a, b)] = s[(b, a)];
        }
    }
    let w = u.matvec_transpose(&z);
    let factor = cholesky_psd(&s, 1e-12).map_err(|_| LinalgError::SingularSystem)?;
    if factor.rank() < p {
        return Err(LinalgError::SingularSystem);
    }
    let v = factor.solve(&w)?;
    let uv = u.matvec(&v);
    Ok((0..m).map(|i| z[i] - uv[i] / d[i]).collect())
}

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: DenseMatrix,
    /// Row permutation: stage `k` swapped rows `k` and `perm[k]`.
    perm: Vec<usize>,
}

impl LuFactor {
    /// Factor a square matrix; fails when a pivot column is entirely
    /// negligible relative to the matrix scale.
    pub fn new(a: &DenseMatrix) -> Result<LuFactor, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let mut lu = a.clone();
        let mut perm = vec![0usize; n];
        let tiny = 1e-14 * a.max_abs().max(1.0);
        for k in 0..n {
            let mut p = k;
            for i in (k + 1)..n {
                if lu[(i, k)].abs() > lu[(p, k)].abs() {
                    p = i;
                }
            }
            if lu[(p, k)].abs() <= tiny {
                return Err(LinalgError::SingularSystem);
            }
            perm[k] = p;
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let piv = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(LuFactor { n, lu, perm })
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.perm[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk != 0.0 {
                for i in (k + 1)..n {
                    x[i] -= self.lu[(i, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut v = x[k];
            for j in (k + 1)..n {
                v -= self.lu[(k, j)] * x[j];
            }
            x[k] = v / self.lu[(k, k)];
        }
        x
    }

    /// Solve `A' x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        // U' L' P x = b: forward with U', backward with L', then unpermute.
        for k in 0..n {
            let mut v = x[k];
            for i in 0..k {
                v -= self.lu[(i, k)] * x[i];
            }
            x[k] = v / self.lu[(k, k)];
        }
        for k in (0..n).rev() {
            let xk = x[k];
            if xk != 0.0 {
                for i in 0..k {
                    x[i] -= self.lu[(k, i)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            x.swap(k, self.perm[k]);
        }
        x
    }
}

/// Solve a single dense square system `A x = b`.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(LuFactor::new(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.cols(), b.cols());
        a.data()
            .iter()
            .zip(b.data())
            .fold(0.0, |acc: f64, (x, y)| acc.max((x - y).abs()))
    }

    #[test]
    fn cholesky_identity_is_identity() {
        let f = cholesky_psd(&DenseMatrix::identity(3), 1e-10).unwrap();
        assert_eq!(f.rank(), 3);
        assert_eq!(max_diff(&f.reconstruct(), &DenseMatrix::identity(3)), 0.0);
    }

    #[test]
    fn cholesky_rank_deficient_ones() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let f = cholesky_psd(&m, 1e-10).unwrap();
        assert_eq!(f.rank(), 1);
        let cols = f.factor_columns();
        assert_close(cols[(0, 0)], 1.0, 1e-12);
        assert_close(cols[(1, 0)], 1.0, 1e-12);
        assert!(max_diff(&f.reconstruct(), &m) <= 1e-12);
    }

    #[test]
    fn cholesky_two_by_two() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let f = cholesky_psd(&m, 1e-10).unwrap();
        assert_eq!(f.rank(), 2);
        assert!(max_diff(&f.reconstruct(), &m) <= 1e-10 * 2.0);
    }

    #[test]
    fn cholesky_rejects_negative() {
        let m = DenseMatrix::from_rows(&[vec![-1.0]]);
        match cholesky_psd(&m, 1e-10) {
            Err(LinalgError::NotPsd { index: 0, .. }) => {}
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_rejects_asymmetric() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]);
        match cholesky_psd(&m, 1e-10) {
            Err(LinalgError::NotSymmetric { i: 0, j: 1, .. }) => {}
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_solve_matches_direct() {
        let m = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ]);
        let f = cholesky_psd(&m, 1e-12).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = m.matvec(&x);
        assert_close(r[0], 1.0, 1e-10);
        assert_close(r[1], 2.0, 1e-10);
        assert_close(r[2], 3.0, 1e-10);
    }

    #[test]
    fn min_eigenvalue_identity() {
        let lambda = min_eigenvalue_bound(&DenseMatrix::identity(2));
        assert!(lambda <= 1.0 && lambda >= 1.0 - 1e-6, "{lambda}");
    }

    #[test]
    fn min_eigenvalue_two_by_two() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let lambda = min_eigenvalue_bound(&m);
        assert!(lambda <= 1.0 + 1e-12 && lambda >= 1.0 - 1e-5, "{lambda}");
    }

    #[test]
    fn min_eigenvalue_zero_matrix() {
        assert_eq!(min_eigenvalue_bound(&DenseMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn min_eigenvalue_indefinite() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let lambda = min_eigenvalue_bound(&m);
        assert!(lambda <= -1.0 + 1e-12 && lambda >= -1.0 - 1e-5, "{lambda}");
    }

    #[test]
    fn woodbury_scalar() {
        let u = DenseMatrix::from_rows(&[vec![1.0]]);
        let beta = woodbury_solve(&[1.0], &u, &[4.0]).unwrap();
        assert_close(beta[0], 2.0, 1e-12);
    }

    #[test]
    fn woodbury_no_columns_is_diagonal_solve() {
        let u = DenseMatrix::zeros(2, 0);
        let beta = woodbury_solve(&[2.0, 2.0], &u, &[4.0, 6.0]).unwrap();
        assert_close(beta[0], 2.0, 1e-15);
        assert_close(beta[1], 3.0, 1e-15);
    }

    #[test]
    fn woodbury_rank_one_pair() {
        // (I + 11') beta = (3,1)  =>  beta = (5/3, -1/3).
        let u = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]);
        let beta = woodbury_solve(&[1.0, 1.0], &u, &[3.0, 1.0]).unwrap();
        assert_close(beta[0], 5.0 / 3.0, 1e-12);
        assert_close(beta[1], -1.0 / 3.0, 1e-12);
    }

    #[test]
    fn woodbury_rejects_nonpositive_diagonal() {
        let u = DenseMatrix::zeros(1, 0);
        assert_eq!(woodbury_solve(&[0.0], &u, &[1.0]), Err(LinalgError::SingularSystem));
    }

    #[test]
    fn lu_solves_and_transposed_solves() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 1.0, 0.0],
        ]);
        let f = LuFactor::new(&a).unwrap();
        let x = f.solve(&[5.0, 10.0, 4.0]);
        let ax = a.matvec(&x);
        assert_close(ax[0], 5.0, 1e-12);
        assert_close(ax[1], 10.0, 1e-12);
        assert_close(ax[2], 4.0, 1e-12);

        let y = f.solve_transpose(&[1.0, 2.0, 3.0]);
        let aty = a.matvec_transpose(&y);
        assert_close(aty[0], 1.0, 1e-12);
        assert_close(aty[1], 2.0, 1e-12);
        assert_close(aty[2], 3.0, 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(LuFactor::new(&a), Err(LinalgError::SingularSystem)));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Random symmetric PSD matrix built as B B' from random B.
        fn psd_matrix(n: usize) -> impl Strategy<Value = DenseMatrix> {
            proptest::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| {
                let b = DenseMatrix::from_vec(n, n, v);
                let mut m = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = dot(b.row(i), b.row(j));
                    }
                }
                m
            })
        }

        proptest! {
            #[test]
            fn cholesky_reconstructs(m in (1usize..7).prop_flat_map(psd_matrix)) {
                let f = cholesky_psd(&m, 1e-10).unwrap();
                let err = max_diff(&f.reconstruct(), &m);
                prop_assert!(err <= 1e-7 * (1.0 + m.max_abs()), "err {err}");
            }

            #[test]
            fn min_eigenvalue_is_certified(m in (1usize..6).prop_flat_map(psd_matrix)) {
                let lambda = min_eigenvalue_bound(&m);
                // The bound itself must keep a shifted Cholesky alive.
                let n = m.rows();
                let mut w = m.clone();
                for i in 0..n { w[(i, i)] -= lambda; }
                prop_assert!(cholesky_psd(&w, 1e-9).is_ok());
            }

            #[test]
            fn woodbury_matches_dense_solve(
                (d, u, rhs) in (2usize..7, 1usize..4).prop_flat_map(|(m, p)| (
                    proptest::collection::vec(0.5..3.0f64, m),
                    proptest::collection::vec(-2.0..2.0f64, m * p).prop_map(move |v| DenseMatrix::from_vec(m, p, v)),
                    proptest::collection::vec(-5.0..5.0f64, m),
                ))
            ) {
                let beta = woodbury_solve(&d, &u, &rhs).unwrap();
                let m = d.len();
                let mut a = DenseMatrix::zeros(m, m);
                for i in 0..m {
                    a[(i, i)] = d[i];
                    for j in 0..m {
                        a[(i, j)] += dot(u.row(i), u.row(j));
                    }
                }
                let direct = lu_solve(&a, &rhs).unwrap();
                for i in 0..m {
                    prop_assert!((beta[i] - direct[i]).abs() <= 1e-8 * (1.0 + direct[i].abs()));
                }
            }
        }
    }
}
