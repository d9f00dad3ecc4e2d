//! Dense column-major matrices and a Householder QR factorization with
//! column pivoting.
//!
//! The factorization follows the Businger–Golub scheme: at step `k` the
//! remaining column with the largest residual norm is swapped into place
//! before its reflector is formed. Factorization stops as soon as the next
//! diagonal entry of `R` satisfies `|R_kk| < tol * |R_11|`; the columns not
//! yet processed are reported as aliased.

/// Default relative pivot tolerance used to declare a column aliased.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Builds a matrix from column-major storage.
    ///
    /// Panics if `data.len() != nrows * ncols`.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "column-major buffer has wrong length");
        Matrix { nrows, ncols, data }
    }

    /// Panics if the columns have unequal lengths.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Self {
        let nrows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(nrows * columns.len());
        for c in columns {
            let c = c.as_ref();
            assert_eq!(c.len(), nrows, "columns have unequal lengths");
            data.extend_from_slice(c);
        }
        Matrix {
            nrows,
            ncols: columns.len(),
            data,
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Matrix::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "rows have unequal lengths");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.nrows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.column(j));
        }
        Matrix {
            nrows: self.nrows,
            ncols: cols.len(),
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.ncols);
        for j in 0..self.ncols {
            let c = self.column(j);
            data.extend(rows.iter().map(|&i| c[i]));
        }
        Matrix {
            nrows: rows.len(),
            ncols: self.ncols,
            data,
        }
    }

    /// Gathers a row/column submatrix in one pass.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &j in cols {
            let c = self.column(j);
            data.extend(rows.iter().map(|&i| c[i]));
        }
        Matrix {
            nrows: rows.len(),
            ncols: cols.len(),
            data,
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ncols);
        let mut out = vec![0.0; self.nrows];
        for (j, &b) in v.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.column(j), &mut out);
            }
        }
        out
    }

    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.nrows);
        (0..self.ncols).map(|j| dot(self.column(j), v)).collect()
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    let mut acc = [0.0f64; 4];
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Householder QR with column pivoting, stored compactly: `R` on and above
/// the diagonal, reflector vectors (implicit unit leading entry) below it.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    qr: Matrix,
    tau: Vec<f64>,
    pivots: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(a: Matrix) -> Self {
        Self::with_tolerance(a, DEFAULT_RANK_TOL)
    }

    pub fn with_tolerance(mut a: Matrix, tol: f64) -> Self {
        let m = a.nrows;
        let p = a.ncols;
        let kmax = m.min(p);
        let mut pivots: Vec<usize> = (0..p).collect();
        let mut norms: Vec<f64> = (0..p).map(|j| norm2(a.column(j))).collect();
        let mut ref_norms = norms.clone();
        let mut tau = Vec::with_capacity(kmax);
        let mut rank = 0;
        let mut r11 = 0.0;
        let small = f64::EPSILON.sqrt();

        for k in 0..kmax {
            let mut jmax = k;
            for j in k + 1..p {
                if norms[j] > norms[jmax] {
                    jmax = j;
                }
            }
            if jmax != k {
                swap_columns(&mut a, k, jmax);
                pivots.swap(k, jmax);
                norms.swap(k, jmax);
                ref_norms.swap(k, jmax);
            }

            let (left, right) = a.data.split_at_mut((k + 1) * m);
            let col = &mut left[k * m + k..];
            let alpha = col[0];
            let xnorm = norm2(&col[1..]);
            let rkk = alpha.hypot(xnorm);
            if k == 0 {
                r11 = rkk;
            }
            if r11 == 0.0 || rkk < tol * r11 {
                break;
            }

            let t = if xnorm == 0.0 {
                0.0
            } else {
                let beta = -rkk.copysign(alpha);
                let scale = 1.0 / (alpha - beta);
                for v in &mut col[1..] {
                    *v *= scale;
                }
                col[0] = beta;
                (beta - alpha) / beta
            };
            tau.push(t);
            rank = k + 1;

            if t != 0.0 {
                let v = &col[..];
                for (jj, cj) in right.chunks_exact_mut(m).enumerate() {
                    let target = &mut cj[k..];
                    let w = target[0] + dot(&v[1..], &target[1..]);
                    let s = -t * w;
                    target[0] += s;
                    axpy(s, &v[1..], &mut target[1..]);
                    let j = k + 1 + jj;
                    // downdate the partial column norm, recomputing on cancellation
                    if norms[j] != 0.0 {
                        let ratio = target[0].abs() / norms[j];
                        let tmp = (1.0 - ratio * ratio).max(0.0);
                        let tmp2 = tmp * (norms[j] / ref_norms[j]).powi(2);
                        if tmp2 <= small {
                            norms[j] = norm2(&target[1..]);
                            ref_norms[j] = norms[j];
                        } else {
                            norms[j] *= tmp.sqrt();
                        }
                    }
                }
            } else {
                for (jj, cj) in right.chunks_exact(m).enumerate() {
                    let j = k + 1 + jj;
                    norms[j] = norm2(&cj[k + 1..]);
                    ref_norms[j] = norms[j];
                }
            }
        }

        PivotedQr {
            qr: a,
            tau,
            pivots,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nrows(&self) -> usize {
        self.qr.nrows
    }

    pub fn ncols(&self) -> usize {
        self.qr.ncols
    }

    /// Column permutation: position `k` of the factorization holds original
    /// column `pivots()[k]`.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Original indices of the columns excluded as aliased, ascending.
    pub fn aliased(&self) -> Vec<usize> {
        let mut a = self.pivots[self.rank..].to_vec();
        a.sort_unstable();
        a
    }

    /// `R[i][j]` for `i <= j < rank`.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.qr.get(i, j)
    }

    /// Overwrites `y` with `Q' y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        let m = self.qr.nrows;
        assert_eq!(y.len(), m);
        for k in 0..self.rank {
            self.reflect(k, y);
        }
    }

    /// Overwrites `y` with `Q y`.
    pub fn apply_q(&self, y: &mut [f64]) {
        let m = self.qr.nrows;
        assert_eq!(y.len(), m);
        for k in (0..self.rank).rev() {
            self.reflect(k, y);
        }
    }

    #[inline]
    fn reflect(&self, k: usize, y: &mut [f64]) {
        let t = self.tau[k];
        if t == 0.0 {
            return;
        }
        let v = &self.qr.column(k)[k..];
        let target = &mut y[k..];
        let w = target[0] + dot(&v[1..], &target[1..]);
        let s = -t * w;
        target[0] += s;
        axpy(s, &v[1..], &mut target[1..]);
    }

    /// Solves `R11 b = c[..rank]` in place by back substitution.
    fn back_substitute(&self, c: &mut [f64]) {
        let r = self.rank;
        for i in (0..r).rev() {
            let mut s = c[i];
            for j in i + 1..r {
                s -= self.qr.get(i, j) * c[j];
            }
            c[i] = s / self.qr.get(i, i);
        }
    }

    /// Least-squares solution for `y`. Aliased coefficients are `None`.
    pub fn solve(&self, y: &[f64]) -> LeastSquares {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let r = self.rank;
        let rss: f64 = qty[r..].iter().map(|v| v * v).sum();
        let mut b = qty[..r].to_vec();
        self.back_substitute(&mut b);
        let mut coefficients = vec![None; self.qr.ncols];
        for (k, &bk) in b.iter().enumerate() {
            coefficients[self.pivots[k]] = Some(bk);
        }
        LeastSquares {
            coefficients,
            rank: r,
            rss,
            qty,
        }
    }

    /// Residual vector `y - X b` computed as `Q [0; (Q'y)_tail]`.
    pub fn residuals_from_qty(&self, qty: &[f64]) -> Vec<f64> {
        let mut e = qty.to_vec();
        for v in &mut e[..self.rank] {
            *v = 0.0;
        }
        self.apply_q(&mut e);
        e
    }

    /// Diagonal of the hat matrix: squared row norms of the first `rank`
    /// columns of `Q`.
    pub fn leverage(&self) -> Vec<f64> {
        let m = self.qr.nrows;
        let mut h = vec![0.0; m];
        let mut q = vec![0.0; m];
        for j in 0..self.rank {
            q.iter_mut().for_each(|v| *v = 0.0);
            q[j] = 1.0;
            self.apply_q(&mut q);
            for (hi, qi) in h.iter_mut().zip(&q) {
                *hi += qi * qi;
            }
        }
        h
    }

    /// Diagonal of `(R11' R11)^{-1}` mapped back to original column order;
    /// `None` for aliased columns.
    pub fn unscaled_covariance_diagonal(&self) -> Vec<Option<f64>> {
        let r = self.rank;
        // rows of R11^{-1}: solve R11 X = I column by column
        let mut rinv = Matrix::zeros(r, r);
        for j in 0..r {
            let mut e = vec![0.0; r];
            e[j] = 1.0;
            for i in (0..=j).rev() {
                let mut s = e[i];
                for l in i + 1..=j {
                    s -= self.qr.get(i, l) * e[l];
                }
                e[i] = s / self.qr.get(i, i);
            }
            for (i, &v) in e.iter().enumerate() {
                rinv.set(i, j, v);
            }
        }
        let mut out = vec![None; self.qr.ncols];
        for k in 0..r {
            let s: f64 = (0..r).map(|j| rinv.get(k, j).powi(2)).sum();
            out[self.pivots[k]] = Some(s);
        }
        out
    }
}

fn swap_columns(a: &mut Matrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    let m = a.nrows;
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (left, right) = a.data.split_at_mut(hi * m);
    left[lo * m..(lo + 1) * m].swap_with_slice(&mut right[..m]);
}

/// Output of [`PivotedQr::solve`].
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<Option<f64>>,
    pub rank: usize,
    pub rss: f64,
    /// `Q' y`, kept so residuals can be recovered without refactoring.
    pub qty: Vec<f64>,
}

/// Convenience: factor `x` and solve for `y`.
pub fn least_squares(x: &Matrix, y: &[f64], tol: f64) -> (PivotedQr, LeastSquares) {
    let qr = PivotedQr::with_tolerance(x.clone(), tol);
    let ls = qr.solve(y);
    (qr, ls)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_design() -> Matrix {
        Matrix::from_columns(&[vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]])
    }

    #[test]
    fn solves_hand_example() {
        let (qr, ls) = least_squares(&hand_design(), &[0.0, 1.0, 1.0], DEFAULT_RANK_TOL);
        assert_eq!(qr.rank(), 2);
        let b: Vec<f64> = ls.coefficients.iter().map(|c| c.unwrap()).collect();
        assert!((b[0] - 1.0 / 6.0).abs() < 1e-14);
        assert!((b[1] - 0.5).abs() < 1e-14);
        assert!((ls.rss - 1.0 / 6.0).abs() < 1e-14);
        let h = qr.leverage();
        for (got, want) in h.iter().zip([5.0 / 6.0, 1.0 / 3.0, 5.0 / 6.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicate_column_is_aliased() {
        let x = Matrix::from_columns(&[
            vec![1.0, 1.0, 1.0, 1.0],
            vec![0.3, 1.0, 2.0, 5.0],
            vec![0.3, 1.0, 2.0, 5.0],
        ]);
        let qr = PivotedQr::new(x);
        assert_eq!(qr.rank(), 2);
        assert_eq!(qr.aliased(), vec![2]);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let qr = PivotedQr::new(Matrix::zeros(4, 2));
        assert_eq!(qr.rank(), 0);
        let ls = qr.solve(&[1.0, 2.0, 3.0, 4.0]);
        assert!(ls.coefficients.iter().all(Option::is_none));
        assert!((ls.rss - 30.0).abs() < 1e-12);
    }

    #[test]
    fn q_is_orthogonal() {
        let x = Matrix::from_columns(&[
            vec![1.0, 1.0, 1.0, 1.0, 1.0],
            vec![2.0, -1.0, 0.5, 3.0, 0.0],
            vec![0.1, 0.7, -2.0, 1.0, 4.0],
        ]);
        let qr = PivotedQr::new(x);
        let mut y = vec![0.3, -1.2, 2.2, 0.0, 5.0];
        let orig = y.clone();
        qr.apply_qt(&mut y);
        qr.apply_q(&mut y);
        for (a, b) in y.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn covariance_diagonal_matches_inverse_gram() {
        // X'X for the hand design is [[3,3],[3,5]], inverse diag = (5/6, 1/2)
        let qr = PivotedQr::new(hand_design());
        let d = qr.unscaled_covariance_diagonal();
        assert!((d[0].unwrap() - 5.0 / 6.0).abs() < 1e-13);
        assert!((d[1].unwrap() - 0.5).abs() < 1e-13);
    }
}
