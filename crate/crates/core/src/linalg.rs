//! Small dense linear algebra for state dimensions up to four.
//!
//! The RC networks never exceed four states, so everything here is a plain
//! row-major `Vec<f64>` with hand-written loops. Only the operations the
//! filters and smoothers actually need are provided.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from row slices; panics if rows are ragged.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "shape mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// 0.5 (M + M^T), in place for square matrices.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    /// Lower Cholesky factor of a symmetric positive-definite matrix.
    ///
    /// Returns `None` if a pivot is non-positive or non-finite.
    pub fn cholesky(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l[(i, j)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Some(l)
    }

    /// Inverse via Cholesky; only valid for symmetric positive-definite input.
    pub fn spd_inverse(&self) -> Option<Mat> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut inv = Mat::zeros(n, n);
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let x = l.cholesky_solve_with_factor(&e);
            for row in 0..n {
                inv[(row, col)] = x[row];
            }
        }
        Some(inv)
    }

    /// Solves `self * x = b` where `self` is a lower Cholesky factor L
    /// (i.e. solves L L^T x = b).
    fn cholesky_solve_with_factor(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self[(i, k)] * y[k];
            }
            y[i] = sum / self[(i, i)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= self[(k, i)] * x[k];
            }
            x[i] = sum / self[(i, i)];
        }
        x
    }

    /// Solves the SPD system `self * x = b` via Cholesky.
    pub fn spd_solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let l = self.cholesky()?;
        Some(l.cholesky_solve_with_factor(b))
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// LU solve with partial pivoting; `None` if singular.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut max_val = lu[(perm[col], col)].abs();
        let mut max_row = col;
        for row in (col + 1)..n {
            let v = lu[(perm[row], col)].abs();
            if v > max_val {
                max_val = v;
                max_row = row;
            }
        }
        if !(max_val > 1e-300) || !max_val.is_finite() {
            return None;
        }
        perm.swap(col, max_row);
        let pivot = lu[(perm[col], col)];
        for row in (col + 1)..n {
            let factor = lu[(perm[row], col)] / pivot;
            lu[(perm[row], col)] = factor;
            for k in (col + 1)..n {
                let v = lu[(perm[col], k)];
                lu[(perm[row], k)] -= factor * v;
            }
        }
    }

    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[perm[i]];
        for j in 0..i {
            sum -= lu[(perm[i], j)] * y[j];
        }
        y[i] = sum;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for j in (i + 1)..n {
            sum -= lu[(perm[i], j)] * x[j];
        }
        x[i] = sum / lu[(perm[i], i)];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Kronecker product, used to vectorize the discrete Lyapunov equation.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out[(i * b.rows() + k, j * b.cols() + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Schur stability test: spectral radius of `a` strictly below one.
///
/// Solves the discrete Lyapunov equation `a^T P a - P = -I` through its
/// Kronecker vectorization and accepts iff the solution exists, is finite,
/// and is positive definite. This is exact up to conditioning, with no
/// eigenvalue iteration involved.
pub fn is_schur_stable(a: &Mat) -> bool {
    let n = a.rows();
    if n != a.cols() || !a.is_finite() {
        return false;
    }
    let at = a.transpose();
    let lhs = Mat::identity(n * n).sub(&kron(&at, &at));
    // vec(I) in row-major order; symmetric RHS so the ordering convention
    // drops out.
    let mut rhs = vec![0.0; n * n];
    for i in 0..n {
        rhs[i * n + i] = 1.0;
    }
    let p_vec = match lu_solve(&lhs, &rhs) {
        Some(v) => v,
        None => return false,
    };
    let mut p = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = p_vec[i * n + j];
        }
    }
    p.symmetrize();
    p.cholesky().is_some()
}

/// Rough spectral-radius estimate from the growth rate of repeated products.
///
/// Diagnostic only; stability decisions go through [`is_schur_stable`].
pub fn spectral_radius_estimate(a: &Mat) -> f64 {
    let n = a.rows();
    if n == 0 || !a.is_finite() {
        return f64::INFINITY;
    }
    if n == 1 {
        return a[(0, 0)].abs();
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * (i as f64)).collect();
    let mut radius = 0.0;
    let burn_in = 30;
    let samples = 30;
    let mut log_acc = 0.0;
    for it in 0..(burn_in + samples) {
        let w = a.mul_vec(&v);
        let norm = norm2(&w);
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        if norm == 0.0 {
            return 0.0;
        }
        if it >= burn_in {
            log_acc += norm.ln();
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        radius = norm;
    }
    let _ = radius;
    (log_acc / samples as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Mat::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let c = a.matmul(&b);
        assert_eq!(c.as_slice(), &[19.0, 22.0, 43.0, 50.0]);
        assert_eq!(a.transpose().as_slice(), &[1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let a = Mat::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let x = a.spd_solve(&[1.0, 2.0]).unwrap();
        let b = a.mul_vec(&x);
        assert_abs_diff_eq!(b[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn lu_solve_matches_known_system() {
        let a = Mat::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let b = [3.0, 5.0, 3.0];
        let x = lu_solve(&a, &b).unwrap();
        let back = a.mul_vec(&x);
        for i in 0..3 {
            assert_abs_diff_eq!(back[i], b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn lu_solve_singular_is_none() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(lu_solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn schur_stability_scalar_cases() {
        assert!(is_schur_stable(&Mat::from_rows(&[&[0.94]])));
        assert!(!is_schur_stable(&Mat::from_rows(&[&[-5.0]])));
        assert!(!is_schur_stable(&Mat::from_rows(&[&[1.0]])));
    }

    #[test]
    fn schur_stability_rotation() {
        // Rotation scaled by 0.9 has complex eigenvalues of modulus 0.9.
        let c = 0.9 * (0.7f64).cos();
        let s = 0.9 * (0.7f64).sin();
        let stable = Mat::from_rows(&[&[c, -s], &[s, c]]);
        assert!(is_schur_stable(&stable));
        let unstable = stable.scale(1.2);
        assert!(!is_schur_stable(&unstable));
    }

    #[test]
    fn radius_estimate_tracks_dominant_mode() {
        let a = Mat::from_rows(&[&[0.5, 0.1], &[0.0, 0.8]]);
        let r = spectral_radius_estimate(&a);
        assert_abs_diff_eq!(r, 0.8, epsilon = 1e-6);
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let a = Mat::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let inv = a.spd_inverse().unwrap();
        let prod = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)], expected, epsilon = 1e-12);
            }
        }
    }
}
