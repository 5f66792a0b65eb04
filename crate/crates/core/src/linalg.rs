//! Dense linear algebra for the quadratic-form machinery.
//!
//! Only what the rest of the crate needs: small row-major matrices, the
//! continuous Lyapunov equation, extreme eigenvalues of symmetric matrices
//! (cyclic Jacobi) and the induced 2-norm. Sizes are expected to stay well
//! below a hundred.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative symmetry tolerance: `|m[i][j] - m[j][i]| <= SYM_TOL * max(1, max|m|)`.
pub const SYM_TOL: f64 = 1e-12;

/// Pivots below `PIVOT_TOL * max|entry|` are treated as singular.
const PIVOT_TOL: f64 = 1e-14;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular linear system (pivot {pivot:e} below threshold {threshold:e})")]
    SingularSystem { pivot: f64, threshold: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),
}

/// Dense real matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Dense real column vector.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

/// Smallest and largest eigenvalue of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenExtremes {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl Matrix {
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

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::InvalidShape(format!("{rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(LinalgError::InvalidShape(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != c {
                return Err(LinalgError::InvalidShape(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(r, c, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|m[i][j] - m[j][i]|`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() <= SYM_TOL * self.max_abs().max(1.0)
    }

    /// `out = self * x`.
    #[inline]
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vector {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        Vector(out)
    }

    /// `x^T M y` without allocating.
    #[inline]
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        x.iter()
            .enumerate()
            .map(|(i, &xi)| xi * dot(self.row(i), y))
            .sum()
    }

    /// `x^T M x`.
    #[inline]
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_squared(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A_cl^T P + P A_cl = -Q` for symmetric positive definite `P`.
///
/// The equation is vectorized as `(I ⊗ A_cl^T + A_cl^T ⊗ I) vec(P) = -vec(Q)`
/// and solved with partially pivoted Gaussian elimination, then symmetrized.
/// The Kronecker system has n² unknowns, so this is meant for n up to ~50.
pub fn solve_lyapunov(a_cl: &Matrix, q: &Matrix) -> Result<Matrix, LinalgError> {
    let n = a_cl.rows();
    if !a_cl.is_square() || q.rows() != n || q.cols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "A_cl {}x{}, Q {}x{}",
            a_cl.rows(),
            a_cl.cols(),
            q.rows(),
            q.cols()
        )));
    }
    if !q.is_symmetric() {
        return Err(LinalgError::NonSymmetric {
            asymmetry: q.asymmetry(),
        });
    }

    // Row-major vec: unknown index i*n + j holds P[i][j].
    // (A^T P)[i][j] = sum_k A[k][i] P[k][j];  (P A)[i][j] = sum_k P[i][k] A[k][j].
    let nn = n * n;
    let mut kron = Matrix::zeros(nn, nn);
    let mut rhs = vec![0.0; nn];
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                kron[(row, k * n + j)] += a_cl[(k, i)];
                kron[(row, i * n + k)] += a_cl[(k, j)];
            }
            rhs[row] = -q[(i, j)];
        }
    }

    let sol = lu_solve(kron, rhs)?;
    let raw = Matrix::from_row_major(n, n, sol)?;
    let p = raw.add(&raw.transpose())?.scale(0.5);
    cholesky(&p)?;
    Ok(p)
}

/// Gaussian elimination with partial pivoting; consumes the system.
fn lu_solve(mut a: Matrix, mut b: Vec<f64>) -> Result<Vec<f64>, LinalgError> {
    let n = a.rows();
    let threshold = PIVOT_TOL * a.max_abs();
    for col in 0..n {
        let (pivot_row, pivot_abs) =
            (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_abs <= threshold || pivot_abs == 0.0 {
            return Err(LinalgError::SingularSystem {
                pivot: pivot_abs,
                threshold,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                a.data.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[(col, col)];
        for r in (col + 1)..n {
            let factor = a[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[(r, j)] -= factor * a[(col, j)];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = ((i + 1)..n).map(|j| a[(i, j)] * x[j]).sum();
        x[i] = (b[i] - tail) / a[(i, i)];
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor; fails unless the input is positive definite.
pub fn cholesky(s: &Matrix) -> Result<Matrix, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::InvalidShape(
            "Cholesky needs a square matrix".into(),
        ));
    }
    let n = s.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let sum: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            if i == j {
                let d = s[(i, i)] - sum;
                if !d.is_finite() || d <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite);
                }
                l[(i, j)] = d.sqrt();
            } else {
                l[(i, j)] = (s[(i, j)] - sum) / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Extreme eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eig_extremes(s: &Matrix) -> Result<EigenExtremes, LinalgError> {
    let values = sym_eigenvalues(s)?;
    let lambda_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EigenExtremes {
        lambda_min,
        lambda_max,
    })
}

/// All eigenvalues (unsorted) of a symmetric matrix.
pub fn sym_eigenvalues(s: &Matrix) -> Result<Vec<f64>, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::InvalidShape(
            "eigenvalues need a square matrix".into(),
        ));
    }
    if !s.is_symmetric() {
        return Err(LinalgError::NonSymmetric {
            asymmetry: s.asymmetry(),
        });
    }
    let n = s.rows();
    let mut a = s.clone();
    let target = JACOBI_TOL * s.frobenius_norm();

    let off_norm = |a: &Matrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[(i, j)] * a[(i, j)];
                }
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                // signum(0.0) == 1.0, so theta == 0 gives the 45 degree rotation.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A <- J^T A J with the rotation acting on rows/cols p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
        sweeps += 1;
    }
    Ok((0..n).map(|i| a[(i, i)]).collect())
}

/// Induced 2-norm, `sqrt(lambda_max(M^T M))`.
pub fn spectral_norm(m: &Matrix) -> Result<f64, LinalgError> {
    let gram = m.transpose().matmul(m)?;
    // M^T M is symmetric in exact arithmetic; clean up round-off before Jacobi.
    let gram = gram.add(&gram.transpose())?.scale(0.5);
    Ok(sym_eig_extremes(&gram)?.lambda_max.max(0.0).sqrt())
}

/// Lyapunov-based Hurwitz test: `A_cl^T P + P A_cl = -I` has a positive definite solution.
pub fn is_hurwitz(a_cl: &Matrix) -> bool {
    a_cl.is_square()
        && a_cl.is_finite()
        && solve_lyapunov(a_cl, &Matrix::identity(a_cl.rows())).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn residual(a: &Matrix, p: &Matrix, q: &Matrix) -> f64 {
        let lhs = a
            .transpose()
            .matmul(p)
            .unwrap()
            .add(&p.matmul(a).unwrap())
            .unwrap();
        lhs.add(q).unwrap().frobenius_norm()
    }

    #[test]
    fn lyapunov_reference_system() {
        let a = m(&[&[0.0, 1.0], &[-1.0, -1.0]]);
        let q = Matrix::identity(2);
        let p = solve_lyapunov(&a, &q).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.5, epsilon = 1e-12);
        assert_relative_eq!(p[(0, 1)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 1)], 1.0, epsilon = 1e-12);
        assert!(residual(&a, &p, &q) <= 1e-10 * q.frobenius_norm());
    }

    #[test]
    fn lyapunov_trivial_cases() {
        let a = Matrix::identity(2).scale(-0.5);
        let p = solve_lyapunov(&a, &Matrix::identity(2)).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p[(1, 1)], 1.0, epsilon = 1e-14);
        assert_eq!(p[(0, 1)], 0.0);

        let p = solve_lyapunov(&m(&[&[-3.0]]), &m(&[&[2.0]])).unwrap();
        assert_relative_eq!(p[(0, 0)], 2.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let open_loop = m(&[&[0.0, 1.0], &[-2.0, 3.0]]);
        let err = solve_lyapunov(&open_loop, &Matrix::identity(2)).unwrap_err();
        assert_eq!(err, LinalgError::NotPositiveDefinite);

        // Eigenvalues +1 and -1 sum to zero: the Kronecker sum is singular.
        let saddle = Matrix::diag(&[1.0, -1.0]);
        assert!(matches!(
            solve_lyapunov(&saddle, &Matrix::identity(2)),
            Err(LinalgError::SingularSystem { .. })
        ));
    }

    #[test]
    fn lyapunov_rejects_bad_inputs() {
        let a = Matrix::identity(2).scale(-1.0);
        assert!(matches!(
            solve_lyapunov(&a, &Matrix::identity(3)),
            Err(LinalgError::DimensionMismatch(_))
        ));
        let q = m(&[&[1.0, 0.2], &[0.0, 1.0]]);
        assert!(matches!(
            solve_lyapunov(&a, &q),
            Err(LinalgError::NonSymmetric { .. })
        ));
    }

    #[test]
    fn eig_extremes_examples() {
        let p = m(&[&[1.5, 0.5], &[0.5, 1.0]]);
        let e = sym_eig_extremes(&p).unwrap();
        // roots of l^2 - 2.5 l + 1.25
        let disc = (2.5_f64 * 2.5 - 5.0).sqrt();
        assert_relative_eq!(e.lambda_min, (2.5 - disc) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(e.lambda_max, (2.5 + disc) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(e.lambda_max, 1.8090, epsilon = 1e-4);

        let e = sym_eig_extremes(&Matrix::identity(3)).unwrap();
        assert_eq!((e.lambda_min, e.lambda_max), (1.0, 1.0));

        let e = sym_eig_extremes(&Matrix::diag(&[2.0, 5.0])).unwrap();
        assert_eq!((e.lambda_min, e.lambda_max), (2.0, 5.0));
    }

    #[test]
    fn eig_rejects_nonsymmetric() {
        let s = m(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            sym_eig_extremes(&s),
            Err(LinalgError::NonSymmetric { .. })
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        let bk = m(&[&[0.0, 0.0], &[-1.0, 4.0]]);
        assert_relative_eq!(
            spectral_norm(&bk).unwrap(),
            17.0_f64.sqrt(),
            max_relative = 1e-12
        );
        let pbk = m(&[&[-0.5, 2.0], &[-1.0, 4.0]]);
        assert_relative_eq!(
            spectral_norm(&pbk).unwrap(),
            21.25_f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spectral_norm(&Matrix::identity(4)).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        // rectangular
        let b = m(&[&[0.0], &[1.0]]);
        assert_relative_eq!(spectral_norm(&b).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&m(&[&[0.0, 1.0], &[-1.0, -1.0]])));
        assert!(!is_hurwitz(&m(&[&[0.0, 1.0], &[-2.0, 3.0]])));
        assert!(is_hurwitz(&m(&[&[-1.0]])));
        assert!(!is_hurwitz(&m(&[&[0.0]])));
        assert!(!is_hurwitz(&m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]])));
    }

    #[test]
    fn cholesky_detects_indefinite() {
        assert!(cholesky(&Matrix::diag(&[1.0, -1.0])).is_err());
        let l = cholesky(&m(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        let back = l.matmul(&l.transpose()).unwrap();
        assert_relative_eq!(back[(0, 1)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(back[(1, 1)], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn shape_validation() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Matrix::from_rows::<Vec<f64>>(&[]).is_err());
        let a = Matrix::zeros(2, 3);
        assert!(a.matmul(&Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn bilinear_matches_explicit_product() {
        let pbk = m(&[&[-0.5, 2.0], &[-1.0, 4.0]]);
        let x = [1.0, 0.0];
        let e = [0.0, 0.05];
        assert_relative_eq!(pbk.bilinear(&x, &e), 0.1, epsilon = 1e-15);
        let explicit = dot(&pbk.transpose().mul_vec(&x), &e);
        assert_relative_eq!(pbk.bilinear(&x, &e), explicit, epsilon = 1e-15);
    }
}
