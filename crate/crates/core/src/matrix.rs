//! Dense row-major matrices and the deterministic linear algebra the
//! checkers are built on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Largest dimension accepted by [`symmetric_extreme_eigs`].
pub const MAX_EIG_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {c}",
                row.len()
            )));
        }
        Self::new(r, c, rows.iter().flat_map(|row| row.iter().cloned()).collect())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    /// Submatrix with the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        Self { rows: self.rows, cols: cols.len(), data }
    }

    /// Principal submatrix on `idx`.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * idx.len());
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j).clone());
            }
        }
        Self { rows: idx.len(), cols: idx.len(), data }
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, f: F) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if *a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j).plus(&a.times(other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materialising the transpose.
    pub fn tmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "row counts {} and {} differ",
                self.rows, other.rows
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(k, i);
                if *a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j).plus(&a.times(other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc.plus(&a.times(b)))
            })
            .collect()
    }

    pub fn scaled(&self, c: &T) -> Self {
        self.map(|x| x.times(c))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.plus(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.minus(b))
    }

    fn zip_with<F: Fn(&T, &T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// Largest absolute entry, `‖·‖_max`.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| {
            let a = x.magnitude();
            if a > m { a } else { m }
        })
    }
}

impl Matrix<f64> {
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(k) => Err(Error::NonFinite { row: k / self.cols, col: k % self.cols }),
            None => Ok(()),
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    pub fn to_rational(&self) -> Result<Matrix<Rational>> {
        let data = self.data.iter().map(|&x| Rational::from_f64(x)).collect::<Result<Vec<_>>>()?;
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Asymmetry test used by the eigen routines.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                self.rows, self.cols
            )));
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self.get(i, j) - self.get(j, i)).abs();
                if gap > tol {
                    return Err(Error::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
        Ok(())
    }
}

/// An `n × p` design matrix of covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    matrix: Matrix,
    integral: bool,
}

impl DesignMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        matrix.check_finite()?;
        Ok(Self { matrix, integral: false })
    }

    /// A design whose entries are all integers; required by the hardness
    /// reduction.
    pub fn integral(matrix: Matrix) -> Result<Self> {
        matrix.check_finite()?;
        if let Some(k) = matrix.data().iter().position(|x| x.round() != *x) {
            return Err(Error::NotIntegral { row: k / matrix.cols(), col: k % matrix.cols() });
        }
        Ok(Self { matrix, integral: true })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn from_integer_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        Self::integral(Matrix::from_rows(&rows)?)
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn p(&self) -> usize {
        self.matrix.cols()
    }

    pub fn is_integral(&self) -> bool {
        self.integral
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// `X / √n`, the normalisation consumed by RE, compatibility and RIP.
    pub fn normalized(&self) -> Matrix {
        self.matrix.scaled(&(1.0 / (self.n() as f64).sqrt()))
    }
}

/// An `n × L` matrix of instruments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentMatrix(Matrix);

impl InstrumentMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        matrix.check_finite()?;
        Ok(Self(matrix))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn l(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

impl From<&DesignMatrix> for InstrumentMatrix {
    fn from(x: &DesignMatrix) -> Self {
        Self(x.matrix.clone())
    }
}

/// An `L × p` cross-covariance `Ψ = E Z Xᵀ`, or its sample analogue `ZᵀX/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCovariance(Matrix);

impl CrossCovariance {
    pub fn new(matrix: Matrix) -> Result<Self> {
        matrix.check_finite()?;
        Ok(Self(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// `Ψ̂ = ZᵀX / n`.
    pub fn sample(z: &InstrumentMatrix, x: &DesignMatrix) -> Result<Self> {
        if z.n() != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "instruments have {} rows, design has {}",
                z.n(),
                x.n()
            )));
        }
        let prod = z.matrix().tmul(x.matrix())?;
        Ok(Self(prod.scaled(&(1.0 / x.n() as f64))))
    }

    pub fn l(&self) -> usize {
        self.0.rows()
    }

    pub fn p(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// `XᵀX / n`, filled from the upper triangle so the result is exactly
/// symmetric.
pub fn gram(x: &DesignMatrix) -> Matrix {
    gram_of(x.matrix(), x.n() as f64)
}

pub(crate) fn gram_of(x: &Matrix, n: f64) -> Matrix {
    let p = x.cols();
    let mut g = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let mut acc = 0.0;
            for k in 0..x.rows() {
                acc += x.get(k, i) * x.get(k, j);
            }
            let v = acc / n;
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    g
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of the second matrix. The input is assumed symmetric.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::<f64>::identity(n);
    let frob: f64 = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * m.get(i, j))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = *m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = *m.get(p, p);
                let aqq = *m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = *m.get(k, p);
                    let mkq = *m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = *m.get(p, k);
                    let mqk = *m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = *v.get(k, p);
                    let vkq = *v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(m.get(j, j)));
    let values = order.iter().map(|&i| *m.get(i, i)).collect();
    let vectors = v.select_columns(&order);
    (values, vectors)
}

/// `(λ_min, λ_max)` of a symmetric matrix of dimension at most 64.
pub fn symmetric_extreme_eigs(a: &Matrix) -> Result<(f64, f64)> {
    a.check_symmetric(1e-12 * a.max_abs().max(1.0))?;
    if a.rows() > MAX_EIG_DIM {
        return Err(Error::InvalidParameter(format!(
            "dimension {} exceeds {MAX_EIG_DIM}",
            a.rows()
        )));
    }
    let (vals, _) = jacobi_eigen(a);
    Ok((vals[0], vals[vals.len() - 1]))
}

/// Symmetric positive semidefinite square root; eigenvalues below `-1e-10`
/// are rejected, smaller negative noise is clamped to zero.
pub fn symmetric_sqrt(a: &Matrix) -> Result<Matrix> {
    a.check_symmetric(1e-12 * a.max_abs().max(1.0))?;
    let n = a.rows();
    let (vals, vecs) = jacobi_eigen(a);
    if let Some(&bad) = vals.iter().find(|&&l| l < -1e-10) {
        return Err(Error::NotPsd(bad));
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (k, &l) in vals.iter().enumerate() {
                acc += vecs.get(i, k) * l.max(0.0).sqrt() * vecs.get(j, k);
            }
            out.set(i, j, acc);
            out.set(j, i, acc);
        }
    }
    Ok(out)
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn operator_norm(a: &Matrix) -> f64 {
    let p = a.cols();
    if a.max_abs() == 0.0 {
        return 0.0;
    }
    let ata = a.tmul(a).expect("shapes agree");
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_f0e5);
    let mut lambda = 0.0f64;
    for _ in 0..20_000 {
        let w = ata.matvec(&v);
        let nw = norm2(&w);
        if nw <= 1e-300 {
            // Start vector orthogonal to the range; restart.
            v = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
            let nv = norm2(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            continue;
        }
        let rq = dot(&v, &w);
        v = w.iter().map(|x| x / nw).collect();
        if (rq - lambda).abs() <= 1e-15 * rq.abs() {
            lambda = rq;
            break;
        }
        lambda = rq;
    }
    // Final Rayleigh quotient at the converged vector.
    let w = ata.matvec(&v);
    dot(&v, &w).max(lambda).max(0.0).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `|v|_q` for `q >= 1`, with `q = ∞` allowed.
pub fn norm_q(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        norm_inf(v)
    } else if q == 1.0 {
        norm1(v)
    } else if q == 2.0 {
        norm2(v)
    } else {
        let m = norm_inf(v);
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_gram(x: &Matrix) -> Matrix {
        let (n, p) = (x.rows(), x.cols());
        let mut g = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let mut s = 0.0;
                for k in 0..n {
                    s += x.get(k, i) * x.get(k, j);
                }
                g.set(i, j, s / n as f64);
            }
        }
        g
    }

    #[test]
    fn gram_of_identity() {
        let x = DesignMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = gram(&x);
        assert_eq!(g, Matrix::diagonal(&[0.5, 0.5]));
        let x = DesignMatrix::new(x.matrix().scaled(&2f64.sqrt())).unwrap();
        let g = gram(&x);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gram_duplicated_column() {
        let x = DesignMatrix::from_rows(&[vec![1.0, 2.0, 1.0], vec![3.0, -1.0, 3.0]]).unwrap();
        let g = gram(&x);
        for k in 0..3 {
            assert_eq!(g.get(0, k), g.get(2, k));
            assert_eq!(g.get(k, 0), g.get(k, 2));
        }
    }

    #[test]
    fn gram_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let x = DesignMatrix::new(Matrix::new(3, 4, data).unwrap()).unwrap();
        let g = gram(&x);
        let o = naive_gram(x.matrix());
        for (a, b) in g.data().iter().zip(o.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_eigs_examples() {
        let (lo, hi) = symmetric_extreme_eigs(&Matrix::identity(3)).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let (lo, hi) = symmetric_extreme_eigs(&a).unwrap();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 1.5).abs() < 1e-12);
    }

    /// Characteristic polynomial of the equal-correlation block factors as
    /// `(λ - (1-ρ))^{s-1} (λ - (1+(s-1)ρ))`; check both roots annihilate
    /// `det(A - λI)` computed by elimination and that nothing lies outside.
    #[test]
    fn equal_correlation_block_eigs() {
        for s in 2..6 {
            for &rho in &[0.1, 0.3, 0.7] {
                let mut a = Matrix::filled(s, s, rho);
                for i in 0..s {
                    a.set(i, i, 1.0);
                }
                let (lo, hi) = symmetric_extreme_eigs(&a).unwrap();
                let (want_lo, want_hi) = (1.0 - rho, 1.0 + (s as f64 - 1.0) * rho);
                assert!((lo - want_lo).abs() <= 1e-10 * want_hi);
                assert!((hi - want_hi).abs() <= 1e-10 * want_hi);
                for root in [want_lo, want_hi] {
                    assert!(det_shifted(&a, root).abs() < 1e-9);
                }
                assert!(det_shifted(&a, want_lo - 0.01).abs() > 1e-12);
            }
        }
    }

    fn det_shifted(a: &Matrix, lambda: f64) -> f64 {
        let n = a.rows();
        let mut m: Vec<Vec<f64>> = a.to_rows();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= lambda;
        }
        let mut det = 1.0;
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            if m[piv][c] == 0.0 {
                return 0.0;
            }
            if piv != c {
                m.swap(piv, c);
                det = -det;
            }
            det *= m[c][c];
            for r in (c + 1)..n {
                let f = m[r][c] / m[c][c];
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        det
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).unwrap();
        assert!(matches!(symmetric_extreme_eigs(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&Matrix::diagonal(&[3.0, 1.0])) - 3.0).abs() < 1e-10);
        assert_eq!(operator_norm(&Matrix::zeros(3, 2)), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let data: Vec<f64> = (0..24).map(|_| rng.random_range(-3i32..=3) as f64).collect();
            let a = Matrix::new(4, 6, data).unwrap();
            let m = a.max_abs();
            assert!(operator_norm(&a) <= (24f64).sqrt() * m + 1e-12);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Matrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.2], vec![0.0, 0.2, 1.5]])
            .unwrap();
        let r = symmetric_sqrt(&a).unwrap();
        let back = r.matmul(&r).unwrap();
        for (x, y) in back.data().iter().zip(a.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_sqrt(&bad), Err(Error::NotPsd(_))));
    }

    #[test]
    fn design_validation() {
        assert!(DesignMatrix::from_rows(&[vec![1.0, f64::NAN]]).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 2.5]]).unwrap();
        assert!(matches!(DesignMatrix::integral(m), Err(Error::NotIntegral { row: 0, col: 1 })));
        assert!(Matrix::<f64>::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn norms() {
        let v = [3.0, -4.0];
        assert_eq!(norm1(&v), 7.0);
        assert_eq!(norm2(&v), 5.0);
        assert_eq!(norm_inf(&v), 4.0);
        assert!((norm_q(&v, 3.0) - (27.0f64 + 64.0).powf(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(norm_q(&v, f64::INFINITY), 4.0);
    }
}
