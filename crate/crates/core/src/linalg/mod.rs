//! Dense complex linear algebra: matrices, LU, norms, small eigenproblems.

mod eig;
mod lu;
mod norm;
mod svd;

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

pub use eig::{char_poly, eigenvalues};
pub use lu::{default_pivot_threshold, Lu};
pub use norm::{operator_norm, small_spectral_norm, NormEstimate};
pub use svd::singular_values;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "CMat::from_vec: length mismatch");
        Self { rows, cols, data }
    }

    pub fn diag(values: &[Complex<T>]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex<T>]) {
        assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self.data[i * self.cols + j] = x;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        T::gemm(
            self.rows,
            self.cols,
            other.cols,
            Complex::one(),
            &self.data,
            &other.data,
            Complex::zero(),
            &mut out.data,
        );
        out
    }

    /// `self <- alpha * a * b + beta * self`.
    pub fn gemm_acc(&mut self, alpha: Complex<T>, a: &Self, b: &Self, beta: Complex<T>) {
        assert_eq!(a.cols, b.rows);
        assert_eq!((self.rows, self.cols), (a.rows, b.cols));
        T::gemm(a.rows, a.cols, b.cols, alpha, &a.data, &b.data, beta, &mut self.data);
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex::zero(), |s, (&a, &b)| s + a * b)
            })
            .collect()
    }

    /// `A^* v`.
    pub fn adjoint_matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![Complex::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i].conj())
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * c).collect() }
    }

    /// `self - lambda * I`.
    pub fn shifted(&self, lambda: Complex<T>) -> Self {
        assert!(self.is_square());
        let mut m = self.clone();
        for i in 0..self.rows {
            m.data[i * self.cols + i] -= lambda;
        }
        m
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex<T>, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, z) in sums.iter_mut().zip(self.row(i)) {
                *s = *s + z.norm();
            }
        }
        sums.into_iter().fold(T::zero(), T::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |s, z| s + z.norm()))
            .fold(T::zero(), T::max)
    }

    /// Cheap rigorous upper bound for the spectral norm.
    pub fn norm2_bound(&self) -> T {
        (self.norm_one() * self.norm_inf()).sqrt().min(self.frobenius())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: &CMat<T>) -> CMat<T> {
        self.matmul(rhs)
    }
}

/// Inverse of a small row-major `k x k` matrix; `None` if numerically singular.
pub fn small_inverse<T: Real>(m: &[Complex<T>], k: usize) -> Option<Vec<Complex<T>>> {
    match k {
        1 => {
            if m[0].is_zero() {
                None
            } else {
                Some(vec![Complex::<T>::one() / m[0]])
            }
        }
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            let scale = m.iter().fold(T::zero(), |s, z| s.max(z.norm()));
            if det.norm() <= T::epsilon() * scale * scale {
                return None;
            }
            let inv = Complex::<T>::one() / det;
            Some(vec![m[3] * inv, -m[1] * inv, -m[2] * inv, m[0] * inv])
        }
        _ => {
            let lu = Lu::factor(&CMat::from_vec(k, k, m.to_vec()), default_pivot_threshold()).ok()?;
            Some(lu.inverse().into_vec())
        }
    }
}
