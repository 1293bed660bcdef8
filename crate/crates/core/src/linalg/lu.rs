use num_complex::Complex;
use num_traits::{One, Zero};

use super::CMat;
use crate::error::{Error, Result};
use crate::scalar::Real;

const BLOCK: usize = 32;

/// Relative pivot threshold below which a matrix is declared singular.
pub fn default_pivot_threshold<T: Real>() -> T {
    T::epsilon() * T::lit(1e3)
}

/// Partial-pivoting LU factorization `P A = L U`, stored in place.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    ipiv: Vec<usize>,
    min_pivot: T,
}

impl<T: Real> Lu<T> {
    /// Factors `a`; fails when a pivot drops below `rel_threshold * max|a_ij|`.
    pub fn factor(a: &CMat<T>, rel_threshold: T) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape(format!("LU of a {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let threshold = rel_threshold * a.max_abs();
        let mut lu = a.data().to_vec();
        let mut ipiv = vec![0; n];
        let mut min_pivot = T::infinity();

        let mut k0 = 0;
        while k0 < n {
            let kb = BLOCK.min(n - k0);
            let k1 = k0 + kb;
            // panel factorization, full-row swaps
            for k in k0..k1 {
                let mut p = k;
                let mut best = lu[k * n + k].norm();
                for i in k + 1..n {
                    let v = lu[i * n + k].norm();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if !(best > threshold) || best == T::zero() {
                    return Err(Error::Singular {
                        pivot: best.to_f64_lossy(),
                        threshold: threshold.to_f64_lossy(),
                    });
                }
                min_pivot = min_pivot.min(best);
                ipiv[k] = p;
                if p != k {
                    for j in 0..n {
                        lu.swap(k * n + j, p * n + j);
                    }
                }
                let inv = Complex::<T>::one() / lu[k * n + k];
                for i in k + 1..n {
                    let l = lu[i * n + k] * inv;
                    lu[i * n + k] = l;
                    if l != Complex::zero() {
                        for j in k + 1..k1 {
                            let u = lu[k * n + j];
                            lu[i * n + j] -= l * u;
                        }
                    }
                }
            }
            if k1 < n {
                // U12 = L11^{-1} A12
                for k in k0..k1 {
                    for i in k + 1..k1 {
                        let l = lu[i * n + k];
                        if l != Complex::zero() {
                            for j in k1..n {
                                let u = lu[k * n + j];
                                lu[i * n + j] -= l * u;
                            }
                        }
                    }
                }
                // A22 -= L21 U12
                let m = n - k1;
                let mut l21 = Vec::with_capacity(m * kb);
                for i in k1..n {
                    l21.extend_from_slice(&lu[i * n + k0..i * n + k1]);
                }
                let mut u12 = Vec::with_capacity(kb * m);
                for i in k0..k1 {
                    u12.extend_from_slice(&lu[i * n + k1..i * n + n]);
                }
                T::gemm_strided(
                    m,
                    kb,
                    m,
                    -Complex::<T>::one(),
                    &l21,
                    kb,
                    &u12,
                    m,
                    Complex::one(),
                    &mut lu[k1 * n + k1..],
                    n,
                );
            }
            k0 = k1;
        }
        Ok(Self { n, lu, ipiv, min_pivot })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot modulus encountered.
    #[inline]
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    /// Solves `A X = B` in place for a row-major `n x m` right-hand side.
    pub fn solve_in_place(&self, b: &mut [Complex<T>], m: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * m, "Lu::solve: rhs shape");
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                for j in 0..m {
                    b.swap(k * m + j, p * m + j);
                }
            }
        }
        let lu = &self.lu;
        // forward substitution with unit lower factor
        let mut i0 = 0;
        while i0 < n {
            let i1 = (i0 + BLOCK).min(n);
            if i0 > 0 {
                let (done, rest) = b.split_at_mut(i0 * m);
                T::gemm_strided(
                    i1 - i0,
                    i0,
                    m,
                    -Complex::<T>::one(),
                    &lu[i0 * n..],
                    n,
                    done,
                    m,
                    Complex::one(),
                    rest,
                    m,
                );
            }
            for i in i0..i1 {
                let (head, tail) = b.split_at_mut(i * m);
                let row = &mut tail[..m];
                for j in i0..i {
                    let l = lu[i * n + j];
                    if l != Complex::zero() {
                        for (r, &s) in row.iter_mut().zip(&head[j * m..(j + 1) * m]) {
                            *r -= l * s;
                        }
                    }
                }
            }
            i0 = i1;
        }
        // backward substitution with the upper factor
        let mut i1 = n;
        while i1 > 0 {
            let i0 = i1.saturating_sub(BLOCK);
            if i1 < n {
                let (head, done) = b.split_at_mut(i1 * m);
                T::gemm_strided(
                    i1 - i0,
                    n - i1,
                    m,
                    -Complex::<T>::one(),
                    &lu[i0 * n + i1..],
                    n,
                    done,
                    m,
                    Complex::one(),
                    &mut head[i0 * m..],
                    m,
                );
            }
            for i in (i0..i1).rev() {
                let (head, tail) = b.split_at_mut((i + 1) * m);
                let row = &mut head[i * m..];
                for j in i + 1..i1 {
                    let u = lu[i * n + j];
                    if u != Complex::zero() {
                        for (r, &s) in row.iter_mut().zip(&tail[(j - i - 1) * m..(j - i) * m]) {
                            *r -= u * s;
                        }
                    }
                }
                let inv = Complex::<T>::one() / lu[i * n + i];
                for r in row.iter_mut() {
                    *r *= inv;
                }
            }
            i1 = i0;
        }
    }

    pub fn solve_vec(&self, rhs: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x, 1);
        x
    }

    pub fn solve_mat(&self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(rhs.rows(), self.n);
        let mut x = rhs.clone();
        let m = x.cols();
        self.solve_in_place(x.data_mut(), m);
        x
    }

    pub fn inverse(&self) -> CMat<T> {
        self.solve_mat(&CMat::identity(self.n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> CMat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |i, j| {
            let d = if i == j { n as f64 } else { 0.0 };
            Complex::new(rng.gen_range(-1.0..1.0) + d, rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn inverse_residual_small_across_block_sizes() {
        for &n in &[1, 5, 31, 32, 33, 70, 127] {
            let a = random(n, n as u64);
            let lu = Lu::factor(&a, default_pivot_threshold()).unwrap();
            let x = lu.inverse();
            let r = &(&a * &x) - &CMat::identity(n);
            assert!(r.max_abs() < 1e-13, "n = {n}: residual {}", r.max_abs());
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = CMat::<f64>::from_vec(
            2,
            2,
            vec![Complex::zero(), Complex::one(), Complex::one(), Complex::zero()],
        );
        let lu = Lu::factor(&a, default_pivot_threshold()).unwrap();
        let x = lu.solve_vec(&[Complex::new(2.0, 0.0), Complex::new(3.0, 0.0)]);
        assert!((x[0] - Complex::new(3.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - Complex::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = CMat::<f64>::from_fn(3, 3, |i, _| Complex::new(i as f64, 0.0));
        assert!(matches!(Lu::factor(&a, default_pivot_threshold()), Err(Error::Singular { .. })));
    }

    #[test]
    fn f32_solve() {
        let a = CMat::<f32>::from_fn(4, 4, |i, j| {
            Complex::new(if i == j { 4.0 } else { 0.5 }, (i as f32 - j as f32) * 0.1)
        });
        let lu = Lu::factor(&a, default_pivot_threshold()).unwrap();
        let r = &(&a * &lu.inverse()) - &CMat::identity(4);
        assert!(r.max_abs() < 1e-5);
    }
}
