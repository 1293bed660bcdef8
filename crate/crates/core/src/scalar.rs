//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All math is written against [`Real`], implemented for `f32` and `f64`.
//! Complex values are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use matrixmultiply::CGemmOption;
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// `c <- alpha * a * b + beta * c` on row-major complex storage with
    /// leading dimensions `lda`, `ldb`, `ldc` (`a` is `m x k`, `b` is `k x n`).
    #[allow(clippy::too_many_arguments)]
    fn gemm_strided(
        m: usize,
        k: usize,
        n: usize,
        alpha: Complex<Self>,
        a: &[Complex<Self>],
        lda: usize,
        b: &[Complex<Self>],
        ldb: usize,
        beta: Complex<Self>,
        c: &mut [Complex<Self>],
        ldc: usize,
    );

    /// Contiguous row-major [`Real::gemm_strided`].
    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Complex<Self>,
        a: &[Complex<Self>],
        b: &[Complex<Self>],
        beta: Complex<Self>,
        c: &mut [Complex<Self>],
    ) {
        Self::gemm_strided(m, k, n, alpha, a, k, b, n, beta, c, n)
    }

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($t:ty, $gemm:path) => {
        impl Real for $t {
            fn gemm_strided(
                m: usize,
                k: usize,
                n: usize,
                alpha: Complex<Self>,
                a: &[Complex<Self>],
                lda: usize,
                b: &[Complex<Self>],
                ldb: usize,
                beta: Complex<Self>,
                c: &mut [Complex<Self>],
                ldc: usize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                assert!(lda >= k && ldb >= n && ldc >= n);
                assert!(a.len() >= (m - 1) * lda + k || k == 0);
                assert!(b.len() >= k.saturating_sub(1) * ldb + n || k == 0);
                assert!(c.len() >= (m - 1) * ldc + n);
                // SAFETY: Complex<T> is repr(C) {re, im}, layout-identical to [T; 2];
                // the slices are bounds-checked above and strides describe row-major storage.
                unsafe {
                    $gemm(
                        CGemmOption::Standard,
                        CGemmOption::Standard,
                        m,
                        k,
                        n,
                        [alpha.re, alpha.im],
                        a.as_ptr() as *const [$t; 2],
                        lda as isize,
                        1,
                        b.as_ptr() as *const [$t; 2],
                        ldb as isize,
                        1,
                        [beta.re, beta.im],
                        c.as_mut_ptr() as *mut [$t; 2],
                        ldc as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::cgemm);
impl_real!(f64, matrixmultiply::zgemm);

/// Complex number with real part `re`.
#[inline]
pub fn cr<T: Real>(re: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::zero())
}

/// Complex number from `f64` parts.
#[inline]
pub fn cx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Converts a `Complex<f64>` into the working precision.
#[inline]
pub fn from_c64<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

#[inline]
pub fn to_c64<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

/// Japanese bracket `(1 + |v|^2)^{1/2}`.
#[inline]
pub fn bracket<T: Real>(v: &[T]) -> T {
    (T::one() + v.iter().fold(T::zero(), |s, &x| s + x * x)).sqrt()
}

/// `true` when the complex value has no NaN or infinite component.
#[inline]
pub fn is_finite_c<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
