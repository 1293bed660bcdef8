use num_complex::Complex;
use num_traits::Zero;

use super::{singular_values, CMat};
use crate::scalar::Real;

const MAX_ITERATIONS: usize = 20_000;
const STABLE_STEPS: usize = 3;

/// Spectral norm estimate from power iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate<T> {
    pub value: T,
    pub iterations: usize,
    /// `false` when the iteration cap was hit; `value` is then the best estimate.
    pub converged: bool,
}

fn vec_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

/// Spectral norm `||A||_2` by power iteration on `A^* A`.
///
/// Starts from the normalized all-ones vector so that reports are reproducible.
/// Stops once the relative change of the estimate stays below `1e-8`
/// (or `10 eps` in low precision) for a few consecutive steps.
pub fn operator_norm<T: Real>(a: &CMat<T>) -> NormEstimate<T> {
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(10.0));
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return NormEstimate { value: T::zero(), iterations: 0, converged: true };
    }
    let scale = T::one() / T::from_usize(n).unwrap().sqrt();
    let mut v = vec![Complex::new(scale, T::zero()); n];
    let mut sigma = T::zero();
    let mut stable = 0;
    for it in 1..=MAX_ITERATIONS {
        let w = a.matvec(&v);
        let next = vec_norm(&w);
        let u = a.adjoint_matvec(&w);
        let un = vec_norm(&u);
        if un == T::zero() {
            if it == 1 {
                // start vector in the kernel of A: retry from a ramp
                let ramp: Vec<Complex<T>> =
                    (0..n).map(|i| Complex::new(T::from_usize(i + 1).unwrap(), T::zero())).collect();
                let rn = vec_norm(&ramp);
                v = ramp.into_iter().map(|z| z / rn).collect();
                if a.matvec(&v).iter().all(|z| z.is_zero()) {
                    return NormEstimate { value: T::zero(), iterations: it, converged: true };
                }
                continue;
            }
            return NormEstimate { value: next, iterations: it, converged: true };
        }
        v = u.into_iter().map(|z| z / un).collect();
        if (next - sigma).abs() <= tol * next {
            stable += 1;
            if stable >= STABLE_STEPS {
                return NormEstimate { value: next.max(sigma), iterations: it, converged: true };
            }
        } else {
            stable = 0;
        }
        sigma = next;
    }
    NormEstimate { value: sigma, iterations: MAX_ITERATIONS, converged: false }
}

/// Spectral norm of a small `k x k` row-major matrix.
pub fn small_spectral_norm<T: Real>(m: &[Complex<T>], k: usize) -> T {
    debug_assert_eq!(m.len(), k * k);
    match k {
        1 => m[0].norm(),
        2 => {
            let fro2 = m.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
            let det = (m[0] * m[3] - m[1] * m[2]).norm();
            let two = T::lit(2.0);
            let disc = (fro2 * fro2 - T::lit(4.0) * det * det).max(T::zero()).sqrt();
            ((fro2 + disc) / two).sqrt()
        }
        _ => singular_values(&CMat::from_vec(k, k, m.to_vec()))[0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_norm_one() {
        let e = operator_norm(&CMat::<f64>::identity(17));
        assert!(e.converged);
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_norm_is_largest_entry() {
        let mut d = vec![Complex::new(1.0, 0.0); 9];
        d[0] = Complex::new(3.0, 0.0);
        let e = operator_norm(&CMat::<f64>::diag(&d));
        assert!((e.value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(operator_norm(&CMat::<f64>::zeros(4, 4)).value, 0.0);
    }

    #[test]
    fn kernel_start_vector_recovers() {
        // rows orthogonal to the all-ones vector
        let a = CMat::<f64>::from_vec(
            2,
            2,
            vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0), Complex::zero(), Complex::zero()],
        );
        let e = operator_norm(&a);
        assert!((e.value - 2f64.sqrt()).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn small_norm_closed_form_matches_jacobi() {
        let m = [
            Complex::new(1.0, 0.5),
            Complex::new(2.0, 0.0),
            Complex::new(0.0, -1.0),
            Complex::new(0.3, 0.0),
        ];
        let a = small_spectral_norm::<f64>(&m, 2);
        let b = singular_values(&CMat::from_vec(2, 2, m.to_vec()))[0];
        assert!((a - b).abs() < 1e-13);
    }
}
