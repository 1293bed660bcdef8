use num_complex::Complex;
use num_traits::Zero;

use super::CMat;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Singular values in descending order by one-sided (Hestenes) Jacobi rotations.
pub fn singular_values<T: Real>(a: &CMat<T>) -> Vec<T> {
    let (m, n) = (a.rows(), a.cols());
    // work on columns stored contiguously
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| a.column(j)).collect();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = Complex::<T>::zero();
                    for i in 0..m {
                        alpha = alpha + cp[i].norm_sqr();
                        beta = beta + cq[i].norm_sqr();
                        gamma += cp[i].conj() * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i] * phase.conj();
                    cp[i] = x * c - y * s;
                    cq[i] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols
        .iter()
        .map(|c| c.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_singular_values_sorted() {
        let d = CMat::<f64>::diag(&[Complex::new(1.0, 0.0), Complex::new(0.0, -5.0), Complex::new(2.0, 0.0)]);
        let s = singular_values(&d);
        assert!((s[0] - 5.0).abs() < 1e-14 && (s[1] - 2.0).abs() < 1e-14 && (s[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_complex() {
        let u = [Complex::new(1.0, 1.0), Complex::new(0.0, 2.0)];
        let v = [Complex::new(3.0, 0.0), Complex::new(0.0, -4.0)];
        let a = CMat::<f64>::from_fn(2, 2, |i, j| u[i] * v[j].conj());
        let s = singular_values(&a);
        // ||u|| * ||v|| = sqrt(6) * 5
        assert!((s[0] - 6f64.sqrt() * 5.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12);
    }
}
