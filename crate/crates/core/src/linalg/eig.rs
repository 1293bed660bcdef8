use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// Monic characteristic polynomial `det(z I - A)` of a small row-major matrix,
/// coefficients from the constant term up (`c[k] = 1`), via Faddeev-LeVerrier.
pub fn char_poly<T: Real>(m: &[Complex<T>], k: usize) -> Vec<Complex<T>> {
    assert_eq!(m.len(), k * k);
    let mut c = vec![Complex::<T>::zero(); k + 1];
    c[k] = Complex::one();
    let mut mk = vec![Complex::<T>::zero(); k * k];
    for j in 1..=k {
        // M_j = A M_{j-1} + c_{k-j+1} I
        let mut next = vec![Complex::<T>::zero(); k * k];
        for r in 0..k {
            for s in 0..k {
                let mut acc = Complex::zero();
                for l in 0..k {
                    acc += m[r * k + l] * mk[l * k + s];
                }
                next[r * k + s] = acc;
            }
            next[r * k + r] += c[k - j + 1];
        }
        mk = next;
        let mut tr = Complex::<T>::zero();
        for r in 0..k {
            for l in 0..k {
                tr += m[r * k + l] * mk[l * k + r];
            }
        }
        c[k - j] = -tr / T::from_usize(j).unwrap();
    }
    c
}

fn horner<T: Real>(c: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::zero();
    let mut dp = Complex::zero();
    for &ci in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ci;
    }
    (p, dp)
}

/// Eigenvalues of a `k x k` matrix, `k <= 4`.
///
/// Closed form for `k <= 2`; otherwise roots of the characteristic polynomial
/// by Durand-Kerner iteration followed by Newton polishing.
pub fn eigenvalues<T: Real>(m: &[Complex<T>], k: usize) -> Vec<Complex<T>> {
    assert_eq!(m.len(), k * k);
    match k {
        0 => vec![],
        1 => vec![m[0]],
        2 => {
            let half = T::lit(0.5);
            let mean = (m[0] + m[3]) * half;
            let d = (m[0] - m[3]) * half;
            let root = (d * d + m[1] * m[2]).sqrt();
            vec![mean + root, mean - root]
        }
        _ => poly_roots(&char_poly(m, k)),
    }
}

fn poly_roots<T: Real>(c: &[Complex<T>]) -> Vec<Complex<T>> {
    let deg = c.len() - 1;
    // Cauchy bound on root moduli
    let radius = T::one() + c[..deg].iter().fold(T::zero(), |mx, z| mx.max(z.norm()));
    let seed = Complex::new(T::lit(0.4), T::lit(0.9));
    let mut z: Vec<Complex<T>> = (0..deg).map(|j| seed.powu(j as u32 + 1) * radius).collect();
    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..500 {
        let mut delta = T::zero();
        for i in 0..deg {
            let (p, _) = horner(c, z[i]);
            let mut denom = Complex::<T>::one();
            for j in 0..deg {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.is_zero() {
                continue;
            }
            let step = p / denom;
            z[i] -= step;
            delta = delta.max(step.norm() / (T::one() + z[i].norm()));
        }
        if delta <= tol {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(c, *zi);
            if dp.is_zero() {
                break;
            }
            let step = p / dp;
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            let cand = *zi - step;
            if horner(c, cand).0.norm() < p.norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn triangular_3x3() {
        let c = |x: f64| Complex::new(x, 0.0);
        let m = [c(1.0), c(5.0), c(2.0), c(0.0), c(-2.0), c(7.0), c(0.0), c(0.0), c(4.0)];
        let ev = sorted_re(eigenvalues(&m, 3));
        for (e, want) in ev.iter().zip([-2.0, 1.0, 4.0]) {
            assert!((e - c(want)).norm() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn rotation_block_4x4() {
        let c = |x: f64| Complex::new(x, 0.0);
        let z = c(0.0);
        // diag(R(1, 2), 3, 5) with R(a, b) = [[a, -b], [b, a]] -> 1 +- 2i
        let m = [c(1.0), c(-2.0), z, z, c(2.0), c(1.0), z, z, z, z, c(3.0), z, z, z, z, c(5.0)];
        let ev = eigenvalues(&m, 4);
        for want in [Complex::new(1.0, 2.0), Complex::new(1.0, -2.0), c(3.0), c(5.0)] {
            assert!(ev.iter().any(|e| (e - want).norm() < 1e-10), "{ev:?} missing {want}");
        }
    }

    #[test]
    fn char_poly_of_2x2() {
        let c = |x: f64| Complex::new(x, 0.0);
        let p = char_poly(&[c(1.0), c(2.0), c(3.0), c(4.0)], 2);
        // z^2 - 5 z - 2
        assert!((p[0] - c(-2.0)).norm() < 1e-14);
        assert!((p[1] - c(-5.0)).norm() < 1e-14);
        assert!((p[2] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn jordan_2x2_double_root() {
        let c = |x: f64| Complex::new(x, 0.0);
        let ev = eigenvalues(&[c(2.0), c(1.0), c(0.0), c(2.0)], 2);
        assert!(ev.iter().all(|e| (e - c(2.0)).norm() < 1e-12));
    }
}
