//! Dense reference computations: resolvents, norms, FFT application.

use num_complex::Complex;
use num_traits::Zero;

use crate::compose::QuantOp;
use crate::error::{Error, Result};
use crate::fft::TorusFft;
use crate::linalg::{default_pivot_threshold, CMat, Lu};
use crate::scalar::Real;
use crate::symbol::{GridSymbol, TorusGrid};

pub use crate::linalg::{operator_norm, NormEstimate};

/// `M^{-1}` by partial-pivot LU plus one step of iterative refinement.
pub fn dense_inverse<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let lu = Lu::factor(m, default_pivot_threshold())?;
    let mut x = lu.inverse();
    let mut r = CMat::identity(m.rows());
    r.gemm_acc(-Complex::new(T::one(), T::zero()), m, &x, Complex::new(T::one(), T::zero()));
    let corr = x.matmul(&r);
    x.axpy(Complex::new(T::one(), T::zero()), &corr);
    if !x.is_finite() {
        return Err(Error::Singular { pivot: lu.min_pivot().to_f64_lossy(), threshold: 0.0 });
    }
    Ok(x)
}

/// `(A - lambda)^{-1}`.
pub fn dense_resolvent<T: Real>(a: &QuantOp<T>, lambda: Complex<T>) -> Result<CMat<T>> {
    dense_inverse(&a.matrix().shifted(lambda))
}

/// `max |(M X - I)_{ij}|`.
pub fn inverse_residual<T: Real>(m: &CMat<T>, x: &CMat<T>) -> T {
    (&m.matmul(x) - &CMat::identity(m.rows())).max_abs()
}

/// Samples of a `k`-vector function on the x-grid, layout `[x][component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    pub grid: TorusGrid,
    pub k: usize,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: TorusGrid, k: usize, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.x_count() * k {
            return Err(Error::Shape(format!("grid function needs {} values", grid.x_count() * k)));
        }
        Ok(Self { grid, k, values })
    }

    pub fn from_fn(grid: TorusGrid, k: usize, f: impl Fn(&[T], usize) -> Complex<T>) -> Self {
        let mut values = Vec::with_capacity(grid.x_count() * k);
        for ix in 0..grid.x_count() {
            let x: Vec<T> = grid.x_point(ix);
            for c in 0..k {
                values.push(f(&x, c));
            }
        }
        Self { grid, k, values }
    }

    /// Window Fourier coefficients `u_hat(xi) = P^{-n} sum_x u(x) e^{-i x.xi}`,
    /// indexed `mode * k + component`.
    pub fn analyze(&self) -> Vec<Complex<T>> {
        let g = self.grid;
        let fft = TorusFft::<T>::new(g.p(), g.n());
        let inv = T::one() / T::lit(g.x_count() as f64);
        let bins = window_bins(&g);
        let mut out = vec![Complex::zero(); g.xi_count() * self.k];
        let mut buf = vec![Complex::zero(); g.x_count()];
        for c in 0..self.k {
            for (ix, v) in buf.iter_mut().enumerate() {
                *v = self.values[ix * self.k + c] * inv;
            }
            fft.forward(&mut buf);
            for (jx, &b) in bins.iter().enumerate() {
                out[jx * self.k + c] = buf[b];
            }
        }
        out
    }

    /// `sum_xi c(xi) e^{i x.xi}` on the grid.
    pub fn synthesize(grid: TorusGrid, k: usize, coeffs: &[Complex<T>]) -> Self {
        let fft = TorusFft::<T>::new(grid.p(), grid.n());
        let bins = window_bins(&grid);
        let mut values = vec![Complex::zero(); grid.x_count() * k];
        let mut buf = vec![Complex::zero(); grid.x_count()];
        for c in 0..k {
            buf.iter_mut().for_each(|v| *v = Complex::zero());
            for (jx, &b) in bins.iter().enumerate() {
                buf[b] = coeffs[jx * k + c];
            }
            fft.inverse(&mut buf);
            for (ix, v) in buf.iter().enumerate() {
                values[ix * k + c] = *v;
            }
        }
        Self { grid, k, values }
    }

    pub fn max_diff(&self, o: &Self) -> T {
        self.values.iter().zip(&o.values).fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }
}

fn window_bins(g: &TorusGrid) -> Vec<usize> {
    let p = g.p();
    (0..g.xi_count())
        .map(|jx| g.xi_point(jx).iter().fold(0, |acc, &v| acc * p + crate::fft::bin_of(v, p)))
        .collect()
}

/// `op(a) u`: forward FFT of `u`, the per-x sum
/// `sum_xi e^{i x.xi} a(x, xi) u_hat(xi)`, then projection to the window.
pub fn apply_fft<T: Real>(a: &GridSymbol<T>, u: &GridFunction<T>) -> Result<GridFunction<T>> {
    let g = *a.grid();
    if u.grid != g || u.k != a.k() {
        return Err(Error::Shape("apply_fft: symbol and function shapes differ".into()));
    }
    let k = a.k();
    let uh = u.analyze();
    let mut w = vec![Complex::zero(); g.x_count() * k];
    let xis: Vec<Vec<T>> = (0..g.xi_count()).map(|jx| g.xi_point_real(jx)).collect();
    for ix in 0..g.x_count() {
        let x: Vec<T> = g.x_point(ix);
        for (jx, xi) in xis.iter().enumerate() {
            let phase = x.iter().zip(xi).fold(T::zero(), |s, (a, b)| s + *a * *b);
            let e = Complex::new(phase.cos(), phase.sin());
            let m = a.at(ix, jx);
            for r in 0..k {
                let mut s = Complex::zero();
                for c in 0..k {
                    s += m[r * k + c] * uh[jx * k + c];
                }
                w[ix * k + r] += e * s;
            }
        }
    }
    let raw = GridFunction { grid: g, k, values: w };
    Ok(GridFunction::synthesize(g, k, &raw.analyze()))
}

/// The dense path: synthesize(`quantize(a)` applied to the window coefficients).
pub fn apply_dense<T: Real>(a: &QuantOp<T>, u: &GridFunction<T>) -> GridFunction<T> {
    GridFunction::synthesize(*a.grid(), a.k(), &a.apply(&u.analyze()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::quantize;
    use crate::dsl::parse_symbol;
    use crate::symbol::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn resolvent_of_multiplier() {
        let g = TorusGrid::new(1, 16).unwrap();
        let a = quantize(&sample::<f64>(&parse_symbol("bracket(xi)^2", 1, 1).unwrap(), &g).unwrap());
        let x = dense_resolvent(&a, Complex::new(-1.0, 0.0)).unwrap();
        for j in 0..g.xi_count() {
            let want = 1.0 / (g.xi_bracket(j).powi(2) + 1.0);
            assert!((x[(j, j)].re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_paths_agree() {
        let g = TorusGrid::new(1, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<Complex<f64>> = (0..g.x_count() * g.xi_count())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let a = GridSymbol::new(g, 1, Default::default(), vals).unwrap();
        let u = GridFunction::from_fn(g, 1, |x: &[f64], _| Complex::new(x[0].cos(), (2.0 * x[0]).sin()));
        let fast = apply_fft(&a, &u).unwrap();
        let dense = apply_dense(&quantize(&a), &u);
        assert!(fast.max_diff(&dense) < 1e-11);

        let xi = sample::<f64>(&parse_symbol("xi", 1, 1).unwrap(), &g).unwrap();
        let e = GridFunction::from_fn(g, 1, |x: &[f64], _| Complex::new(x[0].cos(), x[0].sin()));
        assert!(apply_fft(&xi, &e).unwrap().max_diff(&e) < 1e-13);
    }
}
