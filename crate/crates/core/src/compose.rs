//! Quantization on the window-mode space and the Leibniz product `#`.
//!
//! Operators act on trigonometric polynomials with frequencies in the window
//! `[-Xi, Xi]^n` (vector-valued with `k` components). Basis index is
//! `mode * k + component` with `mode` the grid's xi index. `op(a)` sends
//! `e_xi` to the window projection of the sampled `e^{i x.xi} a(x, xi)`.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::dsl::SymbolExpr;
use crate::error::{Error, Result};
use crate::fft::{bin_of, TorusFft};
use crate::linalg::{operator_norm, CMat};
use crate::oracle::dense_inverse;
use crate::scalar::Real;
use crate::symbol::{sample, GridSymbol, SymbolClassParams, TorusGrid};

/// Dense operator on the window-mode space.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantOp<T> {
    grid: TorusGrid,
    k: usize,
    class: SymbolClassParams,
    mat: CMat<T>,
}

impl<T: Real> QuantOp<T> {
    pub fn from_matrix(grid: TorusGrid, k: usize, mat: CMat<T>) -> Result<Self> {
        let dim = grid.xi_count() * k;
        if mat.rows() != dim || mat.cols() != dim {
            return Err(Error::Shape(format!("operator must be {dim}x{dim}, got {}x{}", mat.rows(), mat.cols())));
        }
        Ok(Self { grid, k, class: SymbolClassParams::default(), mat })
    }

    pub fn identity(grid: TorusGrid, k: usize) -> Self {
        Self { grid, k, class: SymbolClassParams::default(), mat: CMat::identity(grid.xi_count() * k) }
    }

    pub fn with_class(mut self, class: SymbolClassParams) -> Self {
        self.class = class;
        self
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn class(&self) -> SymbolClassParams {
        self.class
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.mat
    }

    fn check_same(&self, o: &Self) -> Result<()> {
        if self.grid != o.grid || self.k != o.k {
            return Err(Error::Shape("operators live on different grids or sizes".into()));
        }
        Ok(())
    }

    pub fn compose(&self, o: &Self) -> Result<Self> {
        self.check_same(o)?;
        let class = product_class(self.class, o.class);
        Ok(Self { mat: self.mat.matmul(&o.mat), class, ..self.clone() })
    }

    /// `A - lambda I`.
    pub fn shifted(&self, lambda: Complex<T>) -> Self {
        Self { mat: self.mat.shifted(lambda), ..self.clone() }
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        self.mat.matvec(v)
    }

    /// Spectral norm on `l^2` of mode coefficients.
    pub fn norm(&self) -> T {
        operator_norm(&self.mat).value
    }
}

fn product_class(a: SymbolClassParams, b: SymbolClassParams) -> SymbolClassParams {
    SymbolClassParams { m: a.m + b.m, rho: a.rho.min(b.rho), delta: a.delta.max(b.delta) }
}

/// Flat FFT bin of `zeta - xi` for window modes `zeta`, `xi`.
fn shift_bins(grid: &TorusGrid, xi: &[i64]) -> Vec<usize> {
    let p = grid.p();
    (0..grid.xi_count())
        .map(|jz| {
            let zeta = grid.xi_point(jz);
            zeta.iter().zip(xi).fold(0, |acc, (z, x)| acc * p + bin_of(z - x, p))
        })
        .collect()
}

/// The dense matrix of `op(a)`.
pub fn quantize<T: Real>(a: &GridSymbol<T>) -> QuantOp<T> {
    let grid = *a.grid();
    let k = a.k();
    let (nx, nxi) = (grid.x_count(), grid.xi_count());
    let dim = nxi * k;
    let fft = TorusFft::<T>::new(grid.p(), grid.n());
    let inv = T::one() / T::lit(nx as f64);
    let mut mat = CMat::zeros(dim, dim);
    let mut buf = vec![Complex::zero(); nx];
    for jx in 0..nxi {
        let bins = shift_bins(&grid, &grid.xi_point(jx));
        for r in 0..k {
            for c in 0..k {
                for (ix, v) in buf.iter_mut().enumerate() {
                    *v = a.at(ix, jx)[r * k + c] * inv;
                }
                fft.forward(&mut buf);
                let col = jx * k + c;
                for (jz, &b) in bins.iter().enumerate() {
                    mat[(jz * k + r, col)] = buf[b];
                }
            }
        }
    }
    QuantOp { grid, k, class: a.class(), mat }
}

/// Inverse of [`quantize`] on the operator space.
pub fn extract_symbol<T: Real>(op: &QuantOp<T>) -> GridSymbol<T> {
    let grid = op.grid;
    let k = op.k;
    let (nx, nxi) = (grid.x_count(), grid.xi_count());
    let fft = TorusFft::<T>::new(grid.p(), grid.n());
    let mut out = GridSymbol::constant(grid, k, op.class, Complex::zero());
    let mut buf = vec![Complex::zero(); nx];
    for jx in 0..nxi {
        let bins = shift_bins(&grid, &grid.xi_point(jx));
        for r in 0..k {
            for c in 0..k {
                buf.iter_mut().for_each(|v| *v = Complex::zero());
                for (jz, &b) in bins.iter().enumerate() {
                    buf[b] = op.mat[(jz * k + r, jx * k + c)];
                }
                fft.inverse(&mut buf);
                for (ix, v) in buf.iter().enumerate() {
                    out.at_mut(ix, jx)[r * k + c] = *v;
                }
            }
        }
    }
    out
}

/// `extract(quantize(a) quantize(b))`.
pub fn compose_exact<T: Real>(a: &GridSymbol<T>, b: &GridSymbol<T>) -> Result<GridSymbol<T>> {
    if a.grid() != b.grid() || a.k() != b.k() {
        return Err(Error::Shape("compose_exact: grid mismatch".into()));
    }
    Ok(extract_symbol(&quantize(a).compose(&quantize(b))?))
}

/// Multi-indices with `|alpha| < order` in `n` dimensions.
pub(crate) fn multi_indices_below(n: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a0 in 0..order {
        if n == 1 {
            out.push(vec![a0]);
        } else {
            for a1 in 0..order - a0 {
                out.push(vec![a0, a1]);
            }
        }
    }
    out
}

fn factorial(v: &[usize]) -> f64 {
    v.iter().map(|&e| (1..=e).map(|i| i as f64).product::<f64>()).product()
}

/// `sum_{|alpha| < K} (1/alpha!) d^alpha_xi a . D^alpha_x b` with `D_x = -i d_x`
/// (exact xi-derivatives of `a`, spectral x-derivatives of `b`).
pub fn leibniz_truncated<T: Real>(a: &SymbolExpr, b: &GridSymbol<T>, order: usize) -> Result<GridSymbol<T>> {
    let grid = *b.grid();
    if a.n() != grid.n() || a.k() != b.k() {
        return Err(Error::Shape("leibniz_truncated: operand shapes differ".into()));
    }
    if order == 0 {
        return Err(Error::Precondition("expansion order K must be >= 1".into()));
    }
    if order - 1 > a.max_order() {
        return Err(Error::DerivativeOrder { order: order - 1, max: a.max_order() });
    }
    let n = grid.n();
    let mut acc = b.zeros_like();
    for alpha in multi_indices_below(n, order) {
        let da = sample::<T>(&a.differentiate(&alpha, &vec![0; n])?, &grid)?;
        let na: usize = alpha.iter().sum();
        let mut phase = Complex::<T>::one();
        for _ in 0..na {
            phase *= Complex::new(T::zero(), -T::one());
        }
        let db = b.x_derivative(&alpha).scale(phase * T::lit(1.0 / factorial(&alpha)));
        acc = acc.add(&da.pointwise_mul(&db)?)?;
    }
    let ac = a.class().unwrap_or_default();
    Ok(acc.with_class(product_class(ac, b.class())))
}

/// [`leibniz_truncated`] with `b` given as an expression.
pub fn leibniz_truncated_expr<T: Real>(
    a: &SymbolExpr,
    b: &SymbolExpr,
    order: usize,
    grid: &TorusGrid,
) -> Result<GridSymbol<T>> {
    leibniz_truncated(a, &sample::<T>(b, grid)?, order)
}

/// The `#`-inverse `extract(quantize(u)^{-1})`. Fails when either residual
/// `u # v - 1`, `v # u - 1` exceeds `tol` on the grid.
pub fn leibniz_inverse<T: Real>(u: &GridSymbol<T>, tol: T) -> Result<GridSymbol<T>> {
    let q = quantize(u);
    let inv = dense_inverse(q.matrix())?;
    let class = u.class();
    let vop = QuantOp { mat: inv, class: SymbolClassParams { m: -class.m, ..class }, ..q.clone() };
    let v = extract_symbol(&vop);
    let one = GridSymbol::constant(*u.grid(), u.k(), class, Complex::one());
    let left = extract_symbol(&q.compose(&vop)?).max_diff(&one, 0)?;
    let right = extract_symbol(&vop.compose(&q)?).max_diff(&one, 0)?;
    if left.max(right) > tol {
        return Err(Error::NoConvergence(format!(
            "leibniz inverse residual {:e} exceeds tolerance {:e}",
            left.max(right).to_f64_lossy(),
            tol.to_f64_lossy()
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_symbol;

    fn tab(text: &str, g: &TorusGrid) -> GridSymbol<f64> {
        sample(&parse_symbol(text, g.n(), 1).unwrap(), g).unwrap()
    }

    #[test]
    fn quantize_one_is_identity() {
        for g in [TorusGrid::new(1, 16).unwrap(), TorusGrid::new(2, 8).unwrap()] {
            let q = quantize(&tab("1", &g));
            let id = CMat::identity(q.dim());
            assert!((q.matrix() - &id).max_abs() < 1e-14);
            assert!((extract_symbol(&QuantOp::identity(g, 1)).sub(&tab("1", &g)).unwrap()).sup_norm(0) < 1e-14);
        }
    }

    #[test]
    fn multiplier_and_shift() {
        let g = TorusGrid::new(1, 16).unwrap();
        let q = quantize(&tab("xi", &g));
        for j in 0..g.xi_count() {
            for i in 0..g.xi_count() {
                let want = if i == j { g.xi_point(j)[0] as f64 } else { 0.0 };
                assert!((q.matrix()[(i, j)] - Complex::new(want, 0.0)).norm() < 1e-13);
            }
        }
        let s = quantize(&tab("exp(i*x)", &g));
        for j in 0..g.xi_count() {
            for i in 0..g.xi_count() {
                let want = if i == j + 1 { 1.0 } else { 0.0 };
                assert!((s.matrix()[(i, j)] - Complex::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn round_trips() {
        let g = TorusGrid::new(1, 16).unwrap();
        let a = tab("(2+sin(x))*bracket(xi)^2", &g);
        // sin(x) moves boundary columns out of the window: identity holds one mode in
        assert!(extract_symbol(&quantize(&a)).max_diff(&a, 1).unwrap() < 1e-12 * 300.0);
        assert!(extract_symbol(&quantize(&a)).max_diff(&a, 0).unwrap() > 1.0);
        let q = quantize(&a);
        assert!((quantize(&extract_symbol(&q)).matrix() - q.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn shift_composition_matches_leibniz() {
        let g = TorusGrid::new(1, 32).unwrap();
        let a = parse_symbol("xi", 1, 1).unwrap();
        let b = tab("exp(i*x)", &g);
        let exact = compose_exact(&tab("xi", &g), &b).unwrap();
        let lt = leibniz_truncated(&a, &b, 2).unwrap();
        let want = tab("(xi+1)*exp(i*x)", &g);
        assert!(lt.max_diff(&want, 0).unwrap() < 1e-12);
        assert!(exact.max_diff(&want, 1).unwrap() < 1e-12);
    }

    #[test]
    fn x_independent_products() {
        let g = TorusGrid::new(1, 16).unwrap();
        let a = tab("bracket(xi)^2", &g);
        let want = tab("bracket(xi)^4", &g);
        assert!(compose_exact(&a, &a).unwrap().max_diff(&want, 0).unwrap() < 1e-10);
        let e = parse_symbol("bracket(xi)^2", 1, 1).unwrap();
        assert!(leibniz_truncated(&e, &a, 3).unwrap().max_diff(&want, 0).unwrap() < 1e-10);
    }

    #[test]
    fn inverse_of_multiplier() {
        let g = TorusGrid::new(1, 16).unwrap();
        let v = leibniz_inverse(&tab("bracket(xi)^2+1", &g), 1e-12).unwrap();
        assert!(v.max_diff(&tab("1/(bracket(xi)^2+1)", &g), 0).unwrap() < 1e-14);
    }
}
