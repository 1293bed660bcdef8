//! Torus grids, tabulated symbols and the seminorms `q_{alpha,beta}`.

use std::io::Write;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::dsl::SymbolExpr;
use crate::error::{Error, Result};
use crate::fft::{signed_freq, TorusFft};
use crate::linalg::small_spectral_norm;
use crate::scalar::{bracket, Real};

/// Order and type `(m, rho, delta)` of the class `S^m_{rho,delta}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolClassParams {
    pub m: f64,
    pub rho: f64,
    pub delta: f64,
}

impl Default for SymbolClassParams {
    fn default() -> Self {
        Self { m: 0.0, rho: 1.0, delta: 0.0 }
    }
}

impl SymbolClassParams {
    /// Accepts `0 <= delta <= rho <= 1`, `rho > 0`, `delta < 1`.
    pub fn new(m: f64, rho: f64, delta: f64) -> Result<Self> {
        let c = Self { m, rho, delta };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.m.is_finite()
            && self.rho > 0.0
            && self.rho <= 1.0
            && self.delta >= 0.0
            && self.delta < 1.0
            && self.delta <= self.rho;
        if ok {
            Ok(())
        } else {
            Err(Error::ClassInvariant(format!(
                "(m, rho, delta) = ({}, {}, {}) needs 0 <= delta <= rho <= 1, rho > 0, delta < 1",
                self.m, self.rho, self.delta
            )))
        }
    }

    /// The stricter requirement of the resolvent construction:
    /// `0 <= delta < rho <= 1` and `m >= 0`.
    pub fn check_hypo(&self) -> Result<()> {
        self.check()?;
        if self.delta < self.rho && self.m >= 0.0 {
            Ok(())
        } else {
            Err(Error::ClassInvariant(format!(
                "hypoellipticity needs delta < rho and m >= 0, got ({}, {}, {})",
                self.m, self.rho, self.delta
            )))
        }
    }

    /// Exponent of `<xi>` in `q_{alpha,beta}`.
    pub fn weight_exponent(&self, alpha: usize, beta: usize) -> f64 {
        -self.m + self.rho * alpha as f64 - self.delta * beta as f64
    }
}

/// `P^n` uniform x-nodes and the integer frequency window `[-Xi, Xi]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
    p: usize,
    xi_max: usize,
}

impl TorusGrid {
    /// Default window `Xi = P/2 - 1`.
    pub fn new(n: usize, p: usize) -> Result<Self> {
        Self::with_window(n, p, (p / 2).saturating_sub(1))
    }

    pub fn with_window(n: usize, p: usize, xi_max: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::Grid(format!("dimension n = {n} not supported (1 or 2)")));
        }
        if p < 4 || !p.is_power_of_two() {
            return Err(Error::Grid(format!("P = {p} must be a power of two >= 4")));
        }
        if p < 2 * xi_max + 2 {
            return Err(Error::Grid(format!("window Xi = {xi_max} aliases on P = {p} (need P >= 2 Xi + 2)")));
        }
        Ok(Self { n, p, xi_max })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn xi_max(&self) -> usize {
        self.xi_max
    }

    /// Frequencies per axis, `2 Xi + 1`.
    #[inline]
    pub fn width(&self) -> usize {
        2 * self.xi_max + 1
    }

    #[inline]
    pub fn x_count(&self) -> usize {
        self.p.pow(self.n as u32)
    }

    #[inline]
    pub fn xi_count(&self) -> usize {
        self.width().pow(self.n as u32)
    }

    /// Lattice step used for xi-differences of tabulated symbols.
    pub fn h_xi(&self) -> f64 {
        1.0
    }

    pub fn x_multi(&self, ix: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        let mut r = ix;
        for d in (0..self.n).rev() {
            out[d] = r % self.p;
            r /= self.p;
        }
        out
    }

    pub fn x_point<T: Real>(&self, ix: usize) -> Vec<T> {
        let h = std::f64::consts::TAU / self.p as f64;
        self.x_multi(ix).into_iter().map(|i| T::lit(h * i as f64)).collect()
    }

    pub fn xi_point(&self, jx: usize) -> Vec<i64> {
        let w = self.width();
        let mut out = vec![0; self.n];
        let mut r = jx;
        for d in (0..self.n).rev() {
            out[d] = (r % w) as i64 - self.xi_max as i64;
            r /= w;
        }
        out
    }

    pub fn xi_point_real<T: Real>(&self, jx: usize) -> Vec<T> {
        self.xi_point(jx).into_iter().map(|v| T::lit(v as f64)).collect()
    }

    pub fn xi_index(&self, xi: &[i64]) -> Option<usize> {
        let m = self.xi_max as i64;
        let mut idx = 0;
        for &v in xi {
            if v.abs() > m {
                return None;
            }
            idx = idx * self.width() + (v + m) as usize;
        }
        Some(idx)
    }

    /// `|xi_d| <= Xi - margin` on every axis.
    pub fn is_interior(&self, jx: usize, margin: usize) -> bool {
        let lim = self.xi_max as i64 - margin as i64;
        self.xi_point(jx).iter().all(|v| v.abs() <= lim)
    }

    pub fn xi_bracket(&self, jx: usize) -> f64 {
        bracket(&self.xi_point_real::<f64>(jx))
    }
}

/// Values of a `k x k` symbol at every `(x-node, xi-node)`, layout
/// `[x][xi][row][col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSymbol<T> {
    grid: TorusGrid,
    k: usize,
    class: SymbolClassParams,
    values: Vec<Complex<T>>,
}

impl<T: Real> GridSymbol<T> {
    pub fn new(grid: TorusGrid, k: usize, class: SymbolClassParams, values: Vec<Complex<T>>) -> Result<Self> {
        let want = grid.x_count() * grid.xi_count() * k * k;
        if values.len() != want {
            return Err(Error::Shape(format!("grid symbol needs {want} values, got {}", values.len())));
        }
        if let Some(pos) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            let node = pos / (k * k);
            let (ix, jx) = (node / grid.xi_count(), node % grid.xi_count());
            return Err(Error::NonFinite { x: grid.x_point(ix), xi: grid.xi_point_real(jx) });
        }
        Ok(Self { grid, k, class, values })
    }

    /// Tabulates `f(ix, jx, out)` with `out` the `k*k` node slot.
    pub fn from_fn<F>(grid: TorusGrid, k: usize, class: SymbolClassParams, f: F) -> Result<Self>
    where
        F: Fn(usize, usize, &mut [Complex<T>]) -> Result<()> + Sync,
    {
        let kk = k * k;
        let nxi = grid.xi_count();
        let mut values = vec![Complex::zero(); grid.x_count() * nxi * kk];
        values
            .par_chunks_mut(nxi * kk)
            .enumerate()
            .try_for_each(|(ix, row)| {
                row.chunks_mut(kk).enumerate().try_for_each(|(jx, slot)| f(ix, jx, slot))
            })?;
        Self::new(grid, k, class, values)
    }

    /// `c I` at every node.
    pub fn constant(grid: TorusGrid, k: usize, class: SymbolClassParams, c: Complex<T>) -> Self {
        let kk = k * k;
        let mut values = vec![Complex::zero(); grid.x_count() * grid.xi_count() * kk];
        for node in values.chunks_mut(kk) {
            for r in 0..k {
                node[r * k + r] = c;
            }
        }
        Self { grid, k, class, values }
    }

    pub fn zeros_like(&self) -> Self {
        Self { values: vec![Complex::zero(); self.values.len()], ..self.clone() }
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

    pub fn with_class(mut self, class: SymbolClassParams) -> Self {
        self.class = class;
        self
    }

    #[inline]
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    #[inline]
    fn offset(&self, ix: usize, jx: usize) -> usize {
        (ix * self.grid.xi_count() + jx) * self.k * self.k
    }

    #[inline]
    pub fn at(&self, ix: usize, jx: usize) -> &[Complex<T>] {
        let o = self.offset(ix, jx);
        &self.values[o..o + self.k * self.k]
    }

    #[inline]
    pub fn at_mut(&mut self, ix: usize, jx: usize) -> &mut [Complex<T>] {
        let o = self.offset(ix, jx);
        let kk = self.k * self.k;
        &mut self.values[o..o + kk]
    }

    fn check_same(&self, o: &Self) -> Result<()> {
        if self.grid != o.grid || self.k != o.k {
            return Err(Error::Shape("grid symbols live on different grids or sizes".into()));
        }
        Ok(())
    }

    pub fn zip_with(&self, o: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Result<Self> {
        self.check_same(o)?;
        let values = self.values.iter().zip(&o.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self { values, ..self.clone() })
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.zip_with(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.zip_with(o, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { values: self.values.iter().map(|z| z * c).collect(), ..self.clone() }
    }

    /// `self - c I`.
    pub fn shift_diag(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        let k = self.k;
        for node in out.values.chunks_mut(k * k) {
            for r in 0..k {
                node[r * k + r] -= c;
            }
        }
        out
    }

    /// Pointwise matrix product `a(x,xi) b(x,xi)`.
    pub fn pointwise_mul(&self, o: &Self) -> Result<Self> {
        self.check_same(o)?;
        let k = self.k;
        let kk = k * k;
        let mut values = vec![Complex::zero(); self.values.len()];
        for ((out, a), b) in values.chunks_mut(kk).zip(self.values.chunks(kk)).zip(o.values.chunks(kk)) {
            for r in 0..k {
                for l in 0..k {
                    for c in 0..k {
                        out[r * k + c] += a[r * k + l] * b[l * k + c];
                    }
                }
            }
        }
        Ok(Self { values, ..self.clone() })
    }

    /// `max |a(x,xi)| <xi>^w` over nodes with `|xi_d| <= Xi - margin`.
    pub fn weighted_sup(&self, w: f64, margin: usize) -> T {
        let mut best = T::zero();
        for jx in (0..self.grid.xi_count()).filter(|&jx| self.grid.is_interior(jx, margin)) {
            let weight = T::lit(self.grid.xi_bracket(jx).powf(w));
            for ix in 0..self.grid.x_count() {
                best = best.max(small_spectral_norm(self.at(ix, jx), self.k) * weight);
            }
        }
        best
    }

    pub fn sup_norm(&self, margin: usize) -> T {
        self.weighted_sup(0.0, margin)
    }

    /// `max |a - b|` (spectral norm per node) over the interior window.
    pub fn max_diff(&self, o: &Self, margin: usize) -> Result<T> {
        Ok(self.sub(o)?.sup_norm(margin))
    }

    /// `d^beta_x` by FFT along x (Nyquist bins dropped when `beta != 0`).
    pub fn x_derivative(&self, beta: &[usize]) -> Self {
        if beta.iter().all(|&b| b == 0) {
            return self.clone();
        }
        let g = self.grid;
        let (p, n) = (g.p(), g.n());
        let fft = TorusFft::<T>::new(p, n);
        let kk = self.k * self.k;
        let nx = g.x_count();
        let nxi = g.xi_count();
        let inv = T::one() / T::lit(nx as f64);
        let mut factor = vec![Complex::zero(); nx];
        for (b, f) in factor.iter_mut().enumerate() {
            let m = fft.multi(b);
            let mut z = Complex::new(inv, T::zero());
            for d in 0..n {
                if beta[d] == 0 {
                    continue;
                }
                if m[d] == p / 2 {
                    z = Complex::zero();
                }
                let iz = Complex::new(T::zero(), T::lit(signed_freq(m[d], p) as f64));
                for _ in 0..beta[d] {
                    z *= iz;
                }
            }
            *f = z;
        }
        let mut out = self.clone();
        let mut buf = vec![Complex::zero(); nx];
        for jx in 0..nxi {
            for e in 0..kk {
                for (ix, v) in buf.iter_mut().enumerate() {
                    *v = self.values[(ix * nxi + jx) * kk + e];
                }
                fft.forward(&mut buf);
                for (v, f) in buf.iter_mut().zip(&factor) {
                    *v *= f;
                }
                fft.inverse(&mut buf);
                for (ix, v) in buf.iter().enumerate() {
                    out.values[(ix * nxi + jx) * kk + e] = *v;
                }
            }
        }
        out
    }

    /// One central lattice difference `(f(xi + e_d) - f(xi - e_d)) / 2` along
    /// `axis`; nodes without both neighbours are set to zero.
    fn xi_difference(&self, axis: usize) -> Self {
        let g = self.grid;
        let kk = self.k * self.k;
        let mut out = self.zeros_like();
        for jx in 0..g.xi_count() {
            let xi = g.xi_point(jx);
            let mut up = xi.clone();
            up[axis] += 1;
            let mut down = xi.clone();
            down[axis] -= 1;
            let (Some(ju), Some(jd)) = (g.xi_index(&up), g.xi_index(&down)) else {
                continue;
            };
            for ix in 0..g.x_count() {
                let (ou, od, o) = (self.offset(ix, ju), self.offset(ix, jd), self.offset(ix, jx));
                for e in 0..kk {
                    out.values[o + e] = (self.values[ou + e] - self.values[od + e]) * T::lit(0.5);
                }
            }
        }
        out
    }

    /// `q_{alpha,beta}` of the tabulation: xi-derivatives by central lattice
    /// differences, x-derivatives spectrally, sup over `|xi_d| <= Xi - margin`
    /// (the margin is raised to `|alpha|` so every stencil is in the window).
    pub fn seminorm(&self, alpha: &[usize], beta: &[usize], class: SymbolClassParams, margin: usize) -> Result<T> {
        class.check()?;
        let n = self.grid.n();
        if alpha.len() != n || beta.len() != n {
            return Err(Error::Shape(format!("multi-indices must have length n = {n}")));
        }
        let mut d = self.x_derivative(beta);
        for (axis, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                d = d.xi_difference(axis);
            }
        }
        let (na, nb): (usize, usize) = (alpha.iter().sum(), beta.iter().sum());
        Ok(d.weighted_sup(class.weight_exponent(na, nb), margin.max(na)))
    }

    /// CSV: x-index tuple, xi tuple, then `re_rc, im_rc` per entry.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let g = self.grid;
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=g.n()).map(|d| format!("ix{d}")).collect();
        header.extend((1..=g.n()).map(|d| format!("xi{d}")));
        for r in 1..=self.k {
            for c in 1..=self.k {
                header.push(format!("re_{r}{c}"));
                header.push(format!("im_{r}{c}"));
            }
        }
        wr.write_record(&header)?;
        for ix in 0..g.x_count() {
            for jx in 0..g.xi_count() {
                let mut rec: Vec<String> = g.x_multi(ix).iter().map(|v| v.to_string()).collect();
                rec.extend(g.xi_point(jx).iter().map(|v| v.to_string()));
                for z in self.at(ix, jx) {
                    rec.push(format!("{:e}", z.re));
                    rec.push(format!("{:e}", z.im));
                }
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Tabulates `expr` at every grid node.
pub fn sample<T: Real>(expr: &SymbolExpr, grid: &TorusGrid) -> Result<GridSymbol<T>> {
    if expr.n() != grid.n() {
        return Err(Error::Shape(format!("symbol has n = {}, grid has n = {}", expr.n(), grid.n())));
    }
    let g = *grid;
    let xs: Vec<Vec<T>> = (0..g.x_count()).map(|ix| g.x_point(ix)).collect();
    let xis: Vec<Vec<T>> = (0..g.xi_count()).map(|jx| g.xi_point_real(jx)).collect();
    GridSymbol::from_fn(g, expr.k(), expr.class().unwrap_or_default(), |ix, jx, out| {
        out.copy_from_slice(&expr.eval(&xs[ix], &xis[jx])?);
        Ok(())
    })
}

/// `q_{alpha,beta}(a) = max |d^alpha_xi d^beta_x a| <xi>^{-m + rho|alpha| - delta|beta|}`
/// over all grid nodes, with exact derivatives.
pub fn seminorm<T: Real>(
    expr: &SymbolExpr,
    alpha: &[usize],
    beta: &[usize],
    class: SymbolClassParams,
    grid: &TorusGrid,
) -> Result<T> {
    class.check()?;
    let d = expr.differentiate(alpha, beta)?;
    let (na, nb): (usize, usize) = (alpha.iter().sum(), beta.iter().sum());
    let w = class.weight_exponent(na, nb);
    let tab = sample::<T>(&d, grid)?;
    Ok(tab.weighted_sup(w, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_symbol;

    #[test]
    fn grid_layout() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert_eq!((g.width(), g.x_count(), g.xi_count()), (7, 64, 49));
        assert_eq!(g.xi_point(g.xi_index(&[-2, 3]).unwrap()), vec![-2, 3]);
        assert_eq!(g.x_multi(9), vec![1, 1]);
        assert!(TorusGrid::with_window(1, 8, 4).is_err());
        assert!(TorusGrid::new(1, 12).is_err());
        assert!(TorusGrid::new(3, 8).is_err());
    }

    #[test]
    fn sample_examples() {
        let g = TorusGrid::with_window(1, 8, 2).unwrap();
        let one = sample::<f64>(&parse_symbol("1", 1, 1).unwrap(), &g).unwrap();
        assert!(one.values().iter().all(|z| *z == Complex::new(1.0, 0.0)));
        let b = sample::<f64>(&parse_symbol("bracket(xi)^2", 1, 1).unwrap(), &g).unwrap();
        let row: Vec<f64> = (0..5).map(|j| b.at(3, j)[0].re).collect();
        for (got, want) in row.iter().zip([5.0, 2.0, 1.0, 2.0, 5.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn seminorm_examples() {
        let g = TorusGrid::new(1, 64).unwrap();
        let c = SymbolClassParams::new(2.0, 1.0, 0.0).unwrap();
        let b = parse_symbol("bracket(xi)^2", 1, 1).unwrap();
        assert!((seminorm::<f64>(&b, &[0], &[0], c, &g).unwrap() - 1.0).abs() < 1e-13);
        let xi = g.xi_max() as f64;
        let want = 2.0 * xi / (1.0 + xi * xi).sqrt();
        assert!((seminorm::<f64>(&b, &[1], &[0], c, &g).unwrap() - want).abs() < 1e-13);
        let a = parse_symbol("(2+sin(x1))*(1+xi1^2)", 1, 1).unwrap();
        assert!((seminorm::<f64>(&a, &[0], &[1], c, &g).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn spectral_x_derivative() {
        let g = TorusGrid::new(1, 32).unwrap();
        let a = sample::<f64>(&parse_symbol("exp(sin(x1))*xi1", 1, 1).unwrap(), &g).unwrap();
        let d = a.x_derivative(&[1]);
        let exact = sample::<f64>(&parse_symbol("cos(x1)*exp(sin(x1))*xi1", 1, 1).unwrap(), &g).unwrap();
        assert!(d.max_diff(&exact, 0).unwrap() < 1e-9);
    }

    #[test]
    fn csv_export_shape() {
        let g = TorusGrid::with_window(1, 4, 1).unwrap();
        let s = sample::<f64>(&parse_symbol("[[1, xi], [0, 1]]", 1, 2).unwrap(), &g).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 * 3);
        assert!(text.starts_with("ix1,xi1,re_11,im_11,re_12"));
    }
}
