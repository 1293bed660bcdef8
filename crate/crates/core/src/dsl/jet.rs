//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A jet stores normalized coefficients `c_g = d^g f / g!` for all multi-indices
//! `|g| <= order`. Products are truncated convolutions, so every rule of
//! differentiation (product rule, chain rule, inverse rule) is applied exactly.
//! Differentiating a jet lowers its *valid* order by one; callers track that.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::linalg::small_inverse;
use crate::scalar::Real;

/// Index bookkeeping for jets in `nvars` variables truncated at `order`.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    index: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    mul_pairs: Vec<Vec<(u32, u32)>>,
    shift: Vec<Vec<Option<usize>>>,
    factorial: Vec<f64>,
}

fn enumerate(nvars: usize, order: usize) -> Vec<Vec<u8>> {
    fn rec(prefix: &mut Vec<u8>, left: usize, remaining_vars: usize, out: &mut Vec<Vec<u8>>) {
        if remaining_vars == 0 {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for v in (0..=left).rev() {
            prefix.push(v as u8);
            rec(prefix, left - v, remaining_vars - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for deg in 0..=order {
        rec(&mut Vec::new(), deg, nvars, &mut out);
    }
    out
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let index = enumerate(nvars, order);
        let lookup: HashMap<Vec<u8>, usize> =
            index.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        let mul_pairs = index
            .iter()
            .map(|g| {
                let mut pairs = Vec::new();
                for (i, b) in index.iter().enumerate() {
                    if b.iter().zip(g).all(|(x, y)| x <= y) {
                        let rest: Vec<u8> = g.iter().zip(b).map(|(y, x)| y - x).collect();
                        pairs.push((i as u32, lookup[&rest] as u32));
                    }
                }
                pairs
            })
            .collect();
        let shift = (0..nvars)
            .map(|v| {
                index
                    .iter()
                    .map(|g| {
                        let mut h = g.clone();
                        h[v] += 1;
                        lookup.get(&h).copied()
                    })
                    .collect()
            })
            .collect();
        let factorial = index
            .iter()
            .map(|g| g.iter().map(|&e| (1..=e as u64).product::<u64>() as f64).product())
            .collect();
        Arc::new(Self { nvars, order, index, lookup, mul_pairs, shift, factorial })
    }

    #[inline]
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.index.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index_of(&self, multi: &[usize]) -> Option<usize> {
        if multi.len() != self.nvars {
            return None;
        }
        let key: Vec<u8> = multi.iter().map(|&e| e as u8).collect();
        self.lookup.get(&key).copied()
    }

    pub fn multi_index(&self, idx: usize) -> &[u8] {
        &self.index[idx]
    }

    #[inline]
    pub fn factorial(&self, idx: usize) -> f64 {
        self.factorial[idx]
    }
}

/// Scalar complex jet.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    space: Arc<JetSpace>,
    c: Vec<Complex<T>>,
}

impl<T: Real> Jet<T> {
    pub fn constant(space: &Arc<JetSpace>, v: Complex<T>) -> Self {
        let mut c = vec![Complex::zero(); space.len()];
        c[0] = v;
        Self { space: space.clone(), c }
    }

    /// The coordinate function `var` evaluated at `at`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, at: T) -> Self {
        let mut j = Self::constant(space, Complex::new(at, T::zero()));
        if space.order >= 1 {
            let mut e = vec![0usize; space.nvars];
            e[var] = 1;
            let i = space.index_of(&e).expect("first-order index");
            j.c[i] = Complex::one();
        }
        j
    }

    #[inline]
    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    #[inline]
    pub fn value(&self) -> Complex<T> {
        self.c[0]
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.c
    }

    /// `d^g f` at the expansion point.
    pub fn partial(&self, multi: &[usize]) -> Option<Complex<T>> {
        let i = self.space.index_of(multi)?;
        Some(self.c[i] * T::lit(self.space.factorial(i)))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { space: self.space.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { space: self.space.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }

    pub fn neg(&self) -> Self {
        Self { space: self.space.clone(), c: self.c.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { space: self.space.clone(), c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn add_const(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let c = self
            .space
            .mul_pairs
            .iter()
            .map(|pairs| {
                pairs
                    .iter()
                    .fold(Complex::zero(), |s, &(i, j)| s + self.c[i as usize] * o.c[j as usize])
            })
            .collect();
        Self { space: self.space.clone(), c }
    }

    pub fn recip(&self) -> Self {
        let inv0 = Complex::<T>::one() / self.c[0];
        let mut r = vec![Complex::zero(); self.c.len()];
        r[0] = inv0;
        for g in 1..self.c.len() {
            let mut acc = Complex::<T>::zero();
            for &(i, j) in &self.space.mul_pairs[g] {
                if i != 0 {
                    acc += self.c[i as usize] * r[j as usize];
                }
            }
            r[g] = -acc * inv0;
        }
        Self { space: self.space.clone(), c: r }
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }

    /// `f(self)` given the normalized Taylor coefficients `f^(k)(u0) / k!`
    /// of `f` at `u0 = self.value()`, `k = 0..=order`.
    pub fn compose(&self, taylor: &[Complex<T>]) -> Self {
        let d = self.space.order;
        assert!(taylor.len() > d);
        let mut h = self.clone();
        h.c[0] = Complex::zero();
        let mut res = Self::constant(&self.space, taylor[d]);
        for k in (0..d).rev() {
            res = res.mul(&h).add_const(taylor[k]);
        }
        res
    }

    /// Non-negative integer power by repeated squaring.
    pub fn powu(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(&self.space, Complex::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `d/d var`; the result is valid to one order less than `self`.
    pub fn derivative(&self, var: usize) -> Self {
        let shift = &self.space.shift[var];
        let c = (0..self.c.len())
            .map(|i| match shift[i] {
                Some(s) => {
                    let e = self.space.index[i][var] as f64 + 1.0;
                    self.c[s] * T::lit(e)
                }
                None => Complex::zero(),
            })
            .collect();
        Self { space: self.space.clone(), c }
    }
}

/// Jet with `k x k` matrix coefficients (non-commutative products).
#[derive(Clone, Debug)]
pub struct MatJet<T> {
    space: Arc<JetSpace>,
    k: usize,
    c: Vec<Complex<T>>,
}

#[inline]
fn mat_mul_acc<T: Real>(acc: &mut [Complex<T>], a: &[Complex<T>], b: &[Complex<T>], k: usize) {
    if k == 1 {
        acc[0] += a[0] * b[0];
        return;
    }
    for r in 0..k {
        for l in 0..k {
            let x = a[r * k + l];
            if x.is_zero() {
                continue;
            }
            for s in 0..k {
                acc[r * k + s] += x * b[l * k + s];
            }
        }
    }
}

impl<T: Real> MatJet<T> {
    pub fn zeros(space: &Arc<JetSpace>, k: usize) -> Self {
        Self { space: space.clone(), k, c: vec![Complex::zero(); space.len() * k * k] }
    }

    /// Assembles a matrix jet from `k^2` scalar entry jets (row-major).
    pub fn from_entries(entries: &[Jet<T>], k: usize) -> Self {
        assert_eq!(entries.len(), k * k);
        let space = entries[0].space.clone();
        let n = space.len();
        let mut c = vec![Complex::zero(); n * k * k];
        for (e, jet) in entries.iter().enumerate() {
            for g in 0..n {
                c[g * k * k + e] = jet.c[g];
            }
        }
        Self { space, k, c }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Value matrix (row-major `k x k`).
    #[inline]
    pub fn value(&self) -> &[Complex<T>] {
        &self.c[..self.k * self.k]
    }

    /// `d^g` of the matrix at the expansion point.
    pub fn partial(&self, multi: &[usize]) -> Option<Vec<Complex<T>>> {
        let i = self.space.index_of(multi)?;
        let kk = self.k * self.k;
        let f = T::lit(self.space.factorial(i));
        Some(self.c[i * kk..(i + 1) * kk].iter().map(|z| z * f).collect())
    }

    /// Coefficient block of multi-index position `idx` (normalized).
    #[inline]
    pub fn coeff(&self, idx: usize) -> &[Complex<T>] {
        let kk = self.k * self.k;
        &self.c[idx * kk..(idx + 1) * kk]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { space: self.space.clone(), k: self.k, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn add_assign(&mut self, o: &Self) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += b;
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { space: self.space.clone(), k: self.k, c: self.c.iter().map(|a| a * s).collect() }
    }

    /// `self - lambda I`.
    pub fn shift_diag(&self, lambda: Complex<T>) -> Self {
        let mut out = self.clone();
        for r in 0..self.k {
            out.c[r * self.k + r] -= lambda;
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let k = self.k;
        let kk = k * k;
        let mut c = vec![Complex::zero(); self.c.len()];
        for (g, pairs) in self.space.mul_pairs.iter().enumerate() {
            let out = &mut c[g * kk..(g + 1) * kk];
            for &(i, j) in pairs {
                let (i, j) = (i as usize, j as usize);
                mat_mul_acc(out, &self.c[i * kk..(i + 1) * kk], &o.c[j * kk..(j + 1) * kk], k);
            }
        }
        Self { space: self.space.clone(), k, c }
    }

    /// Inverse jet; `None` when the value matrix is singular.
    pub fn inverse(&self) -> Option<Self> {
        let k = self.k;
        let kk = k * k;
        let n = self.space.len();
        let x0 = small_inverse(self.value(), k)?;
        let mut x = vec![Complex::zero(); n * kk];
        x[..kk].copy_from_slice(&x0);
        let mut acc = vec![Complex::zero(); kk];
        let mut tmp = vec![Complex::zero(); kk];
        for g in 1..n {
            acc.iter_mut().for_each(|z| *z = Complex::zero());
            for &(i, j) in &self.space.mul_pairs[g] {
                let (i, j) = (i as usize, j as usize);
                if i != 0 {
                    let (a, b) = (&self.c[i * kk..(i + 1) * kk], &x[j * kk..(j + 1) * kk]);
                    mat_mul_acc(&mut acc, a, b, k);
                }
            }
            tmp.iter_mut().for_each(|z| *z = Complex::zero());
            mat_mul_acc(&mut tmp, &x0, &acc, k);
            for (dst, t) in x[g * kk..(g + 1) * kk].iter_mut().zip(&tmp) {
                *dst = -t;
            }
        }
        Some(Self { space: self.space.clone(), k, c: x })
    }

    pub fn derivative(&self, var: usize) -> Self {
        let kk = self.k * self.k;
        let shift = &self.space.shift[var];
        let mut c = vec![Complex::zero(); self.c.len()];
        for i in 0..self.space.len() {
            if let Some(s) = shift[i] {
                let e = T::lit(self.space.index[i][var] as f64 + 1.0);
                for r in 0..kk {
                    c[i * kk + r] = self.c[s * kk + r] * e;
                }
            }
        }
        Self { space: self.space.clone(), k: self.k, c }
    }

    /// Applies `d^counts` (one count per variable).
    pub fn derivative_multi(&self, counts: &[usize]) -> Self {
        let mut out = self.clone();
        for (var, &m) in counts.iter().enumerate() {
            for _ in 0..m {
                out = out.derivative(var);
            }
        }
        out
    }
}
