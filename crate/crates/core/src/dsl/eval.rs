use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};

use super::ast::{Func, Node};
use super::jet::{Jet, JetSpace};
use crate::error::{Error, Result};
use crate::scalar::{from_c64, Real};

/// Value arithmetic the evaluator is generic over.
pub(crate) trait Domain<T: Real> {
    type V: Clone;
    fn constant(&self, c: Complex<T>) -> Self::V;
    fn x(&self, j: usize) -> Self::V;
    fn xi(&self, j: usize) -> Self::V;
    fn value(&self, v: &Self::V) -> Complex<T>;
    fn add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn sub(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn mul(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn div(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn neg(&self, a: &Self::V) -> Self::V;
    fn powi(&self, a: &Self::V, e: i32) -> Self::V;
    fn powc(&self, a: &Self::V, p: Complex<T>) -> Self::V;
    fn exp(&self, a: &Self::V) -> Self::V;
    fn log(&self, a: &Self::V) -> Self::V;
    fn sin(&self, a: &Self::V) -> Self::V;
    fn cos(&self, a: &Self::V) -> Self::V;
}

pub(crate) struct PointDomain<'a, T> {
    pub x: &'a [T],
    pub xi: &'a [T],
}

fn powi_c<T: Real>(z: Complex<T>, e: i32) -> Complex<T> {
    let mut base = z;
    let mut n = e.unsigned_abs();
    let mut acc = Complex::one();
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base = base * base;
        }
    }
    if e < 0 {
        Complex::<T>::one() / acc
    } else {
        acc
    }
}

impl<T: Real> Domain<T> for PointDomain<'_, T> {
    type V = Complex<T>;
    fn constant(&self, c: Complex<T>) -> Complex<T> {
        c
    }
    fn x(&self, j: usize) -> Complex<T> {
        Complex::new(self.x[j], T::zero())
    }
    fn xi(&self, j: usize) -> Complex<T> {
        Complex::new(self.xi[j], T::zero())
    }
    fn value(&self, v: &Complex<T>) -> Complex<T> {
        *v
    }
    fn add(&self, a: &Complex<T>, b: &Complex<T>) -> Complex<T> {
        a + b
    }
    fn sub(&self, a: &Complex<T>, b: &Complex<T>) -> Complex<T> {
        a - b
    }
    fn mul(&self, a: &Complex<T>, b: &Complex<T>) -> Complex<T> {
        a * b
    }
    fn div(&self, a: &Complex<T>, b: &Complex<T>) -> Complex<T> {
        a / b
    }
    fn neg(&self, a: &Complex<T>) -> Complex<T> {
        -a
    }
    fn powi(&self, a: &Complex<T>, e: i32) -> Complex<T> {
        powi_c(*a, e)
    }
    fn powc(&self, a: &Complex<T>, p: Complex<T>) -> Complex<T> {
        if p.im.is_zero() {
            a.powf(p.re)
        } else {
            a.powc(p)
        }
    }
    fn exp(&self, a: &Complex<T>) -> Complex<T> {
        a.exp()
    }
    fn log(&self, a: &Complex<T>) -> Complex<T> {
        a.ln()
    }
    fn sin(&self, a: &Complex<T>) -> Complex<T> {
        a.sin()
    }
    fn cos(&self, a: &Complex<T>) -> Complex<T> {
        a.cos()
    }
}

/// Jets in `2n` variables: `xi_j` is variable `j`, `x_j` is variable `n + j`.
pub(crate) struct JetDomain<'a, T> {
    pub space: &'a Arc<JetSpace>,
    pub x: &'a [T],
    pub xi: &'a [T],
}

impl<T: Real> JetDomain<'_, T> {
    fn taylor(&self, f: impl FnMut(usize) -> Complex<T>) -> Vec<Complex<T>> {
        (0..=self.space.order()).map(f).collect()
    }
}

fn inv_factorial<T: Real>(k: usize) -> T {
    T::lit(1.0 / (1..=k).map(|i| i as f64).product::<f64>())
}

impl<T: Real> Domain<T> for JetDomain<'_, T> {
    type V = Jet<T>;
    fn constant(&self, c: Complex<T>) -> Jet<T> {
        Jet::constant(self.space, c)
    }
    fn x(&self, j: usize) -> Jet<T> {
        Jet::variable(self.space, self.xi.len() + j, self.x[j])
    }
    fn xi(&self, j: usize) -> Jet<T> {
        Jet::variable(self.space, j, self.xi[j])
    }
    fn value(&self, v: &Jet<T>) -> Complex<T> {
        v.value()
    }
    fn add(&self, a: &Jet<T>, b: &Jet<T>) -> Jet<T> {
        a.add(b)
    }
    fn sub(&self, a: &Jet<T>, b: &Jet<T>) -> Jet<T> {
        a.sub(b)
    }
    fn mul(&self, a: &Jet<T>, b: &Jet<T>) -> Jet<T> {
        a.mul(b)
    }
    fn div(&self, a: &Jet<T>, b: &Jet<T>) -> Jet<T> {
        a.div(b)
    }
    fn neg(&self, a: &Jet<T>) -> Jet<T> {
        a.neg()
    }
    fn powi(&self, a: &Jet<T>, e: i32) -> Jet<T> {
        let p = a.powu(e.unsigned_abs());
        if e < 0 {
            p.recip()
        } else {
            p
        }
    }
    fn powc(&self, a: &Jet<T>, p: Complex<T>) -> Jet<T> {
        let u0 = a.value();
        let head = if p.im.is_zero() { u0.powf(p.re) } else { u0.powc(p) };
        let inv = Complex::<T>::one() / u0;
        let mut coef = head;
        let t = self.taylor(|k| {
            if k > 0 {
                coef = coef * (p - T::lit((k - 1) as f64)) * inv / T::lit(k as f64);
            }
            coef
        });
        a.compose(&t)
    }
    fn exp(&self, a: &Jet<T>) -> Jet<T> {
        let e = a.value().exp();
        a.compose(&self.taylor(|k| e * inv_factorial::<T>(k)))
    }
    fn log(&self, a: &Jet<T>) -> Jet<T> {
        let u0 = a.value();
        let inv = Complex::<T>::one() / u0;
        a.compose(&self.taylor(|k| {
            if k == 0 {
                u0.ln()
            } else {
                let s = if k % 2 == 1 { T::one() } else { -T::one() };
                powi_c(inv, k as i32) * (s / T::lit(k as f64))
            }
        }))
    }
    fn sin(&self, a: &Jet<T>) -> Jet<T> {
        let (s, c) = (a.value().sin(), a.value().cos());
        a.compose(&self.taylor(|k| {
            let d = match k % 4 {
                0 => s,
                1 => c,
                2 => -s,
                _ => -c,
            };
            d * inv_factorial::<T>(k)
        }))
    }
    fn cos(&self, a: &Jet<T>) -> Jet<T> {
        let (s, c) = (a.value().sin(), a.value().cos());
        a.compose(&self.taylor(|k| {
            let d = match k % 4 {
                0 => c,
                1 => -s,
                2 => -c,
                _ => s,
            };
            d * inv_factorial::<T>(k)
        }))
    }
}

fn on_cut<T: Real>(z: Complex<T>) -> bool {
    z.is_zero() || (z.im.abs() <= T::epsilon() * T::lit(64.0) * z.norm() && z.re < T::zero())
}

pub(crate) struct Evaluator<'d, T: Real, D: Domain<T>> {
    pub dom: &'d D,
    pub x: &'d [T],
    pub xi: &'d [T],
}

impl<T: Real, D: Domain<T>> Evaluator<'_, T, D> {
    fn cut(&self, func: &'static str) -> Error {
        Error::BranchCut {
            func,
            x: self.x.iter().map(|v| v.to_f64_lossy()).collect(),
            xi: self.xi.iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    fn non_finite(&self) -> Error {
        Error::NonFinite {
            x: self.x.iter().map(|v| v.to_f64_lossy()).collect(),
            xi: self.xi.iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    fn sqrt_of(&self, u: &D::V, func: &'static str) -> Result<D::V> {
        if on_cut(self.dom.value(u)) {
            return Err(self.cut(func));
        }
        Ok(self.dom.powc(u, Complex::new(T::lit(0.5), T::zero())))
    }

    pub fn eval(&self, node: &Node) -> Result<D::V> {
        let d = self.dom;
        Ok(match node {
            Node::Const(c) => d.constant(from_c64(*c)),
            Node::X(j) => d.x(*j),
            Node::Xi(j) => d.xi(*j),
            Node::BracketXi => {
                let mut s = d.constant(Complex::one());
                for j in 0..self.xi.len() {
                    let v = d.xi(j);
                    s = d.add(&s, &d.mul(&v, &v));
                }
                d.powc(&s, Complex::new(T::lit(0.5), T::zero()))
            }
            Node::Neg(a) => d.neg(&self.eval(a)?),
            Node::Add(a, b) => d.add(&self.eval(a)?, &self.eval(b)?),
            Node::Sub(a, b) => d.sub(&self.eval(a)?, &self.eval(b)?),
            Node::Mul(a, b) => d.mul(&self.eval(a)?, &self.eval(b)?),
            Node::Div(a, b) => {
                let den = self.eval(b)?;
                if d.value(&den).is_zero() {
                    return Err(self.non_finite());
                }
                d.div(&self.eval(a)?, &den)
            }
            Node::Pow(a, p) => {
                let base = self.eval(a)?;
                match p.fold_const() {
                    Some(c) if c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= 64.0 => {
                        let e = c.re as i32;
                        if e < 0 && d.value(&base).is_zero() {
                            return Err(self.non_finite());
                        }
                        d.powi(&base, e)
                    }
                    Some(c) => {
                        if on_cut(d.value(&base)) {
                            return Err(self.cut("pow"));
                        }
                        d.powc(&base, from_c64(c))
                    }
                    None => {
                        if on_cut(d.value(&base)) {
                            return Err(self.cut("pow"));
                        }
                        let e = self.eval(p)?;
                        d.exp(&d.mul(&e, &d.log(&base)))
                    }
                }
            }
            Node::Call(f, a) => {
                let u = self.eval(a)?;
                match f {
                    Func::Sin => d.sin(&u),
                    Func::Cos => d.cos(&u),
                    Func::Exp => d.exp(&u),
                    Func::Log => {
                        if on_cut(d.value(&u)) {
                            return Err(self.cut("log"));
                        }
                        d.log(&u)
                    }
                    Func::Sqrt => self.sqrt_of(&u, "sqrt")?,
                    Func::Bracket => {
                        let w = d.add(&d.constant(Complex::one()), &d.mul(&u, &u));
                        self.sqrt_of(&w, "bracket")?
                    }
                }
            }
        })
    }

    /// Evaluates and checks the result is finite.
    pub fn eval_checked(&self, node: &Node) -> Result<D::V> {
        let v = self.eval(node)?;
        let z = self.dom.value(&v);
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(self.non_finite());
        }
        Ok(v)
    }
}
