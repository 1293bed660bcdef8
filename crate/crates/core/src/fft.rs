//! Periodic FFTs on `P^n` tensor grids (row-major, axis 0 slowest).

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

pub struct TorusFft<T: Real> {
    p: usize,
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

/// Signed frequency of bin `b` for period `p` (the Nyquist bin maps to `-p/2`).
#[inline]
pub fn signed_freq(b: usize, p: usize) -> i64 {
    if b < p / 2 {
        b as i64
    } else {
        b as i64 - p as i64
    }
}

/// Bin of signed frequency `f` modulo `p`.
#[inline]
pub fn bin_of(f: i64, p: usize) -> usize {
    f.rem_euclid(p as i64) as usize
}

impl<T: Real> TorusFft<T> {
    pub fn new(p: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { p, n, fwd: planner.plan_fft_forward(p), inv: planner.plan_fft_inverse(p) }
    }

    pub fn len(&self) -> usize {
        self.p.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn run(&self, plan: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.len());
        let p = self.p;
        plan.process(buf);
        if self.n == 2 {
            let mut col = vec![Complex::default(); p];
            for c in 0..p {
                for r in 0..p {
                    col[r] = buf[r * p + c];
                }
                plan.process(&mut col);
                for r in 0..p {
                    buf[r * p + c] = col[r];
                }
            }
        }
    }

    /// Unnormalized `sum_x u(x) e^{-i x.zeta}`.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.run(&self.fwd, buf)
    }

    /// Unnormalized `sum_zeta u(zeta) e^{+i x.zeta}`.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.run(&self.inv, buf)
    }

    /// Multi-index of a flat position.
    pub fn multi(&self, flat: usize) -> [usize; 2] {
        if self.n == 1 {
            [flat, 0]
        } else {
            [flat / self.p, flat % self.p]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_lands_in_its_bin() {
        let p = 8;
        let f = TorusFft::<f64>::new(p, 2);
        let mut buf: Vec<Complex<f64>> = (0..p * p)
            .map(|i| {
                let (a, b) = (i / p, i % p);
                let x = std::f64::consts::TAU / p as f64;
                Complex::from_polar(1.0, x * (a as f64 * 2.0 - b as f64))
            })
            .collect();
        f.forward(&mut buf);
        for (i, z) in buf.iter().enumerate() {
            let want = if i == bin_of(2, p) * p + bin_of(-1, p) { (p * p) as f64 } else { 0.0 };
            assert!((z.re - want).abs() < 1e-10 && z.im.abs() < 1e-10);
        }
        f.inverse(&mut buf);
        assert!((buf[0].re - (p * p) as f64).abs() < 1e-9);
        assert_eq!(signed_freq(5, 8), -3);
        assert_eq!(signed_freq(4, 8), -4);
    }
}
