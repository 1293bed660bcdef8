//! Functions on the complement of the sector: the decaying class `H` and
//! bounded `H^inf` functions with their regularizations.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hypo::{log_space, Sector};

/// Bound on `|f_n| / |f|` for regularized `H^inf` functions.
pub const REGULARIZER_BOUND: f64 = 4.0;

const SUP_START_DENSITY: usize = 16;
const SUP_MAX_DENSITY: usize = 1024;
const SUP_RADII: (f64, f64) = (1e-12, 1e12);
const DECAY_RADII: (f64, f64) = (1e-16, 1e16);
const DECAY_DENSITY: usize = 24;
const VALIDATION_EPS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub enum HKind {
    /// `z^s / (1 + z)^{2s}`
    SPower { s: f64 },
    /// `z^{it} psi_n(z)` with `psi_n(z) = (nz / (1 + nz)) / (1 + z/n)`
    RegImagPower { t: f64, n: f64 },
    /// `z / ((mu - z)(1 + z))`, pole `mu` inside the sector
    ResolventProbe { mu: Complex64 },
    Scaled { c: Complex64, inner: Box<HKind> },
    Product(Box<HKind>, Box<HKind>),
    Sum(Box<HKind>, Box<HKind>),
}

pub fn psi(n: f64, z: Complex64) -> Complex64 {
    let nz = z * n;
    nz / (nz + 1.0) / (z / n + 1.0)
}

impl HKind {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            HKind::SPower { s } => {
                if z == Complex64::new(0.0, 0.0) {
                    return z;
                }
                (*s * z.ln() - 2.0 * *s * (z + 1.0).ln()).exp()
            }
            HKind::RegImagPower { t, n } => {
                if z == Complex64::new(0.0, 0.0) {
                    return z;
                }
                (Complex64::i() * *t * z.ln()).exp() * psi(*n, z)
            }
            HKind::ResolventProbe { mu } => z / ((*mu - z) * (z + 1.0)),
            HKind::Scaled { c, inner } => *c * inner.eval(z),
            HKind::Product(f, g) => f.eval(z) * g.eval(z),
            HKind::Sum(f, g) => f.eval(z) + g.eval(z),
        }
    }

    /// Decay exponent `d` in `|f(z)| <= c_f (|z|^d + |z|^{-d})^{-1}`.
    pub fn decay(&self) -> f64 {
        match self {
            HKind::SPower { s } => *s,
            HKind::RegImagPower { .. } | HKind::ResolventProbe { .. } => 1.0,
            HKind::Scaled { inner, .. } => inner.decay(),
            HKind::Product(f, g) => f.decay() + g.decay(),
            HKind::Sum(f, g) => f.decay().min(g.decay()),
        }
    }

    fn check(&self, sector: Sector) -> Result<()> {
        match self {
            HKind::SPower { s } if !(s.is_finite() && *s > 0.0) => {
                Err(Error::Precondition(format!("s-power needs s > 0, got {s}")))
            }
            HKind::RegImagPower { t, n } if !(t.is_finite() && n.is_finite() && *n >= 1.0) => {
                Err(Error::Precondition(format!("regularized imaginary power needs finite t and n >= 1, got t = {t}, n = {n}")))
            }
            HKind::ResolventProbe { mu } if !sector.contains(*mu) || *mu == Complex64::new(0.0, 0.0) => Err(
                Error::Precondition(format!("resolvent probe pole {mu} must lie in the sector, away from 0")),
            ),
            HKind::ResolventProbe { mu } if (mu.arg().abs() - sector.theta()).abs() < 1e-9 => {
                Err(Error::Precondition(format!("resolvent probe pole {mu} lies on the sector boundary")))
            }
            HKind::Scaled { inner, .. } => inner.check(sector),
            HKind::Product(f, g) | HKind::Sum(f, g) => {
                f.check(sector)?;
                g.check(sector)
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for HKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HKind::SPower { s } => write!(f, "spower(s={s})"),
            HKind::RegImagPower { t, n } => write!(f, "imag_power(t={t};n={n:e})"),
            HKind::ResolventProbe { mu } => write!(f, "resolvent_probe(mu={}{:+}i)", mu.re, mu.im),
            HKind::Scaled { c, inner } => write!(f, "({}{:+}i)*{inner}", c.re, c.im),
            HKind::Product(a, b) => write!(f, "{a}*{b}"),
            HKind::Sum(a, b) => write!(f, "({a}+{b})"),
        }
    }
}

fn ray_args(sector: Sector) -> [f64; 3] {
    [0.0, sector.theta(), -sector.theta()]
}

/// `max |f|` over the rays `arg z in {0, +-theta}` at `density` radii per decade.
pub fn sampled_sup(f: impl Fn(Complex64) -> Complex64, sector: Sector, density: usize) -> f64 {
    let decades = (SUP_RADII.1 / SUP_RADII.0).log10();
    let radii = log_space(SUP_RADII.0, SUP_RADII.1, (decades * density as f64) as usize + 1);
    let mut m = 0.0f64;
    for arg in ray_args(sector) {
        for &r in &radii {
            m = m.max(f(Complex64::from_polar(r, arg)).norm());
        }
    }
    m
}

/// Sampled sup norm, refined by doubling until it moves by less than 1%.
pub fn sup_norm(f: impl Fn(Complex64) -> Complex64, sector: Sector) -> Result<(f64, usize)> {
    let mut density = SUP_START_DENSITY;
    let mut prev = sampled_sup(&f, sector, density);
    while density < SUP_MAX_DENSITY {
        density *= 2;
        let next = sampled_sup(&f, sector, density);
        if !next.is_finite() {
            return Err(Error::ClassInvariant("sup norm".into()));
        }
        if (next - prev).abs() <= 0.01 * next {
            return Ok((next, density));
        }
        prev = next;
    }
    Err(Error::NoConvergence("sampled sup norm still moving at the density cap".into()))
}

/// A validated function in `H`.
#[derive(Clone, Debug)]
pub struct HFun {
    kind: HKind,
    sector: Sector,
    d: f64,
    c_f: f64,
    sup: f64,
}

impl HFun {
    pub fn new(kind: HKind, sector: Sector) -> Result<Self> {
        kind.check(sector)?;
        let d = kind.decay();
        if !(d > 0.0) {
            return Err(Error::Precondition(format!("decay exponent must be positive, got {d}")));
        }
        let weight = |z: Complex64| {
            let r = z.norm();
            r.powf(d) + r.powf(-d)
        };
        let decades = (DECAY_RADII.1 / DECAY_RADII.0).log10();
        let radii = log_space(DECAY_RADII.0, DECAY_RADII.1, (decades * DECAY_DENSITY as f64) as usize + 1);
        let th = sector.theta();
        let mut c_f = 0.0f64;
        for arg in [0.0, th, -th, 0.5 * th, -0.5 * th, th - VALIDATION_EPS, VALIDATION_EPS - th] {
            for &r in &radii {
                let z = Complex64::from_polar(r, arg);
                let v = kind.eval(z).norm() * weight(z);
                if !v.is_finite() {
                    return Err(Error::ClassInvariant(format!("{kind} at z = {z}")));
                }
                c_f = c_f.max(v);
            }
        }
        let c_f = c_f * 1.01;
        let (sup, _) = sup_norm(|z| kind.eval(z), sector)?;
        let f = Self { kind, sector, d, c_f, sup };
        f.validate()?;
        Ok(f)
    }

    pub fn s_power(s: f64, sector: Sector) -> Result<Self> {
        Self::new(HKind::SPower { s }, sector)
    }

    pub fn resolvent_probe(mu: Complex64, sector: Sector) -> Result<Self> {
        Self::new(HKind::ResolventProbe { mu }, sector)
    }

    /// Decay bound at `|z| in [1e-4, 1e4]` on `arg z in {0, +-(theta - eps)}`.
    pub fn validate(&self) -> Result<()> {
        let th = self.sector.theta();
        for arg in [0.0, th - VALIDATION_EPS, VALIDATION_EPS - th] {
            for r in log_space(1e-4, 1e4, 161) {
                let z = Complex64::from_polar(r, arg);
                let bound = self.c_f / (r.powf(self.d) + r.powf(-self.d));
                if self.eval(z).norm() > bound * (1.0 + 1e-12) {
                    return Err(Error::ClassInvariant(format!("{} violates its decay bound at z = {z}", self.kind)));
                }
            }
        }
        if !self.sup.is_finite() {
            return Err(Error::ClassInvariant(format!("sup norm of {}", self.kind)));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.kind.eval(z)
    }

    pub fn kind(&self) -> &HKind {
        &self.kind
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn decay(&self) -> f64 {
        self.d
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }

    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(HKind::Scaled { c, inner: Box::new(self.kind.clone()) }, self.sector)
    }

    pub fn product(&self, o: &Self) -> Result<Self> {
        Self::new(HKind::Product(Box::new(self.kind.clone()), Box::new(o.kind.clone())), self.sector)
    }

    pub fn sum(&self, o: &Self) -> Result<Self> {
        Self::new(HKind::Sum(Box::new(self.kind.clone()), Box::new(o.kind.clone())), self.sector)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HinfKind {
    /// `z^{it}`, principal branch
    ImagPower { t: f64 },
    /// Any function of `H`.
    Decaying(HKind),
}

/// A bounded holomorphic function with its `H` regularization `f_n = f psi_n`.
#[derive(Clone, Debug)]
pub struct HinfFun {
    kind: HinfKind,
    sector: Sector,
    sup: f64,
}

impl HinfFun {
    pub fn new(kind: HinfKind, sector: Sector) -> Result<Self> {
        let probe = Self { kind, sector, sup: 0.0 };
        let (sup, _) = sup_norm(|z| probe.eval(z), sector)?;
        Ok(Self { sup, ..probe })
    }

    pub fn imag_power(t: f64, sector: Sector) -> Result<Self> {
        Self::new(HinfKind::ImagPower { t }, sector)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            HinfKind::ImagPower { t } => {
                if z == Complex64::new(0.0, 0.0) {
                    Complex64::new(1.0, 0.0)
                } else {
                    (Complex64::i() * *t * z.ln()).exp()
                }
            }
            HinfKind::Decaying(k) => k.eval(z),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn kind(&self) -> &HinfKind {
        &self.kind
    }

    /// `f_n = f psi_n`, checked against `|f_n| <= 4 |f|`.
    pub fn regularized(&self, n: f64) -> Result<HFun> {
        let kind = match &self.kind {
            HinfKind::ImagPower { t } => HKind::RegImagPower { t: *t, n },
            HinfKind::Decaying(k) => HKind::Product(
                Box::new(k.clone()),
                Box::new(HKind::RegImagPower { t: 0.0, n }),
            ),
        };
        let f = HFun::new(kind, self.sector)?;
        if f.sup_norm() > REGULARIZER_BOUND * self.sup {
            return Err(Error::ClassInvariant(format!(
                "regularization {} exceeds {REGULARIZER_BOUND} |f|: {} > {}",
                f.label(),
                f.sup_norm(),
                self.sup
            )));
        }
        Ok(f)
    }
}
