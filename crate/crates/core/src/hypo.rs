//! Sectorial hypoellipticity: spectral check on the grid and the constants
//! of the derivative-times-resolvent bounds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use num_complex::{Complex, Complex64};
use rayon::prelude::*;

use crate::dsl::{JetSpace, SymbolExpr};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, small_inverse, small_spectral_norm};
use crate::scalar::{from_c64, to_c64, Real};
use crate::symbol::TorusGrid;

/// `Lambda(theta) = {0} ∪ {arg z in [theta, 2pi - theta]}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    theta: f64,
}

impl Sector {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta < std::f64::consts::PI {
            Ok(Self { theta })
        } else {
            Err(Error::Sector(theta))
        }
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z == Complex64::new(0.0, 0.0) || z.arg().abs() >= self.theta
    }

    /// `r e^{+i theta}` (upper ray) or `r e^{-i theta}`.
    pub fn boundary_point(&self, r: f64, upper: bool) -> Complex64 {
        Complex64::from_polar(r, if upper { self.theta } else { -self.theta })
    }

    /// `count` log-uniform radii in `[r_lo, r_hi]` on both rays, upper ray first.
    pub fn ray_samples(&self, r_lo: f64, r_hi: f64, count: usize) -> Vec<Complex64> {
        let radii = log_space(r_lo, r_hi, count);
        let mut out: Vec<Complex64> = radii.iter().map(|&r| self.boundary_point(r, true)).collect();
        out.extend(radii.iter().map(|&r| self.boundary_point(r, false)));
        out
    }
}

pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        }
    }
}

/// `Omega_{x,xi} = {z not in Lambda : |z| < 2 |a(x,xi)|}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaRegion {
    pub radius: f64,
    pub sector: Sector,
}

impl OmegaRegion {
    pub fn contains(&self, z: Complex64) -> bool {
        !self.sector.contains(z) && z.norm() < self.radius
    }
}

pub fn omega_region(a: &SymbolExpr, x: &[f64], xi: &[f64], sector: Sector) -> Result<OmegaRegion> {
    let v = a.eval(x, xi)?;
    Ok(OmegaRegion { radius: 2.0 * small_spectral_norm(&v, a.k()), sector })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub x_index: usize,
    pub xi: Vec<i64>,
    pub eigenvalue: Complex64,
}

/// Multi-index pair `(alpha, beta)`.
pub type Order = (Vec<usize>, Vec<usize>);

#[derive(Clone, Debug)]
pub struct HypoReport {
    pub pass: bool,
    pub theta: f64,
    /// Spectral-gap radius.
    pub c: f64,
    /// Frequency cutoff `C` in `|xi|`.
    pub big_c: f64,
    /// The window `|xi_d| <= Xi` the sup was taken over.
    pub xi_max: usize,
    pub min_modulus: f64,
    pub min_modulus_at: (usize, Vec<i64>),
    pub c_table: BTreeMap<Order, f64>,
    pub c0: Option<f64>,
    pub r: Option<f64>,
    pub violations: Vec<Violation>,
}

fn nodes_above(grid: &TorusGrid, big_c: f64) -> Vec<usize> {
    (0..grid.xi_count())
        .filter(|&jx| {
            let r2: i64 = grid.xi_point(jx).iter().map(|v| v * v).sum();
            (r2 as f64).sqrt() >= big_c
        })
        .collect()
}

/// Every eigenvalue of `a(x, xi)` at nodes with `|xi| >= C` must avoid
/// `Lambda ∪ {|z| <= c}`.
pub fn check_spectrum<T: Real>(a: &SymbolExpr, sector: Sector, c: f64, big_c: f64, grid: &TorusGrid) -> Result<HypoReport> {
    let k = a.k();
    if k > 4 {
        return Err(Error::Precondition(format!("spectral check supports k <= 4, got {k}")));
    }
    if a.n() != grid.n() {
        return Err(Error::Shape(format!("symbol has n = {}, grid has n = {}", a.n(), grid.n())));
    }
    let xis = nodes_above(grid, big_c);
    let per_x: Vec<(f64, (usize, Vec<i64>), Vec<Violation>)> = (0..grid.x_count())
        .into_par_iter()
        .map(|ix| -> Result<_> {
            let x: Vec<T> = grid.x_point(ix);
            let mut best = (f64::INFINITY, (ix, vec![]));
            let mut bad = Vec::new();
            for &jx in &xis {
                let v = a.eval(&x, &grid.xi_point_real::<T>(jx))?;
                for ev in eigenvalues(&v, k) {
                    let ev = to_c64(ev);
                    if ev.norm() < best.0 {
                        best = (ev.norm(), (ix, grid.xi_point(jx)));
                    }
                    if sector.contains(ev) || ev.norm() <= c {
                        bad.push(Violation { x_index: ix, xi: grid.xi_point(jx), eigenvalue: ev });
                    }
                }
            }
            Ok((best.0, best.1, bad))
        })
        .collect::<Result<_>>()?;
    let mut report = HypoReport {
        pass: true,
        theta: sector.theta(),
        c,
        big_c,
        xi_max: grid.xi_max(),
        min_modulus: f64::INFINITY,
        min_modulus_at: (0, vec![]),
        c_table: BTreeMap::new(),
        c0: None,
        r: None,
        violations: Vec::new(),
    };
    for (m, at, bad) in per_x {
        if m < report.min_modulus {
            report.min_modulus = m;
            report.min_modulus_at = at;
        }
        report.violations.extend(bad);
    }
    report.pass = report.violations.is_empty();
    Ok(report)
}

/// The default lambda set: both rays of `∂Lambda` log-uniformly in
/// `[c, 10 max|a|]` plus `lambda = 0`.
pub fn default_lambda_samples(sector: Sector, c: f64, max_abs_a: f64, per_ray: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0)];
    out.extend(sector.ray_samples(c.max(1e-8), (10.0 * max_abs_a).max(2.0 * c), per_ray));
    out
}

/// All `(alpha, beta)` with `|alpha| + |beta| <= max_order` in `n` dimensions.
pub fn orders(n: usize, max_order: usize) -> Vec<Order> {
    let space = JetSpace::new(2 * n, max_order);
    (0..space.len())
        .map(|i| {
            let g = space.multi_index(i);
            (g[..n].iter().map(|&v| v as usize).collect(), g[n..].iter().map(|&v| v as usize).collect())
        })
        .collect()
}

/// Fills `c_table` and `c0`:
/// `c_{alpha beta} = sup |d^alpha_xi d^beta_x a| |(a - lambda)^{-1}| <xi>^{rho|alpha| - delta|beta|}`
/// over nodes with `|xi| >= C` and the given lambdas, and
/// `c0 = sup <lambda> |(a - lambda)^{-1}|` over lambdas outside `Omega_{x,xi}`
/// (the given lambdas plus, per node, samples on `|lambda| in {2, 4, 8} |a|`
/// across the complement of the sector).
#[allow(clippy::too_many_arguments)]
pub fn estimate_hypo_constants<T: Real>(
    a: &SymbolExpr,
    sector: Sector,
    c: f64,
    big_c: f64,
    max_order: usize,
    grid: &TorusGrid,
    lambdas: &[Complex64],
) -> Result<HypoReport> {
    let mut report = check_spectrum::<T>(a, sector, c, big_c, grid)?;
    if !report.pass {
        return Err(Error::Precondition(format!(
            "spectral check failed with {} violations",
            report.violations.len()
        )));
    }
    if max_order > a.max_order() {
        return Err(Error::DerivativeOrder { order: max_order, max: a.max_order() });
    }
    let class = a.class().unwrap_or_default();
    let n = a.n();
    let k = a.k();
    let space = JetSpace::new(2 * n, max_order);
    let table_orders = orders(n, max_order);
    let idx: Vec<usize> = table_orders
        .iter()
        .map(|(al, be)| {
            let g: Vec<usize> = al.iter().chain(be).copied().collect();
            space.index_of(&g).expect("order within jet space")
        })
        .collect();
    let xis = nodes_above(grid, big_c);
    let arc_angles: Vec<f64> = (0..9).map(|i| -sector.theta() + 2.0 * sector.theta() * i as f64 / 8.0).collect();
    let threshold = T::epsilon().sqrt();

    let per_x: Vec<(Vec<f64>, f64)> = (0..grid.x_count())
        .into_par_iter()
        .map(|ix| -> Result<_> {
            let x: Vec<T> = grid.x_point(ix);
            let mut table = vec![0.0f64; table_orders.len()];
            let mut c0 = 0.0f64;
            let mut shifted = vec![Complex::<T>::default(); k * k];
            let mut resolvent_norm = |v: &[Complex<T>], lam: Complex64| -> Result<f64> {
                shifted.copy_from_slice(v);
                for r in 0..k {
                    shifted[r * k + r] -= from_c64::<T>(lam);
                }
                let inv = small_inverse(&shifted, k)
                    .ok_or(Error::Singular { pivot: 0.0, threshold: threshold.to_f64_lossy() })?;
                Ok(small_spectral_norm(&inv, k).to_f64_lossy())
            };
            for &jx in &xis {
                let xi: Vec<T> = grid.xi_point_real(jx);
                let jet = a.eval_jet(&space, &x, &xi)?;
                let v = jet.value().to_vec();
                let norm_a = small_spectral_norm(&v, k).to_f64_lossy();
                let mut sup_res = 0.0f64;
                for &lam in lambdas {
                    let r = resolvent_norm(&v, lam)?;
                    sup_res = sup_res.max(r);
                    c0 = c0.max((1.0 + lam.norm_sqr()).sqrt() * r);
                }
                for s in [2.0, 4.0, 8.0] {
                    for &phi in &arc_angles {
                        let lam = Complex64::from_polar(s * norm_a, phi);
                        let r = resolvent_norm(&v, lam)?;
                        c0 = c0.max((1.0 + lam.norm_sqr()).sqrt() * r);
                    }
                }
                let bracket = grid.xi_bracket(jx);
                for (t, ((al, be), &g)) in table.iter_mut().zip(table_orders.iter().zip(&idx)) {
                    let na: usize = al.iter().sum();
                    let nb: usize = be.iter().sum();
                    let d = jet.coeff(g);
                    let f = space.factorial(g);
                    let dn = small_spectral_norm(d, k).to_f64_lossy() * f;
                    let w = bracket.powf(class.rho * na as f64 - class.delta * nb as f64);
                    *t = t.max(dn * sup_res * w);
                }
            }
            Ok((table, c0))
        })
        .collect::<Result<_>>()?;
    let mut table = vec![0.0f64; table_orders.len()];
    let mut c0 = 0.0f64;
    for (t, c) in per_x {
        for (a, b) in table.iter_mut().zip(t) {
            *a = a.max(b);
        }
        c0 = c0.max(c);
    }
    report.c_table = table_orders.into_iter().zip(table).collect();
    report.c0 = Some(c0);
    Ok(report)
}

fn fmt_multi(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|e| e.to_string()).collect();
    format!("({})", parts.join(" "))
}

impl HypoReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hypoellipticity: {}", if self.pass { "pass" } else { "FAIL" });
        let _ = writeln!(s, "sector theta = {:.6}, gap c = {}, cutoff C = {}", self.theta, self.c, self.big_c);
        let _ = writeln!(
            s,
            "min |eigenvalue| = {:.6e} at x index {}, xi {:?}",
            self.min_modulus, self.min_modulus_at.0, self.min_modulus_at.1
        );
        if let Some(c0) = self.c0 {
            let _ = writeln!(s, "c0 = {c0:.6e}");
        }
        if let Some(r) = self.r {
            let _ = writeln!(s, "R = {r}");
        }
        for ((al, be), v) in &self.c_table {
            let _ = writeln!(s, "c[alpha={} beta={}] = {v:.6e}", fmt_multi(al), fmt_multi(be));
        }
        let _ = writeln!(s, "violations: {}", self.violations.len());
        let _ = writeln!(
            s,
            "note: bounds are certified only on the window |xi_d| <= {}",
            self.xi_max
        );
        s
    }

    /// Columns `kind,name,value,x_index,xi,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["kind", "name", "value", "x_index", "xi", "re", "im"])?;
        let mut scalar = |name: &str, v: f64| wr.write_record(["param", name, &format!("{v:e}"), "", "", "", ""]);
        scalar("pass", if self.pass { 1.0 } else { 0.0 })?;
        scalar("theta", self.theta)?;
        scalar("c", self.c)?;
        scalar("C", self.big_c)?;
        scalar("xi_max", self.xi_max as f64)?;
        scalar("min_modulus", self.min_modulus)?;
        if let Some(c0) = self.c0 {
            scalar("c0", c0)?;
        }
        if let Some(r) = self.r {
            scalar("R", r)?;
        }
        for ((al, be), v) in &self.c_table {
            let name = format!("alpha={} beta={}", fmt_multi(al), fmt_multi(be));
            wr.write_record(["c_table", &name, &format!("{v:e}"), "", "", "", ""])?;
        }
        for v in &self.violations {
            let xi: Vec<String> = v.xi.iter().map(|e| e.to_string()).collect();
            wr.write_record([
                "violation",
                "eigenvalue",
                "",
                &v.x_index.to_string(),
                &xi.join(" "),
                &format!("{:e}", v.eigenvalue.re),
                &format!("{:e}", v.eigenvalue.im),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_symbol, preset};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn sector_membership() {
        let s = Sector::new(FRAC_PI_2).unwrap();
        assert!(s.contains(Complex64::new(-1.0, 0.0)));
        assert!(s.contains(Complex64::new(0.0, 0.0)));
        assert!(s.contains(Complex64::new(0.0, 2.0)));
        assert!(!s.contains(Complex64::new(1e-300, 0.0)));
        assert!(!s.contains(Complex64::new(1.0, 1.0)));
        assert!(Sector::new(0.0).is_err() && Sector::new(std::f64::consts::PI).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let g = TorusGrid::new(1, 32).unwrap();
        let s = Sector::new(FRAC_PI_2).unwrap();
        let b = preset("bracket_power 2", 1).unwrap();
        assert!(check_spectrum::<f64>(&b, s, 0.5, 0.0, &g).unwrap().pass);
        let nb = preset("-bracket_power 2", 1).unwrap();
        let r = check_spectrum::<f64>(&nb, s, 0.5, 0.0, &g).unwrap();
        assert!(!r.pass);
        assert!(r.violations.iter().all(|v| v.eigenvalue.re < 0.0 && v.eigenvalue.im == 0.0));

        let a = preset("variable_laplace", 1).unwrap();
        let g = TorusGrid::new(1, 128).unwrap();
        let r = check_spectrum::<f64>(&a, Sector::new(FRAC_PI_4).unwrap(), 0.5, 0.0, &g).unwrap();
        assert!(r.pass);
        assert!((r.min_modulus - 1.0).abs() < 1e-12);
        assert_eq!(r.min_modulus_at, (96, vec![0]));
    }

    #[test]
    fn constants_for_bracket_squared() {
        let g = TorusGrid::new(1, 64).unwrap();
        let s = Sector::new(FRAC_PI_2).unwrap();
        let b = preset("bracket_power 2", 1).unwrap();
        let max_a = 1.0 + (g.xi_max() as f64).powi(2);
        let lams = default_lambda_samples(s, 0.5, max_a, 40);
        let r = estimate_hypo_constants::<f64>(&b, s, 0.5, 0.0, 2, &g, &lams).unwrap();
        assert!((r.c_table[&(vec![0], vec![0])] - 1.0).abs() < 1e-12);
        let c1 = r.c_table[&(vec![1], vec![0])];
        assert!(c1 <= 2.0 && c1 > 1.9, "{c1}");
        assert_eq!(r.c_table[&(vec![0], vec![1])], 0.0);
        assert!(r.c0.unwrap().is_finite());
    }

    #[test]
    fn resolvent_outside_big_disc_is_dominated() {
        // |lambda| >= 2|a| implies |(a - lambda)^{-1}| <= |a^{-1}|
        let a = parse_symbol("[[2 + sin(x1), xi1], [0.5, 3 + xi1^2]]", 1, 2).unwrap();
        for (x, xi) in [(0.3, 0.0), (1.0, 2.0), (4.0, -5.0)] {
            let v = a.eval(&[x], &[xi]).unwrap();
            let na = small_spectral_norm(&v, 2);
            let inv_a = small_spectral_norm(&small_inverse(&v, 2).unwrap(), 2);
            for phi in [0.0, 1.0, 2.5, -2.0] {
                let lam = Complex64::from_polar(2.0 * na * 1.01, phi);
                let mut m = v.clone();
                m[0] -= lam;
                m[3] -= lam;
                let r = small_spectral_norm(&small_inverse(&m, 2).unwrap(), 2);
                assert!(r <= inv_a * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn omega_examples() {
        let s = Sector::new(FRAC_PI_2).unwrap();
        let b = preset("bracket_power 2", 1).unwrap();
        assert!((omega_region(&b, &[0.0], &[0.0], s).unwrap().radius - 2.0).abs() < 1e-15);
        let o = omega_region(&b, &[0.0], &[1.0], s).unwrap();
        assert!((o.radius - 4.0).abs() < 1e-14);
        assert!(!o.contains(Complex64::new(-1.0, 0.0)));
        assert!(o.contains(Complex64::new(1.0, 0.0)));
    }
}
