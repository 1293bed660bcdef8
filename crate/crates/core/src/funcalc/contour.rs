//! Truncated boundary contour of the sector with composite Gauss-Legendre
//! quadrature in `u = ln r`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use super::hfun::{HFun, HKind};
use crate::error::{Error, Result};
use crate::hypo::{log_space, Sector};

pub const DEFAULT_PROBES: [f64; 4] = [0.5, 1.0, 4.0, 20.0];
const DEFAULT_MAX_NODES: usize = 40_000;

/// A quadrature node: `f(A) ~ sum_q weight_q f(lambda_q) (A - lambda_q)^{-1}`.
/// The weight carries `i / 2pi`, `d lambda` and the orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourNode {
    pub lambda: Complex64,
    pub weight: Complex64,
}

#[derive(Clone, Debug)]
pub struct ContourSpec {
    pub sector: Sector,
    pub d: f64,
    pub c_f: f64,
    /// `sup (1 + |lambda|) |(A - lambda)^{-1}|` over the boundary.
    pub c0: f64,
    pub tol: f64,
    /// Points on the positive axis for the Cauchy test.
    pub probes: Vec<f64>,
    /// Functions for the doubling test; `z^d / (1 + z)^{2d}` when empty.
    pub test_fns: Vec<HFun>,
    pub initial_npd: usize,
    pub max_nodes: usize,
    pub radii: Option<(f64, f64)>,
    /// Multiplier on the certified nodes per panel.
    pub density: usize,
    /// `(d, c_f)` per family member; the radii cover each of them.
    pub members: Vec<(f64, f64)>,
}

impl ContourSpec {
    pub fn new(sector: Sector, d: f64, tol: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Precondition(format!("decay exponent must be positive, got {d}")));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self {
            sector,
            d,
            c_f: 1.0,
            c0: 1.0,
            tol,
            probes: DEFAULT_PROBES.to_vec(),
            test_fns: Vec::new(),
            initial_npd: 4,
            max_nodes: DEFAULT_MAX_NODES,
            radii: None,
            density: 1,
            members: Vec::new(),
        })
    }

    /// Spec covering every member of `fns`: smallest `d`, largest `c_f`.
    pub fn for_family(sector: Sector, fns: &[HFun], tol: f64) -> Result<Self> {
        if fns.is_empty() {
            return Err(Error::Precondition("empty function family".into()));
        }
        let d = fns.iter().map(HFun::decay).fold(f64::INFINITY, f64::min);
        let c_f = fns.iter().map(HFun::c_f).fold(0.0, f64::max);
        let mut s = Self::new(sector, d, tol)?;
        s.c_f = c_f;
        s.test_fns = fns.to_vec();
        s.members = fns.iter().map(|f| (f.decay(), f.c_f())).collect();
        Ok(s)
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn with_probes(mut self, probes: impl IntoIterator<Item = f64>) -> Self {
        self.probes.extend(probes);
        self
    }

    pub fn with_radii(mut self, r_min: f64, r_max: f64) -> Self {
        self.radii = Some((r_min, r_max));
        self
    }

    pub fn with_initial_npd(mut self, npd: usize) -> Self {
        self.initial_npd = npd.max(1);
        self
    }

    /// The reference contour: `tol / 10`, its own radii, four times the density.
    pub fn oracle(&self) -> Self {
        Self { tol: self.tol / 10.0, radii: None, density: self.density * 4, ..self.clone() }
    }

    fn probe_c0(&self) -> f64 {
        let mut c0 = 0.0f64;
        for &z0 in &self.probes {
            for r in log_space(1e-8, 1e8, 321) {
                for upper in [true, false] {
                    let l = self.sector.boundary_point(r, upper);
                    c0 = c0.max((1.0 + r) / (z0 - l).norm());
                }
            }
        }
        c0
    }

    fn member_list(&self) -> Vec<(f64, f64)> {
        if self.members.is_empty() {
            vec![(self.d, self.c_f)]
        } else {
            self.members.clone()
        }
    }

    /// `r_max` and `r_min` with each omitted piece below `tol / 4` for every member.
    pub fn truncation(&self, c0: f64) -> (f64, f64) {
        let mut r_min = f64::INFINITY;
        let mut r_max = 0.0f64;
        for (d, c_f) in self.member_list() {
            let k = c_f * c0;
            r_max = r_max.max((4.0 * k / (d * PI * self.tol)).powf(1.0 / d));
            r_min = r_min.min((self.tol * (d + 1.0) * PI / (4.0 * k)).powf(1.0 / (d + 1.0)));
        }
        (r_min, r_max)
    }

    /// Omitted pieces near 0 (`c_f c0 r_min^d`) and beyond `r_max`.
    pub fn omitted(&self, c0: f64, r_min: f64, r_max: f64) -> (f64, f64) {
        let mut head = 0.0f64;
        let mut tail = 0.0f64;
        for (d, c_f) in self.member_list() {
            let k = c_f * c0;
            head = head.max(k * r_min.powf(d));
            tail = tail.max(k * r_max.powf(-d) / (d * PI));
        }
        (head, tail)
    }
}

#[derive(Clone, Debug)]
pub struct Contour {
    spec: ContourSpec,
    pub r_min: f64,
    pub r_max: f64,
    /// Largest per-panel node count.
    pub nodes_per_decade: usize,
    /// Nodes per ray in each decade-wide panel.
    pub panel_nodes: Vec<usize>,
    pub nodes: Vec<ContourNode>,
    pub c0: f64,
    /// Bound on the omitted piece near 0, `c_f c0 r_min^d`.
    pub head_bound: f64,
    /// Bound on the omitted tails beyond `r_max`.
    pub tail_bound: f64,
    /// Summed per-panel change of the Cauchy test under doubling.
    pub doubling_change: f64,
    /// Largest Cauchy test error `|Q f(z0) - f(z0)|`.
    pub cauchy_error: f64,
}

/// One decade-wide panel in `u = ln r`.
#[derive(Clone, Copy, Debug)]
struct Panel {
    u0: f64,
    h: f64,
}

fn panels(r_min: f64, r_max: f64) -> Vec<Panel> {
    let count = ((r_max / r_min).log10().ceil() as usize).max(1);
    let (u0, u1) = (r_min.ln(), r_max.ln());
    let h = (u1 - u0) / count as f64;
    (0..count).map(|p| Panel { u0: u0 + p as f64 * h, h }).collect()
}

/// Nodes of one panel on both rays: the upper ray runs inward, the lower outward.
fn panel_nodes(sector: Sector, panel: Panel, npd: usize) -> (Vec<ContourNode>, Vec<ContourNode>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(npd).expect("npd >= 1"));
    let c = Complex64::new(0.0, 0.5 / PI);
    let up = Complex64::from_polar(1.0, sector.theta());
    let down = Complex64::from_polar(1.0, -sector.theta());
    let mut upper = Vec::with_capacity(npd);
    let mut lower = Vec::with_capacity(npd);
    for &(x, w) in rule.as_node_weight_pairs() {
        let r = (panel.u0 + 0.5 * panel.h * (x + 1.0)).exp();
        let w = 0.5 * panel.h * w;
        upper.push(ContourNode { lambda: up * r, weight: -c * up * r * w });
        lower.push(ContourNode { lambda: down * r, weight: c * down * r * w });
    }
    (upper, lower)
}

/// Upper ray nodes in increasing `r`, then lower ray nodes.
fn make_nodes(sector: Sector, panels: &[Panel], npd: &[usize]) -> Vec<ContourNode> {
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (p, &n) in panels.iter().zip(npd) {
        let (u, l) = panel_nodes(sector, *p, n);
        upper.extend(u);
        lower.extend(l);
    }
    upper.extend(lower);
    upper
}

type TestFn<'a> = Box<dyn Fn(Complex64) -> Complex64 + 'a>;

fn panel_tests(sector: Sector, panel: Panel, npd: usize, fns: &[TestFn<'_>], probes: &[f64]) -> Vec<Complex64> {
    let (mut nodes, lower) = panel_nodes(sector, panel, npd);
    nodes.extend(lower);
    let mut out = Vec::with_capacity(fns.len() * probes.len());
    for f in fns {
        for &z0 in probes {
            out.push(nodes.iter().map(|n| n.weight * f(n.lambda) / (z0 - n.lambda)).sum());
        }
    }
    out
}

impl Contour {
    /// Radii from the tail bounds, then per panel the smallest node count
    /// (doubling from `initial_npd`) whose doubling moves every Cauchy test
    /// by less than `tol / (4 panels)`.
    pub fn build(spec: ContourSpec) -> Result<Self> {
        let c0 = spec.c0.max(spec.probe_c0());
        let (r_min, r_max) = match spec.radii {
            Some((lo, hi)) => {
                if !(lo > 0.0 && hi.is_finite()) {
                    return Err(Error::Contour(format!("invalid truncation radii [{lo}, {hi}]")));
                }
                (lo, hi)
            }
            None => spec.truncation(c0),
        };
        if r_min > r_max {
            return Err(Error::Contour(format!("r_min = {r_min} exceeds r_max = {r_max}")));
        }
        let test_fns = spec.test_fns.clone();
        let fns: Vec<TestFn<'_>> = if test_fns.is_empty() {
            let k = HKind::SPower { s: spec.d };
            vec![Box::new(move |z| k.eval(z))]
        } else {
            test_fns.iter().map(|f| Box::new(move |z| f.eval(z)) as TestFn<'_>).collect()
        };
        let panels = panels(r_min, r_max);
        let per_panel = spec.tol / (4.0 * panels.len() as f64);
        let density = spec.density.max(1);
        let budget_err = || {
            Error::Contour(format!(
                "tolerance {} unreachable within {} nodes ({} panels)",
                spec.tol,
                spec.max_nodes,
                panels.len()
            ))
        };
        let mut npds = Vec::with_capacity(panels.len());
        let mut change = 0.0;
        for &panel in &panels {
            let mut npd = spec.initial_npd;
            let mut q1 = panel_tests(spec.sector, panel, npd, &fns, &spec.probes);
            loop {
                if 4 * npd * density > spec.max_nodes {
                    return Err(budget_err());
                }
                let q2 = panel_tests(spec.sector, panel, 2 * npd, &fns, &spec.probes);
                let c = q1.iter().zip(&q2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                if c < per_panel {
                    change += c;
                    break;
                }
                npd *= 2;
                q1 = q2;
            }
            npds.push(npd * density);
        }
        if 2 * npds.iter().sum::<usize>() > spec.max_nodes {
            return Err(budget_err());
        }
        let nodes = make_nodes(spec.sector, &panels, &npds);
        let mut error = 0.0f64;
        for f in &fns {
            for &z0 in &spec.probes {
                let q: Complex64 = nodes.iter().map(|n| n.weight * f(n.lambda) / (z0 - n.lambda)).sum();
                error = error.max((q - f(Complex64::new(z0, 0.0))).norm());
            }
        }
        drop(fns);
        let (head_bound, tail_bound) = spec.omitted(c0, r_min, r_max);
        Ok(Self {
            spec,
            r_min,
            r_max,
            nodes_per_decade: npds.iter().copied().max().unwrap_or(0),
            panel_nodes: npds,
            nodes,
            c0,
            head_bound,
            tail_bound,
            doubling_change: change,
            cauchy_error: error,
        })
    }

    pub fn spec(&self) -> &ContourSpec {
        &self.spec
    }

    pub fn sector(&self) -> Sector {
        self.spec.sector
    }

    pub fn tol(&self) -> f64 {
        self.spec.tol
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(i / 2pi) int f(lambda) (z0 - lambda)^{-1} d lambda`.
    pub fn cauchy(&self, f: impl Fn(Complex64) -> Complex64, z0: Complex64) -> Complex64 {
        self.nodes.iter().map(|n| n.weight * f(n.lambda) / (z0 - n.lambda)).sum()
    }

    /// The contour used by the dense reference path.
    pub fn oracle(&self) -> Result<Self> {
        Self::build(self.spec.oracle())
    }
}

/// Contour for `z^d / (1 + z)^{2d}`-type decay at absolute tolerance `tol`.
pub fn build_contour(sector: Sector, d: f64, tol: f64) -> Result<Contour> {
    Contour::build(ContourSpec::new(sector, d, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn cauchy_reproduces_values() {
        let s = Sector::new(FRAC_PI_2).unwrap();
        let c = build_contour(s, 1.0, 1e-10).unwrap();
        let f = |z: Complex64| z / ((z + 1.0) * (z + 1.0));
        assert!((c.cauchy(f, Complex64::new(1.0, 0.0)) - 0.25).norm() < 1e-8);
        assert!((c.cauchy(f, Complex64::new(4.0, 0.0)) - 0.16).norm() < 1e-8);
        assert!(c.cauchy_error < 1e-8);
        assert!(c.r_min < c.r_max);
    }

    #[test]
    fn inverted_radii_rejected() {
        let s = Sector::new(FRAC_PI_2).unwrap();
        let spec = ContourSpec::new(s, 1.0, 1e-8).unwrap().with_radii(10.0, 1.0);
        assert!(matches!(Contour::build(spec), Err(Error::Contour(_))));
    }

    #[test]
    fn unreachable_tolerance_rejected() {
        let s = Sector::new(FRAC_PI_2).unwrap();
        let mut spec = ContourSpec::new(s, 1.0, 1e-8).unwrap();
        spec.max_nodes = 10;
        assert!(Contour::build(spec).is_err());
    }

    #[test]
    fn narrow_sector() {
        let s = Sector::new(0.3).unwrap();
        let c = build_contour(s, 1.0, 1e-9).unwrap();
        let f = |z: Complex64| z / ((z + 1.0) * (z + 1.0));
        for z0 in [0.5, 1.0, 4.0, 20.0] {
            let want = f(Complex64::new(z0, 0.0));
            assert!((c.cauchy(f, Complex64::new(z0, 0.0)) - want).norm() < 1e-9, "{z0}");
        }
    }
}
