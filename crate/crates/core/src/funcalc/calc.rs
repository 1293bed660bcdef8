//! `f(a)` by contour quadrature of the Leibniz resolvent, and the dense
//! reference `f(A)`.

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::contour::{Contour, ContourNode};
use super::hfun::HFun;
use crate::compose::{extract_symbol, QuantOp};
use crate::dsl::SymbolExpr;
use crate::error::{Error, Result};
use crate::hypo::Sector;
use crate::linalg::{eigenvalues, CMat};
use crate::oracle::dense_resolvent;
use crate::parametrix::{InversePath, Parametrix, ParametrixConfig};
use crate::scalar::{from_c64, to_c64, Real};
use crate::symbol::{GridSymbol, SymbolClassParams, TorusGrid};

const CHUNK: usize = 8;

/// Per-node facts from the symbol path.
#[derive(Clone, Copy, Debug)]
pub struct NodeInfo {
    pub lambda: Complex64,
    pub r_norm: f64,
    pub path: InversePath,
}

/// Sums `weight f(lambda) M_s(lambda)` for every `f` and slot `s`.
///
/// Nodes are grouped in fixed chunks whose partial sums are added in node
/// order, so the result does not depend on the thread count.
fn quadrature<T, R, F>(nodes: &[ContourNode], fns: &[HFun], slots: usize, dim: usize, resolve: F) -> Result<(Vec<CMat<T>>, Vec<R>)>
where
    T: Real,
    R: Send,
    F: Fn(Complex64) -> Result<(Vec<CMat<T>>, R)> + Sync,
{
    let nacc = fns.len() * slots;
    let mut acc = vec![CMat::<T>::zeros(dim, dim); nacc];
    let mut infos = Vec::with_capacity(nodes.len());
    let chunks: Vec<&[ContourNode]> = nodes.chunks(CHUNK).collect();
    let wave = 2 * rayon::current_num_threads().max(1);
    for group in chunks.chunks(wave) {
        let partials: Vec<Result<(Vec<CMat<T>>, Vec<R>)>> = group
            .par_iter()
            .map(|chunk| {
                let mut part = vec![CMat::<T>::zeros(dim, dim); nacc];
                let mut info = Vec::with_capacity(chunk.len());
                for node in chunk.iter() {
                    let (mats, r) = resolve(node.lambda)?;
                    for (i, f) in fns.iter().enumerate() {
                        let c = from_c64::<T>(node.weight * f.eval(node.lambda));
                        for (s, m) in mats.iter().enumerate() {
                            part[i * slots + s].axpy(c, m);
                        }
                    }
                    info.push(r);
                }
                Ok((part, info))
            })
            .collect();
        for p in partials {
            let (part, info) = p?;
            for (a, m) in acc.iter_mut().zip(&part) {
                a.axpy(Complex::one(), m);
            }
            infos.extend(info);
        }
    }
    Ok((acc, infos))
}

/// `f(a)` for a family, with optional split `f(a) = b^N_f + s^N_f`.
#[derive(Clone, Debug)]
pub struct SymbolCalc<T> {
    pub f_a: Vec<GridSymbol<T>>,
    /// `(i/2pi) int f(lambda) b^N(lambda) d lambda`, when requested.
    pub b_part: Vec<GridSymbol<T>>,
    pub s_part: Vec<GridSymbol<T>>,
    pub nodes: Vec<NodeInfo>,
}

impl<T> SymbolCalc<T> {
    pub fn neumann_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.path, InversePath::Neumann { .. })).count()
    }

    pub fn max_r_norm(&self) -> f64 {
        self.nodes.iter().map(|n| n.r_norm).fold(0.0, f64::max)
    }
}

fn zero_class<T: Real>(param: &Parametrix<T>) -> SymbolClassParams {
    SymbolClassParams { m: 0.0, ..param.class() }
}

fn to_symbol<T: Real>(grid: TorusGrid, k: usize, class: SymbolClassParams, m: CMat<T>) -> Result<GridSymbol<T>> {
    Ok(extract_symbol(&QuantOp::from_matrix(grid, k, m)?.with_class(class)))
}

fn neumann_tol<T: Real>() -> T {
    T::lit(1e-15).max(T::epsilon() * T::lit(4.0))
}

/// `f(a) = (i/2pi) sum_q w_q f(lambda_q) (a - lambda_q)^{-#}` for every `f`.
pub fn f_of_symbol_many<T: Real>(
    param: &Parametrix<T>,
    fns: &[HFun],
    contour: &Contour,
    split: bool,
) -> Result<SymbolCalc<T>> {
    if fns.is_empty() {
        return Err(Error::Precondition("empty function family".into()));
    }
    let op = param.operator();
    let (grid, k, dim) = (*op.grid(), op.k(), op.dim());
    let slots = if split { 2 } else { 1 };
    let (acc, nodes) = quadrature(&contour.nodes, fns, slots, dim, |lambda| {
        let ops = param.resolvent_ops(lambda, neumann_tol()).map_err(|e| match e {
            Error::Singular { .. } | Error::LambdaInOmega { .. } => {
                Error::Contour(format!("resolvent failed at lambda = {lambda}: {e}"))
            }
            e => e,
        })?;
        let info = NodeInfo { lambda, r_norm: ops.r_norm.to_f64_lossy(), path: ops.path };
        let mats = if split { vec![ops.resolvent, ops.b_op] } else { vec![ops.resolvent] };
        Ok((mats, info))
    })?;
    let class = zero_class(param);
    let mut f_a = Vec::with_capacity(fns.len());
    let mut b_part = Vec::new();
    let mut s_part = Vec::new();
    let mut it = acc.into_iter();
    for _ in fns {
        let full = it.next().expect("slot");
        if split {
            let b = it.next().expect("slot");
            let mut s = full.clone();
            s.axpy(-Complex::one(), &b);
            b_part.push(to_symbol(grid, k, class, b)?);
            s_part.push(to_symbol(grid, k, class, s)?);
        }
        f_a.push(to_symbol(grid, k, class, full)?);
    }
    Ok(SymbolCalc { f_a, b_part, s_part, nodes })
}

/// `f(a)` for a single `f`, building the parametrix of order `order`.
pub fn f_of_symbol<T: Real>(
    a: &SymbolExpr,
    grid: &TorusGrid,
    f: &HFun,
    order: usize,
    contour: &Contour,
) -> Result<GridSymbol<T>> {
    let param = Parametrix::<T>::new(a, grid, contour.sector(), ParametrixConfig::new(order))?;
    let mut out = f_of_symbol_many(&param, std::slice::from_ref(f), contour, false)?;
    Ok(out.f_a.remove(0))
}

/// `(i/2pi) sum_q w_q f(lambda_q) (A - lambda_q)^{-1}` by dense solves.
pub fn f_of_operator_oracle_many<T: Real>(a: &QuantOp<T>, fns: &[HFun], contour: &Contour) -> Result<Vec<CMat<T>>> {
    if fns.is_empty() {
        return Err(Error::Precondition("empty function family".into()));
    }
    let (acc, _) = quadrature(&contour.nodes, fns, 1, a.dim(), |lambda| {
        let r = dense_resolvent(a, from_c64(lambda))?;
        Ok((vec![r], ()))
    })?;
    Ok(acc)
}

pub fn f_of_operator_oracle<T: Real>(a: &QuantOp<T>, f: &HFun, contour: &Contour) -> Result<CMat<T>> {
    Ok(f_of_operator_oracle_many(a, std::slice::from_ref(f), contour)?.remove(0))
}

/// Distance from `c` to the closed sector.
pub fn distance_to_sector(c: Complex64, sector: Sector) -> f64 {
    if sector.contains(c) {
        return 0.0;
    }
    let gap = sector.theta() - c.arg().abs();
    if gap >= std::f64::consts::FRAC_PI_2 {
        c.norm()
    } else {
        c.norm() * gap.sin()
    }
}

/// Per-point circle around the spectrum of `a(x, xi)`, inside the complement
/// of the sector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointContour {
    pub center: Complex64,
    pub radius: f64,
}

impl PointContour {
    pub fn around(eigs: &[Complex64], sector: Sector) -> Result<Self> {
        let center = eigs.iter().sum::<Complex64>() / eigs.len() as f64;
        let spread = eigs.iter().map(|e| (e - center).norm()).fold(0.0, f64::max);
        let dist = distance_to_sector(center, sector);
        if spread >= dist {
            return Err(Error::Contour(format!(
                "pointwise spectrum around {center} (spread {spread}) does not fit in a disc away from the sector"
            )));
        }
        Ok(Self { center, radius: 0.5 * (spread + dist) })
    }

    pub fn length(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius
    }
}

/// The `b^N` part of `f(a)` integrated over the per-point deformed contours;
/// returns the symbol and the longest contour.
pub fn b_part_deformed<T: Real>(param: &Parametrix<T>, f: &HFun, points: usize) -> Result<(GridSymbol<T>, f64)> {
    let op = param.operator();
    let (grid, k) = (*op.grid(), op.k());
    let kk = k * k;
    let sector = param.sector();
    let total = grid.x_count() * grid.xi_count();
    let rows: Vec<Result<(Vec<Complex<T>>, f64)>> = (0..total)
        .into_par_iter()
        .map(|node| {
            let Some(a) = param.node_value(node) else {
                return Ok((vec![Complex::zero(); kk], 0.0));
            };
            let eigs: Vec<Complex64> = eigenvalues(a, k).into_iter().map(to_c64).collect();
            let pc = PointContour::around(&eigs, sector)?;
            let mut acc = vec![Complex64::zero(); kk];
            for m in 0..points {
                let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / points as f64);
                let lambda = pc.center + e * pc.radius;
                // (i/2pi) f b d lambda with d lambda = i r e dphi
                let w = -f.eval(lambda) * e * (pc.radius / points as f64);
                if let Some(b) = param.bn_at(node, lambda)? {
                    for (a, v) in acc.iter_mut().zip(b) {
                        *a += w * to_c64(v);
                    }
                }
            }
            Ok((acc.into_iter().map(from_c64).collect(), pc.length()))
        })
        .collect();
    let mut values = Vec::with_capacity(total * kk);
    let mut longest = 0.0f64;
    for r in rows {
        let (v, len) = r?;
        values.extend(v);
        longest = longest.max(len);
    }
    Ok((GridSymbol::new(grid, k, zero_class(param), values)?, longest))
}

/// `count` log-spaced points across the range of the pointwise spectral
/// moduli of `a` on the grid.
pub fn spectral_probes<T: Real>(param: &Parametrix<T>, count: usize) -> Vec<f64> {
    let op = param.operator();
    let (grid, k) = (*op.grid(), op.k());
    let total = grid.x_count() * grid.xi_count();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for node in 0..total {
        if let Some(a) = param.node_value(node) {
            for e in eigenvalues(a, k) {
                let m = to_c64(e).norm();
                lo = lo.min(m);
                hi = hi.max(m);
            }
        }
    }
    if !(lo > 0.0 && hi.is_finite()) {
        return Vec::new();
    }
    crate::hypo::log_space(lo, hi, count)
}

/// Contour for a family with the operator bound `c0` and spectral probes.
pub fn family_contour<T: Real>(param: &Parametrix<T>, fns: &[HFun], tol: f64, c0: f64) -> Result<Contour> {
    let spec = super::contour::ContourSpec::for_family(param.sector(), fns, tol)?
        .with_c0(c0)
        .with_probes(spectral_probes(param, 6));
    Contour::build(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::quantize;
    use crate::dsl::parse_symbol;
    use crate::funcalc::{ContourSpec, HKind};
    use crate::symbol::sample;
    use std::f64::consts::FRAC_PI_2;

    fn sector() -> Sector {
        Sector::new(FRAC_PI_2).unwrap()
    }

    fn class2() -> SymbolClassParams {
        SymbolClassParams::new(2.0, 1.0, 0.0).unwrap()
    }

    fn setup(expr: &str, p: usize) -> Parametrix<f64> {
        let a = parse_symbol(expr, 1, 1).unwrap().with_class(class2());
        Parametrix::new(&a, &TorusGrid::new(1, p).unwrap(), sector(), ParametrixConfig::new(3)).unwrap()
    }

    fn contour(param: &Parametrix<f64>, fns: &[HFun], tol: f64) -> Contour {
        family_contour(param, fns, tol, 2.0).unwrap()
    }

    #[test]
    fn x_independent_symbol_is_pointwise() {
        let param = setup("bracket(xi)^2+1", 16);
        let f = HFun::s_power(1.0, sector()).unwrap();
        let c = contour(&param, std::slice::from_ref(&f), 1e-10);
        let fa = f_of_symbol_many(&param, std::slice::from_ref(&f), &c, false).unwrap().f_a.remove(0);
        let g = *fa.grid();
        for ix in 0..g.x_count() {
            for jx in 0..g.xi_count() {
                if !g.is_interior(jx, 1) {
                    continue;
                }
                let xi = g.xi_point(jx)[0] as f64;
                let want = f.eval(Complex64::new(2.0 + xi * xi, 0.0));
                assert!((fa.at(ix, jx)[0] - want).norm() < 1e-8);
            }
        }
        let j0 = g.xi_index(&[0]).unwrap();
        assert!((fa.at(3, j0)[0] - 2.0 / 9.0).norm() < 1e-8);
    }

    #[test]
    fn oracle_of_diagonal_operator() {
        let param = setup("bracket(xi)^2+1", 16);
        let f = HFun::s_power(1.0, sector()).unwrap();
        let c = contour(&param, std::slice::from_ref(&f), 1e-10).oracle().unwrap();
        let m = f_of_operator_oracle(param.operator(), &f, &c).unwrap();
        let g = *param.grid();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let want = if i == j {
                    let xi = g.xi_point(i)[0] as f64;
                    f.eval(Complex64::new(2.0 + xi * xi, 0.0))
                } else {
                    Complex64::zero()
                };
                assert!((m[(i, j)] - want).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn oracle_is_multiplicative() {
        let param = setup("(2+sin(x1))*(1+xi1^2)+5", 16);
        let f = HFun::s_power(1.0, sector()).unwrap();
        let g = HFun::s_power(0.5, sector()).unwrap();
        let fg = f.product(&g).unwrap();
        let fns = [f, g, fg];
        let c = contour(&param, &fns, 1e-10).oracle().unwrap();
        let ops = f_of_operator_oracle_many(param.operator(), &fns, &c).unwrap();
        let diff = &ops[0].matmul(&ops[1]) - &ops[2];
        assert!(diff.max_abs() < 1e-7, "{}", diff.max_abs());
    }

    #[test]
    fn resolvent_probe_matches_direct_solve() {
        let param = setup("(2+sin(x1))*(1+xi1^2)+5", 16);
        let mu = Complex64::new(-2.0, 0.0);
        let f = HFun::resolvent_probe(mu, sector()).unwrap();
        let c = contour(&param, std::slice::from_ref(&f), 1e-10).oracle().unwrap();
        let got = f_of_operator_oracle(param.operator(), &f, &c).unwrap();
        let a = param.operator().matrix();
        let r1 = crate::oracle::dense_inverse(&a.shifted(mu).scale(-Complex64::one())).unwrap();
        let r2 = crate::oracle::dense_inverse(&a.shifted(Complex64::new(-1.0, 0.0))).unwrap();
        let want = a.matmul(&r1).matmul(&r2);
        assert!((&got - &want).max_abs() < 1e-7);
    }

    #[test]
    fn symbol_calculus_is_linear() {
        let param = setup("(2+sin(x1))*(1+xi1^2)+5", 16);
        let f = HFun::s_power(1.0, sector()).unwrap();
        let g = HFun::s_power(0.5, sector()).unwrap();
        let comb = f.scaled(Complex64::new(2.0, 0.0)).unwrap().sum(&g.scaled(Complex64::new(-3.0, 1.0)).unwrap()).unwrap();
        let fns = [f, g, comb];
        let c = contour(&param, &fns, 1e-9);
        let out = f_of_symbol_many(&param, &fns, &c, false).unwrap().f_a;
        let want = out[0].scale(Complex64::new(2.0, 0.0)).add(&out[1].scale(Complex64::new(-3.0, 1.0))).unwrap();
        let rel = out[2].max_diff(&want, 0).unwrap() / want.sup_norm(0);
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn split_and_deformed_contour_agree() {
        let param = setup("(2+sin(x1))*(1+xi1^2)+5", 64);
        let f = HFun::s_power(1.0, sector()).unwrap();
        let c = contour(&param, std::slice::from_ref(&f), 1e-10);
        let out = f_of_symbol_many(&param, std::slice::from_ref(&f), &c, true).unwrap();
        let sum = out.b_part[0].add(&out.s_part[0]).unwrap();
        assert!(sum.max_diff(&out.f_a[0], 1).unwrap() < 1e-12);
        let (deformed, longest) = b_part_deformed(&param, &f, 48).unwrap();
        let dd = deformed.max_diff(&out.b_part[0], 16).unwrap();
        assert!(dd < 1e-8, "{dd}");
        assert!(longest.is_finite() && longest > 0.0);
    }

    #[test]
    fn imaginary_power_of_constant() {
        let a = parse_symbol("exp(1)", 1, 1).unwrap().with_class(SymbolClassParams::default());
        let param = Parametrix::<f64>::new(&a, &TorusGrid::new(1, 8).unwrap(), sector(), ParametrixConfig::new(1)).unwrap();
        let f = HFun::new(HKind::RegImagPower { t: std::f64::consts::PI, n: 1e8 }, sector()).unwrap();
        let spec = ContourSpec::for_family(sector(), std::slice::from_ref(&f), 1e-10).unwrap().with_probes([std::f64::consts::E]);
        let c = Contour::build(spec).unwrap();
        let fa = f_of_symbol_many(&param, std::slice::from_ref(&f), &c, false).unwrap().f_a.remove(0);
        assert!((fa.at(0, 4)[0] + 1.0).norm() < 1e-6);
        let expected = sample::<f64>(&a, param.grid()).unwrap();
        assert_eq!(quantize(&expected).dim(), fa.grid().xi_count());
    }

    #[test]
    fn distance_to_sector_cases() {
        let s = Sector::new(FRAC_PI_2).unwrap();
        assert!((distance_to_sector(Complex64::new(3.0, 4.0), s) - 3.0).abs() < 1e-12);
        assert_eq!(distance_to_sector(Complex64::new(-1.0, 0.0), s), 0.0);
        let narrow = Sector::new(2.5).unwrap();
        assert!((distance_to_sector(Complex64::new(2.0, 0.0), narrow) - 2.0).abs() < 1e-12);
    }
}
