//! Parameter-dependent parametrix of `a - lambda`: the recursion `b_j`, the
//! excised sum `b^N`, the remainder `r^N = (a - lambda) # b^N - 1`, and the
//! Leibniz resolvent `(a - lambda)^{-#} = b^N # (1 + r^N)^{-#}`.

use std::io::Write;
use std::sync::Arc;

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::compose::{extract_symbol, leibniz_truncated, multi_indices_below, quantize, QuantOp};
use crate::dsl::{JetSpace, MatJet, SymbolExpr};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::hypo::Sector;
use crate::linalg::{operator_norm, small_spectral_norm, CMat};
use crate::oracle::dense_inverse;
use crate::scalar::{from_c64, Real};
use crate::symbol::{sample, GridSymbol, SymbolClassParams, TorusGrid};

/// Below this bound on `|quantize(r^N)|` the Neumann series is trusted.
pub const NEUMANN_THRESHOLD: f64 = 0.5;

/// Smooth step: 0 for `t <= 1`, 1 for `t >= 2`.
pub fn smooth_step(t: f64) -> f64 {
    let g = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (u, v) = (g(t - 1.0), g(2.0 - t));
    if u + v == 0.0 {
        if t >= 2.0 { 1.0 } else { 0.0 }
    } else {
        u / (u + v)
    }
}

/// Zero-excision `phi(xi)`: identically 1 when `C <= 0`, otherwise
/// `smooth_step(|xi| / max(C, 1))`, which vanishes for `|xi| <= C`.
pub fn excision(xi_norm: f64, cutoff: f64) -> f64 {
    if cutoff <= 0.0 {
        1.0
    } else {
        smooth_step(xi_norm / cutoff.max(1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParametrixConfig {
    /// Parametrix order `N >= 1`.
    pub order: usize,
    /// Frequency cutoff `C`.
    pub cutoff: f64,
    /// Extra jet order kept beyond what the recursion needs (for derivative
    /// diagnostics of `b_j`).
    pub extra_order: usize,
    /// Interior analysis margin for decay diagnostics; default `max(N, P/16)`.
    pub margin: Option<usize>,
}

impl ParametrixConfig {
    pub fn new(order: usize) -> Self {
        Self { order, cutoff: 0.0, extra_order: 0, margin: None }
    }
}

/// How `(1 + r^N)^{-#}` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InversePath {
    Neumann { terms: usize },
    Dense,
}

/// Matrix-space pieces of the Leibniz resolvent at one `lambda`.
#[derive(Clone, Debug)]
pub struct ResolventOps<T> {
    pub b_op: CMat<T>,
    pub resolvent: CMat<T>,
    pub r_norm: T,
    pub path: InversePath,
}

#[derive(Clone, Debug)]
pub struct LeibnizResolvent<T> {
    pub lambda: Complex64,
    pub symbol: GridSymbol<T>,
    pub b_n: GridSymbol<T>,
    pub r_n: GridSymbol<T>,
    pub s_n: GridSymbol<T>,
    pub r_norm: T,
    pub path: InversePath,
    /// `max |(a - lambda) # (a - lambda)^{-#} - 1|` over the grid.
    pub residual: T,
}

struct NodeJets<T> {
    a: MatJet<T>,
    dxi_a: Vec<MatJet<T>>,
    dx_a: Vec<MatJet<T>>,
}

pub struct Parametrix<T: Real> {
    a: SymbolExpr,
    grid: TorusGrid,
    sector: Sector,
    cfg: ParametrixConfig,
    class: SymbolClassParams,
    space: Arc<JetSpace>,
    /// Multi-indices `1 <= |alpha| < N` with `1/alpha!`.
    alphas: Vec<(Vec<usize>, usize, f64)>,
    phi: Vec<T>,
    nodes: Vec<Option<NodeJets<T>>>,
    a_norm: Vec<T>,
    a_op: QuantOp<T>,
}

fn counts(n: usize, xi: &[usize], x: &[usize]) -> Vec<usize> {
    let mut c = vec![0; 2 * n];
    c[..n].copy_from_slice(xi);
    c[n..].copy_from_slice(x);
    c
}

fn neg_i_pow<T: Real>(m: usize) -> Complex<T> {
    match m % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), -T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), T::one()),
    }
}

/// `(I + R)^{-1}` as the product `prod_k (I + Q^{2^k})`, `Q = -R`, stopped
/// when the tail bound `|R|^M / (1 - |R|)` falls below `tol`.
pub fn neumann_inverse<T: Real>(r: &CMat<T>, r_norm: T, tol: T) -> (CMat<T>, usize) {
    let dim = r.rows();
    let one = Complex::new(T::one(), T::zero());
    let mut s = CMat::identity(dim);
    s.axpy(-one, r);
    let mut p = r.scale(-one);
    let mut terms = 2usize;
    let tail = |m: usize| r_norm.powi(m as i32) / (T::one() - r_norm);
    while r_norm > T::zero() && tail(terms) >= tol && terms < (1 << 20) {
        p = p.matmul(&p);
        let sp = s.matmul(&p);
        s.axpy(one, &sp);
        terms *= 2;
    }
    (s, terms)
}

impl<T: Real> Parametrix<T> {
    pub fn new(a: &SymbolExpr, grid: &TorusGrid, sector: Sector, cfg: ParametrixConfig) -> Result<Self> {
        if cfg.order == 0 {
            return Err(Error::Precondition("parametrix order N must be >= 1".into()));
        }
        if a.n() != grid.n() {
            return Err(Error::Shape(format!("symbol has n = {}, grid has n = {}", a.n(), grid.n())));
        }
        let jet_order = cfg.order - 1 + cfg.extra_order;
        if jet_order > a.max_order() {
            return Err(Error::DerivativeOrder { order: jet_order, max: a.max_order() });
        }
        let class = a.class().unwrap_or_default();
        let n = grid.n();
        let k = a.k();
        let space = JetSpace::new(2 * n, jet_order);
        let alphas: Vec<(Vec<usize>, usize, f64)> = multi_indices_below(n, cfg.order)
            .into_iter()
            .filter(|al| al.iter().sum::<usize>() > 0)
            .map(|al| {
                let m = al.iter().sum();
                let f: f64 = al.iter().map(|&e| (1..=e).map(|i| i as f64).product::<f64>()).product();
                (al, m, 1.0 / f)
            })
            .collect();
        let nxi = grid.xi_count();
        let xi_abs: Vec<f64> = (0..nxi)
            .map(|jx| grid.xi_point(jx).iter().map(|v| (v * v) as f64).sum::<f64>().sqrt())
            .collect();
        let phi: Vec<T> = xi_abs.iter().map(|&r| T::lit(excision(r, cfg.cutoff))).collect();
        let active: Vec<bool> = xi_abs.iter().map(|&r| cfg.cutoff <= 0.0 || r >= cfg.cutoff).collect();

        let results: Vec<(Option<NodeJets<T>>, T)> = (0..grid.x_count() * nxi)
            .into_par_iter()
            .map(|node| -> Result<_> {
                let (ix, jx) = (node / nxi, node % nxi);
                if !active[jx] {
                    return Ok((None, T::zero()));
                }
                let x: Vec<T> = grid.x_point(ix);
                let xi: Vec<T> = grid.xi_point_real(jx);
                let aj = a.eval_jet(&space, &x, &xi)?;
                let dxi_a = alphas.iter().map(|(al, _, _)| aj.derivative_multi(&counts(n, al, &vec![0; n]))).collect();
                let dx_a = alphas.iter().map(|(al, _, _)| aj.derivative_multi(&counts(n, &vec![0; n], al))).collect();
                let an = small_spectral_norm(aj.value(), k);
                Ok((Some(NodeJets { a: aj, dxi_a, dx_a }), an))
            })
            .collect::<Result<_>>()?;
        let (nodes, a_norm): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let a_op = quantize(&sample::<T>(a, grid)?);
        Ok(Self { a: a.clone(), grid: *grid, sector, cfg, class, space, alphas, phi, nodes, a_norm, a_op })
    }

    pub fn symbol(&self) -> &SymbolExpr {
        &self.a
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn config(&self) -> &ParametrixConfig {
        &self.cfg
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn class(&self) -> SymbolClassParams {
        self.class
    }

    pub fn operator(&self) -> &QuantOp<T> {
        &self.a_op
    }

    pub fn jet_space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Interior analysis margin.
    pub fn margin(&self) -> usize {
        self.cfg.margin.unwrap_or_else(|| self.cfg.order.max(self.grid.p() / 16))
    }

    /// Weight exponent of `q_{0,0}` in `S^{m - N(rho - delta)}`.
    pub fn remainder_weight(&self) -> f64 {
        -(self.class.m - self.cfg.order as f64 * (self.class.rho - self.class.delta))
    }

    fn check_lambda(&self, lambda: Complex64) -> Result<()> {
        if self.sector.contains(lambda) {
            return Ok(());
        }
        let nxi = self.grid.xi_count();
        for (node, nj) in self.nodes.iter().enumerate() {
            if nj.is_some() && lambda.norm() < 2.0 * self.a_norm[node].to_f64_lossy() {
                return Err(Error::LambdaInOmega {
                    re: lambda.re,
                    im: lambda.im,
                    x_index: node / nxi,
                    xi_index: node % nxi,
                });
            }
        }
        Ok(())
    }

    /// Jets of `b_0 .. b_{N-1}` at one node; `left` selects the recursion for
    /// `b~^N # (a - lambda) ~ 1`.
    fn node_bj(&self, nj: &NodeJets<T>, lambda: Complex<T>, left: bool) -> Result<Vec<MatJet<T>>> {
        let n = self.grid.n();
        let k = self.a.k();
        let b0 = nj.a.shift_diag(lambda).inverse().ok_or(Error::Singular { pivot: 0.0, threshold: 0.0 })?;
        let mut bs = vec![b0.clone()];
        for j in 0..self.cfg.order - 1 {
            let mut sum = MatJet::zeros(&self.space, k);
            for (kk, bk) in bs.iter().enumerate().take(j + 1) {
                let m = j + 1 - kk;
                for (ai, (al, am, inv_fact)) in self.alphas.iter().enumerate() {
                    if *am != m {
                        continue;
                    }
                    let c = neg_i_pow::<T>(m) * T::lit(*inv_fact);
                    let term = if left {
                        bk.derivative_multi(&counts(n, al, &vec![0; n])).mul(&nj.dx_a[ai])
                    } else {
                        nj.dxi_a[ai].mul(&bk.derivative_multi(&counts(n, &vec![0; n], al)))
                    };
                    sum.add_assign(&term.scale(c));
                }
            }
            let next = if left { sum.mul(&b0) } else { b0.mul(&sum) };
            bs.push(next.scale(-Complex::<T>::one()));
        }
        Ok(bs)
    }

    fn for_nodes<R: Send>(
        &self,
        lambda: Complex64,
        left: bool,
        f: impl Fn(usize, &[MatJet<T>]) -> R + Sync,
    ) -> Result<Vec<Option<R>>> {
        self.check_lambda(lambda)?;
        let lam = from_c64::<T>(lambda);
        self.nodes
            .par_iter()
            .enumerate()
            .map(|(node, nj)| match nj {
                Some(nj) => Ok(Some(f(node, &self.node_bj(nj, lam, left)?))),
                None => Ok(None),
            })
            .collect()
    }

    /// Jets of `b_j` at every node with `|xi| >= C` (`None` elsewhere).
    pub fn bj_jets(&self, lambda: Complex64) -> Result<Vec<Option<Vec<MatJet<T>>>>> {
        self.for_nodes(lambda, false, |_, bs| bs.to_vec())
    }

    /// `b_0 .. b_{N-1}` tabulated; zero where `|xi| < C`.
    pub fn bj_recursion(&self, lambda: Complex64) -> Result<Vec<GridSymbol<T>>> {
        let kk = self.a.k() * self.a.k();
        let vals = self.for_nodes(lambda, false, |_, bs| bs.iter().map(|b| b.value().to_vec()).collect::<Vec<_>>())?;
        let ord = self.cfg.order;
        (0..ord)
            .map(|j| {
                let class = SymbolClassParams {
                    m: -self.class.m - j as f64 * (self.class.rho - self.class.delta),
                    ..self.class
                };
                let mut out = GridSymbol::constant(self.grid, self.a.k(), class, Complex::zero());
                for (node, v) in vals.iter().enumerate() {
                    if let Some(v) = v {
                        out.values_mut()[node * kk..(node + 1) * kk].copy_from_slice(&v[j]);
                    }
                }
                Ok(out)
            })
            .collect()
    }

    fn assemble(&self, lambda: Complex64, left: bool) -> Result<GridSymbol<T>> {
        let k = self.a.k();
        let kk = k * k;
        let nxi = self.grid.xi_count();
        let vals = self.for_nodes(lambda, left, |node, bs| {
            let phi = self.phi[node % nxi];
            let mut acc = vec![Complex::<T>::zero(); kk];
            if phi > T::zero() {
                for b in bs {
                    for (a, v) in acc.iter_mut().zip(b.value()) {
                        *a += v * phi;
                    }
                }
            }
            acc
        })?;
        let class = SymbolClassParams { m: -self.class.m, ..self.class };
        let mut out = GridSymbol::constant(self.grid, k, class, Complex::zero());
        for (node, v) in vals.iter().enumerate() {
            if let Some(v) = v {
                out.values_mut()[node * kk..(node + 1) * kk].copy_from_slice(v);
            }
        }
        Ok(out)
    }

    /// `a(x, xi)` at a grid node (`None` where `|xi| < C`).
    pub fn node_value(&self, node: usize) -> Option<&[Complex<T>]> {
        self.nodes.get(node)?.as_ref().map(|nj| nj.a.value())
    }

    /// `b^N(lambda)` at a single node, for any `lambda` off the pointwise spectrum.
    pub fn bn_at(&self, node: usize, lambda: Complex64) -> Result<Option<Vec<Complex<T>>>> {
        let Some(nj) = self.nodes.get(node).and_then(|n| n.as_ref()) else {
            return Ok(None);
        };
        let phi = self.phi[node % self.grid.xi_count()];
        let bs = self.node_bj(nj, from_c64(lambda), false)?;
        let kk = self.a.k() * self.a.k();
        let mut acc = vec![Complex::<T>::zero(); kk];
        for b in &bs {
            for (a, v) in acc.iter_mut().zip(b.value()) {
                *a += v * phi;
            }
        }
        Ok(Some(acc))
    }

    /// `b^N = phi sum_{j<N} b_j`.
    pub fn assemble_bn(&self, lambda: Complex64) -> Result<GridSymbol<T>> {
        self.assemble(lambda, false)
    }

    /// The left parametrix `b~^N`.
    pub fn assemble_left_bn(&self, lambda: Complex64) -> Result<GridSymbol<T>> {
        self.assemble(lambda, true)
    }

    fn remainder_op(&self, lambda: Complex64, bq: &CMat<T>, left: bool) -> CMat<T> {
        let am = self.a_op.matrix().shifted(from_c64(lambda));
        let mut r = if left { bq.matmul(&am) } else { am.matmul(bq) };
        let one = Complex::<T>::one();
        for i in 0..r.rows() {
            r[(i, i)] -= one;
        }
        r
    }

    fn quant(&self, s: &GridSymbol<T>) -> CMat<T> {
        quantize(s).into_matrix()
    }

    fn to_symbol(&self, m: CMat<T>, class: SymbolClassParams) -> GridSymbol<T> {
        let op = QuantOp::from_matrix(self.grid, self.a.k(), m).expect("operator shape").with_class(class);
        extract_symbol(&op)
    }

    fn remainder_class(&self) -> SymbolClassParams {
        SymbolClassParams { m: -self.remainder_weight(), ..self.class }
    }

    /// `r^N = (a - lambda) # b^N - 1` (exact discrete composition).
    pub fn remainder_rn(&self, lambda: Complex64) -> Result<GridSymbol<T>> {
        let bq = self.quant(&self.assemble_bn(lambda)?);
        Ok(self.to_symbol(self.remainder_op(lambda, &bq, false), self.remainder_class()))
    }

    /// `r~^N = b~^N # (a - lambda) - 1`.
    pub fn left_remainder(&self, lambda: Complex64) -> Result<GridSymbol<T>> {
        let bq = self.quant(&self.assemble_left_bn(lambda)?);
        Ok(self.to_symbol(self.remainder_op(lambda, &bq, true), self.remainder_class()))
    }

    /// `quantize(r^N(lambda))`.
    pub fn remainder_op_at(&self, lambda: Complex64) -> Result<CMat<T>> {
        let bq = self.quant(&self.assemble_bn(lambda)?);
        Ok(self.remainder_op(lambda, &bq, false))
    }

    /// The split `r^N = ((a - lambda) # b^N - q_N) + (q_N - 1)` with
    /// `q_N = sum_{|alpha| < N} (1/alpha!) d^alpha_xi (a - lambda) D^alpha_x b^N`.
    pub fn remainder_split(&self, lambda: Complex64) -> Result<(GridSymbol<T>, GridSymbol<T>)> {
        let bn = self.assemble_bn(lambda)?;
        let r = self.remainder_rn(lambda)?;
        let q = leibniz_truncated(&self.a.shifted(-lambda), &bn, self.cfg.order)?;
        let one = GridSymbol::constant(self.grid, self.a.k(), r.class(), Complex::one());
        let q_minus_one = q.sub(&one)?;
        Ok((r.sub(&q_minus_one)?, q_minus_one))
    }

    /// Cheap rigorous bound on `|R|_2`, refined by power iteration when the
    /// bound alone is inconclusive.
    fn norm_for_neumann(&self, r: &CMat<T>) -> T {
        let bound = r.norm2_bound();
        if bound < T::lit(NEUMANN_THRESHOLD) {
            return bound;
        }
        let est = operator_norm(r);
        est.value * T::lit(1.0 + 1e-6)
    }

    /// Matrix-space Leibniz resolvent: `quantize(b^N) (I + quantize(r^N))^{-1}`
    /// when `|quantize(r^N)| < 1/2`, else the dense inverse of `quantize(a) - lambda`.
    pub fn resolvent_ops(&self, lambda: Complex64, tol: T) -> Result<ResolventOps<T>> {
        let bq = self.quant(&self.assemble_bn(lambda)?);
        let r = self.remainder_op(lambda, &bq, false);
        let r_norm = self.norm_for_neumann(&r);
        if r_norm < T::lit(NEUMANN_THRESHOLD) {
            let (s, terms) = neumann_inverse(&r, r_norm, tol);
            let resolvent = bq.matmul(&s);
            Ok(ResolventOps { b_op: bq, resolvent, r_norm, path: InversePath::Neumann { terms } })
        } else {
            let resolvent = dense_inverse(&self.a_op.matrix().shifted(from_c64(lambda)))?;
            Ok(ResolventOps { b_op: bq, resolvent, r_norm, path: InversePath::Dense })
        }
    }

    /// `(a - lambda)^{-#}`, `s^N = (a - lambda)^{-#} - b^N` and the residual.
    pub fn leibniz_resolvent(&self, lambda: Complex64, tol: T) -> Result<LeibnizResolvent<T>> {
        let ops = self.resolvent_ops(lambda, tol)?;
        let am = self.a_op.matrix().shifted(from_c64(lambda));
        let mut check = am.matmul(&ops.resolvent);
        for i in 0..check.rows() {
            check[(i, i)] -= Complex::one();
        }
        let rc = self.remainder_class();
        let residual = self.to_symbol(check, rc).sup_norm(0);
        let r = self.remainder_op(lambda, &ops.b_op, false);
        let mut s = ops.resolvent.clone();
        s.axpy(-Complex::one(), &ops.b_op);
        let b_class = SymbolClassParams { m: -self.class.m, ..self.class };
        Ok(LeibnizResolvent {
            lambda,
            symbol: self.to_symbol(ops.resolvent, b_class),
            b_n: self.to_symbol(ops.b_op, b_class),
            r_n: self.to_symbol(r, rc),
            s_n: self.to_symbol(s, rc),
            r_norm: ops.r_norm,
            path: ops.path,
            residual,
        })
    }

    /// Smallest `R = 2^j` such that `|quantize(r^N(lambda))| <= 1/2` at every
    /// sampled `lambda` on both rays with `|lambda| >= R`.
    pub fn find_r(&self, min_exp: i32, max_exp: i32) -> Result<FindR> {
        let mut rows = Vec::new();
        for e in min_exp..=max_exp {
            let radius = 2f64.powi(e);
            let mut worst = 0.0f64;
            for upper in [true, false] {
                let r = self.remainder_op_at(self.sector.boundary_point(radius, upper))?;
                worst = worst.max(operator_norm(&r).value.to_f64_lossy());
            }
            rows.push((radius, worst));
        }
        let mut r = None;
        for &(radius, worst) in rows.iter().rev() {
            if worst <= NEUMANN_THRESHOLD {
                r = Some(radius);
            } else {
                break;
            }
        }
        match r {
            Some(r) => Ok(FindR { r, norms: rows }),
            None => Err(Error::NoConvergence(format!(
                "|r^N| > 1/2 at the ceiling |lambda| = {}",
                2f64.powi(max_exp)
            ))),
        }
    }

    /// Decay diagnostics at each lambda (in order), with `s^N` only for
    /// `|lambda| >= r_min`.
    pub fn sweep(&self, lambdas: &[Complex64], r_min: f64, tol: T, keep_symbols: bool) -> Result<ParamSymbolFamily<T>> {
        let margin = self.margin();
        let w = self.remainder_weight();
        let mut rows = Vec::with_capacity(lambdas.len());
        let mut symbols = Vec::new();
        for &lambda in lambdas {
            let lr = self.leibniz_resolvent(lambda, tol)?;
            let bracket = (1.0 + lambda.norm_sqr()).sqrt();
            let with_s = lambda.norm() >= r_min;
            rows.push(FamilyRow {
                lambda,
                b_norm: lr.b_n.sup_norm(margin).to_f64_lossy(),
                r_norm: lr.r_n.weighted_sup(w, margin).to_f64_lossy(),
                s_norm: with_s.then(|| lr.s_n.weighted_sup(w, margin).to_f64_lossy()),
                r_op_norm: lr.r_norm.to_f64_lossy(),
                residual: lr.residual.to_f64_lossy(),
                path: lr.path,
                bracket,
            });
            if keep_symbols {
                let bj = self.bj_recursion(lambda)?;
                symbols.push(LambdaSymbols {
                    bj,
                    b_n: lr.b_n,
                    r_n: lr.r_n,
                    resolvent: lr.symbol,
                    s_n: with_s.then_some(lr.s_n),
                });
            }
        }
        Ok(ParamSymbolFamily { order: self.cfg.order, margin, r_min, rows, symbols })
    }
}

/// Result of [`Parametrix::find_r`]: `R` and the per-radius worst norms.
#[derive(Clone, Debug)]
pub struct FindR {
    pub r: f64,
    pub norms: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct FamilyRow {
    pub lambda: Complex64,
    pub bracket: f64,
    /// `max |b^N|` on the interior window.
    pub b_norm: f64,
    /// `q_{0,0}(r^N)` in `S^{m - N(rho - delta)}` on the interior window.
    pub r_norm: f64,
    pub s_norm: Option<f64>,
    /// Bound on `|quantize(r^N)|_2` used for the Neumann decision.
    pub r_op_norm: f64,
    pub residual: f64,
    pub path: InversePath,
}

#[derive(Clone, Debug)]
pub struct LambdaSymbols<T> {
    pub bj: Vec<GridSymbol<T>>,
    pub b_n: GridSymbol<T>,
    pub r_n: GridSymbol<T>,
    pub resolvent: GridSymbol<T>,
    pub s_n: Option<GridSymbol<T>>,
}

/// Lambda-indexed parametrix data with decay fits.
#[derive(Clone, Debug)]
pub struct ParamSymbolFamily<T> {
    pub order: usize,
    pub margin: usize,
    pub r_min: f64,
    pub rows: Vec<FamilyRow>,
    pub symbols: Vec<LambdaSymbols<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Slope of `log(<lambda> |b^N|)` (bounded: near 0).
    pub b_weighted: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
}

impl<T> ParamSymbolFamily<T> {
    /// Log-log slopes against `<lambda>` over rows with `|lambda|` in `[lo, hi]`.
    pub fn decay_fit(&self, lo: f64, hi: f64) -> DecayFit {
        let rows: Vec<&FamilyRow> = self.rows.iter().filter(|r| (lo..=hi).contains(&r.lambda.norm())).collect();
        let x: Vec<f64> = rows.iter().map(|r| r.bracket).collect();
        let bw: Vec<f64> = rows.iter().map(|r| r.bracket * r.b_norm).collect();
        let rr: Vec<f64> = rows.iter().map(|r| r.r_norm).collect();
        let (sx, ss): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| r.s_norm.map(|s| (r.bracket, s))).unzip();
        DecayFit { b_weighted: loglog_slope(&x, &bw), r: loglog_slope(&x, &rr), s: loglog_slope(&sx, &ss) }
    }

    /// Columns `lambda_re,lambda_im,abs_lambda,b_norm,r_norm,s_norm,r_op_norm,residual,path`
    /// followed by `fit` rows for the slopes over `[lo, hi]`.
    pub fn write_csv<W: Write>(&self, w: W, lo: f64, hi: f64) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "lambda_re", "lambda_im", "abs_lambda", "b_norm", "r_norm", "s_norm", "r_op_norm", "residual", "path",
        ])?;
        for r in &self.rows {
            let path = match r.path {
                InversePath::Neumann { terms } => format!("neumann:{terms}"),
                InversePath::Dense => "dense".to_string(),
            };
            wr.write_record([
                format!("{:e}", r.lambda.re),
                format!("{:e}", r.lambda.im),
                format!("{:e}", r.lambda.norm()),
                format!("{:e}", r.b_norm),
                format!("{:e}", r.r_norm),
                r.s_norm.map(|s| format!("{s:e}")).unwrap_or_default(),
                format!("{:e}", r.r_op_norm),
                format!("{:e}", r.residual),
                path,
            ])?;
        }
        let fit = self.decay_fit(lo, hi);
        let f = |v: Option<f64>| v.map(|s| format!("{s:.6}")).unwrap_or_default();
        for (name, v) in [("R", Some(self.r_min)), ("slope_weighted_b", fit.b_weighted), ("slope_r", fit.r), ("slope_s", fit.s)] {
            wr.write_record(["fit", name, &f(v), "", "", "", "", "", ""])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `a + c`.
pub fn shift(a: &SymbolExpr, c: f64) -> Result<SymbolExpr> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("shift c = {c} must be positive")));
    }
    Ok(a.shifted(Complex64::new(c, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_symbol, preset};
    use std::f64::consts::FRAC_PI_2;

    fn setup(text: &str, p: usize, n_order: usize) -> Parametrix<f64> {
        let a = parse_symbol(text, 1, 1).unwrap().with_class(SymbolClassParams::new(2.0, 1.0, 0.0).unwrap());
        let g = TorusGrid::new(1, p).unwrap();
        Parametrix::new(&a, &g, Sector::new(FRAC_PI_2).unwrap(), ParametrixConfig::new(n_order)).unwrap()
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(excision(0.0, 0.0), 1.0);
        assert_eq!(excision(3.0, 3.0), 0.0);
        assert_eq!(excision(6.0, 3.0), 1.0);
    }

    #[test]
    fn b0_and_b1_examples() {
        let p = setup("bracket(xi)^2", 16, 2);
        let bj = p.bj_recursion(Complex64::new(-1.0, 0.0)).unwrap();
        let j0 = p.grid().xi_index(&[0]).unwrap();
        assert!((bj[0].at(0, j0)[0] - 0.5).norm() < 1e-15);
        assert!(bj[1].sup_norm(0) == 0.0);

        let p = setup("(2+sin(x1))*(1+xi1^2)", 16, 2);
        let bj = p.bj_recursion(Complex64::new(-1.0, 0.0)).unwrap();
        let j1 = p.grid().xi_index(&[1]).unwrap();
        assert!((bj[1].at(0, j1)[0] - Complex64::new(0.0, -0.064)).norm() < 1e-15);
    }

    #[test]
    fn x_independent_remainder_vanishes() {
        let p = setup("bracket(xi)^2+1", 32, 3);
        let r = p.remainder_rn(Complex64::new(-3.0, 2.0)).unwrap();
        assert!(r.sup_norm(0) < 1e-13);
    }

    #[test]
    fn neumann_matches_dense_inverse() {
        let n = 6;
        let r = CMat::<f64>::from_fn(n, n, |i, j| Complex::new(0.3 * ((i * 7 + j * 3) % 5) as f64 / 5.0 / n as f64, 0.02 * (i as f64 - j as f64)));
        let norm = operator_norm(&r).value;
        let (s, _) = neumann_inverse(&r, norm, 1e-15);
        let mut ipr = r.clone();
        for i in 0..n {
            ipr[(i, i)] += Complex::new(1.0, 0.0);
        }
        let d = dense_inverse(&ipr).unwrap();
        assert!((&s - &d).max_abs() < 1e-14);
    }

    #[test]
    fn lambda_inside_omega_is_rejected() {
        let p = setup("bracket(xi)^2", 16, 2);
        assert!(matches!(p.bj_recursion(Complex64::new(0.5, 0.0)), Err(Error::LambdaInOmega { .. })));
    }

    #[test]
    fn shift_example() {
        let a = preset("bracket_power 2", 1).unwrap();
        let s = shift(&a, 1.0).unwrap();
        assert!((s.eval(&[0.0], &[1.0]).unwrap()[0] - 3.0).norm() < 1e-15);
        assert_eq!(s.class(), a.class());
        assert!(shift(&a, -1.0).is_err());
    }
}
