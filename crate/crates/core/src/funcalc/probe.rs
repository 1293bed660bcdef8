//! Resolvent decay, `H^inf` bound probes and imaginary powers.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::calc::{f_of_operator_oracle_many, f_of_symbol_many};
use super::contour::Contour;
use super::hfun::{HFun, HKind, HinfFun};
use crate::compose::QuantOp;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, loglog_slope};
use crate::hypo::{log_space, Sector};
use crate::linalg::{operator_norm, CMat};
use crate::oracle::dense_resolvent;
use crate::parametrix::Parametrix;
use crate::scalar::{from_c64, Real};
use crate::symbol::GridSymbol;

/// Fit range in `|lambda|` for the resolvent decay slope.
pub const RESOLVENT_FIT_RANGE: (f64, f64) = (10.0, 1e4);

#[derive(Clone, Copy, Debug)]
pub struct ResolventRow {
    pub lambda: Complex64,
    pub bracket: f64,
    pub norm: f64,
}

impl ResolventRow {
    pub fn weighted(&self) -> f64 {
        self.bracket * self.norm
    }
}

#[derive(Clone, Debug)]
pub struct ResolventSweep {
    pub rows: Vec<ResolventRow>,
    pub fit_range: (f64, f64),
}

impl ResolventSweep {
    /// Slope of `log |(A - lambda)^{-1}|` against `log <lambda>` on the fit range.
    pub fn slope(&self) -> Option<f64> {
        let (lo, hi) = self.fit_range;
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| r.lambda.norm() >= lo && r.lambda.norm() <= hi)
            .map(|r| (r.bracket, r.norm))
            .unzip();
        loglog_slope(&xs, &ys)
    }

    /// `sup <lambda> |(A - lambda)^{-1}|` over the samples.
    pub fn sup_weighted(&self) -> f64 {
        self.rows.iter().map(ResolventRow::weighted).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lambda_re", "lambda_im", "abs_lambda", "resolvent_norm", "weighted_norm"])?;
        for r in &self.rows {
            wr.write_record([
                format!("{:e}", r.lambda.re),
                format!("{:e}", r.lambda.im),
                format!("{:e}", r.lambda.norm()),
                format!("{:e}", r.norm),
                format!("{:e}", r.weighted()),
            ])?;
        }
        let f = |v: Option<f64>| v.map(|s| format!("{s:.6}")).unwrap_or_default();
        wr.write_record(["fit", "slope", &f(self.slope()), "", ""])?;
        wr.write_record(["fit", "sup_weighted", &format!("{:e}", self.sup_weighted()), "", ""])?;
        wr.flush()?;
        Ok(())
    }
}

/// `|(A - lambda)^{-1}|` at `per_ray` log-spaced radii on both boundary rays.
pub fn resolvent_sweep<T: Real>(a: &QuantOp<T>, sector: Sector, r_lo: f64, r_hi: f64, per_ray: usize) -> Result<ResolventSweep> {
    let lambdas = sector.ray_samples(r_lo, r_hi, per_ray);
    let rows: Vec<Result<ResolventRow>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let r = dense_resolvent(a, from_c64(lambda))?;
            Ok(ResolventRow {
                lambda,
                bracket: (1.0 + lambda.norm_sqr()).sqrt(),
                norm: operator_norm(&r).value.to_f64_lossy(),
            })
        })
        .collect();
    Ok(ResolventSweep { rows: rows.into_iter().collect::<Result<_>>()?, fit_range: RESOLVENT_FIT_RANGE })
}

/// Estimate of `c0 = sup (1 + |lambda|) |(A - lambda)^{-1}|` on the boundary,
/// with a 10% margin.
pub fn estimate_c0<T: Real>(a: &QuantOp<T>, sector: Sector) -> Result<f64> {
    let s = resolvent_sweep(a, sector, 1e-4, 1e7, 45)?;
    let sup = s.rows.iter().map(|r| (1.0 + r.lambda.norm()) * r.norm).fold(0.0, f64::max);
    Ok(1.1 * sup)
}

#[derive(Clone, Debug)]
pub struct HinfRow {
    pub label: String,
    pub sup_norm: f64,
    pub op_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct HinfReport {
    pub rows: Vec<HinfRow>,
}

impl HinfReport {
    pub fn from_operators<T: Real>(family: &[HFun], ops: &[CMat<T>]) -> Result<Self> {
        if family.len() != ops.len() {
            return Err(Error::Shape(format!("{} functions, {} operators", family.len(), ops.len())));
        }
        let rows = family
            .iter()
            .zip(ops)
            .map(|(f, op)| {
                let op_norm = operator_norm(op).value.to_f64_lossy();
                HinfRow { label: f.label(), sup_norm: f.sup_norm(), op_norm, ratio: op_norm / f.sup_norm() }
            })
            .collect();
        Ok(Self { rows })
    }

    /// `M = max |f(A)| / |f|_inf`.
    pub fn m(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// `max |f(A)| / |f|_inf` over the family, via the dense reference path on `contour`.
pub fn hinf_bound_probe<T: Real>(a: &QuantOp<T>, family: &[HFun], contour: &Contour) -> Result<HinfReport> {
    let ops = f_of_operator_oracle_many(a, family, contour)?;
    HinfReport::from_operators(family, &ops)
}

/// `z^s / (1 + z)^{2s}` for `s in {1/4, 1/2, 1, 2}`.
pub fn default_family(sector: Sector) -> Result<Vec<HFun>> {
    [0.25, 0.5, 1.0, 2.0].iter().map(|&s| HFun::s_power(s, sector)).collect()
}

/// `size / 2` s-powers log-spaced in `[1/4, 2]` and `size - size / 2`
/// regularized imaginary powers with `t` evenly spaced in `[-2, 2]`.
pub fn uniformity_family(sector: Sector, size: usize, n_reg: f64) -> Result<Vec<HFun>> {
    let ns = size / 2;
    let nt = size - ns;
    let mut out: Vec<HFun> = log_space(0.25, 2.0, ns).into_iter().map(|s| HFun::s_power(s, sector)).collect::<Result<_>>()?;
    for i in 0..nt {
        let t = if nt == 1 { 0.0 } else { -2.0 + 4.0 * i as f64 / (nt - 1) as f64 };
        out.push(HinfFun::imag_power(t, sector)?.regularized(n_reg)?);
    }
    Ok(out)
}

/// Regularized `a^{it}`: `f_n(a)` with `f_n = z^{it} psi_n`.
pub fn imaginary_power<T: Real>(param: &Parametrix<T>, t: f64, n_reg: f64, contour: &Contour) -> Result<GridSymbol<T>> {
    if !(n_reg >= 1.0) {
        return Err(Error::Precondition(format!("n_reg must be >= 1, got {n_reg}")));
    }
    let f = HFun::new(HKind::RegImagPower { t, n: n_reg }, param.sector())?;
    Ok(f_of_symbol_many(param, &[f], contour, false)?.f_a.remove(0))
}

#[derive(Clone, Copy, Debug)]
pub struct BipRow {
    pub t: f64,
    pub norm: f64,
    pub sup_norm: f64,
}

#[derive(Clone, Debug)]
pub struct BipReport {
    pub theta: f64,
    pub n_reg: f64,
    pub rows: Vec<BipRow>,
}

impl BipReport {
    /// Slope of `log |A^{it}|` against `|t|`.
    pub fn growth_rate(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self.rows.iter().map(|r| (r.t.abs(), r.norm.ln())).unzip();
        linear_fit(&xs, &ys).map(|(s, _)| s)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "norm", "sup_norm_f", "bound_exp_theta_t"])?;
        for r in &self.rows {
            wr.write_record([
                format!("{}", r.t),
                format!("{:e}", r.norm),
                format!("{:e}", r.sup_norm),
                format!("{:e}", (self.theta * r.t.abs()).exp()),
            ])?;
        }
        let g = self.growth_rate().map(|s| format!("{s:.6}")).unwrap_or_default();
        wr.write_record(["fit", "growth_rate", &g, &format!("{:.6}", self.theta)])?;
        wr.flush()?;
        Ok(())
    }
}

/// The family `z^{it} psi_n` for the given `t`.
pub fn imaginary_power_family(ts: &[f64], n_reg: f64, sector: Sector) -> Result<Vec<HFun>> {
    ts.iter().map(|&t| HFun::new(HKind::RegImagPower { t, n: n_reg }, sector)).collect()
}

/// `|A^{it}|` (regularized, dense reference path) for each `t`.
pub fn imaginary_power_sweep<T: Real>(a: &QuantOp<T>, ts: &[f64], n_reg: f64, contour: &Contour) -> Result<BipReport> {
    let sector = contour.sector();
    let fns = imaginary_power_family(ts, n_reg, sector)?;
    let ops = f_of_operator_oracle_many(a, &fns, contour)?;
    let rows = ts
        .iter()
        .zip(&ops)
        .map(|(&t, op)| BipRow {
            t,
            norm: operator_norm(op).value.to_f64_lossy(),
            sup_norm: (sector.theta() * t.abs()).exp(),
        })
        .collect();
    Ok(BipReport { theta: sector.theta(), n_reg, rows })
}

/// `M_q = max_f q(f(a)) / |f|_inf` for one seminorm.
#[derive(Clone, Debug)]
pub struct SeminormBound {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub ratios: Vec<f64>,
}

impl SeminormBound {
    pub fn m(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

pub fn seminorm_bounds<T: Real>(
    f_a: &[GridSymbol<T>],
    fns: &[HFun],
    seminorms: &[(Vec<usize>, Vec<usize>)],
    margin: usize,
) -> Result<Vec<SeminormBound>> {
    if f_a.len() != fns.len() {
        return Err(Error::Shape(format!("{} symbols, {} functions", f_a.len(), fns.len())));
    }
    seminorms
        .iter()
        .map(|(alpha, beta)| {
            let ratios = f_a
                .iter()
                .zip(fns)
                .map(|(s, f)| Ok(s.seminorm(alpha, beta, s.class(), margin)?.to_f64_lossy() / f.sup_norm()))
                .collect::<Result<Vec<f64>>>()?;
            Ok(SeminormBound { alpha: alpha.clone(), beta: beta.clone(), ratios })
        })
        .collect()
}

/// Per-function rows of the calculus report.
#[derive(Clone, Debug)]
pub struct CalcRow {
    pub label: String,
    pub sup_norm: f64,
    pub oracle_norm: f64,
    pub symbol_norm: f64,
    pub ratio: f64,
    /// `|quantize(f(a)) - f(A)| / |f(A)|`.
    pub discrepancy: f64,
}

#[derive(Clone, Debug)]
pub struct CalcReport {
    pub rows: Vec<CalcRow>,
}

impl CalcReport {
    pub fn m(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["function", "sup_norm", "oracle_norm", "symbol_norm", "ratio", "discrepancy"])?;
        for r in &self.rows {
            wr.write_record([
                r.label.clone(),
                format!("{:e}", r.sup_norm),
                format!("{:e}", r.oracle_norm),
                format!("{:e}", r.symbol_norm),
                format!("{:e}", r.ratio),
                format!("{:e}", r.discrepancy),
            ])?;
        }
        wr.write_record(["summary_M".to_string(), String::new(), String::new(), String::new(), format!("{:e}", self.m()), format!("{:e}", self.max_discrepancy())])?;
        wr.flush()?;
        Ok(())
    }
}

/// Symbol path against the dense reference for each member of `fns`.
pub fn calc_report<T: Real>(
    param: &Parametrix<T>,
    fns: &[HFun],
    contour: &Contour,
    oracle_contour: &Contour,
) -> Result<(CalcReport, Vec<GridSymbol<T>>)> {
    let sym = f_of_symbol_many(param, fns, contour, false)?;
    let oracle = f_of_operator_oracle_many(param.operator(), fns, oracle_contour)?;
    let mut rows = Vec::with_capacity(fns.len());
    for ((f, s), o) in fns.iter().zip(&sym.f_a).zip(&oracle) {
        let q = crate::compose::quantize(s);
        let oracle_norm = operator_norm(o).value.to_f64_lossy();
        let symbol_norm = q.norm().to_f64_lossy();
        let diff = q.matrix() - o;
        let discrepancy = operator_norm(&diff).value.to_f64_lossy() / oracle_norm;
        rows.push(CalcRow {
            label: f.label(),
            sup_norm: f.sup_norm(),
            oracle_norm,
            symbol_norm,
            ratio: oracle_norm / f.sup_norm(),
            discrepancy,
        });
    }
    Ok((CalcReport { rows }, sym.f_a))
}
