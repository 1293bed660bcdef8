//! Subcommands: each writes one CSV report into the output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use hypocalc::funcalc::{
    calc_report, estimate_c0, imaginary_power_family, imaginary_power_sweep, spectral_probes, Contour, ContourSpec, HFun,
};
use hypocalc::hypo::{check_spectrum, default_lambda_samples, estimate_hypo_constants, HypoReport};
use hypocalc::parametrix::{Parametrix, ParametrixConfig};
use hypocalc::symbol::sample;
use hypocalc::Error;
use log::info;

use crate::config::RunConfig;
use crate::Failure;

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure::Config(format!("creating {}: {e}", out.display())))?;
    let path = out.join(name);
    let f = File::create(&path).map_err(|e| Failure::Config(format!("creating {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn hypo_pass(cfg: &RunConfig, seed: u64) -> Result<HypoReport, Failure> {
    let a = cfg.symbol(seed)?;
    let grid = cfg.grid()?;
    let sector = cfg.sector()?;
    let report = check_spectrum::<f64>(&a, sector, cfg.hypo.c, cfg.hypo.cutoff, &grid)?;
    Ok(report)
}

pub fn check(cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), Failure> {
    let a = cfg.symbol(seed)?;
    let grid = cfg.grid()?;
    let sector = cfg.sector()?;
    let mut report = hypo_pass(cfg, seed)?;
    if report.pass {
        let tab = sample::<f64>(&a, &grid)?;
        let max_abs = tab.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lambdas = default_lambda_samples(sector, cfg.hypo.c, max_abs, cfg.hypo.per_ray);
        report = estimate_hypo_constants::<f64>(&a, sector, cfg.hypo.c, cfg.hypo.cutoff, cfg.hypo.max_order, &grid, &lambdas)?;
    }
    report.write_csv(create(out, "hypo_report.csv")?)?;
    print!("{}", report.summary());
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} spectral violations", report.violations.len())))
    }
}

fn parametrix(cfg: &RunConfig, seed: u64) -> Result<Parametrix<f64>, Failure> {
    let report = hypo_pass(cfg, seed)?;
    if !report.pass {
        return Err(Failure::Check(format!(
            "hypoellipticity check failed upstream ({} violations); run `check` for details",
            report.violations.len()
        )));
    }
    let mut pc = ParametrixConfig::new(cfg.parametrix.order);
    pc.cutoff = cfg.parametrix.cutoff;
    Ok(Parametrix::new(&cfg.symbol(seed)?, &cfg.grid()?, cfg.sector()?, pc)?)
}

pub fn parametrix_sweep(cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), Failure> {
    let param = parametrix(cfg, seed)?;
    let fr = param.find_r(-2, 20)?;
    info!("empirical R = {}", fr.r);
    let p = &cfg.parametrix;
    let lambdas = param.sector().ray_samples(p.lambda_min, p.lambda_max, p.samples);
    let fam = param.sweep(&lambdas, fr.r, 1e-14, false)?;
    fam.write_csv(create(out, "parametrix_sweep.csv")?, p.lambda_min, p.lambda_max)?;
    let fit = fam.decay_fit(p.lambda_min, p.lambda_max);
    let f = |v: Option<f64>| v.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into());
    println!("R = {}", fr.r);
    println!("slope |r^N| = {}, slope |s^N| = {}, slope <lambda>|b^N| = {}", f(fit.r), f(fit.s), f(fit.b_weighted));
    let max_res = fam.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    println!("max residual |(a-lambda)#(a-lambda)^(-#) - 1| = {max_res:.3e}");
    Ok(())
}

fn numerical(e: Error, cfg: &RunConfig) -> Failure {
    match e {
        Error::Singular { .. } | Error::LambdaInOmega { .. } | Error::Contour(_) => Failure::Numerical(format!(
            "{e}; consider a larger shift c (currently {})",
            cfg.symbol.shift
        )),
        e => e.into(),
    }
}

fn build_contour(cfg: &RunConfig, param: &Parametrix<f64>, fns: &[HFun], c0: f64) -> Result<Contour, Failure> {
    let spec = ContourSpec::for_family(param.sector(), fns, cfg.contour.tol)?
        .with_c0(c0)
        .with_probes(spectral_probes(param, 6))
        .with_initial_npd(cfg.contour.nodes_per_decade);
    Contour::build(spec).map_err(|e| numerical(e, cfg))
}

pub fn calc(cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), Failure> {
    let sector = cfg.sector()?;
    let fns = cfg.family(sector)?;
    let param = parametrix(cfg, seed)?;
    let c0 = estimate_c0(param.operator(), sector)?;
    let contour = build_contour(cfg, &param, &fns, c0)?;
    let oracle = contour.oracle().map_err(|e| numerical(e, cfg))?;
    info!("contour: {} nodes, reference contour: {} nodes", contour.len(), oracle.len());
    let (report, _) = calc_report(&param, &fns, &contour, &oracle).map_err(|e| numerical(e, cfg))?;
    report.write_csv(create(out, "fcalc_report.csv")?)?;
    for r in &report.rows {
        println!("{:<28} |f| = {:.6e}  |f(A)| = {:.6e}  ratio = {:.6e}  discrepancy = {:.3e}", r.label, r.sup_norm, r.oracle_norm, r.ratio, r.discrepancy);
    }
    println!("M = {:.6e}", report.m());
    Ok(())
}

pub fn bip(cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), Failure> {
    let sector = cfg.sector()?;
    let ts = cfg.t_values();
    let param = parametrix(cfg, seed)?;
    let c0 = estimate_c0(param.operator(), sector)?;
    let fns = imaginary_power_family(&ts, cfg.bip.n_reg, sector)?;
    let contour = build_contour(cfg, &param, &fns, c0)?.oracle().map_err(|e| numerical(e, cfg))?;
    let report = imaginary_power_sweep(param.operator(), &ts, cfg.bip.n_reg, &contour).map_err(|e| numerical(e, cfg))?;
    report.write_csv(create(out, "imaginary_powers.csv")?)?;
    for r in &report.rows {
        println!("t = {:>6}  |A^it| = {:.6e}", r.t, r.norm);
    }
    let g = report.growth_rate().unwrap_or(f64::NAN);
    println!("growth rate = {g:.4} (theta = {:.4})", sector.theta());
    Ok(())
}
