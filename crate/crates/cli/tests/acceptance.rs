//! Acceptance suite on the default scene. Prints one line per criterion and
//! exits nonzero when any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use hypocalc::compose::{compose_exact, leibniz_truncated};
use hypocalc::dsl::parse_symbol;
use hypocalc::funcalc::{
    calc_report, default_family, estimate_c0, f_of_symbol_many, family_contour, hinf_bound_probe, imaginary_power_family,
    imaginary_power_sweep, resolvent_sweep, seminorm_bounds, uniformity_family, Contour, ContourSpec, HFun,
};
use hypocalc::hypo::Sector;
use hypocalc::parametrix::{Parametrix, ParametrixConfig};
use hypocalc::symbol::{sample, SymbolClassParams, TorusGrid};
use hypocalc::{Parametrix64, C64};

const DEFAULT: &str = "(2+sin(x1))*(1+xi1^2)+5";
const P: usize = 128;

// pinned tolerances
const CAUCHY_TOL: f64 = 1e-8;
const COMPOSE_TOL: f64 = 1e-10;
const COMPOSE_MARGIN: usize = 8;
const DECAY_PER_RAY: usize = 80;
const RESIDUAL_TOL: f64 = 1e-10;
const R_SLOPE: (f64, f64) = (-1.15, -0.85);
const S_SLOPE: (f64, f64) = (-2.2, -1.8);
const RESOLVENT_SLOPE: (f64, f64) = (-1.1, -0.9);
const RESOLVENT_STABILITY: f64 = 0.05;
const DISCREPANCY_TOL: f64 = 1e-6;
const UNIFORMITY_TOL: f64 = 0.10;
const BIP_SLACK: f64 = 0.2;
const X_INDEPENDENT_TOL: f64 = 1e-8;
const ROUNDOFF: f64 = 1e-14;

type Outcome = Result<String, String>;

fn sector() -> Sector {
    Sector::new(FRAC_PI_2).unwrap()
}

fn scene(text: &str, p: usize) -> Result<Parametrix64, String> {
    let a = parse_symbol(text, 1, 1).map_err(|e| e.to_string())?.with_class(SymbolClassParams::new(2.0, 1.0, 0.0).unwrap());
    let g = TorusGrid::new(1, p).map_err(|e| e.to_string())?;
    Parametrix::new(&a, &g, sector(), ParametrixConfig::new(3)).map_err(|e| e.to_string())
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn cauchy() -> Outcome {
    let f = HFun::s_power(1.0, sector()).map_err(|e| e.to_string())?;
    let spec = ContourSpec::new(sector(), f.decay(), 1e-9).map_err(|e| e.to_string())?.with_probes([0.5, 1.0, 4.0, 20.0]);
    let c = Contour::build(spec).map_err(|e| e.to_string())?;
    let err = [0.5, 1.0, 4.0, 20.0]
        .iter()
        .map(|&z| {
            let z0 = C64::new(z, 0.0);
            let exact = z0 / ((1.0 + z0) * (1.0 + z0));
            (c.cauchy(|l| f.eval(l), z0) - exact).norm()
        })
        .fold(0.0, f64::max);
    verdict(err <= CAUCHY_TOL, format!("max error {err:.2e} over {} nodes", c.len()))
}

fn composition() -> Outcome {
    let g = TorusGrid::new(1, P).unwrap();
    let sym = |t: &str| parse_symbol(t, 1, 1).map_err(|e| e.to_string());
    let fs = [
        DEFAULT,
        "3 + cos(x1)*xi1 + (1 + exp(i*x1))*xi1^2",
        "xi1^2 + sin(2*x1)*xi1",
    ];
    let bs = [
        "(2 + sin(x1)) * bracket(xi)^-1",
        "exp(i*x1) * bracket(xi)^0.5 + cos(3*x1) * xi1",
        "(1 + 0.5*cos(x1)) / (1 + xi1^2) + 7",
    ];
    let mut worst = 0.0f64;
    for at in fs {
        let a = sym(at)?;
        let ta = sample::<f64>(&a, &g).map_err(|e| e.to_string())?;
        for bt in bs {
            let b = sample::<f64>(&sym(bt)?, &g).map_err(|e| e.to_string())?;
            let exact = compose_exact(&ta, &b).map_err(|e| e.to_string())?;
            let expansion = leibniz_truncated(&a, &b, 3).map_err(|e| e.to_string())?;
            let diff = exact.max_diff(&expansion, COMPOSE_MARGIN).map_err(|e| e.to_string())?;
            worst = worst.max(diff / exact.sup_norm(COMPOSE_MARGIN));
        }
    }
    verdict(worst <= COMPOSE_TOL, format!("max sup difference {worst:.2e} relative to sup |a#b| (margin {COMPOSE_MARGIN})"))
}

fn residual(p: &Parametrix64) -> Outcome {
    let r = p.find_r(-2, 16).map_err(|e| e.to_string())?.r;
    let lambdas = p.sector().ray_samples(r, 1e4, 10);
    let fam = p.sweep(&lambdas, r, 1e-15, false).map_err(|e| e.to_string())?;
    let worst = fam.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    verdict(worst <= RESIDUAL_TOL && fam.rows.len() == 20, format!("R = {r}, max residual {worst:.2e} at {} lambdas", fam.rows.len()))
}

fn decay(p: &Parametrix64) -> Outcome {
    let lambdas = p.sector().ray_samples(10.0, 1e4, DECAY_PER_RAY);
    let fam = p.sweep(&lambdas, 0.0, 1e-15, false).map_err(|e| e.to_string())?;
    let fit = fam.decay_fit(10.0, 1e4);
    let (r, s) = (fit.r.ok_or("no r fit")?, fit.s.ok_or("no s fit")?);
    let ok = (R_SLOPE.0..=R_SLOPE.1).contains(&r) && (S_SLOPE.0..=S_SLOPE.1).contains(&s);
    verdict(ok, format!("r slope {r:.3}, s slope {s:.3}, {} lambdas", fam.rows.len()))
}

fn resolvent(p: &Parametrix64) -> Outcome {
    let a = p.operator();
    let coarse = resolvent_sweep(a, sector(), 1e-2, 1e7, 40).map_err(|e| e.to_string())?;
    let fine = resolvent_sweep(a, sector(), 1e-2, 1e7, 80).map_err(|e| e.to_string())?;
    let slope = fine.slope().ok_or("no fit")?;
    let change = rel_change(coarse.sup_weighted(), fine.sup_weighted());
    let ok = (RESOLVENT_SLOPE.0..=RESOLVENT_SLOPE.1).contains(&slope) && fine.sup_weighted().is_finite() && change < RESOLVENT_STABILITY;
    verdict(ok, format!("slope {slope:.3}, sup <l>|R(l)| {:.4} (change {:.2}% on doubling)", fine.sup_weighted(), 100.0 * change))
}

fn equivalence(p: &Parametrix64, c0: f64) -> Outcome {
    let fns = default_family(sector()).map_err(|e| e.to_string())?;
    let c = family_contour(p, &fns, 1e-9, c0).map_err(|e| e.to_string())?;
    let oracle = c.oracle().map_err(|e| e.to_string())?;
    let (rep, _) = calc_report(p, &fns, &c, &oracle).map_err(|e| e.to_string())?;
    let d = rep.max_discrepancy();
    verdict(d <= DISCREPANCY_TOL, format!("max relative discrepancy {d:.2e}, M = {:.4}, {} nodes", rep.m(), c.len()))
}

fn uniformity(p: &Parametrix64, c0: f64) -> Outcome {
    let f12 = uniformity_family(sector(), 12, 1e6).map_err(|e| e.to_string())?;
    let f24 = uniformity_family(sector(), 24, 1e6).map_err(|e| e.to_string())?;
    let all: Vec<HFun> = f12.iter().chain(&f24).cloned().collect();
    let c = family_contour(p, &all, 1e-9, c0).map_err(|e| e.to_string())?;
    let oracle = c.oracle().map_err(|e| e.to_string())?;
    let m12 = hinf_bound_probe(p.operator(), &f12, &oracle).map_err(|e| e.to_string())?.m();
    let m24 = hinf_bound_probe(p.operator(), &f24, &oracle).map_err(|e| e.to_string())?.m();
    let calc = f_of_symbol_many(p, &all, &c, false).map_err(|e| e.to_string())?;
    let seminorms = [(vec![0], vec![0]), (vec![1], vec![0]), (vec![0], vec![1])];
    let margin = P / 4;
    let q12 = seminorm_bounds(&calc.f_a[..12], &f12, &seminorms, margin).map_err(|e| e.to_string())?;
    let q24 = seminorm_bounds(&calc.f_a[12..], &f24, &seminorms, margin).map_err(|e| e.to_string())?;
    let mut changes = vec![rel_change(m12, m24)];
    changes.extend(q12.iter().zip(&q24).map(|(a, b)| rel_change(a.m(), b.m())));
    let worst = changes.iter().copied().fold(0.0, f64::max);
    let qs: Vec<String> = q12.iter().zip(&q24).map(|(a, b)| format!("{:.4}->{:.4}", a.m(), b.m())).collect();
    verdict(
        worst < UNIFORMITY_TOL,
        format!("M {m12:.4}->{m24:.4}, M_q [{}], max change {:.2}%", qs.join(", "), 100.0 * worst),
    )
}

fn bip(p: &Parametrix64, c0: f64) -> Outcome {
    let ts: Vec<f64> = (-5..=5).map(f64::from).collect();
    let fns = imaginary_power_family(&ts, 1e6, sector()).map_err(|e| e.to_string())?;
    let c = family_contour(p, &fns, 1e-9, c0).map_err(|e| e.to_string())?.oracle().map_err(|e| e.to_string())?;
    let rep = imaginary_power_sweep(p.operator(), &ts, 1e6, &c).map_err(|e| e.to_string())?;
    let g = rep.growth_rate().ok_or("no fit")?;
    verdict(g <= sector().theta() + BIP_SLACK, format!("growth rate {g:.4}, theta + slack {:.4}", sector().theta() + BIP_SLACK))
}

fn run_cli(sub: &str, config: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_hypocalc"))
        .args([sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{sub} exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let default = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let text = std::fs::read_to_string(&default).map_err(|e| e.to_string())?;
    let small = dir.path().join("small.toml");
    std::fs::write(&small, text.replace("p = 128", "p = 32")).map_err(|e| e.to_string())?;
    let runs = [("check", &default), ("parametrix", &default), ("calc", &small), ("bip", &small)];
    let mut compared = 0;
    for (sub, cfg) in runs {
        let (a, b) = (dir.path().join(format!("{sub}-a")), dir.path().join(format!("{sub}-b")));
        run_cli(sub, cfg, &a)?;
        run_cli(sub, cfg, &b)?;
        for entry in std::fs::read_dir(&a).map_err(|e| e.to_string())? {
            let name = entry.map_err(|e| e.to_string())?.file_name();
            let x = std::fs::read(a.join(&name)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(&name)).map_err(|e| e.to_string())?;
            if x != y {
                return Err(format!("{} differs between runs", name.to_string_lossy()));
            }
            compared += 1;
        }
    }
    verdict(compared == 4, format!("{compared} CSVs byte-identical across two runs"))
}

fn x_independent() -> Outcome {
    let p = scene("bracket(xi)^2+1", P)?;
    let mut bj_max = 0.0f64;
    let mut rn_max = 0.0f64;
    for lam in p.sector().ray_samples(1.0, 1e4, 3) {
        let bs = p.bj_recursion(lam).map_err(|e| e.to_string())?;
        for b in &bs[1..] {
            bj_max = bj_max.max(b.sup_norm(0));
        }
        rn_max = rn_max.max(p.remainder_rn(lam).map_err(|e| e.to_string())?.sup_norm(4));
    }
    let fns = default_family(sector()).map_err(|e| e.to_string())?;
    let c0 = estimate_c0(p.operator(), sector()).map_err(|e| e.to_string())?;
    let c = family_contour(&p, &fns, 1e-10, c0).map_err(|e| e.to_string())?;
    let calc = f_of_symbol_many(&p, &fns, &c, false).map_err(|e| e.to_string())?;
    let a = sample::<f64>(&parse_symbol("bracket(xi)^2+1", 1, 1).unwrap(), p.grid()).map_err(|e| e.to_string())?;
    let mut pointwise = 0.0f64;
    for (f, fa) in fns.iter().zip(&calc.f_a) {
        for (v, av) in fa.values().iter().zip(a.values()) {
            pointwise = pointwise.max((v - f.eval(*av)).norm());
        }
    }
    let ok = bj_max <= ROUNDOFF && rn_max <= ROUNDOFF && pointwise <= X_INDEPENDENT_TOL;
    verdict(ok, format!("max |b_j|, j >= 1: {bj_max:.1e}; max |r^N|: {rn_max:.1e}; max |f(a) - f o a|: {pointwise:.2e}"))
}

fn main() -> ExitCode {
    let p = match scene(DEFAULT, P) {
        Ok(p) => p,
        Err(e) => {
            println!("default scene failed to build: {e}");
            return ExitCode::FAILURE;
        }
    };
    let c0 = match estimate_c0(p.operator(), sector()) {
        Ok(c) => c,
        Err(e) => {
            println!("c0 estimate failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Cauchy certificate", Box::new(cauchy)),
        ("composition exactness", Box::new(composition)),
        ("parametrix residual", Box::new(|| residual(&p))),
        ("remainder decay", Box::new(|| decay(&p))),
        ("resolvent bound", Box::new(|| resolvent(&p))),
        ("symbol/operator equivalence", Box::new(|| equivalence(&p, c0))),
        ("uniformity", Box::new(|| uniformity(&p, c0))),
        ("bounded imaginary powers", Box::new(|| bip(&p, c0))),
        ("determinism", Box::new(determinism)),
        ("x-independent suite", Box::new(x_independent)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {tag} {name} ({detail}) [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
