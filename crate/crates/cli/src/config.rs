//! TOML run configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hypocalc::dsl::{parse_symbol, preset, SymbolExpr};
use hypocalc::funcalc::{HFun, HKind, HinfFun};
use hypocalc::hypo::Sector;
use hypocalc::parametrix::shift;
use hypocalc::symbol::{SymbolClassParams, TorusGrid};
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub sector: SectorConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub hypo: HypoConfig,
    #[serde(default)]
    pub parametrix: ParametrixSection,
    #[serde(default)]
    pub contour: ContourConfig,
    #[serde(default)]
    pub functions: FunctionsConfig,
    #[serde(default)]
    pub bip: BipConfig,
    /// Output directory; `--out` takes precedence.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    /// Preset name, e.g. `"variable_laplace"` or `"-bracket_power 2"`.
    pub preset: Option<String>,
    /// Expression in the symbol language.
    pub expr: Option<String>,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "one")]
    pub k: usize,
    /// Order `m`; required for expressions, overrides the preset order.
    pub m: Option<f64>,
    #[serde(default = "one_f")]
    pub rho: f64,
    #[serde(default)]
    pub delta: f64,
    /// Shift `c` added to the symbol.
    #[serde(default)]
    pub shift: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub theta: Option<f64>,
    pub theta_over_pi: Option<f64>,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self { theta: None, theta_over_pi: Some(0.5) }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_p")]
    pub p: usize,
    pub xi_max: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { p: default_p(), xi_max: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypoConfig {
    /// Spectral gap radius `c`.
    #[serde(default = "half")]
    pub c: f64,
    /// Frequency cutoff `C`.
    #[serde(default)]
    pub cutoff: f64,
    #[serde(default = "two")]
    pub max_order: usize,
    #[serde(default = "sixteen")]
    pub per_ray: usize,
}

impl Default for HypoConfig {
    fn default() -> Self {
        Self { c: half(), cutoff: 0.0, max_order: two(), per_ray: sixteen() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrixSection {
    #[serde(default = "three")]
    pub order: usize,
    /// Excision cutoff `C` of the parametrix.
    #[serde(default)]
    pub cutoff: f64,
    #[serde(default = "ten")]
    pub lambda_min: f64,
    #[serde(default = "ten_k")]
    pub lambda_max: f64,
    /// Radii per boundary ray.
    #[serde(default = "twenty")]
    pub samples: usize,
}

impl Default for ParametrixSection {
    fn default() -> Self {
        Self { order: three(), cutoff: 0.0, lambda_min: ten(), lambda_max: ten_k(), samples: twenty() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Starting Gauss-Legendre nodes per decade.
    #[serde(default = "four")]
    pub nodes_per_decade: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { tol: default_tol(), nodes_per_decade: four() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionsConfig {
    /// Entries `"spower S"`, `"imag T N"` or `"resolvent RE IM"`.
    #[serde(default = "default_family")]
    pub family: Vec<String>,
    #[serde(default = "one_f")]
    pub scale: f64,
}

impl Default for FunctionsConfig {
    fn default() -> Self {
        Self { family: default_family(), scale: 1.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipConfig {
    #[serde(default = "minus_five")]
    pub t_min: f64,
    #[serde(default = "five")]
    pub t_max: f64,
    #[serde(default = "one_f")]
    pub t_step: f64,
    #[serde(default = "default_n_reg")]
    pub n_reg: f64,
}

impl Default for BipConfig {
    fn default() -> Self {
        Self { t_min: minus_five(), t_max: five(), t_step: 1.0, n_reg: default_n_reg() }
    }
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn three() -> usize {
    3
}
fn four() -> usize {
    4
}
fn sixteen() -> usize {
    16
}
fn twenty() -> usize {
    20
}
fn one_f() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn ten() -> f64 {
    10.0
}
fn ten_k() -> f64 {
    1e4
}
fn five() -> f64 {
    5.0
}
fn minus_five() -> f64 {
    -5.0
}
fn default_p() -> usize {
    128
}
fn default_tol() -> f64 {
    1e-9
}
fn default_n_reg() -> f64 {
    1e6
}
fn default_family() -> Vec<String> {
    ["spower 0.25", "spower 0.5", "spower 1", "spower 2"].iter().map(|s| s.to_string()).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> anyhow::Result<()> {
        if self.symbol.preset.is_some() == self.symbol.expr.is_some() {
            bail!("[symbol] needs exactly one of `preset` or `expr`");
        }
        if self.symbol.expr.is_some() && self.symbol.m.is_none() {
            bail!("[symbol] expressions need the order `m`");
        }
        if !self.grid.p.is_power_of_two() || self.grid.p < 4 {
            bail!("[grid] p must be a power of two >= 4, got {}", self.grid.p);
        }
        if self.parametrix.order == 0 {
            bail!("[parametrix] order N must be >= 1");
        }
        if !(self.parametrix.lambda_min > 0.0 && self.parametrix.lambda_max > self.parametrix.lambda_min) {
            bail!("[parametrix] needs 0 < lambda_min < lambda_max");
        }
        if !(self.contour.tol > 0.0) || self.contour.nodes_per_decade == 0 {
            bail!("[contour] needs tol > 0 and nodes_per_decade >= 1");
        }
        if !(self.bip.t_step > 0.0 && self.bip.t_max >= self.bip.t_min && self.bip.n_reg >= 1.0) {
            bail!("[bip] needs t_step > 0, t_max >= t_min and n_reg >= 1");
        }
        if !(self.symbol.shift >= 0.0) {
            bail!("[symbol] shift must be >= 0");
        }
        self.sector()?;
        Ok(())
    }

    pub fn sector(&self) -> anyhow::Result<Sector> {
        let theta = match (self.sector.theta, self.sector.theta_over_pi) {
            (Some(t), None) => t,
            (None, Some(q)) => q * PI,
            (None, None) => 0.5 * PI,
            (Some(_), Some(_)) => bail!("[sector] give either theta or theta_over_pi"),
        };
        Ok(Sector::new(theta)?)
    }

    pub fn grid(&self) -> anyhow::Result<TorusGrid> {
        let g = match self.grid.xi_max {
            Some(w) => TorusGrid::with_window(self.symbol.n, self.grid.p, w)?,
            None => TorusGrid::new(self.symbol.n, self.grid.p)?,
        };
        Ok(g)
    }

    /// The symbol with its class, shifted by `c`, validated with `seed`.
    pub fn symbol(&self, seed: u64) -> anyhow::Result<SymbolExpr> {
        let s = &self.symbol;
        let base = match (&s.preset, &s.expr) {
            (Some(p), _) => preset(p, s.n)?,
            (None, Some(e)) => parse_symbol(e, s.n, s.k)?,
            (None, None) => unreachable!("checked"),
        };
        let m = s.m.or(base.class().map(|c| c.m)).unwrap_or(0.0);
        let class = SymbolClassParams::new(m, s.rho, s.delta)?;
        let a = if s.shift > 0.0 { shift(&base, s.shift)? } else { base };
        a.validate_with_seed(seed)?;
        Ok(a.with_class(class))
    }

    pub fn family(&self, sector: Sector) -> anyhow::Result<Vec<HFun>> {
        if self.functions.family.is_empty() {
            bail!("[functions] family is empty");
        }
        let scale = self.functions.scale;
        self.functions
            .family
            .iter()
            .map(|spec| {
                let f = parse_function(spec, sector)?;
                if scale == 1.0 {
                    Ok(f)
                } else {
                    Ok(f.scaled(Complex64::new(scale, 0.0))?)
                }
            })
            .collect()
    }

    pub fn t_values(&self) -> Vec<f64> {
        let b = &self.bip;
        let count = ((b.t_max - b.t_min) / b.t_step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| b.t_min + i as f64 * b.t_step).collect()
    }
}

fn parse_function(spec: &str, sector: Sector) -> anyhow::Result<HFun> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    let num = |i: usize| -> anyhow::Result<f64> {
        let w = words.get(i).with_context(|| format!("function `{spec}`: missing argument {i}"))?;
        w.parse::<f64>().with_context(|| format!("function `{spec}`: bad number `{w}`"))
    };
    let f = match words.first().copied() {
        Some("spower") if words.len() == 2 => HFun::s_power(num(1)?, sector)?,
        Some("imag") if words.len() == 3 => HinfFun::imag_power(num(1)?, sector)?.regularized(num(2)?)?,
        Some("resolvent") if words.len() == 3 => {
            HFun::new(HKind::ResolventProbe { mu: Complex64::new(num(1)?, num(2)?) }, sector)?
        }
        _ => bail!("unknown function `{spec}` (expected `spower S`, `imag T N` or `resolvent RE IM`)"),
    };
    Ok(f)
}
