//! Named symbols usable from configuration files.
//!
//! | name | symbol | class |
//! |---|---|---|
//! | `bracket_power m` | `<xi>^m` | `(m, 1, 0)` |
//! | `variable_laplace` | `(2 + sin x1)(1 + \|xi\|^2)` | `(2, 1, 0)` |
//! | `rotated_phase w` | `e^{i w} <xi>^2` | `(2, 1, 0)` |
//! | `jordan2` | `[[<xi>^2, <xi>], [0, <xi>^2]]` | `(2, 1, 0)` |
//!
//! A leading `-` negates the preset.

use super::{parse_symbol, SymbolExpr};
use crate::error::{Error, Result};
use crate::symbol::SymbolClassParams;

fn number(spec: &str, arg: Option<&str>) -> Result<f64> {
    arg.and_then(|a| a.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::UnknownPreset(format!("{spec} (expected a numeric argument)")))
}

/// Resolves a preset name for dimension `n`.
pub fn preset(spec: &str, n: usize) -> Result<SymbolExpr> {
    let trimmed = spec.trim();
    let (negate, body) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, trimmed),
    };
    let body = body.replacen("rotated phase", "rotated_phase", 1);
    let mut words = body.split_whitespace();
    let name = words.next().unwrap_or("");
    let arg = words.next();
    if words.next().is_some() {
        return Err(Error::UnknownPreset(spec.to_string()));
    }
    let (text, k, m) = match name {
        "bracket_power" => {
            let m = number(spec, arg)?;
            (format!("bracket(xi)^{m:?}"), 1, m)
        }
        "variable_laplace" if arg.is_none() => {
            let sum: Vec<String> = (1..=n).map(|j| format!("xi{j}^2")).collect();
            (format!("(2 + sin(x1)) * (1 + {})", sum.join(" + ")), 1, 2.0)
        }
        "rotated_phase" => {
            let w = number(spec, arg)?;
            (format!("exp(i * {w:?}) * bracket(xi)^2"), 1, 2.0)
        }
        "jordan2" if arg.is_none() => {
            ("[[bracket(xi)^2, bracket(xi)], [0, bracket(xi)^2]]".to_string(), 2, 2.0)
        }
        _ => return Err(Error::UnknownPreset(spec.to_string())),
    };
    let expr = parse_symbol(&text, n, k)?.with_class(SymbolClassParams::new(m, 1.0, 0.0)?);
    Ok(if negate { expr.negated() } else { expr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn presets_resolve() {
        let a = preset("variable_laplace", 2).unwrap();
        let v = a.eval(&[0.0, 0.0], &[1.0, 2.0]).unwrap()[0];
        assert!((v - Complex64::new(12.0, 0.0)).norm() < 1e-14);
        let b = preset("-bracket_power 2", 1).unwrap();
        assert!((b.eval(&[0.0], &[1.0]).unwrap()[0] + 2.0).norm() < 1e-14);
        let r = preset("rotated phase 0.5", 1).unwrap();
        assert!((r.eval(&[0.0], &[0.0]).unwrap()[0] - Complex64::from_polar(1.0, 0.5)).norm() < 1e-15);
        assert_eq!(preset("jordan2", 1).unwrap().k(), 2);
        assert!(matches!(preset("nope", 1), Err(Error::UnknownPreset(_))));
        assert!(preset("bracket_power", 1).is_err());
    }
}
