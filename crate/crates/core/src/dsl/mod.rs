//! Symbol expressions: parsing, evaluation and exact differentiation.
//!
//! Grammar is documented in [`parse`]. Two derivative routes exist:
//! [`differentiate`] rewrites the tree, [`SymbolExpr::eval_jet`] propagates
//! truncated Taylor jets through it.

pub mod ast;
mod eval;
pub mod jet;
pub mod parse;
pub mod presets;

use std::fmt;
use std::sync::Arc;

use num_complex::{Complex, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use ast::{Func, Node, Var};
pub use jet::{Jet, JetSpace, MatJet};
pub use presets::preset;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::symbol::SymbolClassParams;
use eval::{Evaluator, JetDomain, PointDomain};

/// Default cap on `|alpha| + |beta|`.
pub const DEFAULT_MAX_ORDER: usize = 8;

pub const VALIDATION_SEED: u64 = 0x5eed_a11c;

/// A scalar (`k = 1`) or `k x k` matrix symbol `a(x, xi)` in `n` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolExpr {
    n: usize,
    k: usize,
    entries: Vec<Node>,
    class: Option<SymbolClassParams>,
    max_order: usize,
}

/// Parses and validates a symbol. See [`parse`] for the grammar.
pub fn parse_symbol(text: &str, n: usize, k: usize) -> Result<SymbolExpr> {
    if n == 0 || k == 0 {
        return Err(Error::Shape(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    SymbolExpr::from_entries(n, k, parse::parse_entries(text, n, k)?)
}

/// `d^alpha_xi d^beta_x expr`, entrywise.
pub fn differentiate(expr: &SymbolExpr, alpha: &[usize], beta: &[usize]) -> Result<SymbolExpr> {
    expr.differentiate(alpha, beta)
}

impl SymbolExpr {
    /// Builds from row-major entry trees and runs the sampling validation.
    pub fn from_entries(n: usize, k: usize, entries: Vec<Node>) -> Result<Self> {
        if entries.len() != k * k {
            return Err(Error::Shape(format!("expected {} entries, got {}", k * k, entries.len())));
        }
        for e in &entries {
            let (mx, mxi) = e.max_axes();
            for (name, m) in [("x", mx), ("xi", mxi)] {
                if let Some(j) = m.filter(|&j| j >= n) {
                    return Err(Error::DimensionIndex { name: format!("{name}{}", j + 1), index: j + 1, n });
                }
            }
        }
        let s = Self { n, k, entries, class: None, max_order: DEFAULT_MAX_ORDER };
        s.validate()?;
        Ok(s)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[Node] {
        &self.entries
    }

    pub fn entry(&self, r: usize, c: usize) -> &Node {
        &self.entries[r * self.k + c]
    }

    pub fn class(&self) -> Option<SymbolClassParams> {
        self.class
    }

    pub fn with_class(mut self, class: SymbolClassParams) -> Self {
        self.class = Some(class);
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn with_max_order(mut self, d: usize) -> Self {
        self.max_order = d;
        self
    }

    pub fn is_x_independent(&self) -> bool {
        self.entries.iter().all(Node::is_x_free)
    }

    /// Entrywise values (row-major) at `(x, xi)`.
    pub fn eval<T: Real>(&self, x: &[T], xi: &[T]) -> Result<Vec<Complex<T>>> {
        self.check_point(x.len(), xi.len());
        let dom = PointDomain { x, xi };
        let ev = Evaluator { dom: &dom, x, xi };
        self.entries.iter().map(|e| ev.eval_checked(e)).collect()
    }

    /// Taylor jet at `(x, xi)` in the variables `(xi_1..xi_n, x_1..x_n)`.
    pub fn eval_jet<T: Real>(&self, space: &Arc<JetSpace>, x: &[T], xi: &[T]) -> Result<MatJet<T>> {
        self.check_point(x.len(), xi.len());
        assert_eq!(space.nvars(), 2 * self.n, "jet space must have 2n variables");
        let dom = JetDomain { space, x, xi };
        let ev = Evaluator { dom: &dom, x, xi };
        let jets = self.entries.iter().map(|e| ev.eval_checked(e)).collect::<Result<Vec<_>>>()?;
        Ok(MatJet::from_entries(&jets, self.k))
    }

    fn check_point(&self, nx: usize, nxi: usize) {
        assert!(nx == self.n && nxi == self.n, "point dimension {nx}/{nxi} does not match n = {}", self.n);
    }

    pub fn differentiate(&self, alpha: &[usize], beta: &[usize]) -> Result<SymbolExpr> {
        if alpha.len() != self.n || beta.len() != self.n {
            return Err(Error::Shape(format!("multi-indices must have length n = {}", self.n)));
        }
        let order: usize = alpha.iter().chain(beta).sum();
        if order > self.max_order {
            return Err(Error::DerivativeOrder { order, max: self.max_order });
        }
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut d = e.clone();
                for (j, &a) in alpha.iter().enumerate() {
                    for _ in 0..a {
                        d = d.diff(Var::Xi(j));
                    }
                }
                for (j, &b) in beta.iter().enumerate() {
                    for _ in 0..b {
                        d = d.diff(Var::X(j));
                    }
                }
                d
            })
            .collect();
        Ok(SymbolExpr { entries, ..self.clone() })
    }

    /// `a + c I`; the class is kept.
    pub fn shifted(&self, c: Complex64) -> SymbolExpr {
        let mut out = self.clone();
        for r in 0..self.k {
            let e = &mut out.entries[r * self.k + r];
            *e = ast::add(e.clone(), Node::Const(c));
        }
        out
    }

    /// `c a`; the class is kept.
    pub fn scaled(&self, c: Complex64) -> SymbolExpr {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = ast::mul(Node::Const(c), e.clone());
        }
        out
    }

    pub fn negated(&self) -> SymbolExpr {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = ast::neg(e.clone());
        }
        out
    }

    fn validate(&self) -> Result<()> {
        self.validate_with_seed(VALIDATION_SEED)
    }

    /// Samples random points: evaluation must succeed everywhere (branch
    /// cuts are reported with their location) and be 2π-periodic in x.
    pub fn validate_with_seed(&self, seed: u64) -> Result<()> {
        let n = self.n;
        let tau = std::f64::consts::TAU;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![0.0; n], vec![0.0; n])];
        for axis in 0..n {
            for s in [1.0, -1.0] {
                let mut xi = vec![0.0; n];
                xi[axis] = s * 1e4;
                points.push((vec![0.0; n], xi));
            }
        }
        for i in 0..96 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..tau)).collect();
            let xi: Vec<f64> = if i % 2 == 0 {
                (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
            } else {
                (0..n)
                    .map(|_| {
                        let mag = 10f64.powf(rng.gen_range(-2.0..4.0));
                        if rng.gen_bool(0.5) { mag } else { -mag }
                    })
                    .collect()
            };
            points.push((x, xi));
        }
        for (x, xi) in &points {
            let far = xi.iter().any(|q| q.abs() > 10.0);
            let v = match self.eval(x, xi) {
                Err(Error::NonFinite { .. }) if far => continue,
                r => r?,
            };
            if far || self.is_x_independent() {
                continue;
            }
            for axis in 0..n {
                let mut xs = x.clone();
                xs[axis] += tau;
                let w = self.eval(&xs, xi)?;
                for (a, b) in v.iter().zip(&w) {
                    let defect = (a - b).norm();
                    if defect > 1e-12 * (1.0 + a.norm()) {
                        return Err(Error::NotPeriodic { axis: axis + 1, x: x.clone(), defect });
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 1 {
            return write!(f, "{}", self.entries[0]);
        }
        write!(f, "[")?;
        for r in 0..self.k {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.k {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entry(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2, PI};

    fn at(s: &SymbolExpr, x: f64, xi: f64) -> Complex64 {
        s.eval(&[x], &[xi]).unwrap()[0]
    }

    #[test]
    fn parse_examples() {
        let b = parse_symbol("bracket(xi)^2", 1, 1).unwrap();
        assert!((at(&b, 0.0, 0.0) - 1.0).norm() < 1e-15);
        let a = parse_symbol("(2+sin(x1))*(1+xi1^2)", 1, 1).unwrap();
        assert!((at(&a, FRAC_PI_2, 1.0) - 6.0).norm() < 1e-14);
        match parse_symbol("2+*x1", 1, 1) {
            Err(Error::Parse(e)) => assert_eq!(e.offset, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_non_periodic_and_branch_cuts() {
        assert!(matches!(parse_symbol("x1*xi1", 1, 1), Err(Error::NotPeriodic { .. })));
        assert!(matches!(parse_symbol("log(xi1)", 1, 1), Err(Error::BranchCut { .. })));
        assert!(matches!(parse_symbol("sqrt(sin(x1))", 1, 1), Err(Error::BranchCut { .. })));
        assert!(parse_symbol("log(bracket(xi))", 1, 1).is_ok());
        assert!(parse_symbol("sqrt(2+cos(x1))*bracket(xi1)", 1, 1).is_ok());
    }

    #[test]
    fn differentiate_examples() {
        let b = parse_symbol("bracket(xi)^2", 1, 1).unwrap();
        assert!((at(&b.differentiate(&[1], &[0]).unwrap(), 0.0, 3.0) - 6.0).norm() < 1e-13);
        let c = parse_symbol("2+sin(x1)", 1, 1).unwrap();
        assert!((at(&c.differentiate(&[0], &[1]).unwrap(), 0.0, 0.0) - 1.0).norm() < 1e-15);
        let a = parse_symbol("(2+sin(x1))*(1+xi1^2)", 1, 1).unwrap();
        assert!((at(&a.differentiate(&[1], &[1]).unwrap(), 0.0, 1.0) - 2.0).norm() < 1e-14);
        assert!(matches!(a.differentiate(&[5], &[4]), Err(Error::DerivativeOrder { order: 9, max: 8 })));
    }

    #[test]
    fn principal_log_and_complex_powers() {
        let s = parse_symbol("exp(i*pi*log(bracket(xi)^2))", 1, 1).unwrap();
        let xi = (E - 1.0).sqrt();
        assert!((at(&s, 0.0, xi) + 1.0).norm() < 1e-12);
    }

    #[test]
    fn jets_agree_with_symbolic_derivatives() {
        let a = parse_symbol("exp(cos(x1)) * bracket(xi)^1.5 / (3 + sin(2*x1) * xi1)", 1, 1).unwrap();
        let space = JetSpace::new(2, 4);
        let (x, xi) = (0.7, 1.3);
        let j = a.eval_jet(&space, &[x], &[xi]).unwrap();
        for al in 0..=2 {
            for be in 0..=2 {
                let sym = at(&a.differentiate(&[al], &[be]).unwrap(), x, xi);
                let jet = j.partial(&[al, be]).unwrap()[0];
                assert!((sym - jet).norm() <= 1e-12 * (1.0 + sym.norm()), "{al} {be}: {sym} vs {jet}");
            }
        }
    }

    #[test]
    fn display_round_trips() {
        for text in ["-(2+sin(x))*xi^2 - 3/(1+xi^2)", "exp(i*0.3)*bracket(xi)^2", "pow(bracket(xi), 0.5) - -1"] {
            let a = parse_symbol(text, 1, 1).unwrap();
            let b = parse_symbol(&a.to_string(), 1, 1).unwrap();
            for (x, xi) in [(0.1, 0.0), (2.0, -3.5), (PI, 17.0)] {
                assert_eq!(at(&a, x, xi), at(&b, x, xi));
            }
        }
    }

    #[test]
    fn f32_evaluation() {
        let a = parse_symbol("(2+sin(x1))*(1+xi1^2)", 1, 1).unwrap();
        let v = a.eval::<f32>(&[std::f32::consts::FRAC_PI_2], &[1.0]).unwrap()[0];
        assert!((v.re - 6.0).abs() < 1e-5);
    }
}
