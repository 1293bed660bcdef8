use std::fmt;

use num_complex::Complex64;

/// Elementary functions of the symbol language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    /// `bracket(u) = (1 + u^2)^(1/2)`
    Bracket,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Bracket => "bracket",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "bracket" => Func::Bracket,
            _ => return None,
        })
    }
}

/// Differentiation variable. Axes are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    Xi(usize),
}

/// Expression tree. Constants are stored in double precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(Complex64),
    X(usize),
    Xi(usize),
    /// `<xi>` over all axes.
    BracketXi,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn real(v: f64) -> Self {
        Node::Const(Complex64::new(v, 0.0))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Value of a subtree built only from constants and arithmetic.
    pub fn fold_const(&self) -> Option<Complex64> {
        Some(match self {
            Node::Const(c) => *c,
            Node::Neg(a) => -a.fold_const()?,
            Node::Add(a, b) => a.fold_const()? + b.fold_const()?,
            Node::Sub(a, b) => a.fold_const()? - b.fold_const()?,
            Node::Mul(a, b) => a.fold_const()? * b.fold_const()?,
            Node::Div(a, b) => a.fold_const()? / b.fold_const()?,
            _ => return None,
        })
    }

    fn is_const(&self, v: f64) -> bool {
        matches!(self, Node::Const(c) if c.re == v && c.im == 0.0)
    }

    /// Largest zero-based x axis and xi axis referenced, if any.
    pub fn max_axes(&self) -> (Option<usize>, Option<usize>) {
        fn merge(a: Option<usize>, b: Option<usize>) -> Option<usize> {
            match (a, b) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, None) => x,
                (None, y) => y,
            }
        }
        match self {
            Node::Const(_) | Node::BracketXi => (None, None),
            Node::X(j) => (Some(*j), None),
            Node::Xi(j) => (None, Some(*j)),
            Node::Neg(a) | Node::Call(_, a) => a.max_axes(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                let (ax, aξ) = a.max_axes();
                let (bx, bξ) = b.max_axes();
                (merge(ax, bx), merge(aξ, bξ))
            }
        }
    }

    /// True when the tree does not reference any x variable.
    pub fn is_x_free(&self) -> bool {
        self.max_axes().0.is_none()
    }

    /// Exact partial derivative, lightly simplified.
    pub fn diff(&self, v: Var) -> Node {
        match self {
            Node::Const(_) => Node::real(0.0),
            Node::X(j) => Node::real(if v == Var::X(*j) { 1.0 } else { 0.0 }),
            Node::Xi(j) => Node::real(if v == Var::Xi(*j) { 1.0 } else { 0.0 }),
            Node::BracketXi => match v {
                Var::Xi(j) => div(Node::Xi(j), Node::BracketXi),
                Var::X(_) => Node::real(0.0),
            },
            Node::Neg(a) => neg(a.diff(v)),
            Node::Add(a, b) => add(a.diff(v), b.diff(v)),
            Node::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Node::Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Node::Div(a, b) => {
                let num = sub(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v)));
                div(num, pow((**b).clone(), Node::real(2.0)))
            }
            Node::Pow(a, p) => {
                let da = a.diff(v);
                match p.fold_const() {
                    Some(c) => mul(
                        mul(Node::Const(c), pow((**a).clone(), Node::Const(c - 1.0))),
                        da,
                    ),
                    None => {
                        let dp = p.diff(v);
                        let inner = add(
                            mul(dp, call(Func::Log, (**a).clone())),
                            div(mul((**p).clone(), da), (**a).clone()),
                        );
                        mul(self.clone(), inner)
                    }
                }
            }
            Node::Call(f, a) => {
                let da = a.diff(v);
                if da.is_const(0.0) {
                    return Node::real(0.0);
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(Node::real(1.0), a),
                    Func::Sqrt => div(Node::real(0.5), call(Func::Sqrt, a)),
                    Func::Bracket => div(a.clone(), call(Func::Bracket, a)),
                };
                mul(outer, da)
            }
        }
    }
}

pub fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        a => Node::Neg(Box::new(a)),
    }
}

pub fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x + y),
        _ if a.is_const(0.0) => b,
        _ if b.is_const(0.0) => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x - y),
        _ if b.is_const(0.0) => a,
        _ if a.is_const(0.0) => neg(b),
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x * y),
        _ if a.is_const(0.0) || b.is_const(0.0) => Node::real(0.0),
        _ if a.is_const(1.0) => b,
        _ if b.is_const(1.0) => a,
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        _ if a.is_const(0.0) => Node::real(0.0),
        _ if b.is_const(1.0) => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Node, p: Node) -> Node {
    if p.is_const(0.0) {
        Node::real(1.0)
    } else if p.is_const(1.0) {
        a
    } else {
        Node::Pow(Box::new(a), Box::new(p))
    }
}

pub fn call(f: Func, a: Node) -> Node {
    Node::Call(f, Box::new(a))
}

// Printing. Precedence: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atom.
fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if c.im != 0.0 || c.re.is_sign_negative() => 1,
        _ => 5,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, n: &Node, min: u8) -> fmt::Result {
    if prec(n) < min {
        write!(f, "(")?;
        write_node(f, n)?;
        write!(f, ")")
    } else {
        write_node(f, n)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &Node) -> fmt::Result {
    match n {
        Node::Const(c) => {
            if c.im == 0.0 {
                write!(f, "{:?}", c.re)
            } else if c.re == 0.0 {
                write!(f, "{:?}*i", c.im)
            } else {
                write!(f, "{:?} + {:?}*i", c.re, c.im)
            }
        }
        Node::X(j) => write!(f, "x{}", j + 1),
        Node::Xi(j) => write!(f, "xi{}", j + 1),
        Node::BracketXi => write!(f, "bracket(xi)"),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, 4)
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_at(f, a, 1)?;
            write!(f, "{}", if matches!(n, Node::Add(..)) { " + " } else { " - " })?;
            write_at(f, b, 2)
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_at(f, a, 2)?;
            write!(f, "{}", if matches!(n, Node::Mul(..)) { " * " } else { " / " })?;
            write_at(f, b, 3)
        }
        Node::Pow(a, p) => {
            write_at(f, a, 5)?;
            write!(f, "^")?;
            write_at(f, p, 3)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self)
    }
}
