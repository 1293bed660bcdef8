//! Recursive-descent parser for symbol expressions.
//!
//! ```text
//! symbol  = matrix | expr ;
//! matrix  = "[" row { "," row } "]" ;
//! row     = "[" expr { "," expr } "]" ;
//! expr    = term { ( "+" | "-" ) term } ;
//! term    = unary { ( "*" | "/" ) unary } ;
//! unary   = ( "-" | "+" ) unary | power ;
//! power   = atom [ "^" unary ] ;
//! atom    = number | const | var | call | "(" expr ")" ;
//! call    = func "(" expr ")" | "pow" "(" expr "," expr ")" | "bracket" "(" "xi" ")" ;
//! func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "bracket" ;
//! const   = "i" | "pi" ;
//! var     = "x" digit { digit } | "xi" digit { digit } | "x" | "xi" ;
//! number  = digits [ "." [ digits ] ] [ ( "e" | "E" ) [ "+" | "-" ] digits ]
//!         | "." digits [ ( "e" | "E" ) [ "+" | "-" ] digits ] ;
//! ```
//!
//! `x` and `xi` without an index are accepted only when `n = 1`.
//! `bracket(xi)` is `<xi> = (1 + |xi|^2)^(1/2)` in any dimension.
//! `^` is right associative and binds tighter than unary minus: `-x^2 = -(x^2)`.

use num_complex::Complex64;

use super::ast::{Func, Node};
use crate::error::{Error, ParseError, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse(ParseError { offset, message: message.into() })
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let v: f64 = text[start..i]
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{}`", &text[start..i])))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if b"+-*/^(),[]".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(syntax(i, format!("unexpected character `{ch}`")));
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected `{c}`")))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match self.peek() {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        syntax(self.offset(), format!("{what}, found {found}"))
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let (tok, off) = self.toks[self.pos].clone();
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::real(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                self.ident(&name, off)
            }
            _ => Err(self.unexpected("expected a number, variable, function call or `(`")),
        }
    }

    fn ident(&mut self, name: &str, off: usize) -> Result<Node> {
        if name == "pow" {
            self.expect('(')?;
            let a = self.expr()?;
            self.expect(',')?;
            let p = self.expr()?;
            self.expect(')')?;
            return Ok(Node::Pow(Box::new(a), Box::new(p)));
        }
        if let Some(f) = Func::from_name(name) {
            self.expect('(')?;
            if f == Func::Bracket
                && self.peek() == &Tok::Ident("xi".into())
                && self.toks.get(self.pos + 1).map(|t| &t.0) == Some(&Tok::Sym(')'))
            {
                self.bump();
                self.bump();
                return Ok(Node::BracketXi);
            }
            let a = self.expr()?;
            self.expect(')')?;
            return Ok(Node::Call(f, Box::new(a)));
        }
        match name {
            "i" => return Ok(Node::Const(Complex64::new(0.0, 1.0))),
            "pi" => return Ok(Node::real(std::f64::consts::PI)),
            "x" | "xi" => {
                if self.n == 1 {
                    return Ok(if name == "x" { Node::X(0) } else { Node::Xi(0) });
                }
                return Err(syntax(off, format!("`{name}` needs an axis index when n = {}", self.n)));
            }
            _ => {}
        }
        let (prefix, digits) = if let Some(d) = name.strip_prefix("xi") {
            ("xi", d)
        } else if let Some(d) = name.strip_prefix('x') {
            ("x", d)
        } else {
            ("", "")
        };
        if !prefix.is_empty() && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            let index: usize = digits.parse().unwrap_or(usize::MAX);
            if index == 0 || index > self.n {
                return Err(Error::DimensionIndex { name: name.to_string(), index, n: self.n });
            }
            return Ok(if prefix == "x" { Node::X(index - 1) } else { Node::Xi(index - 1) });
        }
        Err(Error::UnknownIdentifier { name: name.to_string(), offset: off })
    }

    fn row(&mut self) -> Result<Vec<Node>> {
        self.expect('[')?;
        let mut row = vec![self.expr()?];
        while self.eat(',') {
            row.push(self.expr()?);
        }
        self.expect(']')?;
        Ok(row)
    }

    fn matrix(&mut self, k: usize) -> Result<Vec<Node>> {
        let start = self.offset();
        self.expect('[')?;
        let mut rows = vec![self.row()?];
        while self.eat(',') {
            rows.push(self.row()?);
        }
        self.expect(']')?;
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(syntax(start, format!("matrix literal is not {k}x{k}")));
        }
        Ok(rows.into_iter().flatten().collect())
    }
}

/// Parses `text` into `k * k` row-major entry trees (no validation).
pub fn parse_entries(text: &str, n: usize, k: usize) -> Result<Vec<Node>> {
    let mut p = Parser { toks: lex(text)?, pos: 0, n };
    let entries = if *p.peek() == Tok::Sym('[') {
        p.matrix(k)?
    } else if k == 1 {
        vec![p.expr()?]
    } else {
        return Err(syntax(0, format!("a {k}x{k} symbol needs a matrix literal `[[..],[..]]`")));
    };
    if *p.peek() != Tok::End {
        return Err(p.unexpected("expected end of input"));
    }
    Ok(entries)
}
