//! A small expression language for user-supplied kernels, structure
//! functions and densities.
//!
//! Supported: numeric literals, named variables, named constants, `pi`,
//! `+ - * / ^`, unary minus and the functions `ln` (alias `log`), `exp`,
//! `sqrt`, `abs`, `sin`, `cos`, `tanh`, `cosh`, `sinh`, `atan`, `pow(a, b)`.
//! Expressions are compiled once against a variable list and evaluated at
//! any [`Scalar`] type, so derivatives come for free through dual numbers.

use std::collections::BTreeMap;
use std::fmt;

use crate::dual::Scalar;
use crate::error::{Result, SolgasError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Ln,
    Exp,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Tanh,
    Cosh,
    Sinh,
    Atan,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A compiled expression.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    /// Parses `source`; identifiers must be one of `vars` (bound at
    /// evaluation time, by position) or a key of `constants`.
    pub fn parse(source: &str, vars: &[&str], constants: &BTreeMap<String, f64>) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            vars,
            constants,
        };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(SolgasError::Parse(format!(
                "unexpected trailing input in `{source}` at token {:?}",
                p.tokens[p.pos]
            )));
        }
        Ok(Expr {
            source: source.to_string(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root: fold(root),
        })
    }

    /// Parses an expression in the single variable `eta`.
    pub fn in_eta(source: &str, constants: &BTreeMap<String, f64>) -> Result<Expr> {
        Expr::parse(source, &["eta"], constants)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn eval<T: Scalar>(&self, vars: &[T]) -> T {
        eval(&self.root, vars)
    }

    /// Symbolic derivative with respect to the variable at position `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        let root = fold(diff(&self.root, var));
        Expr {
            source: print(&root, &self.vars),
            vars: self.vars.clone(),
            root,
        }
    }

    /// Text with named constants substituted, parseable without them.
    pub fn canonical(&self) -> String {
        print(&self.root, &self.vars)
    }

    /// Substitutes the canonical text of `parts[k]` for `{k}` in `template`.
    pub fn compose(template: &str, parts: &[&Expr], vars: &[&str]) -> Result<Expr> {
        let mut src = template.to_string();
        for (k, p) in parts.iter().enumerate() {
            src = src.replace(&format!("{{{k}}}"), &format!("({})", p.canonical()));
        }
        Expr::parse(&src, vars, &BTreeMap::new())
    }

    /// True when the expression does not reference any variable.
    pub fn is_constant(&self) -> bool {
        matches!(self.root, Node::Const(_))
    }
}

fn eval<T: Scalar>(n: &Node, v: &[T]) -> T {
    match n {
        Node::Const(c) => T::cst(*c),
        Node::Var(i) => v[*i],
        Node::Neg(a) => -eval(a, v),
        Node::Add(a, b) => eval(a, v) + eval(b, v),
        Node::Sub(a, b) => eval(a, v) - eval(b, v),
        Node::Mul(a, b) => eval(a, v) * eval(b, v),
        Node::Div(a, b) => eval(a, v) / eval(b, v),
        Node::Pow(a, b) => {
            let base = eval(a, v);
            match **b {
                Node::Const(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(p as i32),
                Node::Const(p) => base.powf(p),
                _ => base.powd(eval(b, v)),
            }
        }
        Node::Call(f, a) => {
            let x = eval(a, v);
            match f {
                Func::Ln => x.ln(),
                Func::Exp => x.exp(),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tanh => x.tanh(),
                Func::Cosh => x.cosh(),
                Func::Sinh => x.sinh(),
                Func::Atan => x.atan(),
            }
        }
    }
}

/// Constant folding plus the identities `0·x`, `1·x`, `x ± 0`, `x/1`,
/// `x^1`, so that derivative trees stay small and `pow(x, 2*1)` still hits
/// the integer path.
fn fold(n: Node) -> Node {
    use Node::*;
    let bin = |a: Node, b: Node, op: fn(f64, f64) -> f64, mk: fn(Box<Node>, Box<Node>) -> Node| {
        let (a, b) = (fold(a), fold(b));
        match (&a, &b) {
            (Const(x), Const(y)) => Const(op(*x, *y)),
            _ => mk(Box::new(a), Box::new(b)),
        }
    };
    match n {
        Neg(a) => match fold(*a) {
            Const(x) => Const(-x),
            Neg(inner) => *inner,
            other => Neg(Box::new(other)),
        },
        Add(a, b) => match bin(*a, *b, |x, y| x + y, Add) {
            Add(a, b) if *a == Const(0.0) => *b,
            Add(a, b) if *b == Const(0.0) => *a,
            other => other,
        },
        Sub(a, b) => match bin(*a, *b, |x, y| x - y, Sub) {
            Sub(a, b) if *a == Const(0.0) => Neg(b),
            Sub(a, b) if *b == Const(0.0) => *a,
            other => other,
        },
        Mul(a, b) => match bin(*a, *b, |x, y| x * y, Mul) {
            Mul(a, b) if *a == Const(0.0) || *b == Const(0.0) => Const(0.0),
            Mul(a, b) if *a == Const(1.0) => *b,
            Mul(a, b) if *b == Const(1.0) => *a,
            other => other,
        },
        Div(a, b) => match bin(*a, *b, |x, y| x / y, Div) {
            Div(a, _) if *a == Const(0.0) => Const(0.0),
            Div(a, b) if *b == Const(1.0) => *a,
            other => other,
        },
        Pow(a, b) => match bin(*a, *b, f64::powf, Pow) {
            Pow(a, b) if *b == Const(1.0) => *a,
            Pow(_, b) if *b == Const(0.0) => Const(1.0),
            other => other,
        },
        Call(f, a) => match fold(*a) {
            Const(x) => Const(eval::<f64>(&Call(f, Box::new(Const(x))), &[])),
            other => Call(f, Box::new(other)),
        },
        other => other,
    }
}

/// Symbolic derivative with respect to variable `var`.
fn diff(n: &Node, var: usize) -> Node {
    use Node::*;
    let b = |x: Node| Box::new(x);
    match n {
        Const(_) => Const(0.0),
        Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
        Neg(a) => Neg(b(diff(a, var))),
        Add(x, y) => Add(b(diff(x, var)), b(diff(y, var))),
        Sub(x, y) => Sub(b(diff(x, var)), b(diff(y, var))),
        Mul(x, y) => Add(
            b(Mul(b(diff(x, var)), y.clone())),
            b(Mul(x.clone(), b(diff(y, var)))),
        ),
        Div(x, y) => Div(
            b(Sub(
                b(Mul(b(diff(x, var)), y.clone())),
                b(Mul(x.clone(), b(diff(y, var)))),
            )),
            b(Pow(y.clone(), b(Const(2.0)))),
        ),
        Pow(x, y) => match **y {
            Const(p) => Mul(
                b(Mul(b(Const(p)), b(Pow(x.clone(), b(Const(p - 1.0)))))),
                b(diff(x, var)),
            ),
            _ => Mul(
                b(n.clone()),
                b(Add(
                    b(Mul(b(diff(y, var)), b(Call(Func::Ln, x.clone())))),
                    b(Div(b(Mul(y.clone(), b(diff(x, var)))), x.clone())),
                )),
            ),
        },
        Call(f, a) => {
            let outer = match f {
                Func::Ln => Div(b(Const(1.0)), a.clone()),
                Func::Exp => n.clone(),
                Func::Sqrt => Div(b(Const(0.5)), b(n.clone())),
                Func::Abs => Div(a.clone(), b(n.clone())),
                Func::Sin => Call(Func::Cos, a.clone()),
                Func::Cos => Neg(b(Call(Func::Sin, a.clone()))),
                Func::Tanh => Sub(b(Const(1.0)), b(Pow(b(n.clone()), b(Const(2.0))))),
                Func::Cosh => Call(Func::Sinh, a.clone()),
                Func::Sinh => Call(Func::Cosh, a.clone()),
                Func::Atan => Div(
                    b(Const(1.0)),
                    b(Add(b(Const(1.0)), b(Pow(a.clone(), b(Const(2.0)))))),
                ),
            };
            Mul(b(outer), b(diff(a, var)))
        }
    }
}

/// Fully parenthesised text that re-parses to the same tree.
fn print(n: &Node, vars: &[String]) -> String {
    use Node::*;
    match n {
        Const(c) if *c < 0.0 => format!("({c:?})"),
        Const(c) => format!("{c:?}"),
        Var(i) => vars[*i].clone(),
        Neg(a) => format!("(-{})", print(a, vars)),
        Add(x, y) => format!("({} + {})", print(x, vars), print(y, vars)),
        Sub(x, y) => format!("({} - {})", print(x, vars), print(y, vars)),
        Mul(x, y) => format!("({} * {})", print(x, vars), print(y, vars)),
        Div(x, y) => format!("({} / {})", print(x, vars), print(y, vars)),
        Pow(x, y) => format!("pow({}, {})", print(x, vars), print(y, vars)),
        Call(f, a) => {
            let name = match f {
                Func::Ln => "ln",
                Func::Exp => "exp",
                Func::Sqrt => "sqrt",
                Func::Abs => "abs",
                Func::Sin => "sin",
                Func::Cos => "cos",
                Func::Tanh => "tanh",
                Func::Cosh => "cosh",
                Func::Sinh => "sinh",
                Func::Atan => "atan",
            };
            format!("{name}({})", print(a, vars))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| SolgasError::Parse(format!("bad number `{text}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(SolgasError::Parse(format!(
                "unexpected character `{c}` in `{s}`"
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(SolgasError::Parse(format!(
                "expected `{c}`, found {:?}",
                self.tokens.get(self.pos)
            )))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| SolgasError::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let a = self.expr()?;
                    if name == "pow" {
                        self.expect(',')?;
                        let b = self.expr()?;
                        self.expect(')')?;
                        return Ok(Node::Pow(Box::new(a), Box::new(b)));
                    }
                    self.expect(')')?;
                    let f = match name.as_str() {
                        "ln" | "log" => Func::Ln,
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "tanh" => Func::Tanh,
                        "cosh" => Func::Cosh,
                        "sinh" => Func::Sinh,
                        "atan" => Func::Atan,
                        _ => return Err(SolgasError::Parse(format!("unknown function `{name}`"))),
                    };
                    return Ok(Node::Call(f, Box::new(a)));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(i))
                } else if let Some(v) = self.constants.get(&name) {
                    Ok(Node::Const(*v))
                } else if name == "pi" {
                    Ok(Node::Const(std::f64::consts::PI))
                } else {
                    Err(SolgasError::Parse(format!("unknown identifier `{name}`")))
                }
            }
            Tok::Op(c) => Err(SolgasError::Parse(format!("unexpected `{c}`"))),
        }
    }
}
