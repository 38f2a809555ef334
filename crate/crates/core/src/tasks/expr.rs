//! A small closed expression language over named real values.
//!
//! Booleans are `1.0` / `0.0`; any nonzero value is true. Identifiers may
//! contain dots (`m.shift`). `pi` is predefined.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::geometry::SpacetimePoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown name `{0}`")]
    Unknown(String),
    #[error("`{name}` is not available: {reason}")]
    Unavailable { name: String, reason: String },
    #[error("function `{name}`: {message}")]
    BadCall { name: String, message: String },
    #[error("non-finite result")]
    NonFinite,
    #[error("select index {index} out of range for {len} options")]
    SelectRange { index: f64, len: usize },
    #[error("point: {0}")]
    Point(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message}")]
pub struct SyntaxError {
    /// 1-based column within the parsed text.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

const FUNCTIONS: &[(&str, Option<usize>)] = &[
    ("if", Some(3)),
    ("abs", Some(1)),
    ("floor", Some(1)),
    ("ceil", Some(1)),
    ("round", Some(1)),
    ("sqrt", Some(1)),
    ("cos", Some(1)),
    ("sin", Some(1)),
    ("min", None),
    ("max", None),
    ("xor", Some(2)),
    ("bit", Some(2)),
    ("mod", Some(2)),
    ("select", None),
];

fn truthy(v: f64) -> bool {
    v != 0.0
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn as_int(name: &str, v: f64) -> Result<i64, EvalError> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(EvalError::BadCall {
            name: name.into(),
            message: format!("expected an integer, got {v}"),
        });
    }
    Ok(v as i64)
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        let mut p = Parser::new(text)?;
        let e = p.expr()?;
        p.expect_end()?;
        Ok(e)
    }

    /// Names read by the expression, excluding `pi`.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if v != "pi" {
                    out.insert(v.clone());
                }
            }
            Expr::Neg(e) | Expr::Not(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Evaluate with `lookup` resolving every free name.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Result<f64, EvalError>) -> Result<f64, EvalError> {
        let v = self.eval_inner(lookup)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, lookup: &dyn Fn(&str) -> Result<f64, EvalError>) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) if name == "pi" => std::f64::consts::PI,
            Expr::Var(name) => lookup(name)?,
            Expr::Neg(e) => -e.eval_inner(lookup)?,
            Expr::Not(e) => flag(!truthy(e.eval_inner(lookup)?)),
            Expr::Bin(op, a, b) => {
                // Short-circuit so guarded reads do not fire.
                match op {
                    BinOp::And => {
                        return Ok(flag(
                            truthy(a.eval_inner(lookup)?) && truthy(b.eval_inner(lookup)?),
                        ))
                    }
                    BinOp::Or => {
                        return Ok(flag(
                            truthy(a.eval_inner(lookup)?) || truthy(b.eval_inner(lookup)?),
                        ))
                    }
                    _ => {}
                }
                let (x, y) = (a.eval_inner(lookup)?, b.eval_inner(lookup)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Rem => x % y,
                    BinOp::Eq => flag(x == y),
                    BinOp::Ne => flag(x != y),
                    BinOp::Lt => flag(x < y),
                    BinOp::Le => flag(x <= y),
                    BinOp::Gt => flag(x > y),
                    BinOp::Ge => flag(x >= y),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
            Expr::Call(name, args) => return call(name, args, lookup),
        })
    }
}

fn call(
    name: &str,
    args: &[Expr],
    lookup: &dyn Fn(&str) -> Result<f64, EvalError>,
) -> Result<f64, EvalError> {
    if name == "if" {
        return if truthy(args[0].eval_inner(lookup)?) {
            args[1].eval_inner(lookup)
        } else {
            args[2].eval_inner(lookup)
        };
    }
    if name == "select" {
        let idx = args[0].eval_inner(lookup)?;
        let options = &args[1..];
        let i = as_int(name, idx)?;
        if i < 0 || i as usize >= options.len() {
            return Err(EvalError::SelectRange {
                index: idx,
                len: options.len(),
            });
        }
        return options[i as usize].eval_inner(lookup);
    }
    let vals = args
        .iter()
        .map(|a| a.eval_inner(lookup))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match name {
        "abs" => vals[0].abs(),
        "floor" => vals[0].floor(),
        "ceil" => vals[0].ceil(),
        "round" => vals[0].round(),
        "sqrt" => vals[0].sqrt(),
        "cos" => vals[0].cos(),
        "sin" => vals[0].sin(),
        "min" => vals.iter().copied().fold(f64::INFINITY, f64::min),
        "max" => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "xor" => flag(truthy(vals[0]) != truthy(vals[1])),
        "bit" => {
            let v = as_int(name, vals[0])?;
            let i = as_int(name, vals[1])?;
            if !(0..63).contains(&i) || v < 0 {
                return Err(EvalError::BadCall {
                    name: name.into(),
                    message: "needs a nonnegative value and bit index in 0..63".into(),
                });
            }
            ((v >> i) & 1) as f64
        }
        "mod" => {
            let (a, b) = (as_int(name, vals[0])?, as_int(name, vals[1])?);
            if b == 0 {
                return Err(EvalError::BadCall {
                    name: name.into(),
                    message: "modulus is zero".into(),
                });
            }
            a.rem_euclid(b) as f64
        }
        other => {
            return Err(EvalError::BadCall {
                name: other.into(),
                message: "unknown function".into(),
            })
        }
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Not(e) => write!(f, "!({e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A rule producing a spacetime point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointExpr {
    /// A point known in advance, optionally named.
    Fixed {
        label: Option<String>,
        point: SpacetimePoint,
    },
    /// `(t; x, ...)` computed from values.
    Coords { t: Expr, x: Vec<Expr> },
    /// `select(i, A, B, ...)`.
    Select { index: Expr, options: Vec<PointExpr> },
}

impl PointExpr {
    pub fn fixed(point: SpacetimePoint) -> Self {
        PointExpr::Fixed { label: None, point }
    }

    pub fn named(label: impl Into<String>, point: SpacetimePoint) -> Self {
        PointExpr::Fixed {
            label: Some(label.into()),
            point,
        }
    }

    /// Parse `NAME`, `(t; x, ...)` or `select(i, P, ...)`. Names are looked
    /// up with `resolve`.
    pub fn parse(
        text: &str,
        resolve: &dyn Fn(&str) -> Option<SpacetimePoint>,
    ) -> Result<Self, SyntaxError> {
        let mut p = Parser::new(text)?;
        let e = p.point(resolve)?;
        p.expect_end()?;
        Ok(e)
    }

    pub fn as_fixed(&self) -> Option<&SpacetimePoint> {
        match self {
            PointExpr::Fixed { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self {
            PointExpr::Fixed { .. } => {}
            PointExpr::Coords { t, x } => {
                out.extend(t.free_vars());
                for e in x {
                    out.extend(e.free_vars());
                }
            }
            PointExpr::Select { index, options } => {
                out.extend(index.free_vars());
                for o in options {
                    out.extend(o.free_vars());
                }
            }
        }
        out
    }

    pub fn eval(
        &self,
        lookup: &dyn Fn(&str) -> Result<f64, EvalError>,
    ) -> Result<SpacetimePoint, EvalError> {
        match self {
            PointExpr::Fixed { point, .. } => Ok(point.clone()),
            PointExpr::Coords { t, x } => {
                let t = t.eval(lookup)?;
                let x = x
                    .iter()
                    .map(|e| e.eval(lookup))
                    .collect::<Result<Vec<_>, _>>()?;
                SpacetimePoint::new(t, x).map_err(|e| EvalError::Point(e.to_string()))
            }
            PointExpr::Select { index, options } => {
                let idx = index.eval(lookup)?;
                let i = as_int("select", idx)?;
                if i < 0 || i as usize >= options.len() {
                    return Err(EvalError::SelectRange {
                        index: idx,
                        len: options.len(),
                    });
                }
                options[i as usize].eval(lookup)
            }
        }
    }
}

impl fmt::Display for PointExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointExpr::Fixed {
                label: Some(l), ..
            } => write!(f, "{l}"),
            PointExpr::Fixed { point, .. } => write!(f, "{point}"),
            PointExpr::Coords { t, x } => {
                write!(f, "({t};")?;
                for (i, e) in x.iter().enumerate() {
                    write!(f, "{}{e}", if i == 0 { " " } else { ", " })?;
                }
                write!(f, ")")
            }
            PointExpr::Select { index, options } => {
                write!(f, "select({index}")?;
                for o in options {
                    write!(f, ", {o}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

const OPS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "%", "<", ">", "!", "(", ")", ",", ";",
];

fn err<T>(column: usize, message: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError {
        column,
        message: message.into(),
    })
}

impl Parser {
    fn new(text: &str) -> Result<Self, SyntaxError> {
        let chars: Vec<char> = text.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let ch = chars[i];
            let col = i + 1;
            if ch.is_whitespace() {
                i += 1;
            } else if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
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
                let s: String = chars[start..i].iter().collect();
                match s.parse::<f64>() {
                    Ok(v) => toks.push((Tok::Num(v), col)),
                    Err(_) => return err(col, format!("bad number `{s}`")),
                }
            } else if ch.is_ascii_alphabetic() || ch == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            } else {
                let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
                match OPS.iter().find(|op| rest.starts_with(**op)) {
                    Some(op) => {
                        toks.push((Tok::Op(op), col));
                        i += op.len();
                    }
                    None => return err(col, format!("unexpected character `{ch}`")),
                }
            }
        }
        Ok(Self {
            toks,
            pos: 0,
            end_col: chars.len() + 1,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn eat(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), SyntaxError> {
        if self.eat(op) {
            Ok(())
        } else {
            err(self.col(), format!("expected `{op}`"))
        }
    }

    fn expect_end(&self) -> Result<(), SyntaxError> {
        if self.pos < self.toks.len() {
            err(self.col(), "unexpected trailing input")
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, SyntaxError> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[
                ("==", BinOp::Eq),
                ("!=", BinOp::Ne),
                ("<=", BinOp::Le),
                (">=", BinOp::Ge),
                ("<", BinOp::Lt),
                (">", BinOp::Gt),
            ],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.eat(sym) {
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr::Bin(*op, Box::new(lhs), Box::new(rhs));
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat("(") {
                    let Some((_, arity)) = FUNCTIONS.iter().find(|(f, _)| *f == name) else {
                        return err(col, format!("unknown function `{name}`"));
                    };
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    let ok = match arity {
                        Some(n) => args.len() == *n,
                        None if name == "select" => args.len() >= 2,
                        None => !args.is_empty(),
                    };
                    if !ok {
                        return err(col, format!("wrong number of arguments to `{name}`"));
                    }
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => err(col, "expected a value"),
        }
    }

    fn point(
        &mut self,
        resolve: &dyn Fn(&str) -> Option<SpacetimePoint>,
    ) -> Result<PointExpr, SyntaxError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let t = self.expr()?;
                self.expect(";")?;
                let mut x = vec![self.expr()?];
                while self.eat(",") {
                    x.push(self.expr()?);
                }
                self.expect(")")?;
                if x.len() != 1 && x.len() != 3 {
                    return err(col, format!("a point needs 1 or 3 spatial coordinates, got {}", x.len()));
                }
                // Constant coordinates collapse to a fixed point.
                let consts: Option<Vec<f64>> = std::iter::once(&t)
                    .chain(x.iter())
                    .map(|e| e.free_vars().is_empty().then(|| e.eval(&|n| Err(EvalError::Unknown(n.into())))).and_then(Result::ok))
                    .collect();
                if let Some(c) = consts {
                    if let Ok(p) = SpacetimePoint::new(c[0], c[1..].to_vec()) {
                        return Ok(PointExpr::fixed(p));
                    }
                }
                Ok(PointExpr::Coords { t, x })
            }
            Some(Tok::Ident(name)) if name == "select" => {
                self.pos += 1;
                self.expect("(")?;
                let index = self.expr()?;
                let mut options = Vec::new();
                while self.eat(",") {
                    options.push(self.point(resolve)?);
                }
                self.expect(")")?;
                if options.is_empty() {
                    return err(col, "select needs at least one point");
                }
                Ok(PointExpr::Select { index, options })
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match resolve(&name) {
                    Some(point) => Ok(PointExpr::named(name, point)),
                    None => err(col, format!("unknown point `{name}`")),
                }
            }
            _ => err(col, "expected a point"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn env(pairs: &[(&str, f64)]) -> impl Fn(&str) -> Result<f64, EvalError> {
        let map: BTreeMap<String, f64> = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        move |n: &str| map.get(n).copied().ok_or_else(|| EvalError::Unknown(n.into()))
    }

    fn ev(text: &str, pairs: &[(&str, f64)]) -> f64 {
        Expr::parse(text).unwrap().eval(&env(pairs)).unwrap()
    }

    #[test]
    fn precedence_and_functions() {
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(ev("-2 * -3", &[]), 6.0);
        assert_eq!(ev("xor(a, b) == (a * b)", &[("a", 1.0), ("b", 1.0)]), 0.0);
        assert_eq!(ev("if(x > 0, 10, 20)", &[("x", -1.0)]), 20.0);
        assert_eq!(ev("bit(6, 1) + bit(6, 0)", &[]), 1.0);
        assert_eq!(ev("mod(-1, 3)", &[]), 2.0);
        assert_eq!(ev("select(i, 5, 6, 7)", &[("i", 2.0)]), 7.0);
        assert_eq!(ev("min(3, 1, 2) + max(1, 4)", &[]), 5.0);
        assert_eq!(ev("!0 && 1 || 0", &[]), 1.0);
        assert_eq!(ev("m.shift + 1e-1", &[("m.shift", 1.0)]), 1.1);
        assert!((ev("cos(pi)", &[]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn short_circuit_skips_unknown_names() {
        assert_eq!(ev("0 && missing", &[]), 0.0);
        assert_eq!(ev("if(1, 2, missing)", &[]), 2.0);
    }

    #[test]
    fn free_vars_exclude_pi() {
        let e = Expr::parse("if(a, b * pi, c.d)").unwrap();
        let v: Vec<String> = e.free_vars().into_iter().collect();
        assert_eq!(v, ["a", "b", "c.d"]);
    }

    #[test]
    fn syntax_errors_have_columns() {
        let e = Expr::parse("1 + ").unwrap_err();
        assert_eq!(e.column, 5);
        assert_eq!(Expr::parse("foo(1)").unwrap_err().column, 1);
        assert_eq!(Expr::parse("1 $ 2").unwrap_err().column, 3);
        assert!(Expr::parse("if(1, 2)").is_err());
        assert!(Expr::parse("(1").is_err());
    }

    #[test]
    fn eval_errors() {
        let e = Expr::parse("y + 1").unwrap();
        assert_eq!(e.eval(&env(&[])), Err(EvalError::Unknown("y".into())));
        assert!(Expr::parse("1 / 0").unwrap().eval(&env(&[])).is_err());
        assert!(Expr::parse("select(3, 1, 2)").unwrap().eval(&env(&[])).is_err());
        assert!(Expr::parse("bit(0.5, 0)").unwrap().eval(&env(&[])).is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in ["if(a, b * pi, -c)", "xor(J1, J2) == I1 * I2", "!(x) || y <= 2"] {
            let e = Expr::parse(text).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn points() {
        let q0 = SpacetimePoint::new_3d(6.0, 3.0, 4.0, 0.0);
        let q1 = SpacetimePoint::new_3d(6.0, 3.0, -4.0, 0.0);
        let (a, b) = (q0.clone(), q1.clone());
        let resolve = move |n: &str| match n {
            "Q0" => Some(a.clone()),
            "Q1" => Some(b.clone()),
            _ => None,
        };
        let sel = PointExpr::parse("select(I2, Q0, Q1)", &resolve).unwrap();
        assert_eq!(sel.eval(&env(&[("I2", 1.0)])).unwrap(), q1);
        assert_eq!(sel.free_vars().into_iter().collect::<Vec<_>>(), ["I2"]);
        let c = PointExpr::parse("(T; x2)", &resolve).unwrap();
        assert_eq!(
            c.eval(&env(&[("T", 10.0), ("x2", -3.0)])).unwrap(),
            SpacetimePoint::new_1d(10.0, -3.0)
        );
        let f = PointExpr::parse("(2; 3, 0, -1)", &resolve).unwrap();
        assert_eq!(f.as_fixed(), Some(&SpacetimePoint::new_3d(2.0, 3.0, 0.0, -1.0)));
        assert!(PointExpr::parse("(1; 2, 3)", &resolve).is_err());
        assert!(PointExpr::parse("Q7", &resolve).is_err());
    }
}
