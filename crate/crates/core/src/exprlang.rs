//! A small complex-valued arithmetic language for entry generators and
//! coefficient functions.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)*
//! exponent:= '-'? INT | '(' '-'? INT ')'
//! primary := NUMBER | 'i' | IDENT | FUNC '(' expr ')' | '(' expr ')'
//! FUNC    := abs | sqrt | exp | sin | cos | conj | re | im
//! ```
//!
//! Binary `+ - * /` are left associative. Exponents are integer literals so
//! that `^` stays single valued on complex inputs. `i` is the imaginary unit
//! and cannot be used as a variable name.

use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Exp,
    Sin,
    Cos,
    Conj,
    Re,
    Im,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Abs,
        Func::Sqrt,
        Func::Exp,
        Func::Sin,
        Func::Cos,
        Func::Conj,
        Func::Re,
        Func::Im,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Conj => "conj",
            Func::Re => "re",
            Func::Im => "im",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Func::Abs => C64::new(z.norm(), 0.0),
            Func::Sqrt => z.sqrt(),
            Func::Exp => z.exp(),
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Conj => z.conj(),
            Func::Re => C64::new(z.re, 0.0),
            Func::Im => C64::new(z.im, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Non-negative real literal.
    Num(f64),
    /// The imaginary unit.
    Imag,
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: found {found}, expected one of {}", expected.join(", "))]
pub struct ParseError {
    pub offset: usize,
    pub found: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero with {bindings}")]
    DivisionByZero { bindings: String },
}

/// Variable lookup for [`Expr::eval`].
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<C64>;
    /// Human-readable rendering used in error messages.
    fn describe(&self) -> String;
}

impl Bindings for [(&str, C64)] {
    fn lookup(&self, name: &str) -> Option<C64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .iter()
            .map(|(n, v)| format!("{n}={}", fmt_complex(*v)))
            .collect();
        parts.join(", ")
    }
}

impl<const N: usize> Bindings for [(&str, C64); N] {
    fn lookup(&self, name: &str) -> Option<C64> {
        self.as_slice().lookup(name)
    }

    fn describe(&self) -> String {
        self.as_slice().describe()
    }
}

impl Bindings for std::collections::BTreeMap<String, C64> {
    fn lookup(&self, name: &str) -> Option<C64> {
        self.get(name).copied()
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .iter()
            .map(|(n, v)| format!("{n}={}", fmt_complex(*v)))
            .collect();
        parts.join(", ")
    }
}

fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let mut is_int = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                is_int = false;
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
                    is_int = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let tok = if is_int {
                match text.parse::<i64>() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => Tok::Num(text.parse::<f64>().unwrap_or(f64::INFINITY)),
                }
            } else {
                Tok::Num(text.parse::<f64>().map_err(|_| ParseError {
                    offset: start,
                    found: format!("malformed number `{text}`"),
                    expected: vec!["number".into()],
                })?)
            };
            if let Tok::Num(x) = tok {
                if !x.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        found: format!("out-of-range number `{text}`"),
                        expected: vec!["finite number".into()],
                    });
                }
            }
            out.push((start, tok));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
            continue;
        }
        if matches!(c, b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')') {
            out.push((start, Tok::Sym(c as char)));
            i += 1;
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError {
            offset: start,
            found: format!("`{ch}`"),
            expected: vec![
                "number".into(),
                "identifier".into(),
                "operator".into(),
                "`(`".into(),
                "`)`".into(),
            ],
        });
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            found: self.peek().describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError {
                offset: self.offset(),
                found: "nesting deeper than 256 levels".into(),
                expected: vec!["shallower expression".into()],
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while self.eat('^') {
            let n = self.exponent()?;
            base = Expr::Pow(Box::new(base), n);
        }
        Ok(base)
    }

    fn signed_int(&mut self) -> Result<i32, ParseError> {
        let neg = self.eat('-');
        let off = self.offset();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                let v = if neg { -n } else { n };
                i32::try_from(v).map_err(|_| ParseError {
                    offset: off,
                    found: format!("exponent {v} out of range"),
                    expected: vec!["32-bit integer exponent".into()],
                })
            }
            _ => Err(self.error(&["integer exponent"])),
        }
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        if self.eat('(') {
            let n = self.signed_int()?;
            if !self.eat(')') {
                return Err(self.error(&["`)`"]));
            }
            Ok(n)
        } else {
            self.signed_int()
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Num(n as f64))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(self.error(&["`(`"]));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.error(&["`)`", "operator"]));
                    }
                    Ok(Expr::Call(f, Box::new(arg)))
                } else if name == "i" {
                    Ok(Expr::Imag)
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error(&["`)`", "operator"]));
                }
                Ok(inner)
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`"])),
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

fn ipow(base: C64, n: i32, env: &dyn Bindings) -> Result<C64, EvalError> {
    let mut acc = C64::new(1.0, 0.0);
    let mut b = base;
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    if n < 0 {
        if acc == C64::new(0.0, 0.0) {
            return Err(EvalError::DivisionByZero {
                bindings: env.describe(),
            });
        }
        acc = acc.inv();
    }
    Ok(acc)
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parse(src)
    }

    /// Evaluates in IEEE double-precision complex arithmetic.
    pub fn eval<B: Bindings + ?Sized>(&self, env: &B) -> Result<C64, EvalError> {
        self.eval_dyn(&Adapter(env))
    }

    fn eval_dyn(&self, env: &dyn Bindings) -> Result<C64, EvalError> {
        Ok(match self {
            Expr::Num(x) => C64::new(*x, 0.0),
            Expr::Imag => C64::new(0.0, 1.0),
            Expr::Var(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Neg(e) => -e.eval_dyn(env)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval_dyn(env)?;
                let y = b.eval_dyn(env)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == C64::new(0.0, 0.0) {
                            return Err(EvalError::DivisionByZero {
                                bindings: env.describe(),
                            });
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(b, n) => ipow(b.eval_dyn(env)?, *n, env)?,
            Expr::Call(f, a) => f.apply(a.eval_dyn(env)?),
        })
    }

    /// Names of the free variables, sorted and deduplicated.
    pub fn free_vars(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Var(n) => out.push(n.clone()),
                Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => walk(a, out),
                Expr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Num(_) | Expr::Imag => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Pow(_, _) => 4,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let paren = self.precedence() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(x) => write!(f, "{x}")?,
            Expr::Imag => f.write_str("i")?,
            Expr::Var(n) => f.write_str(n)?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write(f, 3)?;
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                a.write(f, p)?;
                write!(f, "{}", op.symbol())?;
                b.write(f, p + 1)?;
            }
            Expr::Pow(b, n) => {
                b.write(f, 5)?;
                write!(f, "^{n}")?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

struct Adapter<'a, B: ?Sized>(&'a B);

impl<B: Bindings + ?Sized> Bindings for Adapter<'_, B> {
    fn lookup(&self, name: &str) -> Option<C64> {
        self.0.lookup(name)
    }
    fn describe(&self) -> String {
        self.0.describe()
    }
}

/// Canonical form: minimal parentheses, left-associative chains printed
/// without parentheses, right operands of equal precedence parenthesised.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
