use std::fmt;

use crate::error::{Error, Result};

/// Arguments of `exp` are clamped to `[-EXP_CAP, EXP_CAP]`.
pub const EXP_CAP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Clamp,
    Abs,
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "clamp" => Func::Clamp,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Clamp => "clamp",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max => n >= 2,
            Func::Clamp => n == 3,
            _ => n == 1,
        }
    }
}

/// Expression tree. Variables index the argument vector `(x1, y1, x2, y2, …)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Division by a nonzero literal.
    Div(Box<Expr>, f64),
    Pow(Box<Expr>, u32),
    Call(Func, Vec<Expr>),
}

pub fn var_name(index: usize) -> String {
    format!("{}{}", if index.is_multiple_of(2) { 'x' } else { 'y' }, index / 2 + 1)
}

impl Expr {
    pub fn eval(&self, a: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => a[*i],
            Expr::Neg(e) => -e.eval(a),
            Expr::Add(l, r) => l.eval(a) + r.eval(a),
            Expr::Sub(l, r) => l.eval(a) - r.eval(a),
            Expr::Mul(l, r) => l.eval(a) * r.eval(a),
            Expr::Div(l, c) => l.eval(a) / c,
            Expr::Pow(e, n) => e.eval(a).powi(*n as i32),
            Expr::Call(f, args) => match f {
                Func::Min => args.iter().map(|e| e.eval(a)).fold(f64::INFINITY, f64::min),
                Func::Max => args.iter().map(|e| e.eval(a)).fold(f64::NEG_INFINITY, f64::max),
                Func::Clamp => args[0].eval(a).max(args[1].eval(a)).min(args[2].eval(a)),
                Func::Abs => args[0].eval(a).abs(),
                Func::Sin => args[0].eval(a).sin(),
                Func::Cos => args[0].eval(a).cos(),
                Func::Exp => args[0].eval(a).clamp(-EXP_CAP, EXP_CAP).exp(),
            },
        }
    }

    /// Argument indices read by the expression.
    pub fn variables(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
            Expr::Neg(e) | Expr::Div(e, _) | Expr::Pow(e, _) => e.variables(out),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                l.variables(out);
                r.variables(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|e| e.variables(out)),
        }
    }
}

/// Fully parenthesised form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "{}", var_name(*i)),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(l, r) => write!(f, "({l} + {r})"),
            Expr::Sub(l, r) => write!(f, "({l} - {r})"),
            Expr::Mul(l, r) => write!(f, "({l} * {r})"),
            Expr::Div(l, c) => write!(f, "({l} / {})", Expr::Const(*c)),
            Expr::Pow(e, n) => write!(f, "({e}^{n})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
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
    Sym(char),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
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
            let s = &text[start..i];
            let v: f64 = s
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse { offset: start, message: format!("bad number '{s}'") })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(Error::Parse { offset: i, message: format!("unexpected character '{ch}'") });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    m: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Sym('/') => {
                    self.bump();
                    let at = self.offset();
                    match self.unary()? {
                        Expr::Const(c) if c != 0.0 => lhs = Expr::Div(Box::new(lhs), c),
                        _ => {
                            return Err(Error::Parse {
                                offset: at,
                                message: "division is only allowed by a nonzero numeric literal".into(),
                            })
                        }
                    }
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let n = self.exponent()?;
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn exponent(&mut self) -> Result<u32> {
        match self.peek().clone() {
            Tok::Num(v) if v.fract() == 0.0 && (0.0..=64.0).contains(&v) => {
                self.bump();
                Ok(v as u32)
            }
            _ => self.fail("exponent must be an integer literal between 0 and 64"),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Sym('(') {
                    self.call(&name, at)
                } else {
                    self.variable(&name, at)
                }
            }
            Tok::End => Err(Error::Parse { offset: at, message: "unexpected end of input".into() }),
            Tok::Sym(c) => Err(Error::Parse { offset: at, message: format!("unexpected '{c}'") }),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Expr> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Sym(',') {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(')')?;
        if name == "pow" {
            if args.len() != 2 {
                return Err(Error::Parse { offset: at, message: "pow takes 2 arguments".into() });
            }
            return match args[1] {
                Expr::Const(v) if v.fract() == 0.0 && (0.0..=64.0).contains(&v) => {
                    Ok(Expr::Pow(Box::new(args.swap_remove(0)), v as u32))
                }
                _ => Err(Error::Parse {
                    offset: at,
                    message: "pow exponent must be an integer literal between 0 and 64".into(),
                }),
            };
        }
        let func = Func::from_name(name)
            .ok_or_else(|| Error::Parse { offset: at, message: format!("unknown function '{name}'") })?;
        if !func.arity_ok(args.len()) {
            return Err(Error::Parse {
                offset: at,
                message: format!("{name} does not take {} arguments", args.len()),
            });
        }
        Ok(Expr::Call(func, args))
    }

    fn variable(&self, name: &str, at: usize) -> Result<Expr> {
        let unknown = || Error::Parse { offset: at, message: format!("unknown identifier '{name}'") };
        let (head, digits) = name.split_at(1);
        let coord = match head {
            "x" => 0,
            "y" => 1,
            _ => return Err(unknown()),
        };
        let k: usize = digits.parse().map_err(|_| unknown())?;
        if k == 0 || k > self.m || digits.starts_with('0') {
            return Err(unknown());
        }
        Ok(Expr::Var(2 * (k - 1) + coord))
    }
}

/// Parses an expression over `x1..xm, y1..ym`.
pub fn parse_expr(text: &str, m: usize) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Parse { offset: 0, message: "empty expression".into() });
    }
    let mut p = Parser { toks: lex(text)?, pos: 0, m };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}
