//! Complex-valued arithmetic expressions over the variables `x` and `t`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := number ['i'] | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names are `x`, `t`, `i`, `pi` (or `π`) and `e`. Functions are `sin`,
//! `cos`, `exp`, `tanh`, `sqrt`, `abs`, `re` and `im`. `^` is right
//! associative and binds tighter than unary minus, so `-x^2 = -(x^2)`.

use std::fmt;

use thiserror::Error;
use utm_core::C64;

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at column {}\n  {source_text}\n  {}^", .position + 1, caret_pad(.source_text, *.position))]
pub struct ExprError {
    pub message: String,
    /// Byte offset into `source_text`.
    pub position: usize,
    pub source_text: String,
}

fn caret_pad(src: &str, pos: usize) -> String {
    " ".repeat(src[..pos.min(src.len())].chars().count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
    Abs,
    Re,
    Im,
}

impl Function {
    const ALL: [(&'static str, Function); 8] = [
        ("sin", Function::Sin),
        ("cos", Function::Cos),
        ("exp", Function::Exp),
        ("tanh", Function::Tanh),
        ("sqrt", Function::Sqrt),
        ("abs", Function::Abs),
        ("re", Function::Re),
        ("im", Function::Im),
    ];

    fn lookup(name: &str) -> Option<Function> {
        Self::ALL.iter().find(|(n, _)| *n == name).map(|(_, f)| *f)
    }

    fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, f)| *f == self).unwrap().0
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Function::Sin => z.sin(),
            Function::Cos => z.cos(),
            Function::Exp => z.exp(),
            Function::Tanh => z.tanh(),
            Function::Sqrt => z.sqrt(),
            Function::Abs => C64::new(z.norm(), 0.0),
            Function::Re => C64::new(z.re, 0.0),
            Function::Im => C64::new(z.im, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree. Literals are non-negative; signs are `Neg` nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Real(f64),
    /// An imaginary literal `v·i`.
    Imag(f64),
    Pi,
    E,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Function, Box<Expr>),
}

const UNARY_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src, pos: 0 };
        p.skip_ws();
        if p.peek().is_none() {
            return Err(p.error("empty expression", 0));
        }
        let e = p.expr()?;
        p.skip_ws();
        if p.peek().is_some() {
            return Err(p.error("unexpected input", p.pos));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        match self {
            Expr::Real(v) => C64::new(*v, 0.0),
            Expr::Imag(v) => C64::new(0.0, *v),
            Expr::Pi => C64::new(std::f64::consts::PI, 0.0),
            Expr::E => C64::new(std::f64::consts::E, 0.0),
            Expr::Var(Var::X) => C64::new(x, 0.0),
            Expr::Var(Var::T) => C64::new(t, 0.0),
            // 0 − z keeps a zero imaginary part at +0, so sqrt(-4) = 2i.
            Expr::Neg(a) => C64::new(0.0, 0.0) - a.eval(x, t),
            Expr::Call(f, a) => f.apply(a.eval(x, t)),
            Expr::Binary(op, a, b) => {
                let (u, v) = (a.eval(x, t), b.eval(x, t));
                match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => u / v,
                    BinOp::Pow => power(u, v),
                }
            }
        }
    }

    /// Whether the expression mentions `v`.
    pub fn uses(&self, v: Var) -> bool {
        match self {
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses(v),
            Expr::Binary(_, a, b) => a.uses(v) || b.uses(v),
            _ => false,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Neg(_) => UNARY_PRECEDENCE,
            Expr::Binary(op, _, _) => op.precedence(),
            _ => ATOM_PRECEDENCE,
        }
    }
}

/// Integer powers use repeated multiplication so that `x^2` is exact.
fn power(u: C64, v: C64) -> C64 {
    if v.im == 0.0 && v.re.fract() == 0.0 && v.re.abs() <= 64.0 {
        return u.powi(v.re as i32);
    }
    if u == C64::new(0.0, 0.0) && v.re > 0.0 {
        return u;
    }
    u.powc(v)
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the fewest parentheses that reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Real(v) => write!(f, "{v:?}"),
            Expr::Imag(v) => write!(f, "{v:?}i"),
            Expr::Pi => write!(f, "pi"),
            Expr::E => write!(f, "e"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, a.precedence() < UNARY_PRECEDENCE)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    write_child(f, a, a.precedence() <= p)?;
                    write!(f, "^")?;
                    write_child(f, b, b.precedence() < UNARY_PRECEDENCE)
                } else {
                    write_child(f, a, a.precedence() < p)?;
                    write!(f, "{}", op.symbol())?;
                    write_child(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>, position: usize) -> ExprError {
        ExprError { message: message.into(), position, source_text: self.src.to_string() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += c.len_utf8();
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of expression", start)),
            Some('(') => {
                self.bump();
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'", self.pos));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('π') => {
                self.bump();
                Ok(Expr::Pi)
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let name = &self.src[start..self.pos];
                if let Some(func) = Function::lookup(name) {
                    let after = self.pos;
                    if !self.eat('(') {
                        return Err(self.error(format!("expected '(' after '{name}'"), after));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.error("expected ')'", self.pos));
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name {
                    "x" => Ok(Expr::Var(Var::X)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "i" => Ok(Expr::Imag(1.0)),
                    "pi" => Ok(Expr::Pi),
                    "e" => Ok(Expr::E),
                    _ => Err(self.error(format!("unknown name '{name}'"), start)),
                }
            }
            Some(c) => Err(self.error(format!("unexpected character '{c}'"), start)),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.bump();
            }
        };
        digits(self);
        if self.peek() == Some('.') {
            self.bump();
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                // Not an exponent; leave `e` for the next token.
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        let v: f64 = text.parse().map_err(|_| self.error(format!("malformed number '{text}'"), start))?;
        if !v.is_finite() {
            return Err(self.error(format!("number '{text}' overflows"), start));
        }
        let rest = &self.src[self.pos..];
        if rest.starts_with('i') && !rest[1..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
            return Ok(Expr::Imag(v));
        }
        if rest.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_' || c == '(') {
            return Err(self.error("missing operator after number", self.pos));
        }
        Ok(Expr::Real(v))
    }
}
