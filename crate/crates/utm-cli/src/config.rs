//! Problem configuration: a small nested `key = value` text format and the
//! schema that turns it into solver inputs.
//!
//! ```text
//! file  := entry*
//! entry := key '=' value | key '{' entry* '}'
//! value := number | string | word | '[' (value (',' value)* ','?)? ']'
//! ```
//!
//! Keys and words match `[A-Za-z_][A-Za-z0-9_.-]*`, strings are double
//! quoted with `\"`, `\\` and `\n` escapes, and `#` starts a comment.
//! The full schema is documented in `docs/config.md`.

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use utm_core::coefficients::{func, CoefficientProfile, DispersionCache, Domain, DomainKind, Func, Preset};
use utm_core::delta::BoundaryConditions;
use utm_core::kernels::ProblemData;
use utm_core::{c64, C64};

use crate::error::{CliError, CliResult};
use crate::expr::{Expr, Var};
use crate::spline::NaturalSpline;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Word(String),
    Array(Vec<Node>),
    Block(Vec<Entry>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub value: Value,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub span: Span,
    pub node: Node,
}

fn config_error(path: &str, span: Span, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), line: span.line, column: span.column, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    Str(String),
    Open(char),
    Close(char),
    Eq,
    Comma,
    Eof,
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: usize,
    column: usize,
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer { chars: src.chars().collect(), i: 0, line: 1, column: 1 }
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.i + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_at(0)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span { line: self.line, column: self.column }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek_at(0) {
            if c == '#' {
                while self.peek_at(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> CliResult<(Tok, Span)> {
        self.skip_trivia();
        let span = self.span();
        let Some(c) = self.peek_at(0) else { return Ok((Tok::Eof, span)) };
        let tok = match c {
            '{' | '[' => {
                self.bump();
                Tok::Open(c)
            }
            '}' | ']' => {
                self.bump();
                Tok::Close(c)
            }
            '=' => {
                self.bump();
                Tok::Eq
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '"' => Tok::Str(self.string(span)?),
            c if c.is_ascii_digit() || matches!(c, '-' | '+' | '.') => Tok::Number(self.number(span)?),
            c if is_word_start(c) => {
                let mut w = String::new();
                while let Some(c) = self.peek_at(0).filter(|&c| is_word_char(c)) {
                    w.push(c);
                    self.bump();
                }
                Tok::Word(w)
            }
            c => return Err(config_error("", span, format!("unexpected character '{c}'"))),
        };
        Ok((tok, span))
    }

    fn string(&mut self, span: Span) -> CliResult<String> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(config_error("", span, "unterminated string")),
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    _ => return Err(config_error("", self.span(), "unknown escape sequence")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, span: Span) -> CliResult<f64> {
        let mut s = String::new();
        while let Some(c) = self.peek_at(0) {
            let after_exponent = matches!(s.chars().last(), Some('e' | 'E'));
            if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E') || (matches!(c, '+' | '-') && (s.is_empty() || after_exponent)) {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.peek_at(0).is_some_and(is_word_char) {
            return Err(config_error("", span, format!("malformed number '{s}'")));
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(config_error("", span, format!("number '{s}' is not finite"))),
            Err(_) => Err(config_error("", span, format!("malformed number '{s}'"))),
        }
    }
}

struct TreeParser {
    lex: Lexer,
    tok: Tok,
    span: Span,
    /// Key path being read, attached to lexer errors.
    context: String,
}

impl TreeParser {
    fn advance(&mut self) -> CliResult<()> {
        (self.tok, self.span) = self.lex.next().map_err(|e| match e {
            CliError::Config { path, line, column, message } if path.is_empty() => {
                CliError::Config { path: self.context.clone(), line, column, message }
            }
            e => e,
        })?;
        Ok(())
    }

    fn entries(&mut self, path: &str, closing: Option<char>) -> CliResult<Vec<Entry>> {
        let mut out: Vec<Entry> = Vec::new();
        loop {
            match &self.tok {
                Tok::Eof if closing.is_none() => return Ok(out),
                Tok::Close(c) if Some(*c) == closing => {
                    self.advance()?;
                    return Ok(out);
                }
                Tok::Word(key) => {
                    let (key, span) = (key.clone(), self.span);
                    let full = join(path, &key);
                    if out.iter().any(|e| e.key == key) {
                        return Err(config_error(&full, span, "duplicate key"));
                    }
                    self.context = full.clone();
                    self.advance()?;
                    let node = match self.tok {
                        Tok::Eq => {
                            self.advance()?;
                            self.value(&full)?
                        }
                        Tok::Open('{') => {
                            let span = self.span;
                            self.advance()?;
                            Node { value: Value::Block(self.entries(&full, Some('}'))?), span }
                        }
                        _ => return Err(config_error(&full, self.span, "expected '=' or '{' after key")),
                    };
                    out.push(Entry { key, span, node });
                }
                Tok::Eof => return Err(config_error(path, self.span, "unclosed '{'")),
                _ => return Err(config_error(path, self.span, "expected a key")),
            }
        }
    }

    fn value(&mut self, path: &str) -> CliResult<Node> {
        let span = self.span;
        let value = match std::mem::replace(&mut self.tok, Tok::Eof) {
            Tok::Number(v) => Value::Number(v),
            Tok::Str(s) => Value::Str(s),
            Tok::Word(w) => Value::Word(w),
            Tok::Open('[') => {
                self.advance()?;
                let mut items = Vec::new();
                loop {
                    if self.tok == Tok::Close(']') {
                        break;
                    }
                    items.push(self.value(&format!("{path}[{}]", items.len()))?);
                    match self.tok {
                        Tok::Comma => self.advance()?,
                        Tok::Close(']') => {}
                        _ => return Err(config_error(path, self.span, "expected ',' or ']'")),
                    }
                }
                Value::Array(items)
            }
            _ => return Err(config_error(path, span, "expected a value")),
        };
        self.advance()?;
        Ok(Node { value, span })
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Parses the raw entry tree without applying the schema.
pub fn parse_tree(src: &str) -> CliResult<Vec<Entry>> {
    let mut lex = Lexer::new(src);
    let (tok, span) = lex.next()?;
    TreeParser { lex, tok, span, context: String::new() }.entries("", None)
}

/// Key lookup within one block that remembers which keys were read.
struct Section<'a> {
    path: String,
    span: Span,
    entries: &'a [Entry],
    used: RefCell<Vec<bool>>,
}

impl<'a> Section<'a> {
    fn new(path: String, span: Span, entries: &'a [Entry]) -> Self {
        Section { path, span, entries, used: RefCell::new(vec![false; entries.len()]) }
    }

    fn path(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn get(&self, key: &str) -> Option<&'a Entry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used.borrow_mut()[i] = true;
        Some(&self.entries[i])
    }

    fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    fn missing(&self, key: &str) -> CliError {
        config_error(&self.path(key), self.span, "missing required key")
    }

    fn block(&self, key: &str) -> CliResult<Option<Section<'a>>> {
        let Some(e) = self.get(key) else { return Ok(None) };
        match &e.node.value {
            Value::Block(entries) => Ok(Some(Section::new(self.path(key), e.span, entries))),
            _ => Err(config_error(&self.path(key), e.span, "expected a '{ ... }' block")),
        }
    }

    fn node(&self, key: &str) -> Option<(String, &'a Node)> {
        self.get(key).map(|e| (self.path(key), &e.node))
    }

    fn word(&self, key: &str) -> CliResult<Option<(String, Span)>> {
        let Some((path, node)) = self.node(key) else { return Ok(None) };
        match &node.value {
            Value::Word(w) | Value::Str(w) => Ok(Some((w.clone(), node.span))),
            _ => Err(config_error(&path, node.span, "expected a word")),
        }
    }

    fn complex(&self, key: &str) -> CliResult<Option<C64>> {
        self.node(key).map(|(path, node)| constant_of(&path, node)).transpose()
    }

    fn real(&self, key: &str) -> CliResult<Option<f64>> {
        let Some((path, node)) = self.node(key) else { return Ok(None) };
        let z = constant_of(&path, node)?;
        if z.im != 0.0 {
            return Err(config_error(&path, node.span, "expected a real number"));
        }
        Ok(Some(z.re))
    }

    fn count(&self, key: &str) -> CliResult<Option<usize>> {
        let Some(v) = self.real(key)? else { return Ok(None) };
        if v < 0.0 || v.fract() != 0.0 || v > 1e9 {
            let e = self.get(key).unwrap();
            return Err(config_error(&self.path(key), e.node.span, "expected a non-negative integer"));
        }
        Ok(Some(v as usize))
    }

    fn positive(&self, key: &str) -> CliResult<Option<f64>> {
        let v = self.real(key)?;
        if let Some(v) = v.filter(|v| *v <= 0.0) {
            let e = self.get(key).unwrap();
            return Err(config_error(&self.path(key), e.node.span, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn expr(&self, key: &str, allowed: &[Var]) -> CliResult<Option<Expr>> {
        let Some((path, node)) = self.node(key) else { return Ok(None) };
        expression_of(&path, node, allowed).map(Some)
    }

    fn array(&self, key: &str) -> CliResult<Option<(String, &'a Node, &'a [Node])>> {
        let Some((path, node)) = self.node(key) else { return Ok(None) };
        match &node.value {
            Value::Array(items) => Ok(Some((path, node, items))),
            _ => Err(config_error(&path, node.span, "expected an array")),
        }
    }

    /// Rejects keys that were never read.
    fn finish(self) -> CliResult<()> {
        let used = self.used.borrow();
        match self.entries.iter().zip(used.iter()).find(|(_, u)| !**u) {
            Some((e, _)) => Err(config_error(&self.path(&e.key), e.span, "unknown key")),
            None => Ok(()),
        }
    }
}

/// A number, or a string holding a constant expression such as "1 - 0.5i".
fn constant_of(path: &str, node: &Node) -> CliResult<C64> {
    let z = match &node.value {
        Value::Number(v) => c64(*v, 0.0),
        Value::Str(_) => expression_of(path, node, &[])?.eval(0.0, 0.0),
        _ => return Err(config_error(path, node.span, "expected a number")),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(config_error(path, node.span, "value is not finite"));
    }
    Ok(z)
}

fn expression_of(path: &str, node: &Node, allowed: &[Var]) -> CliResult<Expr> {
    let src = match &node.value {
        Value::Str(s) => s.clone(),
        Value::Number(v) => return Ok(Expr::Real(*v)),
        Value::Word(w) => w.clone(),
        _ => return Err(config_error(path, node.span, "expected an expression string")),
    };
    let e = Expr::parse(&src).map_err(|err| {
        // Column of the offending character inside the quoted string.
        let offset = src[..err.position.min(src.len())].chars().count() + 1;
        let span = Span { line: node.span.line, column: node.span.column + offset };
        config_error(path, span, format!("expression error: {err}"))
    })?;
    for (v, name) in [(Var::X, "x"), (Var::T, "t")] {
        if e.uses(v) && !allowed.contains(&v) {
            return Err(config_error(path, node.span, format!("expression may not depend on '{name}'")));
        }
    }
    Ok(e)
}

/// Coefficient source.
#[derive(Debug, Clone)]
pub enum CoefficientSpec {
    Preset(Preset),
    Expression { alpha: Expr, beta: Expr, gamma: Expr, primes: [Option<Expr>; 3] },
    Samples { x: Vec<f64>, alpha: Vec<C64>, beta: Vec<C64>, gamma: Vec<C64> },
}

impl CoefficientSpec {
    pub fn profile(&self, domain: Domain) -> CoefficientProfile {
        match self {
            CoefficientSpec::Preset(p) => p.profile(domain),
            CoefficientSpec::Expression { alpha, beta, gamma, primes } => {
                let of = |e: &Expr| -> Func {
                    let e = e.clone();
                    func(move |x| e.eval(x, 0.0))
                };
                let mut p = CoefficientProfile::new(of(alpha), of(beta), of(gamma), domain);
                p.alpha_prime = primes[0].as_ref().map(of);
                p.beta_prime = primes[1].as_ref().map(of);
                p.gamma_prime = primes[2].as_ref().map(of);
                if !gamma.uses(Var::X) {
                    p = p.with_constant_gamma();
                }
                p
            }
            CoefficientSpec::Samples { x, alpha, beta, gamma } => {
                let spline = |y: &[C64]| Arc::new(NaturalSpline::new(x.clone(), y.to_vec()));
                let (sa, sb, sg) = (spline(alpha), spline(beta), spline(gamma));
                let value = |s: &Arc<NaturalSpline>| -> Func {
                    let s = s.clone();
                    func(move |x| s.value(x))
                };
                let slope = |s: &Arc<NaturalSpline>| -> Func {
                    let s = s.clone();
                    func(move |x| s.derivative(x))
                };
                let p = CoefficientProfile::new(value(&sa), value(&sb), value(&sg), domain).with_derivatives(
                    slope(&sa),
                    slope(&sb),
                    slope(&sg),
                );
                if gamma.iter().all(|g| *g == gamma[0]) {
                    p.with_constant_gamma()
                } else {
                    p
                }
            }
        }
    }
}

/// Initial, forcing and boundary data as expressions.
#[derive(Debug, Clone, Default)]
pub struct DataSpec {
    pub q0: Option<Expr>,
    pub f: Option<Expr>,
    pub f0: Option<Expr>,
    pub f1: Option<Expr>,
}

impl DataSpec {
    pub fn problem_data(&self) -> ProblemData {
        let mut d = ProblemData::default();
        let of_x = |e: &Expr| -> Func {
            let e = e.clone();
            func(move |x| e.eval(x, 0.0))
        };
        let of_t = |e: &Expr| -> Func {
            let e = e.clone();
            func(move |t| e.eval(0.0, t))
        };
        if let Some(q0) = &self.q0 {
            d = d.with_q0(of_x(q0));
        }
        if let Some(f) = &self.f {
            let f = f.clone();
            d = d.with_forcing(Arc::new(move |x: f64, t: f64| f.eval(x, t)), None);
        }
        if let Some(f0) = &self.f0 {
            d = d.with_boundary(0, of_t(f0), None);
        }
        if let Some(f1) = &self.f1 {
            d = d.with_boundary(1, of_t(f1), None);
        }
        d
    }
}

/// Numerical settings. Absent values take the library defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Numerics {
    /// Fixed truncation Δ_N with accumulation levels 0..=2N.
    pub n: Option<usize>,
    pub residual_threshold: Option<f64>,
    pub step_parameter: Option<f64>,
    pub safety: Option<f64>,
    pub theta0: Option<f64>,
    pub t_min: Option<f64>,
    pub tol: Option<f64>,
    pub refine: Option<f64>,
    pub oracle_intervals: Option<usize>,
    pub oracle_dt: Option<f64>,
}

/// Output grid: `nx` points on [xa, xb] by `nt` points on [ta, tb].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
    pub xa: f64,
    pub xb: f64,
    pub ta: f64,
    pub tb: f64,
}

fn linspace(n: usize, a: f64, b: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

impl Grid {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.nx, self.xa, self.xb)
    }

    pub fn ts(&self) -> Vec<f64> {
        linspace(self.nt, self.ta, self.tb)
    }

    fn from_values(v: &[f64]) -> Result<Grid, String> {
        if v.len() != 6 {
            return Err(format!("expected 6 values nx,nt,xa,xb,ta,tb, got {}", v.len()));
        }
        let whole = |u: f64| u >= 0.0 && u.fract() == 0.0 && u <= 1e7;
        if !whole(v[0]) || !whole(v[1]) {
            return Err("nx and nt must be non-negative integers".into());
        }
        if v.iter().any(|u| !u.is_finite()) {
            return Err("grid values must be finite".into());
        }
        if v[3] < v[2] || v[5] < v[4] {
            return Err("grid ranges must satisfy xa ≤ xb and ta ≤ tb".into());
        }
        if v[1] > 0.0 && v[4] <= 0.0 {
            return Err("output times must be positive".into());
        }
        Ok(Grid { nx: v[0] as usize, nt: v[1] as usize, xa: v[2], xb: v[3], ta: v[4], tb: v[5] })
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
        Grid::from_values(&v.map_err(|e| format!("bad grid '{s}': {e}"))?)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub grid: Option<Grid>,
    pub count: Option<usize>,
}

/// A validated problem description.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub domain: Domain,
    pub coefficients: CoefficientSpec,
    pub bc: BoundaryConditions,
    pub data: DataSpec,
    pub numerics: Numerics,
    pub output: OutputSpec,
}

/// Solver inputs built from a config.
#[derive(Clone)]
pub struct Setup {
    pub profile: CoefficientProfile,
    pub cache: Arc<DispersionCache>,
    pub bc: BoundaryConditions,
    pub data: ProblemData,
}

impl ProblemConfig {
    pub fn setup(&self) -> CliResult<Setup> {
        let profile = self.coefficients.profile(self.domain);
        let cache = Arc::new(DispersionCache::new(&profile)?);
        Ok(Setup { profile, cache, bc: self.bc.clone(), data: self.data.problem_data() })
    }
}

pub fn parse_config(path: &Path) -> CliResult<ProblemConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_str(&src)
}

pub fn parse_str(src: &str) -> CliResult<ProblemConfig> {
    let tree = parse_tree(src)?;
    let top = Section::new(String::new(), Span { line: 1, column: 1 }, &tree);
    let domain = {
        let s = top.block("domain")?.ok_or_else(|| top.missing("domain"))?;
        let d = domain(&s)?;
        s.finish()?;
        d
    };
    let coefficients = {
        let s = top.block("coefficients")?.ok_or_else(|| top.missing("coefficients"))?;
        let c = coefficients(&s)?;
        s.finish()?;
        c
    };
    let bc = match top.block("bc")? {
        Some(s) => {
            let b = boundary(&s, domain.kind)?;
            s.finish()?;
            b
        }
        None if domain.kind == DomainKind::WholeLine => BoundaryConditions::WholeLine,
        None => return Err(top.missing("bc")),
    };
    let data = match top.block("data")? {
        Some(s) => {
            let d = data(&s, domain.kind)?;
            s.finish()?;
            d
        }
        None => DataSpec::default(),
    };
    let numerics = match top.block("numerics")? {
        Some(s) => {
            let n = numerics(&s)?;
            s.finish()?;
            n
        }
        None => Numerics::default(),
    };
    let output = match top.block("output")? {
        Some(s) => {
            let o = output(&s)?;
            s.finish()?;
            o
        }
        None => OutputSpec::default(),
    };
    top.finish()?;
    Ok(ProblemConfig { domain, coefficients, bc, data, numerics, output })
}

fn domain(s: &Section) -> CliResult<Domain> {
    let (kind, span) = s.word("kind")?.ok_or_else(|| s.missing("kind"))?;
    let req = |key: &str| s.real(key)?.ok_or_else(|| s.missing(key));
    let mut d = match kind.as_str() {
        "interval" => {
            let (a, b) = (req("xl")?, req("xr")?);
            if b <= a {
                return Err(config_error(&s.path("xr"), s.span, "xr must exceed xl"));
            }
            Domain::interval(a, b)
        }
        "half-line" => Domain::half_line(req("xl")?),
        "whole-line" => Domain::whole_line(),
        other => {
            return Err(config_error(
                &s.path("kind"),
                span,
                format!("unknown domain kind '{other}' (expected interval, half-line or whole-line)"),
            ))
        }
    };
    if let Some(e) = s.positive("truncation")? {
        if d.kind == DomainKind::FiniteInterval {
            return Err(config_error(&s.path("truncation"), s.span, "finite intervals take no truncation"));
        }
        d = d.with_truncation(e);
    }
    Ok(d)
}

fn coefficients(s: &Section) -> CliResult<CoefficientSpec> {
    let (mode, span) = s.word("mode")?.ok_or_else(|| s.missing("mode"))?;
    match mode.as_str() {
        "preset" => preset(s).map(CoefficientSpec::Preset),
        "expression" => {
            let req = |key: &str| s.expr(key, &[Var::X])?.ok_or_else(|| s.missing(key));
            let (alpha, beta) = (req("alpha")?, req("beta")?);
            let gamma = s.expr("gamma", &[Var::X])?.unwrap_or(Expr::Real(0.0));
            let primes = [
                s.expr("alpha_prime", &[Var::X])?,
                s.expr("beta_prime", &[Var::X])?,
                s.expr("gamma_prime", &[Var::X])?,
            ];
            Ok(CoefficientSpec::Expression { alpha, beta, gamma, primes })
        }
        "samples" => {
            let (xpath, xnode, xs) = s.array("x")?.ok_or_else(|| s.missing("x"))?;
            let x = xs.iter().map(|n| constant_of(&xpath, n).map(|z| z.re)).collect::<CliResult<Vec<f64>>>()?;
            if x.len() < 3 || x.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_error(&xpath, xnode.span, "need at least 3 strictly increasing sample points"));
            }
            let column = |key: &str, default: Option<C64>| -> CliResult<Vec<C64>> {
                let Some((path, node, items)) = s.array(key)? else {
                    return default.map(|v| vec![v; x.len()]).ok_or_else(|| s.missing(key));
                };
                if items.len() != x.len() {
                    return Err(config_error(&path, node.span, format!("expected {} samples", x.len())));
                }
                items.iter().enumerate().map(|(i, n)| constant_of(&format!("{path}[{i}]"), n)).collect()
            };
            let alpha = column("alpha", None)?;
            let beta = column("beta", None)?;
            let gamma = column("gamma", Some(c64(0.0, 0.0)))?;
            Ok(CoefficientSpec::Samples { x, alpha, beta, gamma })
        }
        other => Err(config_error(
            &s.path("mode"),
            span,
            format!("unknown mode '{other}' (expected preset, expression or samples)"),
        )),
    }
}

fn preset(s: &Section) -> CliResult<Preset> {
    let (name, span) = s.word("preset")?.ok_or_else(|| s.missing("preset"))?;
    let gamma = || -> CliResult<C64> { Ok(s.complex("gamma")?.unwrap_or(c64(0.0, 0.0))) };
    let req = |key: &str| s.real(key)?.ok_or_else(|| s.missing(key));
    Ok(match name.as_str() {
        "constant" => Preset::Constant {
            alpha: s.complex("alpha")?.unwrap_or(c64(1.0, 0.0)),
            beta: s.complex("beta")?.unwrap_or(c64(1.0, 0.0)),
            gamma: gamma()?,
        },
        "linear" => Preset::Linear { b0: req("b0")?, b1: req("b1")?, gamma: gamma()? },
        "gaussian-bump" => Preset::GaussianBump {
            amplitude: req("amplitude")?,
            center: req("center")?,
            width: s.positive("width")?.ok_or_else(|| s.missing("width"))?,
            gamma: gamma()?,
        },
        "tanh-step" => Preset::TanhStep {
            amplitude: req("amplitude")?,
            center: req("center")?,
            width: s.positive("width")?.ok_or_else(|| s.missing("width"))?,
            gamma: gamma()?,
        },
        "cgl" => Preset::Cgl,
        other => {
            return Err(config_error(
                &s.path("preset"),
                span,
                format!("unknown preset '{other}' (expected constant, linear, gaussian-bump, tanh-step or cgl)"),
            ))
        }
    })
}

fn boundary(s: &Section, kind: DomainKind) -> CliResult<BoundaryConditions> {
    let built = match kind {
        DomainKind::WholeLine => Ok(BoundaryConditions::WholeLine),
        DomainKind::HalfLine => {
            let req = |key: &str| s.complex(key)?.ok_or_else(|| s.missing(key));
            BoundaryConditions::half_line(req("a0")?, req("a1")?)
        }
        DomainKind::FiniteInterval => {
            if let Some((name, span)) = s.word("preset")? {
                if s.has("rows") {
                    return Err(config_error(&s.path("rows"), s.span, "give either 'preset' or 'rows', not both"));
                }
                return match name.as_str() {
                    "dirichlet" => Ok(BoundaryConditions::dirichlet()),
                    "neumann" => Ok(BoundaryConditions::neumann()),
                    "periodic" => Ok(BoundaryConditions::periodic()),
                    other => Err(config_error(
                        &s.path("preset"),
                        span,
                        format!("unknown preset '{other}' (expected dirichlet, neumann or periodic)"),
                    )),
                };
            }
            let (path, node, items) = s.array("rows")?.ok_or_else(|| s.missing("rows"))?;
            let mut rows = [[c64(0.0, 0.0); 4]; 2];
            for (j, row) in rows.iter_mut().enumerate() {
                let rpath = format!("{path}[{j}]");
                let Some(rnode) = items.get(j) else {
                    return Err(config_error(&rpath, node.span, "missing boundary row"));
                };
                let Value::Array(cells) = &rnode.value else {
                    return Err(config_error(&rpath, rnode.span, "expected an array of 4 coefficients"));
                };
                for (c, cell) in row.iter_mut().enumerate() {
                    let cpath = format!("{rpath}[{c}]");
                    let cnode =
                        cells.get(c).ok_or_else(|| config_error(&cpath, rnode.span, "missing coefficient"))?;
                    *cell = constant_of(&cpath, cnode)?;
                }
                if cells.len() > 4 {
                    return Err(config_error(&rpath, rnode.span, "a boundary row has exactly 4 coefficients"));
                }
            }
            if items.len() > 2 {
                return Err(config_error(&format!("{path}[2]"), items[2].span, "exactly two boundary rows are allowed"));
            }
            BoundaryConditions::interval(rows)
        }
    };
    built.map_err(|e| config_error(&s.path, s.span, e.to_string()))
}

fn data(s: &Section, kind: DomainKind) -> CliResult<DataSpec> {
    let d = DataSpec {
        q0: s.expr("q0", &[Var::X])?,
        f: s.expr("f", &[Var::X, Var::T])?,
        f0: s.expr("f0", &[Var::T])?,
        f1: s.expr("f1", &[Var::T])?,
    };
    let boundaries = match kind {
        DomainKind::FiniteInterval => 2,
        DomainKind::HalfLine => 1,
        DomainKind::WholeLine => 0,
    };
    for (m, key) in ["f0", "f1"].iter().enumerate() {
        if m >= boundaries && s.has(key) {
            return Err(config_error(&s.path(key), s.span, "this domain has no such boundary"));
        }
    }
    Ok(d)
}

fn numerics(s: &Section) -> CliResult<Numerics> {
    let mut n = Numerics {
        n: s.count("n")?,
        residual_threshold: s.positive("residual_threshold")?,
        step_parameter: s.positive("step_parameter")?,
        ..Numerics::default()
    };
    if let Some(c) = s.block("contour")? {
        n.safety = c.positive("safety")?;
        n.theta0 = c.positive("theta0")?;
        n.t_min = c.positive("t_min")?;
        n.tol = c.positive("tol")?;
        n.refine = c.positive("refine")?;
        c.finish()?;
    }
    if let Some(o) = s.block("oracle")? {
        n.oracle_intervals = o.count("intervals")?;
        n.oracle_dt = o.positive("dt")?;
        o.finish()?;
    }
    Ok(n)
}

fn output(s: &Section) -> CliResult<OutputSpec> {
    let dir = s.word("dir")?.map(|(d, _)| PathBuf::from(d));
    let grid = match s.node("grid") {
        None => None,
        Some((path, node)) => {
            let parsed = match &node.value {
                Value::Array(items) => Grid::from_values(
                    &items
                        .iter()
                        .enumerate()
                        .map(|(i, n)| constant_of(&format!("{path}[{i}]"), n).map(|z| z.re))
                        .collect::<CliResult<Vec<f64>>>()?,
                ),
                Value::Str(text) => text.parse::<Grid>(),
                _ => Err("expected [nx, nt, xa, xb, ta, tb]".to_string()),
            };
            Some(parsed.map_err(|e| config_error(&path, node.span, e))?)
        }
    };
    Ok(OutputSpec { dir, grid, count: s.count("count")? })
}
