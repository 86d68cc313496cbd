//! A small expression language for scalar right-hand sides `f(t, x, y)`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?              (right associative)
//! atom    := number | 'pi' | 'e' | 't' | 'x' | 'y'
//!          | func '(' expr ')'
//!          | 'ml' '(' number ',' expr ')'
//!          | '(' expr ')'
//! func    := 'sqrt' | 'abs' | 'sin' | 'cos' | 'exp'
//! number  := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ```
//!
//! Unary minus binds looser than `^`, so `-2^2` is `-4` and `2^3^2` is
//! `512`. `ml(a, z)` is the Mittag-Leffler function `E_a(z)`; its order must
//! be a literal in (0, 1]. In the right-hand side `y` stands for `D^α x`.

use std::fmt;
use std::sync::Arc;

use crate::sampling::Halton;
use crate::solver::{Rhs, RhsError};
use crate::specfun::mittag_leffler;

/// Byte range `[start, end)` in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Abs,
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }
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
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Pi,
    E,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Ml(f64, Box<Expr>),
}

/// Parsed expression. Equality compares structure and ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnexpectedChar(char),
    Expected { expected: &'static str, found: String },
    UnknownIdentifier(String),
    WrongArity { func: String, expected: usize, found: usize },
    MlOrderNotLiteral,
    MlOrderOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::EmptyInput => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::Expected { expected, found } => write!(f, "expected {expected}, found {found}"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier '{s}'"),
            ParseErrorKind::WrongArity { func, expected, found } => {
                write!(f, "{func} takes {expected} argument(s), got {found}")
            }
            ParseErrorKind::MlOrderNotLiteral => write!(f, "ml order must be a numeric literal"),
            ParseErrorKind::MlOrderOutOfRange(a) => write!(f, "ml order {a} must lie in (0,1]"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    SqrtOfNegative(f64),
    DivisionByZero,
    ZeroToNegativePower,
    NonFinite(f64),
    MittagLeffler(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalError {
    pub span: Span,
    pub kind: EvalErrorKind,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}..{}: ", self.span.start, self.span.end)?;
        match &self.kind {
            EvalErrorKind::SqrtOfNegative(v) => write!(f, "square root of negative value {v}"),
            EvalErrorKind::DivisionByZero => write!(f, "division by zero"),
            EvalErrorKind::ZeroToNegativePower => write!(f, "zero raised to a negative power"),
            EvalErrorKind::NonFinite(v) => write!(f, "non-finite result {v}"),
            EvalErrorKind::MittagLeffler(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for EvalError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
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
                let text = &src[start..i];
                let v = text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| ParseError {
                    offset: start,
                    kind: ParseErrorKind::Expected {
                        expected: "a finite number",
                        found: format!("'{text}'"),
                    },
                })?;
                out.push((Tok::Num(v), Span { start, end: i }));
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), Span { start, end: i }));
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => out.push((Tok::Op(c as char), Span { start, end: i + 1 })),
            b'(' => out.push((Tok::LParen, Span { start, end: i + 1 })),
            b')' => out.push((Tok::RParen, Span { start, end: i + 1 })),
            b',' => out.push((Tok::Comma, Span { start, end: i + 1 })),
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        }
        i += 1;
    }
    out.push((Tok::End, Span { start: src.len(), end: src.len() }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &'static str) -> ParseError {
        ParseError {
            offset: self.span().start,
            kind: ParseErrorKind::Expected {
                expected,
                found: self.peek().describe(),
            },
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            let start = self.bump().1.start;
            let inner = self.unary()?;
            let span = Span {
                start,
                end: inner.span.end,
            };
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<(Vec<Expr>, Span), ParseError> {
        self.expect(Tok::LParen, "'('")?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        let close = self.expect(Tok::RParen, "',' or ')'")?;
        Ok((args, close))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.bump();
        let leaf = |kind| Ok(Expr { kind, span });
        match tok {
            Tok::Num(v) => leaf(ExprKind::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "')'")?;
                Ok(Expr {
                    kind: inner.kind,
                    span: Span {
                        start: span.start,
                        end: close.end,
                    },
                })
            }
            Tok::Ident(name) => match name.as_str() {
                "pi" => leaf(ExprKind::Pi),
                "e" => leaf(ExprKind::E),
                "t" => leaf(ExprKind::Var(Var::T)),
                "x" => leaf(ExprKind::Var(Var::X)),
                "y" => leaf(ExprKind::Var(Var::Y)),
                "sqrt" | "abs" | "sin" | "cos" | "exp" => {
                    let func = match name.as_str() {
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        _ => Func::Exp,
                    };
                    let (mut args, close) = self.args()?;
                    if args.len() != 1 {
                        return Err(ParseError {
                            offset: span.start,
                            kind: ParseErrorKind::WrongArity {
                                func: name,
                                expected: 1,
                                found: args.len(),
                            },
                        });
                    }
                    Ok(Expr {
                        kind: ExprKind::Call(func, Box::new(args.remove(0))),
                        span: Span {
                            start: span.start,
                            end: close.end,
                        },
                    })
                }
                "ml" => {
                    let (mut args, close) = self.args()?;
                    if args.len() != 2 {
                        return Err(ParseError {
                            offset: span.start,
                            kind: ParseErrorKind::WrongArity {
                                func: name,
                                expected: 2,
                                found: args.len(),
                            },
                        });
                    }
                    let arg = args.pop().expect("two arguments");
                    let order = args.pop().expect("two arguments");
                    let ExprKind::Num(a) = order.kind else {
                        return Err(ParseError {
                            offset: order.span.start,
                            kind: ParseErrorKind::MlOrderNotLiteral,
                        });
                    };
                    if !(a > 0.0 && a <= 1.0) {
                        return Err(ParseError {
                            offset: order.span.start,
                            kind: ParseErrorKind::MlOrderOutOfRange(a),
                        });
                    }
                    Ok(Expr {
                        kind: ExprKind::Ml(a, Box::new(arg)),
                        span: Span {
                            start: span.start,
                            end: close.end,
                        },
                    })
                }
                _ => Err(ParseError {
                    offset: span.start,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                }),
            },
            Tok::End => Err(ParseError {
                offset: span.start,
                kind: ParseErrorKind::Expected {
                    expected: "an operand",
                    found: "end of input".into(),
                },
            }),
            other => Err(ParseError {
                offset: span.start,
                kind: ParseErrorKind::Expected {
                    expected: "an operand",
                    found: other.describe(),
                },
            }),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = Span {
        start: lhs.span.start,
        end: rhs.span.end,
    };
    Expr {
        kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        span,
    }
}

/// Parses a right-hand side formula.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            offset: 0,
            kind: ParseErrorKind::EmptyInput,
        });
    }
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("an operator or end of input"));
    }
    Ok(e)
}

impl Expr {
    fn fail(&self, kind: EvalErrorKind) -> EvalError {
        EvalError { span: self.span, kind }
    }

    fn finite(&self, v: f64) -> Result<f64, EvalError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.fail(EvalErrorKind::NonFinite(v)))
        }
    }

    /// Evaluates at `(t, x, y)`. Domain violations are errors, never NaN.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<f64, EvalError> {
        match &self.kind {
            ExprKind::Num(v) => Ok(*v),
            ExprKind::Pi => Ok(std::f64::consts::PI),
            ExprKind::E => Ok(std::f64::consts::E),
            ExprKind::Var(Var::T) => Ok(t),
            ExprKind::Var(Var::X) => Ok(x),
            ExprKind::Var(Var::Y) => Ok(y),
            ExprKind::Neg(a) => Ok(-a.eval(t, x, y)?),
            ExprKind::Binary(op, a, b) => {
                let u = a.eval(t, x, y)?;
                let v = b.eval(t, x, y)?;
                let r = match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => {
                        if v == 0.0 {
                            return Err(self.fail(EvalErrorKind::DivisionByZero));
                        }
                        u / v
                    }
                    BinOp::Pow => {
                        if u == 0.0 && v < 0.0 {
                            return Err(self.fail(EvalErrorKind::ZeroToNegativePower));
                        }
                        u.powf(v)
                    }
                };
                self.finite(r)
            }
            ExprKind::Call(f, a) => {
                let u = a.eval(t, x, y)?;
                let r = match f {
                    Func::Sqrt => {
                        if u < 0.0 {
                            return Err(self.fail(EvalErrorKind::SqrtOfNegative(u)));
                        }
                        u.sqrt()
                    }
                    Func::Abs => u.abs(),
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Exp => u.exp(),
                };
                self.finite(r)
            }
            ExprKind::Ml(alpha, a) => {
                let u = a.eval(t, x, y)?;
                mittag_leffler(*alpha, u).map_err(|e| self.fail(EvalErrorKind::MittagLeffler(e.to_string())))
            }
        }
    }

    /// True when the expression mentions none of `t`, `x`, `y`.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            ExprKind::Var(_) => false,
            ExprKind::Num(_) | ExprKind::Pi | ExprKind::E => true,
            ExprKind::Neg(a) | ExprKind::Call(_, a) | ExprKind::Ml(_, a) => a.is_constant(),
            ExprKind::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

/// Fully parenthesized output that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v:?}"),
            ExprKind::Pi => f.write_str("pi"),
            ExprKind::E => f.write_str("e"),
            ExprKind::Var(Var::T) => f.write_str("t"),
            ExprKind::Var(Var::X) => f.write_str("x"),
            ExprKind::Var(Var::Y) => f.write_str("y"),
            ExprKind::Neg(a) => write!(f, "(-{a})"),
            ExprKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprKind::Call(func, a) => write!(f, "{}({a})", func.name()),
            ExprKind::Ml(alpha, a) => write!(f, "ml({alpha:?}, {a})"),
        }
    }
}

/// Vector right-hand side built from one scalar expression per component;
/// component `i` sees `x_i` and `y_i`.
#[derive(Debug, Clone)]
pub struct ExprRhs {
    exprs: Vec<Expr>,
}

impl ExprRhs {
    pub fn new(exprs: Vec<Expr>) -> Self {
        ExprRhs { exprs }
    }

    pub fn parse_all<S: AsRef<str>>(sources: &[S]) -> Result<Self, ParseError> {
        sources
            .iter()
            .map(|s| parse(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()
            .map(ExprRhs::new)
    }

    pub fn dim(&self) -> usize {
        self.exprs.len()
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }

    pub fn into_rhs(self) -> Arc<dyn Rhs> {
        Arc::new(self)
    }
}

impl Rhs for ExprRhs {
    fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), RhsError> {
        for (i, (e, o)) in self.exprs.iter().zip(out.iter_mut()).enumerate() {
            *o = e.eval(t, x[i], y[i]).map_err(|err| RhsError(format!("component {}: {err}", i + 1)))?;
        }
        Ok(())
    }
}

/// Sampled Lipschitz constants, scaled by a 1.2 safety factor. These are
/// estimates, not certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateError {
    pub point: (f64, f64, f64),
    pub source: EvalError,
}

impl fmt::Display for EstimateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (t, x, y) = self.point;
        write!(f, "evaluation failed at (t={t}, x={x}, y={y}): {}", self.source)
    }
}

impl std::error::Error for EstimateError {}

/// Max difference quotient along each argument over Halton sample pairs in
/// `[0, T] × [-r, r]²`, times 1.2.
pub fn estimate_lipschitz(e: &Expr, horizon: f64, box_radius: f64, samples: usize) -> Result<LipschitzEstimate, EstimateError> {
    let samples = samples.max(100);
    let eval = |t: f64, x: f64, y: f64| {
        e.eval(t, x, y).map_err(|source| EstimateError {
            point: (t, x, y),
            source,
        })
    };
    let mut best = [0.0f64; 3];
    for u in Halton::new(6).take(samples) {
        let p = [horizon * u[0], box_radius * (2.0 * u[1] - 1.0), box_radius * (2.0 * u[2] - 1.0)];
        let q = [horizon * u[3], box_radius * (2.0 * u[4] - 1.0), box_radius * (2.0 * u[5] - 1.0)];
        let f0 = eval(p[0], p[1], p[2])?;
        for (axis, slot) in best.iter_mut().enumerate() {
            let delta = q[axis] - p[axis];
            if delta == 0.0 {
                continue;
            }
            let mut moved = p;
            moved[axis] = q[axis];
            let f1 = eval(moved[0], moved[1], moved[2])?;
            *slot = slot.max((f1 - f0).abs() / delta.abs());
        }
    }
    Ok(LipschitzEstimate {
        m1: 1.2 * best[0],
        m2: 1.2 * best[1],
        m3: 1.2 * best[2],
    })
}
