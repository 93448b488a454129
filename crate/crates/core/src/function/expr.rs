//! Expression language for test maps and control functions.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor ('*' factor)*
//! factor   := atom ('^' rational)?
//! atom     := rational | 'u' | 'v' | 'norm' '(' ('u' | 'v' | 'w' index) ')'
//!           | 'max' '(' expr (',' expr)+ ')' | 'min' '(' expr (',' expr)+ ')'
//!           | '(' expr ')' | parameter
//! rational := integer ('/' positive-integer)?
//! ```
//!
//! A `-` directly in front of an integer where an atom is expected is the
//! sign of that literal. Parameters are caller-supplied names (e.g. `rho`)
//! that are substituted by rational constants while parsing.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result, SourcePos};
use crate::padic::format_rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    U,
    V,
}

/// Argument of a `norm(...)` atom. Slot indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormArg {
    U,
    V,
    W(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: SourcePos,
    pub end: SourcePos,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Spans are ignored by equality so reparsed trees compare equal.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Const(BigRational),
    Var(Var),
    Norm(NormArg),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, BigRational),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    /// Builds a node with a dummy span; for programmatic construction.
    pub fn synthetic(kind: ExprKind) -> Self {
        let origin = SourcePos { line: 1, column: 1 };
        Self::new(kind, Span { start: origin, end: origin })
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) | ExprKind::Norm(_) => {}
            ExprKind::Add(a, b) | ExprKind::Sub(a, b) | ExprKind::Mul(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Pow(a, _) => a.walk(f),
            ExprKind::Max(xs) | ExprKind::Min(xs) => xs.iter().for_each(|x| x.walk(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Add(..) | ExprKind::Sub(..) => 1,
            ExprKind::Mul(..) => 2,
            ExprKind::Pow(..) => 3,
            _ => 4,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Const(q) => f.write_str(&format_rational(q)),
            ExprKind::Var(Var::U) => f.write_str("u"),
            ExprKind::Var(Var::V) => f.write_str("v"),
            ExprKind::Norm(NormArg::U) => f.write_str("norm(u)"),
            ExprKind::Norm(NormArg::V) => f.write_str("norm(v)"),
            ExprKind::Norm(NormArg::W(i)) => write!(f, "norm(w{i})"),
            ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
                let op = if matches!(self.kind, ExprKind::Add(..)) { "+" } else { "-" };
                write_operand(f, a, false)?;
                write!(f, " {op} ")?;
                write_operand(f, b, b.precedence() <= 1)
            }
            ExprKind::Mul(a, b) => {
                write_operand(f, a, a.precedence() < 2)?;
                f.write_str("*")?;
                write_operand(f, b, b.precedence() <= 2)
            }
            ExprKind::Pow(base, e) => {
                write_operand(f, base, base.precedence() <= 3)?;
                write!(f, "^{}", format_rational(e))
            }
            ExprKind::Max(xs) | ExprKind::Min(xs) => {
                let name = if matches!(self.kind, ExprKind::Max(_)) { "max" } else { "min" };
                write!(f, "{name}(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: SourcePos,
    end: SourcePos,
}

fn syntax(pos: SourcePos, message: impl Into<String>) -> Error {
    Error::Syntax {
        pos,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let start = SourcePos { line, column };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(d);
                chars.next();
                column += 1;
            }
            Tok::Int(digits.parse().expect("ascii digits"))
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_alphanumeric() || **d == '_') {
                ident.push(d);
                chars.next();
                column += 1;
            }
            Tok::Ident(ident)
        } else {
            chars.next();
            column += 1;
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '^' => Tok::Caret,
                '/' => Tok::Slash,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                other => return Err(syntax(start, format!("unexpected character '{other}'"))),
            }
        };
        out.push(Token {
            tok,
            start,
            end: SourcePos { line, column },
        });
    }
    let end = SourcePos { line, column };
    out.push(Token {
        tok: Tok::Eof,
        start: end,
        end,
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a BTreeMap<String, BigRational>,
}

const RESERVED: [&str; 5] = ["u", "v", "norm", "max", "min"];

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(t.start, format!("expected {want}, found {}", t.tok)))
        }
    }

    fn span_from(&self, start: SourcePos) -> Span {
        let end = self.tokens[self.pos.saturating_sub(1)].end;
        Span { start, end }
    }

    fn expr(&mut self) -> Result<Expr> {
        let start = self.peek().start;
        let mut lhs = self.term()?;
        loop {
            let ctor: fn(Box<Expr>, Box<Expr>) -> ExprKind = match self.peek().tok {
                Tok::Plus => ExprKind::Add,
                Tok::Minus => ExprKind::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::new(ctor(Box::new(lhs), Box::new(rhs)), self.span_from(start));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let start = self.peek().start;
        let mut lhs = self.factor()?;
        while self.peek().tok == Tok::Star {
            self.next();
            let rhs = self.factor()?;
            lhs = Expr::new(ExprKind::Mul(Box::new(lhs), Box::new(rhs)), self.span_from(start));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let start = self.peek().start;
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.next();
            let e = self.rational()?;
            return Ok(Expr::new(ExprKind::Pow(Box::new(base), e), self.span_from(start)));
        }
        Ok(base)
    }

    fn rational(&mut self) -> Result<BigRational> {
        let first = self.next();
        let (negative, digits) = match first.tok {
            Tok::Minus => {
                let t = self.next();
                match t.tok {
                    Tok::Int(n) => (true, n),
                    other => return Err(syntax(t.start, format!("expected integer after '-', found {other}"))),
                }
            }
            Tok::Int(n) => (false, n),
            other => return Err(syntax(first.start, format!("expected rational, found {other}"))),
        };
        let num = if negative { -digits } else { digits };
        if self.peek().tok == Tok::Slash {
            self.next();
            let t = self.next();
            return match t.tok {
                Tok::Int(d) if !d.is_zero() => Ok(BigRational::new(num, d)),
                Tok::Int(_) => Err(syntax(t.start, "zero denominator")),
                other => Err(syntax(t.start, format!("expected positive integer denominator, found {other}"))),
            };
        }
        Ok(BigRational::from_integer(num))
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut xs = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            xs.push(self.expr()?);
        }
        let close = self.expect(Tok::RParen)?;
        if xs.len() < 2 {
            return Err(syntax(close.start, "max/min need at least two arguments"));
        }
        Ok(xs)
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.peek().start;
        match self.peek().tok.clone() {
            Tok::Int(_) => {
                let q = self.rational()?;
                Ok(Expr::new(ExprKind::Const(q), self.span_from(start)))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                let q = self.rational()?;
                Ok(Expr::new(ExprKind::Const(q), self.span_from(start)))
            }
            Tok::LParen => {
                self.next();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.next();
                let kind = match name.as_str() {
                    "u" => ExprKind::Var(Var::U),
                    "v" => ExprKind::Var(Var::V),
                    "norm" => {
                        self.expect(Tok::LParen)?;
                        let t = self.next();
                        let arg = match &t.tok {
                            Tok::Ident(s) if s == "u" => NormArg::U,
                            Tok::Ident(s) if s == "v" => NormArg::V,
                            Tok::Ident(s) if s.starts_with('w') => {
                                match s[1..].parse::<usize>() {
                                    Ok(i) if i >= 1 && s[1..].bytes().all(|b| b.is_ascii_digit()) => NormArg::W(i),
                                    _ => return Err(syntax(t.start, format!("bad slot name '{s}', expected w1, w2, ..."))),
                                }
                            }
                            other => return Err(syntax(t.start, format!("expected u, v or w<index> inside norm, found {other}"))),
                        };
                        self.expect(Tok::RParen)?;
                        ExprKind::Norm(arg)
                    }
                    "max" => ExprKind::Max(self.args()?),
                    "min" => ExprKind::Min(self.args()?),
                    other => match self.params.get(other) {
                        Some(q) => ExprKind::Const(q.clone()),
                        None => return Err(syntax(start, format!("unknown identifier '{other}'"))),
                    },
                };
                Ok(Expr::new(kind, self.span_from(start)))
            }
            other => Err(syntax(start, format!("expected an operand, found {other}"))),
        }
    }
}

/// Parses an expression with named rational parameters.
pub fn parse_expr_with(text: &str, params: &BTreeMap<String, BigRational>) -> Result<Expr> {
    if let Some(name) = params.keys().find(|k| RESERVED.contains(&k.as_str()) || k.starts_with('w')) {
        return Err(Error::Config(format!("parameter name '{name}' is reserved")));
    }
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
        params,
    };
    let e = parser.expr()?;
    let t = parser.peek();
    if t.tok != Tok::Eof {
        return Err(syntax(t.start, format!("unexpected {} after expression", t.tok)));
    }
    Ok(e)
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    parse_expr_with(text, &BTreeMap::new())
}

pub(crate) fn domain(e: &Expr, message: impl Into<String>) -> Error {
    Error::Domain {
        pos: e.span.start,
        message: message.into(),
    }
}

/// Checks that an expression is nonnegative by construction: no bare
/// variables, no subtraction, no negative constants, and norm atoms drawn
/// only from `allowed`.
pub(crate) fn check_nonnegative(e: &Expr, allowed: impl Fn(NormArg) -> bool, what: &str) -> Result<()> {
    let mut err = None;
    e.walk(&mut |node| {
        if err.is_some() {
            return;
        }
        err = match &node.kind {
            ExprKind::Const(q) if q.is_negative() => {
                Some(domain(node, format!("negative constant {} in {what}", format_rational(q))))
            }
            ExprKind::Var(_) => Some(domain(node, format!("{what} may use u, v only through norm(...)"))),
            ExprKind::Sub(..) => Some(domain(node, format!("subtraction is not allowed in {what}"))),
            ExprKind::Norm(arg) if !allowed(*arg) => Some(domain(node, format!("norm({}) is not available in {what}", norm_arg_name(*arg)))),
            _ => None,
        };
    });
    err.map_or(Ok(()), Err)
}

pub(crate) fn norm_arg_name(arg: NormArg) -> String {
    match arg {
        NormArg::U => "u".into(),
        NormArg::V => "v".into(),
        NormArg::W(i) => format!("w{i}"),
    }
}
