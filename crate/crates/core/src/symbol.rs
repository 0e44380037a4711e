//! Weight symbols: small real-valued expressions in the coordinate index `n`.
//!
//! The grammar covers polynomials in `n`, `sqrt(...)`, division and
//! integer powers, e.g. `"n"`, `"1"`, `"sqrt(n)"`, `"2*n^2 + 1"`,
//! `"1/(n+1)"`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    N,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    fn eval(&self, n: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::N => n,
            Expr::Neg(a) => -a.eval(n),
            Expr::Add(a, b) => a.eval(n) + b.eval(n),
            Expr::Sub(a, b) => a.eval(n) - b.eval(n),
            Expr::Mul(a, b) => a.eval(n) * b.eval(n),
            Expr::Div(a, b) => a.eval(n) / b.eval(n),
            Expr::Pow(a, b) => a.eval(n).powf(b.eval(n)),
            Expr::Sqrt(a) => a.eval(n).sqrt(),
        }
    }

    fn substitute(&self, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(with));
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::N => with.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::Pow(sub(a), sub(b)),
            Expr::Sqrt(a) => Expr::Sqrt(sub(a)),
        }
    }
}

// Rendering is fully parenthesized so that the output re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::N => write!(f, "n"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    N,
    Sqrt,
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| Error::Symbol(format!("bad number '{s}'")))?;
                out.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                match word.as_str() {
                    "n" => out.push(Token::N),
                    "sqrt" => out.push(Token::Sqrt),
                    _ => return Err(Error::Symbol(format!("unknown identifier '{word}'"))),
                }
            }
            _ => return Err(Error::Symbol(format!("unexpected character '{c}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().cloned() {
                Some(Token::Op(c @ ('*' | '/'))) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = if c == '*' {
                        Expr::Mul(Box::new(lhs), Box::new(rhs))
                    } else {
                        Expr::Div(Box::new(lhs), Box::new(rhs))
                    };
                }
                // implicit product: "2n", "3 sqrt(n)", "(n+1)(n+2)"
                Some(Token::N | Token::Sqrt | Token::LParen) => {
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // right-associative; binds tighter than unary minus on its left
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::N) => Ok(Expr::N),
            Some(Token::Sqrt) => {
                if self.next() != Some(Token::LParen) {
                    return Err(Error::Symbol("expected '(' after sqrt".into()));
                }
                let inner = self.expr()?;
                if self.next() != Some(Token::RParen) {
                    return Err(Error::Symbol("unbalanced parentheses".into()));
                }
                Ok(Expr::Sqrt(Box::new(inner)))
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                if self.next() != Some(Token::RParen) {
                    return Err(Error::Symbol("unbalanced parentheses".into()));
                }
                Ok(inner)
            }
            Some(t) => Err(Error::Symbol(format!("unexpected token {t:?}"))),
            None => Err(Error::Symbol("unexpected end of expression".into())),
        }
    }
}

/// A parsed weight symbol. Keeps its source text for round-tripping.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    text: String,
    expr: Expr,
}

impl Symbol {
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text)?;
        if tokens.is_empty() {
            return Err(Error::Symbol("empty expression".into()));
        }
        let mut p = Parser { tokens, pos: 0 };
        let expr = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Symbol(format!("trailing input in '{text}'")));
        }
        Ok(Symbol {
            text: text.to_string(),
            expr,
        })
    }

    pub fn constant(v: f64) -> Self {
        Symbol {
            text: format!("{v}"),
            expr: Expr::Num(v),
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.expr.eval(n)
    }

    /// `n ↦ self(n + k)`.
    pub fn shifted(&self, k: i64) -> Symbol {
        if k == 0 {
            return self.clone();
        }
        let arg = if k > 0 {
            Expr::Add(Box::new(Expr::N), Box::new(Expr::Num(k as f64)))
        } else {
            Expr::Sub(Box::new(Expr::N), Box::new(Expr::Num((-k) as f64)))
        };
        let expr = self.expr.substitute(&arg);
        Symbol {
            text: expr.to_string(),
            expr,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Symbol::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Coefficient sequence of a shift or diagonal: a symbol, or an explicit
/// list whose last value repeats indefinitely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Symbol(Symbol),
    List(Vec<f64>),
}

impl Weights {
    pub fn one() -> Self {
        Weights::Symbol(Symbol::constant(1.0))
    }

    pub fn at(&self, n: usize) -> f64 {
        match self {
            Weights::Symbol(s) => s.eval(n as f64),
            Weights::List(v) => v.get(n).or(v.last()).copied().unwrap_or(0.0),
        }
    }

    /// `n ↦ w(n + k)`; for lists, negative `k` pads the front with zeros.
    pub fn shifted(&self, k: i64) -> Weights {
        match self {
            Weights::Symbol(s) => Weights::Symbol(s.shifted(k)),
            Weights::List(v) if k >= 0 => {
                let k = k as usize;
                if k < v.len() {
                    Weights::List(v[k..].to_vec())
                } else {
                    Weights::List(v.last().copied().into_iter().collect())
                }
            }
            Weights::List(v) => {
                let mut out = vec![0.0; (-k) as usize];
                out.extend_from_slice(v);
                Weights::List(out)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Weights::List(v) if v.is_empty() => Err(Error::Generator("empty weight list".into())),
            Weights::List(v) if v.iter().any(|x| !x.is_finite()) => Err(Error::NonFinite),
            _ => Ok(()),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Weights::Symbol(s) => matches!(s.expr, Expr::Num(_)),
            Weights::List(v) => v.len() == 1,
        }
    }
}
