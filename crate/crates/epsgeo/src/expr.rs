//! A tiny arithmetic expression language for weight and density fields.
//!
//! Grammar: `+`, `-`, `*`, `/`, `exp(...)`, numeric literals, parentheses,
//! and coordinates `x1, x2, ..., xd` (1-based). Anything else is rejected at
//! parse time so configuration typos fail loudly instead of evaluating to
//! something surprising.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Coord(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Exp(Box<Node>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Coord(i) => x[*i],
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Neg(a) => -a.eval(x),
            Node::Exp(a) => a.eval(x).exp(),
        }
    }

    fn max_coord(&self) -> usize {
        match self {
            Node::Const(_) => 0,
            Node::Coord(i) => i + 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_coord().max(b.max_coord())
            }
            Node::Neg(a) | Node::Exp(a) => a.max_coord(),
        }
    }
}

/// A parsed scalar field over domain coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    src: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.parse_expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::config(format!(
                "unexpected trailing input at token {:?} in expression {:?}",
                p.tokens[p.pos], src
            )));
        }
        Ok(Expr {
            src: src.to_string(),
            root,
        })
    }

    /// Evaluate at a point. The caller guarantees `x` has at least
    /// [`Expr::max_coord`] components.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    /// Highest coordinate index referenced (1-based); 0 for constants.
    pub fn max_coord(&self) -> usize {
        self.root.max_coord()
    }

    pub fn src(&self) -> &str {
        &self.src
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.src)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Coord(usize),
    Exp,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let bytes: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                // optional exponent part, e.g. 1e-3
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::config(format!("bad numeric literal {:?}", text)))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().collect();
                if word == "exp" {
                    out.push(Tok::Exp);
                } else if let Some(rest) = word.strip_prefix('x') {
                    let idx: usize = rest.parse().map_err(|_| {
                        Error::config(format!("unknown identifier {:?} in expression", word))
                    })?;
                    if idx == 0 {
                        return Err(Error::config("coordinates are 1-based: x1, x2, ..."));
                    }
                    out.push(Tok::Coord(idx - 1));
                } else {
                    return Err(Error::config(format!(
                        "unknown identifier {:?} in expression",
                        word
                    )));
                }
            }
            other => {
                return Err(Error::config(format!(
                    "unexpected character {:?} in expression",
                    other
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::config(format!("expected {:?}, found {:?}", t, got))),
        }
    }

    fn parse_expr(&mut self) -> Result<Node> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.parse_term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.parse_term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Node> {
        let mut lhs = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.parse_factor()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.parse_factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.parse_factor()?)))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.parse_factor()
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::Coord(i)) => Ok(Node::Coord(i)),
            Some(Tok::Exp) => {
                self.expect(Tok::LParen)?;
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(Node::Exp(Box::new(inner)))
            }
            Some(Tok::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            got => Err(Error::config(format!(
                "expected a value, found {:?}",
                got
            ))),
        }
    }
}
