use std::collections::HashMap;

use super::ast::{Expr, Func};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_digit() || c == '.' => {
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
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("malformed number '{text}'"),
                })?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            other => {
                return Err(ParseError::Syntax { pos: start, msg: format!("unexpected character '{other}'") })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

/// Recursive-descent parser for
///
/// ```text
/// expr   = term { ("+" | "-") term } ;
/// term   = unary { ("*" | "/") unary } ;
/// unary  = "-" unary | power ;
/// power  = atom [ "^" [ "-" ] integer ] ;
/// atom   = number | "pi" | coord | name | func "(" expr ")" | "(" expr ")" ;
/// coord  = "x" | "z" | "y" digits | "y" ;      (* bare "y" only when n = 1 *)
/// func   = "sin" | "cos" | "exp" | "sqrt" | "smoothstep" ;
/// ```
pub(super) struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
    n: usize,
    defs: &'a HashMap<String, Expr>,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &str, n: usize, defs: &'a HashMap<String, Expr>) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, len: src.len(), n, defs })
    }

    pub(super) fn parse(mut self) -> Result<Expr, ParseError> {
        if self.toks.is_empty() {
            return Err(ParseError::Syntax { pos: 0, msg: "empty expression".into() });
        }
        let e = self.expr()?;
        if let Some((p, t)) = self.toks.get(self.pos) {
            return Err(ParseError::Syntax { pos: *p, msg: format!("unexpected token {t:?}") });
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(ParseError::Syntax { pos, msg: format!("expected {want:?}, found {t:?}") }),
            None => Err(ParseError::Syntax { pos, msg: format!("expected {want:?}, found end of input") }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let mut sign = 1;
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            sign = -1;
        }
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                Ok(Expr::Pow(Box::new(base), sign * v as i32))
            }
            _ => Err(ParseError::Syntax { pos, msg: "exponent must be an integer literal".into() }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => self.ident(&name, pos),
            Some(t) => Err(ParseError::Syntax { pos, msg: format!("unexpected token {t:?}") }),
            None => Err(ParseError::Syntax { pos, msg: "unexpected end of input".into() }),
        }
    }

    fn ident(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        if let Some(f) = Func::from_name(name) {
            self.expect(Tok::LParen)?;
            let arg = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        match name {
            "pi" => return Ok(Expr::Pi),
            "x" => return Ok(Expr::Var(0)),
            "z" => return Ok(Expr::Var(self.n + 1)),
            "y" if self.n == 1 => return Ok(Expr::Var(1)),
            _ => {}
        }
        if let Some(def) = self.defs.get(name) {
            return Ok(def.clone());
        }
        if let Some(digits) = name.strip_prefix('y') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let k: usize = digits.parse().unwrap_or(usize::MAX);
                if k == 0 || k > self.n {
                    return Err(ParseError::IndexOutOfRange { pos, name: name.to_string(), n: self.n });
                }
                return Ok(Expr::Var(k));
            }
        }
        Err(ParseError::UnknownIdentifier { pos, name: name.to_string() })
    }
}
