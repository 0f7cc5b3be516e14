//! Recursive-descent parser for the ASCII formula grammar.
//!
//! ```text
//! formula := or
//! or      := and ( '|' and )*
//! and     := until ( '&' until )*
//! until   := unary ( 'U' interval unary )*
//! unary   := '!' unary | 'F' interval unary | 'G' interval unary | primary
//! primary := 'true' | '(' ident relop value ')' | '(' formula ')'
//! relop   := '>' | '>=' | '<=' | '<'
//! interval:= '[' value ',' value ']'
//! ```
//!
//! `>=` is read as `>` and `<` as `<=`: robustness does not distinguish strict
//! from non-strict comparisons.

use super::{Expr, Formula, Interval, Relation};
use crate::{Error, Result};

/// Values that may appear in numeric positions of the grammar.
pub(crate) trait Literal: Sized {
    fn from_number(value: f64) -> Self;
    fn from_placeholder(name: &str, pos: usize) -> Result<Self>;
}

impl Literal for f64 {
    fn from_number(value: f64) -> Self {
        value
    }

    fn from_placeholder(name: &str, pos: usize) -> Result<Self> {
        Err(Error::Syntax { pos, msg: format!("placeholder `?{name}` in a concrete formula") })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Rel(Relation),
    Number(f64),
    Ident(String),
    Placeholder(String),
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Rel(r) => format!("`{}`", r.symbol()),
        Tok::Number(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Placeholder(s) => format!("`?{s}`"),
        Tok::End => "end of input".into(),
    }
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
            continue;
        }
        match c {
            b'!' => {
                if b.get(i + 1) == Some(&b'=') {
                    return Err(Error::UnknownOperator { pos: start, token: "!=".into() });
                }
                out.push((Tok::Bang, start));
                i += 1;
            }
            b'>' | b'<' => {
                let eq = b.get(i + 1) == Some(&b'=');
                // `>` and `>=` share robustness x - k; `<` and `<=` share k - x.
                let rel = if c == b'>' { Relation::Gt } else { Relation::Le };
                out.push((Tok::Rel(rel), start));
                i += if eq { 2 } else { 1 };
            }
            b'?' => {
                i += 1;
                if i >= b.len() || !is_ident_start(b[i]) {
                    return Err(Error::Syntax { pos: start, msg: "expected placeholder name after `?`".into() });
                }
                let s = i;
                while i < b.len() && is_ident_char(b[i]) {
                    i += 1;
                }
                out.push((Tok::Placeholder(text[s..i].to_string()), start));
            }
            c if c.is_ascii_digit() || c == b'.' || ((c == b'-' || c == b'+') && starts_number(b, i + 1)) => {
                i += 1;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'-' || b[j] == b'+') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| Error::Syntax { pos: start, msg: format!("malformed number `{lit}`") })?;
                out.push((Tok::Number(v), start));
            }
            c if is_ident_start(c) => {
                while i < b.len() && is_ident_char(b[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let mut j = i + 1;
                while j < b.len() && !text.is_char_boundary(j) {
                    j += 1;
                }
                while j < b.len() && b"=-~^*/%$#@:;".contains(&b[j]) {
                    j += 1;
                }
                return Err(Error::UnknownOperator { pos: start, token: text[start..j].to_string() });
            }
        }
    }
    out.push((Tok::End, b.len()));
    Ok(out)
}

fn starts_number(b: &[u8], i: usize) -> bool {
    b.get(i).is_some_and(|c| c.is_ascii_digit() || *c == b'.')
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
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

    fn error<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Syntax {
            pos: self.offset(),
            msg: format!("expected {expected}, found {}", describe(self.peek())),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn at_temporal(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name) && *self.peek_at(1) == Tok::LBracket
    }

    fn or<V: Literal>(&mut self) -> Result<Expr<V>> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.and()?;
            lhs = Expr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and<V: Literal>(&mut self) -> Result<Expr<V>> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.until()?;
            lhs = Expr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until<V: Literal>(&mut self) -> Result<Expr<V>> {
        let mut lhs = self.unary()?;
        while self.at_temporal("U") {
            self.bump();
            let iv = self.interval()?;
            let rhs = self.unary()?;
            lhs = Expr::until(iv, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary<V: Literal>(&mut self) -> Result<Expr<V>> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(Expr::not(self.unary()?));
        }
        if self.at_temporal("F") || self.at_temporal("G") {
            let eventually = matches!(self.bump(), Tok::Ident(s) if s == "F");
            let iv = self.interval()?;
            let child = self.unary()?;
            return Ok(if eventually { Expr::eventually(iv, child) } else { Expr::globally(iv, child) });
        }
        self.primary()
    }

    fn primary<V: Literal>(&mut self) -> Result<Expr<V>> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Expr::True)
            }
            Tok::LParen => {
                self.bump();
                let is_atom = matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Rel(_));
                let e = if is_atom {
                    let Tok::Ident(var) = self.bump() else { unreachable!() };
                    let Tok::Rel(rel) = self.bump() else { unreachable!() };
                    let threshold = self.value()?;
                    Expr::Atom { var, rel, threshold }
                } else {
                    self.or()?
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if matches!(self.peek_at(1), Tok::Rel(_)) => Err(Error::Syntax {
                pos: self.offset(),
                msg: format!("atom on `{s}` must be parenthesised"),
            }),
            _ => self.error("`true`, `(`, `!`, `F[` or `G[`"),
        }
    }

    fn value<V: Literal>(&mut self) -> Result<V> {
        let pos = self.offset();
        match self.peek().clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(V::from_number(v))
            }
            Tok::Placeholder(name) => {
                self.bump();
                V::from_placeholder(&name, pos)
            }
            _ => self.error("a number"),
        }
    }

    fn interval<V: Literal>(&mut self) -> Result<Interval<V>> {
        self.expect(Tok::LBracket, "`[`")?;
        let start = self.value()?;
        self.expect(Tok::Comma, "`,`")?;
        let end = self.value()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(Interval { start, end })
    }
}

pub(crate) fn parse_generic<V: Literal>(text: &str) -> Result<Expr<V>> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.or()?;
    if *p.peek() != Tok::End {
        return p.error("end of input");
    }
    Ok(e)
}

/// Parses a concrete formula. Intervals must satisfy `0 <= a < b`.
pub fn parse(text: &str) -> Result<Formula> {
    let f: Formula = parse_generic(text)?;
    f.validate()?;
    Ok(f)
}
