//! Cross-tree constraint expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! iff     := implies ( "<=>" implies )*        left associative
//! implies := or ( "=>" implies )?              right associative
//! or      := and ( "|" and )*
//! and     := unary ( "&" unary )*
//! unary   := "!" unary | atom
//! atom    := NAME | NAME "'" | "(" iff ")"
//! NAME    := [A-Za-z0-9_.]+
//! ```
//!
//! `NAME'` refers to the second ("static") variable of a tristate feature.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureRef {
    pub name: String,
    /// `true` for the static variable `a'` of a tristate feature.
    pub static_part: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Feature(FeatureRef),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at byte {pos}: {msg}")]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

impl Expr {
    pub fn feature(name: impl Into<String>) -> Expr {
        Expr::Feature(FeatureRef {
            name: name.into(),
            static_part: false,
        })
    }

    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let tokens = tokenize(text)?;
        let mut p = Parser {
            tokens,
            at: 0,
            end: text.len(),
        };
        let e = p.iff()?;
        if let Some((pos, tok)) = p.tokens.get(p.at) {
            return Err(ExprError {
                pos: *pos,
                msg: format!("unexpected `{}`", tok),
            });
        }
        Ok(e)
    }

    /// Every feature reference, in first-occurrence order.
    pub fn references(&self) -> Vec<&FeatureRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a FeatureRef>) {
        match self {
            Expr::Feature(r) => {
                if !out.contains(&r) {
                    out.push(r);
                }
            }
            Expr::Not(e) => e.collect_refs(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.collect_refs(out)),
            Expr::Implies(a, b) | Expr::Iff(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
        }
    }

    pub fn feature_names(&self) -> BTreeSet<&str> {
        self.references()
            .into_iter()
            .map(|r| r.name.as_str())
            .collect()
    }

    /// Evaluates the expression; `lookup` gives the value of each reference.
    pub fn eval(&self, lookup: &dyn Fn(&FeatureRef) -> bool) -> bool {
        match self {
            Expr::Feature(r) => lookup(r),
            Expr::Not(e) => !e.eval(lookup),
            Expr::And(es) => es.iter().all(|e| e.eval(lookup)),
            Expr::Or(es) => es.iter().any(|e| e.eval(lookup)),
            Expr::Implies(a, b) => !a.eval(lookup) || b.eval(lookup),
            Expr::Iff(a, b) => a.eval(lookup) == b.eval(lookup),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Iff(..) => 0,
            Expr::Implies(..) => 1,
            Expr::Or(es) | Expr::And(es) if es.len() == 1 => es[0].precedence(),
            Expr::Or(_) => 2,
            Expr::And(_) => 3,
            Expr::Not(_) => 4,
            Expr::Feature(_) => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Feature(r) => {
                write!(f, "{}", r.name)?;
                if r.static_part {
                    write!(f, "'")?;
                }
                Ok(())
            }
            Expr::Not(e) => {
                write!(f, "!")?;
                write_child(f, e, 4)
            }
            Expr::And(es) | Expr::Or(es) => {
                let (sep, prec) = if matches!(self, Expr::And(_)) {
                    (" & ", 4)
                } else {
                    (" | ", 3)
                };
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{}", sep)?;
                    }
                    write_child(f, e, if es.len() == 1 { 0 } else { prec })?;
                }
                Ok(())
            }
            Expr::Implies(a, b) => {
                write_child(f, a, 2)?;
                write!(f, " => ")?;
                write_child(f, b, 1)
            }
            Expr::Iff(a, b) => {
                write_child(f, a, 0)?;
                write!(f, " <=> ")?;
                write_child(f, b, 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String, bool),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n, s) => write!(f, "{}{}", n, if *s { "'" } else { "" }),
            Tok::Not => write!(f, "!"),
            Tok::And => write!(f, "&"),
            Tok::Or => write!(f, "|"),
            Tok::Implies => write!(f, "=>"),
            Tok::Iff => write!(f, "<=>"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' if text[i..].starts_with("=>") => {
                i += 1;
                Tok::Implies
            }
            '<' if text[i..].starts_with("<=>") => {
                i += 2;
                Tok::Iff
            }
            c if is_name_char(c) => {
                while i < bytes.len() && is_name_char(bytes[i] as char) {
                    i += 1;
                }
                let name = text[start..i].to_string();
                let static_part = i < bytes.len() && bytes[i] == b'\'';
                if !static_part {
                    i -= 1;
                }
                Tok::Name(name, static_part)
            }
            _ => {
                return Err(ExprError {
                    pos: i,
                    msg: format!("unexpected character `{}`", c),
                })
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|(_, t)| t)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> ExprError {
        ExprError {
            pos: self.tokens.get(self.at).map_or(self.end, |(p, _)| *p),
            msg: msg.to_string(),
        }
    }

    fn iff(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.implies()?;
            lhs = Expr::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut items = vec![self.and()?];
        while self.eat(&Tok::Or) {
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Or(items)
        })
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut items = vec![self.unary()?];
        while self.eat(&Tok::And) {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items)
        })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(&Tok::Not) {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Name(name, static_part)) => {
                self.at += 1;
                Ok(Expr::Feature(FeatureRef { name, static_part }))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let e = self.iff()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(_) => Err(self.err("expected a feature name or `(`")),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}
