//! Parser for seed files: one declaration `name := formula` per line,
//! `#` comments (a `#` directly followed by a digit is a numeral literal,
//! anything else after `#` is a comment).
//!
//! Binding is two-pass, letrec style: every declaration is parsed first,
//! then names referenced through `quote(...)` get codes reserved before any
//! body is resolved, so declarations may refer to themselves and to names
//! declared later in the file. After binding, no `Quote` node survives.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::intern::{Code, InternError, SentenceTable};
use crate::syntax::{Formula, Nat, Term};

/// Identifiers with grammar roles; not usable as variable or sentence names.
const RESERVED: [&str; 6] = ["S", "T", "D", "quote", "forall", "exists"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}: unbound name `{name}` in declaration `{referrer}`")]
    UnboundName {
        line: usize,
        name: String,
        referrer: String,
    },
    #[error("{line}: duplicate name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("{line}: declaration `{name}` is not a sentence (free variables {vars:?})")]
    OpenDeclaration {
        line: usize,
        name: String,
        vars: Vec<String>,
    },
    #[error("{0}")]
    Intern(#[from] InternError),
}

#[derive(Debug, Clone)]
pub struct Declaration {
    pub name: String,
    pub formula: Formula,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Nat),
    ColonEq,
    Eq,
    LParen,
    RParen,
    Plus,
    Star,
    Hash,
    Tilde,
    Amp,
    Pipe,
    Dot,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex_line(text: &str, line: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '#' => {
                if i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    out.push(Spanned { tok: Tok::Hash, col });
                    i += 1;
                } else {
                    break; // comment to end of line
                }
            }
            ':' => {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    out.push(Spanned { tok: Tok::ColonEq, col });
                    i += 2;
                } else {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        msg: "expected `:=`".into(),
                    });
                }
            }
            '=' => {
                out.push(Spanned { tok: Tok::Eq, col });
                i += 1;
            }
            '(' => {
                out.push(Spanned { tok: Tok::LParen, col });
                i += 1;
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, col });
                i += 1;
            }
            '+' => {
                out.push(Spanned { tok: Tok::Plus, col });
                i += 1;
            }
            '*' => {
                out.push(Spanned { tok: Tok::Star, col });
                i += 1;
            }
            '~' => {
                out.push(Spanned { tok: Tok::Tilde, col });
                i += 1;
            }
            '&' => {
                out.push(Spanned { tok: Tok::Amp, col });
                i += 1;
            }
            '|' => {
                out.push(Spanned { tok: Tok::Pipe, col });
                i += 1;
            }
            '.' => {
                out.push(Spanned { tok: Tok::Dot, col });
                i += 1;
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n: Nat = s.parse().map_err(|_| ParseError::Syntax {
                    line,
                    col,
                    msg: format!("number `{s}` out of range"),
                })?;
                out.push(Spanned { tok: Tok::Num(n), col });
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Spanned { tok: Tok::Ident(s), col });
            }
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|s| s.col)
            .unwrap_or_else(|| self.toks.last().map(|s| s.col + 1).unwrap_or(1))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn advance(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.advance() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected {what}")))
            }
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        let s = self.ident(what)?;
        if RESERVED.contains(&s.as_str()) {
            self.pos -= 1;
            return Err(self.err(format!("`{s}` is reserved and cannot be used as {what}")));
        }
        Ok(s)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(0)) => {
                self.advance();
                Ok(Term::Zero)
            }
            Some(Tok::Num(_)) => Err(self.err("bare number (use `0`, `S(...)` or `#n`)")),
            Some(Tok::Hash) => {
                self.advance();
                match self.advance() {
                    Some(Tok::Num(n)) => Ok(Term::Numeral(n)),
                    _ => Err(self.err("expected number after `#`")),
                }
            }
            Some(Tok::LParen) => {
                self.advance();
                let a = self.term()?;
                let op = self.advance();
                let b = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                match op {
                    Some(Tok::Plus) => Ok(Term::plus(a, b)),
                    Some(Tok::Star) => Ok(Term::times(a, b)),
                    _ => Err(self.err("expected `+` or `*`")),
                }
            }
            Some(Tok::Ident(s)) if s == "S" => {
                self.advance();
                self.expect(Tok::LParen, "`(` after `S`")?;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::succ(t))
            }
            Some(Tok::Ident(s)) if s == "quote" => {
                self.advance();
                self.expect(Tok::LParen, "`(` after `quote`")?;
                let n = self.name("a sentence name")?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::Quote(n))
            }
            Some(Tok::Ident(_)) => {
                let v = self.name("a variable")?;
                Ok(Term::var(v))
            }
            _ => Err(self.err("expected a term")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Tilde) => {
                self.advance();
                Ok(Formula::not(self.formula()?))
            }
            Some(Tok::Ident(s)) if s == "forall" || s == "exists" => {
                self.advance();
                let v = self.name("a variable")?;
                self.expect(Tok::Dot, "`.` after the bound variable")?;
                let body = self.formula()?;
                Ok(if s == "forall" {
                    Formula::forall(v, body)
                } else {
                    Formula::exists(v, body)
                })
            }
            Some(Tok::Ident(s)) if (s == "T" || s == "D") && self.peek2() == Some(&Tok::LParen) => {
                self.advance();
                self.advance();
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(if s == "T" {
                    Formula::Truth(t)
                } else {
                    Formula::Det(t)
                })
            }
            Some(Tok::LParen) => {
                // Either a connective `(f & g)` / `(f | g)` or an equation
                // whose left term is parenthesized, e.g. `(x + y) = z`.
                let mark = self.pos;
                match self.connective() {
                    Ok(f) => Ok(f),
                    Err(_) => {
                        self.pos = mark;
                        self.equation()
                    }
                }
            }
            _ => self.equation(),
        }
    }

    fn connective(&mut self) -> Result<Formula, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let a = self.formula()?;
        let op = self.advance();
        let b = self.formula()?;
        self.expect(Tok::RParen, "`)`")?;
        match op {
            Some(Tok::Amp) => Ok(Formula::and(a, b)),
            Some(Tok::Pipe) => Ok(Formula::or(a, b)),
            _ => Err(self.err("expected `&` or `|`")),
        }
    }

    fn equation(&mut self) -> Result<Formula, ParseError> {
        let a = self.term()?;
        self.expect(Tok::Eq, "`=`")?;
        let b = self.term()?;
        Ok(Formula::Eq(a, b))
    }
}

/// Parse a single formula (no declaration syntax around it).
pub fn parse_formula_str(text: &str) -> Result<Formula, ParseError> {
    let toks = lex_line(text, 1)?;
    let mut p = Parser { toks, pos: 0, line: 1 };
    let f = p.formula()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input after formula"));
    }
    Ok(f)
}

/// Parse declarations without binding them.
pub fn parse_declarations(text: &str) -> Result<Vec<Declaration>, ParseError> {
    let mut decls = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = lex_line(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser { toks, pos: 0, line };
        let name = p.name("a sentence name")?;
        p.expect(Tok::ColonEq, "`:=`")?;
        let formula = p.formula()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input after declaration"));
        }
        decls.push(Declaration { name, formula, line });
    }
    Ok(decls)
}

fn quoted_names(f: &Formula, out: &mut BTreeSet<String>) {
    fn term(t: &Term, out: &mut BTreeSet<String>) {
        match t {
            Term::Quote(n) => {
                out.insert(n.clone());
            }
            Term::Succ(a) => term(a, out),
            Term::Plus(a, b) | Term::Times(a, b) => {
                term(a, out);
                term(b, out);
            }
            Term::Zero | Term::Var(_) | Term::Numeral(_) => {}
        }
    }
    match f {
        Formula::Eq(a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::Truth(t) | Formula::Det(t) => term(t, out),
        Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => quoted_names(g, out),
        Formula::And(a, b) | Formula::Or(a, b) => {
            quoted_names(a, out);
            quoted_names(b, out);
        }
    }
}

fn resolve_quotes(f: &Formula, codes: &BTreeMap<String, Code>) -> Formula {
    fn term(t: &Term, codes: &BTreeMap<String, Code>) -> Term {
        match t {
            Term::Quote(n) => Term::Numeral(codes[n].0),
            Term::Succ(a) => Term::succ(term(a, codes)),
            Term::Plus(a, b) => Term::plus(term(a, codes), term(b, codes)),
            Term::Times(a, b) => Term::times(term(a, codes), term(b, codes)),
            Term::Zero | Term::Var(_) | Term::Numeral(_) => t.clone(),
        }
    }
    match f {
        Formula::Eq(a, b) => Formula::Eq(term(a, codes), term(b, codes)),
        Formula::Truth(t) => Formula::Truth(term(t, codes)),
        Formula::Det(t) => Formula::Det(term(t, codes)),
        Formula::Not(g) => Formula::not(resolve_quotes(g, codes)),
        Formula::And(a, b) => Formula::and(resolve_quotes(a, codes), resolve_quotes(b, codes)),
        Formula::Or(a, b) => Formula::or(resolve_quotes(a, codes), resolve_quotes(b, codes)),
        Formula::Forall(v, g) => Formula::forall(v.clone(), resolve_quotes(g, codes)),
        Formula::Exists(v, g) => Formula::exists(v.clone(), resolve_quotes(g, codes)),
    }
}

/// Bind parsed declarations into the table. Returns the name -> code map
/// in declaration order. Formulas may be open (used for satisfaction-class
/// inputs); seed files additionally require sentences, see [`parse_source`].
pub fn bind_declarations(
    decls: &[Declaration],
    table: &mut SentenceTable,
) -> Result<BTreeMap<String, Code>, ParseError> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for d in decls {
        if seen.insert(&d.name, d.line).is_some() {
            return Err(ParseError::DuplicateName {
                line: d.line,
                name: d.name.clone(),
            });
        }
    }

    // Names referenced through quotes get their codes reserved up front so
    // that bodies (including their own) can mention them. A quoted name
    // that is not declared here may still resolve against a binding the
    // table already carries (a formula file quoting seed declarations).
    let mut referenced = BTreeSet::new();
    for d in decls {
        let mut names = BTreeSet::new();
        quoted_names(&d.formula, &mut names);
        for n in &names {
            if !seen.contains_key(n.as_str()) && table.code_of_name(n).is_none() {
                return Err(ParseError::UnboundName {
                    line: d.line,
                    name: n.clone(),
                    referrer: d.name.clone(),
                });
            }
        }
        referenced.extend(names);
    }

    let mut reserved: BTreeMap<String, Code> = BTreeMap::new();
    for name in &referenced {
        if !seen.contains_key(name.as_str()) {
            let code = table
                .code_of_name(name)
                .expect("outer binding checked above");
            reserved.insert(name.clone(), code);
        }
    }
    for d in decls {
        if referenced.contains(&d.name) && !reserved.contains_key(&d.name) {
            reserved.insert(d.name.clone(), table.reserve());
        }
    }

    // Reserved declarations are filled before anything else is interned:
    // a body written with an explicit `#n` can denote the same sentence
    // as a quoted declaration, and that sentence must land on the
    // reserved code for both readings to agree.
    let mut bound = BTreeMap::new();
    for d in decls {
        if let Some(&c) = reserved.get(&d.name) {
            let resolved = resolve_quotes(&d.formula, &reserved);
            table.fill_reserved(&d.name, c, resolved)?;
            table.bind_name(d.name.clone(), c);
            bound.insert(d.name.clone(), c);
        }
    }
    for d in decls {
        if !reserved.contains_key(&d.name) {
            let resolved = resolve_quotes(&d.formula, &reserved);
            let code = table.intern(resolved);
            table.bind_name(d.name.clone(), code);
            bound.insert(d.name.clone(), code);
        }
    }
    Ok(bound)
}

/// Parse and bind a seed file. Every declaration must be a sentence.
pub fn parse_source(
    text: &str,
    table: &mut SentenceTable,
) -> Result<BTreeMap<String, Code>, ParseError> {
    let decls = parse_declarations(text)?;
    for d in &decls {
        let fv = d.formula.free_vars();
        if !fv.is_empty() {
            return Err(ParseError::OpenDeclaration {
                line: d.line,
                name: d.name.clone(),
                vars: fv.into_iter().collect(),
            });
        }
    }
    bind_declarations(&decls, table)
}

/// Parse and bind a formula file (open formulas allowed), e.g. the input
/// set for the satisfaction-class extension command.
pub fn parse_formula_file(
    text: &str,
    table: &mut SentenceTable,
) -> Result<BTreeMap<String, Code>, ParseError> {
    let decls = parse_declarations(text)?;
    bind_declarations(&decls, table)
}
