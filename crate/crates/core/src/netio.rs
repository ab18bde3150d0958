//! Reaction-network model, its plain-text file format, and the derived
//! stoichiometric structure and polynomial right-hand side.
//!
//! File format:
//!
//! ```text
//! # SIRS without demography
//! species: S, I, R
//! params: be, gi, gr, gs
//! reactions:
//!   S + I -> 2*I @ be*S*I
//!   I -> R       @ gi*I
//!   R -> S       @ gr*R
//!   S -> R       @ gs*S
//! ```
//!
//! Headers are optional. Without `species:` the species order is the order
//! of first appearance in the complexes; without `params:` every rate symbol
//! that is not a species becomes a parameter.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use num::{BigInt, One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Polynomial, Rational, VarKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: undeclared symbol `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("line {line}, column {col}: stoichiometric coefficient must be a positive integer, got `{text}`")]
    BadCoefficient { line: usize, col: usize, text: String },
    #[error("line {line}: duplicate declaration of `{name}`")]
    Duplicate { line: usize, name: String },
    #[error("`{name}` is declared both as a species and as a parameter")]
    SpeciesParamClash { name: String },
}

/// Multiset over species indices.
pub type Complex = BTreeMap<usize, u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reaction {
    pub reactants: Complex,
    pub products: Complex,
    pub rate: Polynomial,
}

impl Reaction {
    pub fn consumes(&self, set: &[usize]) -> bool {
        set.iter().any(|s| self.reactants.contains_key(s))
    }

    pub fn produces_any(&self, set: &[usize]) -> bool {
        set.iter().any(|s| self.products.contains_key(s))
    }

    pub fn is_inflow(&self) -> bool {
        self.reactants.is_empty()
    }

    pub fn net(&self, species: usize) -> i64 {
        *self.products.get(&species).unwrap_or(&0) as i64
            - *self.reactants.get(&species).unwrap_or(&0) as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    pub parameters: Vec<String>,
    pub reactions: Vec<Reaction>,
}

/// Strictly positive parameter values by name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterAssignment(pub BTreeMap<String, f64>);

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AssignmentError {
    #[error("parameter `{0}` has no value")]
    Missing(String),
    #[error("parameter `{0}` must be strictly positive, got {1}")]
    NonPositive(String, f64),
}

impl ParameterAssignment {
    pub fn new<I: IntoIterator<Item = (S, f64)>, S: Into<String>>(it: I) -> Self {
        Self(it.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: &str, v: f64) {
        self.0.insert(name.to_string(), v);
    }

    pub fn with(&self, name: &str, v: f64) -> Self {
        let mut out = self.clone();
        out.set(name, v);
        out
    }

    pub fn as_map(&self) -> HashMap<String, f64> {
        self.0.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    /// Every declared parameter has a value and all values are > 0.
    pub fn validate(&self, net: &ReactionNetwork) -> Result<(), AssignmentError> {
        for p in &net.parameters {
            match self.0.get(p) {
                None => return Err(AssignmentError::Missing(p.clone())),
                Some(&v) if !(v > 0.0) => return Err(AssignmentError::NonPositive(p.clone(), v)),
                _ => {}
            }
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but zero values are allowed, used
    /// when switching a mechanism off.
    pub fn validate_nonnegative(&self, net: &ReactionNetwork) -> Result<(), AssignmentError> {
        for p in &net.parameters {
            match self.0.get(p) {
                None => return Err(AssignmentError::Missing(p.clone())),
                Some(&v) if !(v >= 0.0) => return Err(AssignmentError::NonPositive(p.clone(), v)),
                _ => {}
            }
        }
        Ok(())
    }
}

impl ReactionNetwork {
    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn index_map(&self) -> HashMap<String, usize> {
        self.species.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    /// Species that are produced by a reaction with an empty reactant complex.
    pub fn input_species(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .reactions
            .iter()
            .filter(|r| r.is_inflow())
            .flat_map(|r| r.products.keys().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn names_of(&self, set: &[usize]) -> Vec<String> {
        set.iter().map(|&i| self.species[i].clone()).collect()
    }

    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Option<Vec<usize>> {
        let mut v = names
            .iter()
            .map(|n| self.species_index(n.as_ref()))
            .collect::<Option<Vec<_>>>()?;
        v.sort_unstable();
        v.dedup();
        Some(v)
    }

    /// Copy of the network with every reaction whose rate vanishes under the
    /// given assignment removed. Parameters absent from the assignment are
    /// treated as nonzero.
    pub fn prune_zero_rates(&self, params: &ParameterAssignment) -> ReactionNetwork {
        let mut out = self.clone();
        out.reactions.retain(|r| {
            r.rate.raw_terms().any(|(sig, _)| {
                sig.params.keys().all(|p| params.get(p).is_none_or(|v| v != 0.0))
            })
        });
        out
    }

    pub fn complex_to_string(&self, c: &Complex) -> String {
        if c.is_empty() {
            return "0".to_string();
        }
        c.iter()
            .map(|(&i, &m)| {
                if m == 1 {
                    self.species[i].clone()
                } else {
                    format!("{m}*{}", self.species[i])
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn reaction_label(&self, r: usize) -> String {
        let rx = &self.reactions[r];
        format!(
            "{} -> {}",
            self.complex_to_string(&rx.reactants),
            self.complex_to_string(&rx.products)
        )
    }

    /// Serialize to the model file format. `parse_network` inverts this.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "species: {}", self.species.join(", "));
        let _ = writeln!(out, "params: {}", self.parameters.join(", "));
        let _ = writeln!(out, "reactions:");
        for (r, rx) in self.reactions.iter().enumerate() {
            let _ = writeln!(out, "  {} @ {}", self.reaction_label(r), rx.rate);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Arrow,
    At,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize, col0: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '@' => Some(Tok::At),
            _ => None,
        };
        if let Some(t) = single {
            out.push(Spanned { tok: t, col });
            i += 1;
        } else if c == '-' {
            if chars.get(i + 1) == Some(&'>') {
                out.push(Spanned { tok: Tok::Arrow, col });
                i += 2;
            } else {
                out.push(Spanned { tok: Tok::Minus, col });
                i += 1;
            }
        } else if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j >= chars.len() {
                return Err(ParseError::Syntax { line: lineno, col, msg: "unterminated quote".into() });
            }
            let name: String = chars[start..j].iter().collect();
            if !is_identifier(&name) {
                return Err(ParseError::Syntax {
                    line: lineno,
                    col,
                    msg: format!("invalid name `{name}`"),
                });
            }
            out.push(Spanned { tok: Tok::Ident(name), col });
            i = j + 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
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
            out.push(Spanned { tok: Tok::Num(chars[start..i].iter().collect()), col });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else {
            return Err(ParseError::Syntax {
                line: lineno,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

fn is_identifier(s: &str) -> bool {
    let mut it = s.chars();
    match it.next() {
        Some(c) if c.is_alphabetic() || c == '_' => it.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

/// Exact rational from a decimal literal such as `12`, `0.25` or `1e-3`.
fn parse_number(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], text[p + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if frac_part.contains('.') {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        Rational::from_integer(n * num::pow(ten, scale as usize))
    } else {
        Rational::new(n, num::pow(ten, (-scale) as usize))
    })
}

// ---------------------------------------------------------------------------
// rate expressions

struct ExprParser<'a, F: Fn(&str) -> Option<VarKind>> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
    classify: F,
}

impl<F: Fn(&str) -> Option<VarKind>> ExprParser<'_, F> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|s| s.col).unwrap_or(self.end_col)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col(), msg: msg.into() }
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let col = self.col();
                    let d = self.unary()?;
                    let c = d.as_constant().ok_or(ParseError::Syntax {
                        line: self.line,
                        col,
                        msg: "division is only allowed by a numeric constant".into(),
                    })?;
                    if c.is_zero() {
                        return Err(ParseError::Syntax {
                            line: self.line,
                            col,
                            msg: "division by zero".into(),
                        });
                    }
                    acc = acc.scale(&c.recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let col = self.col();
            match self.toks.get(self.pos).map(|s| s.tok.clone()) {
                Some(Tok::Num(t)) => {
                    self.pos += 1;
                    let e: u32 = t.parse().map_err(|_| ParseError::Syntax {
                        line: self.line,
                        col,
                        msg: format!("exponent must be a nonnegative integer, got `{t}`"),
                    })?;
                    return Ok(base.pow(e));
                }
                _ => return Err(self.err("expected an integer exponent")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let col = self.col();
        match self.toks.get(self.pos).map(|s| s.tok.clone()) {
            Some(Tok::Num(t)) => {
                self.pos += 1;
                let v = parse_number(&t).ok_or(ParseError::Syntax {
                    line: self.line,
                    col,
                    msg: format!("malformed number `{t}`"),
                })?;
                Ok(Polynomial::constant(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match (self.classify)(&name) {
                    Some(kind) => Ok(Polynomial::var(&name, kind)),
                    None => Err(ParseError::Undeclared { line: self.line, col, name }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(t) => Err(self.err(format!("unexpected token {t:?} in rate expression"))),
            None => Err(self.err("unexpected end of rate expression")),
        }
    }
}

/// Parse a standalone polynomial. `classify` decides whether a symbol is a
/// species or a parameter; `None` rejects it as undeclared.
pub fn parse_polynomial_with(
    text: &str,
    classify: impl Fn(&str) -> Option<VarKind>,
) -> Result<Polynomial, ParseError> {
    let toks = lex(text, 1, 0)?;
    let mut p = ExprParser { toks: &toks, pos: 0, line: 1, end_col: text.len() + 1, classify };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// network files

struct RawReaction {
    line: usize,
    reactants: Vec<(String, u32, usize)>,
    products: Vec<(String, u32, usize)>,
    rate_toks: Vec<Spanned>,
    end_col: usize,
}

fn parse_complex(toks: &[Spanned], line: usize) -> Result<Vec<(String, u32, usize)>, ParseError> {
    if toks.is_empty() {
        return Err(ParseError::Syntax { line, col: 1, msg: "empty complex (use `0`)".into() });
    }
    if toks.len() == 1 {
        if let Tok::Num(t) = &toks[0].tok {
            if parse_number(t).is_some_and(|v| v.is_zero()) {
                return Ok(Vec::new());
            }
        }
    }
    let mut out = Vec::new();
    for part in toks.split(|t| t.tok == Tok::Plus) {
        let col = part.first().map(|t| t.col).unwrap_or(1);
        let (coef, name_tok) = match part {
            [Spanned { tok: Tok::Ident(n), col }] => (1u32, (n.clone(), *col)),
            [Spanned { tok: Tok::Num(c), col: ccol }, Spanned { tok: Tok::Star, .. }, Spanned { tok: Tok::Ident(n), col }]
            | [Spanned { tok: Tok::Num(c), col: ccol }, Spanned { tok: Tok::Ident(n), col }] => {
                let v = parse_number(c).ok_or(ParseError::BadCoefficient {
                    line,
                    col: *ccol,
                    text: c.clone(),
                })?;
                if !v.is_integer() || !v.is_positive() {
                    return Err(ParseError::BadCoefficient { line, col: *ccol, text: c.clone() });
                }
                let k: u32 = v.to_integer().try_into().map_err(|_| ParseError::BadCoefficient {
                    line,
                    col: *ccol,
                    text: c.clone(),
                })?;
                (k, (n.clone(), *col))
            }
            [Spanned { tok: Tok::Minus, col: mcol }, ..] => {
                let text = part
                    .iter()
                    .map(|t| match &t.tok {
                        Tok::Num(s) | Tok::Ident(s) => s.clone(),
                        Tok::Minus => "-".into(),
                        Tok::Star => "*".into(),
                        _ => "?".into(),
                    })
                    .collect::<String>();
                return Err(ParseError::BadCoefficient { line, col: *mcol, text });
            }
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: "expected `coeff*name`, `name` or `0` in complex".into(),
                })
            }
        };
        out.push((name_tok.0, coef, name_tok.1));
    }
    Ok(out)
}

fn parse_name_list(rest: &str, line: usize) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    for raw in rest.split([',', ' ', '\t']) {
        let name = raw.trim().trim_matches('"');
        if name.is_empty() {
            continue;
        }
        if !is_identifier(name) {
            return Err(ParseError::Syntax { line, col: 1, msg: format!("invalid name `{name}`") });
        }
        if out.iter().any(|n: &String| n == name) {
            return Err(ParseError::Duplicate { line, name: name.to_string() });
        }
        out.push(name.to_string());
    }
    Ok(out)
}

/// Parse a model file.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut declared_species: Option<Vec<String>> = None;
    let mut declared_params: Option<Vec<String>> = None;
    let mut raws: Vec<RawReaction> = Vec::new();
    let mut in_reactions = false;

    for (k, full) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = match full.find('#') {
            Some(p) => &full[..p],
            None => full,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("species:") {
            declared_species = Some(parse_name_list(rest, lineno)?);
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("params:") {
            declared_params = Some(parse_name_list(rest, lineno)?);
            continue;
        }
        if trimmed == "reactions:" {
            in_reactions = true;
            continue;
        }
        if !in_reactions {
            return Err(ParseError::Syntax {
                line: lineno,
                col: 1,
                msg: "expected `species:`, `params:` or `reactions:`".into(),
            });
        }
        let toks = lex(line, lineno, 0)?;
        let arrow = toks.iter().position(|t| t.tok == Tok::Arrow).ok_or(ParseError::Syntax {
            line: lineno,
            col: 1,
            msg: "expected `->`".into(),
        })?;
        let at = toks.iter().position(|t| t.tok == Tok::At).ok_or(ParseError::Syntax {
            line: lineno,
            col: line.len() + 1,
            msg: "missing `@ rate`".into(),
        })?;
        if at < arrow {
            return Err(ParseError::Syntax { line: lineno, col: toks[at].col, msg: "`@` before `->`".into() });
        }
        let reactants = parse_complex(&toks[..arrow], lineno).map_err(|e| fix_empty_col(e, toks[arrow].col))?;
        let products = parse_complex(&toks[arrow + 1..at], lineno).map_err(|e| fix_empty_col(e, toks[at].col))?;
        let rate_toks = toks[at + 1..].to_vec();
        if rate_toks.is_empty() {
            return Err(ParseError::Syntax { line: lineno, col: toks[at].col + 1, msg: "empty rate".into() });
        }
        raws.push(RawReaction { line: lineno, reactants, products, rate_toks, end_col: line.len() + 1 });
    }

    let species: Vec<String> = match &declared_species {
        Some(list) => {
            for r in &raws {
                for (name, _, col) in r.reactants.iter().chain(r.products.iter()) {
                    if !list.contains(name) {
                        return Err(ParseError::Undeclared { line: r.line, col: *col, name: name.clone() });
                    }
                }
            }
            list.clone()
        }
        None => {
            let mut v: Vec<String> = Vec::new();
            for r in &raws {
                for (name, _, _) in r.reactants.iter().chain(r.products.iter()) {
                    if !v.contains(name) {
                        v.push(name.clone());
                    }
                }
            }
            v
        }
    };
    let species_set: HashSet<&str> = species.iter().map(String::as_str).collect();
    if let Some(ps) = &declared_params {
        if let Some(clash) = ps.iter().find(|p| species_set.contains(p.as_str())) {
            return Err(ParseError::SpeciesParamClash { name: clash.clone() });
        }
    }

    let index: HashMap<&str, usize> = species.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut params: Vec<String> = declared_params.clone().unwrap_or_default();
    let mut reactions = Vec::with_capacity(raws.len());
    for r in &raws {
        let rate = {
            let auto = declared_params.is_none();
            let seen = std::cell::RefCell::new(Vec::<String>::new());
            let p = {
                let classify = |name: &str| -> Option<VarKind> {
                    if species_set.contains(name) {
                        Some(VarKind::Species)
                    } else if params.iter().any(|p| p == name) {
                        Some(VarKind::Param)
                    } else if auto {
                        seen.borrow_mut().push(name.to_string());
                        Some(VarKind::Param)
                    } else {
                        None
                    }
                };
                let mut ep = ExprParser {
                    toks: &r.rate_toks,
                    pos: 0,
                    line: r.line,
                    end_col: r.end_col,
                    classify,
                };
                let e = ep.expr()?;
                if ep.pos != r.rate_toks.len() {
                    return Err(ep.err("trailing input after rate expression"));
                }
                e
            };
            for name in seen.into_inner() {
                if !params.contains(&name) {
                    params.push(name);
                }
            }
            p
        };
        let mut reactants = Complex::new();
        for (name, c, _) in &r.reactants {
            *reactants.entry(index[name.as_str()]).or_insert(0) += c;
        }
        let mut products = Complex::new();
        for (name, c, _) in &r.products {
            *products.entry(index[name.as_str()]).or_insert(0) += c;
        }
        reactions.push(Reaction { reactants, products, rate });
    }

    Ok(ReactionNetwork { species, parameters: params, reactions })
}

fn fix_empty_col(e: ParseError, col: usize) -> ParseError {
    match e {
        ParseError::Syntax { line, msg, .. } if msg.starts_with("empty complex") => {
            ParseError::Syntax { line, col, msg }
        }
        other => other,
    }
}

// ---------------------------------------------------------------------------
// derived structure

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoichStructure {
    pub species: Vec<String>,
    pub reactions: Vec<String>,
    pub alpha: Vec<Vec<i64>>,
    pub beta: Vec<Vec<i64>>,
    pub gamma: Vec<Vec<i64>>,
}

impl StoichStructure {
    pub fn gamma_rational(&self) -> Vec<Vec<Rational>> {
        self.gamma
            .iter()
            .map(|row| row.iter().map(|&g| Rational::from_integer(BigInt::from(g))).collect())
            .collect()
    }

    pub fn column(&self, r: usize) -> Vec<i64> {
        self.gamma.iter().map(|row| row[r]).collect()
    }
}

pub fn stoich(net: &ReactionNetwork) -> StoichStructure {
    let n = net.n_species();
    let m = net.n_reactions();
    let mut alpha = vec![vec![0i64; m]; n];
    let mut beta = vec![vec![0i64; m]; n];
    for (r, rx) in net.reactions.iter().enumerate() {
        for (&s, &c) in &rx.reactants {
            alpha[s][r] = c as i64;
        }
        for (&s, &c) in &rx.products {
            beta[s][r] = c as i64;
        }
    }
    let gamma = (0..n)
        .map(|i| (0..m).map(|r| beta[i][r] - alpha[i][r]).collect())
        .collect();
    StoichStructure {
        species: net.species.clone(),
        reactions: (0..m).map(|r| net.reaction_label(r)).collect(),
        alpha,
        beta,
        gamma,
    }
}

/// `RHS_i = sum_r gamma[i][r] * rate_r`, one polynomial per species.
pub fn build_rhs(net: &ReactionNetwork) -> Vec<Polynomial> {
    let st = stoich(net);
    (0..net.n_species())
        .map(|i| {
            net.reactions.iter().enumerate().fold(Polynomial::zero(), |acc, (r, rx)| {
                let g = st.gamma[i][r];
                if g == 0 {
                    acc
                } else {
                    acc.add(&rx.rate.scale(&Rational::from_integer(BigInt::from(g))))
                }
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MassActionEntry {
    pub reaction: usize,
    pub label: String,
    pub mass_action: bool,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MassActionReport {
    pub entries: Vec<MassActionEntry>,
    pub offending: Vec<usize>,
}

/// A reaction is mass-action iff its rate is a single term `k * x^alpha`
/// with `k` a parameter monomial times a positive rational.
pub fn validate_mass_action(net: &ReactionNetwork) -> MassActionReport {
    let mut entries = Vec::new();
    for (r, rx) in net.reactions.iter().enumerate() {
        let reason = mass_action_violation(net, rx);
        entries.push(MassActionEntry {
            reaction: r,
            label: net.reaction_label(r),
            mass_action: reason.is_none(),
            reason,
        });
    }
    let offending = entries.iter().filter(|e| !e.mass_action).map(|e| e.reaction).collect();
    MassActionReport { entries, offending }
}

fn mass_action_violation(net: &ReactionNetwork, rx: &Reaction) -> Option<String> {
    if rx.rate.len() != 1 {
        return Some(format!("rate has {} terms, expected exactly one", rx.rate.len()));
    }
    let (sig, coef) = rx.rate.raw_terms().next().unwrap();
    if !coef.is_positive() {
        return Some("rate coefficient is not positive".into());
    }
    let expected: BTreeMap<String, u32> =
        rx.reactants.iter().map(|(&s, &c)| (net.species[s].clone(), c)).collect();
    if sig.species != expected {
        return Some(format!(
            "species exponents {:?} differ from reactant multiplicities {:?}",
            sig.species, expected
        ));
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFlag {
    pub reaction: usize,
    pub label: String,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub samples: usize,
    pub flags: Vec<RateFlag>,
}

pub const RATE_SAMPLES: usize = 256;
pub const RATE_BOX: f64 = 10.0;

/// Sample the box `[0, 10]^n` on a Halton sequence (first point is the
/// origin) and flag every reaction whose rate is negative somewhere.
pub fn validate_rates(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<RateReport, String> {
    validate_rates_seeded(net, params, 0)
}

/// Same as [`validate_rates`] with the Halton sequence shifted by `seed`.
pub fn validate_rates_seeded(net: &ReactionNetwork, params: &ParameterAssignment, seed: u64) -> Result<RateReport, String> {
    let idx = net.index_map();
    let pm = params.as_map();
    let compiled = net
        .reactions
        .iter()
        .map(|r| r.rate.compile(&idx, &pm))
        .collect::<Result<Vec<_>, _>>()?;
    let n = net.n_species();
    let mut flags = Vec::new();
    for (r, c) in compiled.iter().enumerate() {
        for k in 0..RATE_SAMPLES {
            let x: Vec<f64> = (0..n).map(|d| RATE_BOX * crate::halton::halton(k as u64 + seed, d)).collect();
            let v = c.eval(&x);
            if v < 0.0 {
                flags.push(RateFlag { reaction: r, label: net.reaction_label(r), point: x, value: v });
                break;
            }
        }
    }
    Ok(RateReport { samples: RATE_SAMPLES, flags })
}

/// Convenience for tests and fixtures: exact rational parse of `p/q` or a decimal.
pub fn rational_from_str(s: &str) -> Option<Rational> {
    match s.split_once('/') {
        Some((a, b)) => {
            let a = parse_number(a.trim())?;
            let b = parse_number(b.trim())?;
            (!b.is_zero()).then(|| a / b)
        }
        None => {
            let t = s.trim();
            if let Some(rest) = t.strip_prefix('-') {
                parse_number(rest).map(|v| -v)
            } else {
                parse_number(t)
            }
        }
    }
}

pub fn is_one(r: &Rational) -> bool {
    r.is_one()
}
