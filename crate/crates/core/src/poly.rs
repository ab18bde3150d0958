//! Exact multivariate polynomials with rational coefficients.
//!
//! Variables come in two flavours, parameters and species, and are kept in
//! separate exponent maps so that a rate such as `be*S*I` can be split into
//! its rate constant and its concentration part.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

pub type Rational = BigRational;

/// Exponent signature of a term: parameter powers and species powers.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub params: BTreeMap<String, u32>,
    pub species: BTreeMap<String, u32>,
}

impl Signature {
    pub fn is_constant(&self) -> bool {
        self.params.is_empty() && self.species.is_empty()
    }

    fn mul(&self, other: &Signature) -> Signature {
        let mut out = self.clone();
        for (k, e) in &other.params {
            *out.params.entry(k.clone()).or_insert(0) += e;
        }
        for (k, e) in &other.species {
            *out.species.entry(k.clone()).or_insert(0) += e;
        }
        out
    }

    pub fn species_degree(&self) -> u32 {
        self.species.values().sum()
    }
}

/// A single term `coefficient * params^a * species^b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coefficient: Rational,
    pub param_powers: BTreeMap<String, u32>,
    pub species_powers: BTreeMap<String, u32>,
}

/// Polynomial in canonical form: one coefficient per signature, no zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polynomial {
    terms: BTreeMap<Signature, Rational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Param,
    Species,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(Signature::default(), c);
        }
        p
    }

    pub fn integer(c: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(c)))
    }

    pub fn var(name: &str, kind: VarKind) -> Self {
        let mut sig = Signature::default();
        match kind {
            VarKind::Param => sig.params.insert(name.to_string(), 1),
            VarKind::Species => sig.species.insert(name.to_string(), 1),
        };
        let mut p = Self::zero();
        p.terms.insert(sig, Rational::one());
        p
    }

    pub fn param(name: &str) -> Self {
        Self::var(name, VarKind::Param)
    }

    pub fn species(name: &str) -> Self {
        Self::var(name, VarKind::Species)
    }

    pub fn from_terms<I: IntoIterator<Item = (Signature, Rational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (s, c) in terms {
            p.add_term(s, c);
        }
        p
    }

    fn add_term(&mut self, sig: Signature, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(sig.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&sig);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn raw_terms(&self) -> impl Iterator<Item = (&Signature, &Rational)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms
            .iter()
            .map(|(s, c)| Monomial {
                coefficient: c.clone(),
                param_powers: s.params.clone(),
                species_powers: s.species.clone(),
            })
            .collect()
    }

    /// Constant value, if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (s, c) = self.terms.iter().next().unwrap();
                s.is_constant().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(s, c)| (s.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (s1, c1) in &self.terms {
            for (s2, c2) in &other.terms {
                out.add_term(s1.mul(s2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::integer(1);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to a species.
    pub fn diff_species(&self, name: &str) -> Polynomial {
        let mut out = Polynomial::zero();
        for (s, c) in &self.terms {
            if let Some(&e) = s.species.get(name) {
                let mut sig = s.clone();
                if e == 1 {
                    sig.species.remove(name);
                } else {
                    sig.species.insert(name.to_string(), e - 1);
                }
                out.add_term(sig, c * Rational::from_integer(BigInt::from(e)));
            }
        }
        out
    }

    /// Keep only the terms with strictly positive coefficient.
    pub fn positive_part(&self) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.is_positive())
                .map(|(s, c)| (s.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn species_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .terms
            .keys()
            .flat_map(|s| s.species.keys().cloned())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .terms
            .keys()
            .flat_map(|s| s.params.keys().cloned())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Substitute values for some species and fold them into the coefficients.
    pub fn substitute_species(&self, values: &HashMap<String, Rational>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (s, c) in &self.terms {
            let mut sig = s.clone();
            let mut coef = c.clone();
            for (name, e) in &s.species {
                if let Some(v) = values.get(name) {
                    coef *= pow_rational(v, *e);
                    sig.species.remove(name);
                }
            }
            out.add_term(sig, coef);
        }
        out
    }

    /// Exact evaluation. Missing symbols are an error.
    pub fn eval_rational(
        &self,
        species: &HashMap<String, Rational>,
        params: &HashMap<String, Rational>,
    ) -> Result<Rational, String> {
        let mut acc = Rational::zero();
        for (s, c) in &self.terms {
            let mut t = c.clone();
            for (name, e) in &s.params {
                let v = params.get(name).ok_or_else(|| format!("no value for parameter `{name}`"))?;
                t *= pow_rational(v, *e);
            }
            for (name, e) in &s.species {
                let v = species.get(name).ok_or_else(|| format!("no value for species `{name}`"))?;
                t *= pow_rational(v, *e);
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_f64(
        &self,
        species: &HashMap<String, f64>,
        params: &HashMap<String, f64>,
    ) -> Result<f64, String> {
        let mut acc = 0.0;
        for (s, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (name, e) in &s.params {
                let v = params.get(name).ok_or_else(|| format!("no value for parameter `{name}`"))?;
                t *= v.powi(*e as i32);
            }
            for (name, e) in &s.species {
                let v = species.get(name).ok_or_else(|| format!("no value for species `{name}`"))?;
                t *= v.powi(*e as i32);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Fold parameter values into coefficients and index species, for fast
    /// repeated numeric evaluation.
    pub fn compile(
        &self,
        species_index: &HashMap<String, usize>,
        params: &HashMap<String, f64>,
    ) -> Result<CompiledPoly, String> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (s, c) in &self.terms {
            let mut coef = rational_to_f64(c);
            for (name, e) in &s.params {
                let v = params.get(name).ok_or_else(|| format!("no value for parameter `{name}`"))?;
                coef *= v.powi(*e as i32);
            }
            let mut vars = Vec::with_capacity(s.species.len());
            for (name, e) in &s.species {
                let i = *species_index
                    .get(name)
                    .ok_or_else(|| format!("unknown species `{name}`"))?;
                vars.push((i, *e));
            }
            if coef != 0.0 {
                terms.push((coef, vars));
            }
        }
        Ok(CompiledPoly { terms })
    }
}

pub fn pow_rational(v: &Rational, e: u32) -> Rational {
    let mut out = Rational::one();
    for _ in 0..e {
        out *= v;
    }
    out
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back through the ratio for huge numerators/denominators
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact rational from a finite f64 (binary expansion, no rounding).
pub fn f64_to_rational(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Polynomial with parameters folded in and species replaced by indices.
#[derive(Clone, Debug, Default)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, vars) in &self.terms {
            let mut t = *c;
            for &(i, e) in vars {
                t *= match e {
                    1 => x[i],
                    2 => x[i] * x[i],
                    _ => x[i].powi(e as i32),
                };
            }
            acc += t;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

fn write_signature(f: &mut fmt::Formatter<'_>, s: &Signature, mut first: bool) -> fmt::Result {
    for (name, e) in s.params.iter().chain(s.species.iter()) {
        if !first {
            write!(f, "*")?;
        }
        first = false;
        if *e == 1 {
            write!(f, "{name}")?;
        } else {
            write!(f, "{name}^{e}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (s, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if s.is_constant() {
                write!(f, "{}", format_rational(&abs))?;
            } else if abs.is_one() {
                write_signature(f, s, true)?;
            } else {
                write!(f, "{}", format_rational(&abs))?;
                write_signature(f, s, false)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}
