//! Minimal siphons and their structural verdicts, each backed by an exact
//! rational certificate that can be re-checked independently.

use std::collections::{BTreeSet, HashSet};

use num::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::lp::{q, Lp, LpOutcome, Rel};
use crate::netio::{stoich, ReactionNetwork};
use crate::poly::{format_rational, Rational};
use crate::Execution;

/// Sorted species indices.
pub type SpeciesSet = Vec<usize>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SiphonError {
    #[error("species set is empty")]
    Empty,
    #[error("species index {0} out of range")]
    OutOfRange(usize),
    #[error("reaction index {0} out of range")]
    ReactionOutOfRange(usize),
    #[error("{0:?} is not a siphon")]
    NotSiphon(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// `c >= 0` on the set, `c^T Gamma = 0`: the set is not critical.
    Conservation,
    /// signed reaction vector `u` with `(Gamma u)_i > 0` on the set: no
    /// conservation law fits inside, so the set is critical.
    Separation,
    /// `v >= 0`, `(Gamma v)_i < 0` on the set.
    DrainFlux,
    /// `y >= 0` on the set with `y^T Gamma_W >= 0`: no draining flux exists.
    NoDrain,
    /// `v >= 0`, `(Gamma v)_i > 0` on the set.
    ReplicateFlux,
    /// as `ReplicateFlux` plus `(Gamma v)_i = 0` off the set.
    ReplicateFluxStrict,
    /// `y >= 0` on the set with `y^T Gamma_W <= 0`.
    NoReplicate,
    /// `y >= 0` on the set, free `z` off it, `y^T Gamma_W + z^T Gamma_rest <= 0`.
    NoReplicateStrict,
    /// strict replicating flux whose support consumes every species of the set.
    AutocatalyticFlux,
    /// `v >= 0` with `Gamma[U, R_U] v > 0` on a square submatrix.
    CoreFlux,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// The species set the certificate speaks about.
    pub set: Vec<usize>,
    /// Column subset for core certificates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reactions: Option<Vec<usize>>,
    /// Over species for conservation and dual certificates, over reactions
    /// (or `reactions`) for fluxes.
    #[serde(serialize_with = "ser_rationals")]
    pub vector: Vec<Rational>,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(format_rational))
}

fn gamma_q(net: &ReactionNetwork) -> Vec<Vec<Rational>> {
    stoich(net).gamma_rational()
}

/// `(Gamma v)_i` for every species.
fn apply(g: &[Vec<Rational>], v: &[Rational]) -> Vec<Rational> {
    g.iter()
        .map(|row| row.iter().zip(v).filter(|(_, b)| !b.is_zero()).map(|(a, b)| a * b).sum())
        .collect()
}

/// `y^T Gamma` for every reaction.
fn apply_left(g: &[Vec<Rational>], y: &[Rational], m: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); m];
    for (row, yi) in g.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += yi * a;
        }
    }
    out
}

impl Certificate {
    /// Re-check the defining (in)equalities with exact arithmetic.
    pub fn verify(&self, net: &ReactionNetwork) -> bool {
        let g = gamma_q(net);
        let n = net.n_species();
        let m = net.n_reactions();
        let in_set = |i: usize| self.set.binary_search(&i).is_ok();
        if self.set.iter().any(|&i| i >= n) {
            return false;
        }
        let nonneg = |v: &[Rational]| v.iter().all(|x| !x.is_negative());
        let nonzero = |v: &[Rational]| v.iter().any(|x| !x.is_zero());
        match self.kind {
            CertificateKind::Conservation => {
                let c = &self.vector;
                c.len() == n
                    && nonneg(c)
                    && nonzero(c)
                    && (0..n).all(|i| in_set(i) || c[i].is_zero())
                    && apply_left(&g, c, m).iter().all(Zero::is_zero)
            }
            CertificateKind::Separation => {
                self.vector.len() == m
                    && !self.set.is_empty()
                    && {
                        let gv = apply(&g, &self.vector);
                        self.set.iter().all(|&i| gv[i].is_positive())
                    }
            }
            CertificateKind::DrainFlux
            | CertificateKind::ReplicateFlux
            | CertificateKind::ReplicateFluxStrict
            | CertificateKind::AutocatalyticFlux => {
                let v = &self.vector;
                if v.len() != m || !nonneg(v) || !nonzero(v) || self.set.is_empty() {
                    return false;
                }
                let gv = apply(&g, v);
                let on_set = match self.kind {
                    CertificateKind::DrainFlux => self.set.iter().all(|&i| gv[i].is_negative()),
                    _ => self.set.iter().all(|&i| gv[i].is_positive()),
                };
                let off_set = match self.kind {
                    CertificateKind::ReplicateFluxStrict | CertificateKind::AutocatalyticFlux => {
                        (0..n).all(|i| in_set(i) || gv[i].is_zero())
                    }
                    _ => true,
                };
                let consumes = self.kind != CertificateKind::AutocatalyticFlux
                    || self.set.iter().all(|&i| {
                        (0..m).any(|r| !v[r].is_zero() && net.reactions[r].reactants.contains_key(&i))
                    });
                on_set && off_set && consumes
            }
            CertificateKind::NoDrain | CertificateKind::NoReplicate | CertificateKind::NoReplicateStrict => {
                let y = &self.vector;
                if y.len() != n || self.set.is_empty() {
                    return false;
                }
                let strict = self.kind == CertificateKind::NoReplicateStrict;
                let on: Vec<Rational> = (0..n).map(|i| if in_set(i) { y[i].clone() } else { Rational::zero() }).collect();
                if !nonneg(&on) || !nonzero(&on) {
                    return false;
                }
                if !strict && (0..n).any(|i| !in_set(i) && !y[i].is_zero()) {
                    return false;
                }
                let yg = apply_left(&g, y, m);
                match self.kind {
                    CertificateKind::NoDrain => yg.iter().all(|x| !x.is_negative()),
                    _ => yg.iter().all(|x| !x.is_positive()),
                }
            }
            CertificateKind::CoreFlux => {
                let Some(cols) = &self.reactions else { return false };
                let v = &self.vector;
                if cols.len() != self.set.len()
                    || v.len() != cols.len()
                    || cols.iter().any(|&r| r >= m)
                    || !nonneg(v)
                    || !nonzero(v)
                {
                    return false;
                }
                self.set.iter().all(|&i| {
                    let s: Rational = cols.iter().zip(v).map(|(&r, x)| &g[i][r] * x).sum();
                    s.is_positive()
                })
            }
        }
    }
}

fn check_set(net: &ReactionNetwork, w: &[usize]) -> Result<Vec<usize>, SiphonError> {
    if w.is_empty() {
        return Err(SiphonError::Empty);
    }
    if let Some(&i) = w.iter().find(|&&i| i >= net.n_species()) {
        return Err(SiphonError::OutOfRange(i));
    }
    let mut v = w.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// Every reaction producing a member of `w` also consumes a member of `w`.
pub fn is_siphon(net: &ReactionNetwork, w: &[usize]) -> Result<bool, SiphonError> {
    let w = check_set(net, w)?;
    Ok(net.reactions.iter().all(|r| !r.produces_any(&w) || r.consumes(&w)))
}

fn violated(net: &ReactionNetwork, w: &BTreeSet<usize>) -> Option<usize> {
    net.reactions.iter().position(|r| {
        r.products.keys().any(|s| w.contains(s)) && !r.reactants.keys().any(|s| w.contains(s))
    })
}

pub fn minimal_siphons(net: &ReactionNetwork) -> Vec<SpeciesSet> {
    minimal_siphons_with(net, Execution::default())
}

/// Branch and bound: grow a set from each seed by adding a reactant of some
/// reaction that feeds the set from outside, until no such reaction is left.
pub fn minimal_siphons_with(net: &ReactionNetwork, exec: Execution) -> Vec<SpeciesSet> {
    let inputs: HashSet<usize> = net.input_species().into_iter().collect();
    let seeds: Vec<usize> = (0..net.n_species()).filter(|s| !inputs.contains(s)).collect();
    let per_seed = exec.map(&seeds, |&s| {
        let mut found: Vec<BTreeSet<usize>> = Vec::new();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut stack = vec![BTreeSet::from([s])];
        while let Some(w) = stack.pop() {
            if found.iter().any(|f| f.is_subset(&w)) {
                continue;
            }
            if !seen.insert(w.iter().copied().collect()) {
                continue;
            }
            match violated(net, &w) {
                None => {
                    found.retain(|f| !w.is_subset(f));
                    found.push(w);
                }
                Some(r) => {
                    for &x in net.reactions[r].reactants.keys().rev() {
                        if inputs.contains(&x) {
                            continue;
                        }
                        let mut next = w.clone();
                        next.insert(x);
                        stack.push(next);
                    }
                }
            }
        }
        found
    });
    let mut all: Vec<BTreeSet<usize>> = per_seed.into_iter().flatten().collect();
    all.sort_by_key(|s| s.len());
    let mut minimal: Vec<BTreeSet<usize>> = Vec::new();
    for s in all {
        if !minimal.iter().any(|m| m.is_subset(&s)) {
            minimal.push(s);
        }
    }
    let mut out: Vec<SpeciesSet> = minimal.into_iter().map(|s| s.into_iter().collect()).collect();
    out.sort();
    out
}

/// Exhaustive reference enumeration, for tests on small networks.
pub fn minimal_siphons_brute_force(net: &ReactionNetwork) -> Vec<SpeciesSet> {
    let n = net.n_species();
    assert!(n <= 20, "brute force limited to 20 species");
    let mut siphons: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|w| is_siphon(net, w).unwrap())
        .collect();
    siphons.sort_by_key(Vec::len);
    let mut out: Vec<Vec<usize>> = Vec::new();
    for s in siphons {
        if !out.iter().any(|m| m.iter().all(|x| s.contains(x))) {
            out.push(s);
        }
    }
    out.sort();
    out
}

/// Maximize `t` subject to `v >= 0`, `sum v = 1`, `sign * (Gamma v)_i >= t`
/// on `w`, and optionally `(Gamma v)_i = 0` off `w`. Returns `(t*, v*)`, or
/// `None` when there are no reactions.
fn flux_lp(g: &[Vec<Rational>], m: usize, w: &[usize], sign: i64, strict: bool) -> Option<(Rational, Vec<Rational>)> {
    if m == 0 {
        return None;
    }
    let mut lp = Lp::new(m + 1);
    lp.free[m] = true;
    lp.objective[m] = q(1);
    let mut norm = vec![q(1); m + 1];
    norm[m] = q(0);
    lp.add(norm, Rel::Eq, q(1));
    for (i, row) in g.iter().enumerate() {
        let on = w.binary_search(&i).is_ok();
        if on {
            let mut c: Vec<Rational> = row.iter().map(|a| a * q(sign)).collect();
            c.push(q(-1));
            lp.add(c, Rel::Ge, q(0));
        } else if strict {
            let mut c = row.clone();
            c.push(q(0));
            lp.add(c, Rel::Eq, q(0));
        }
    }
    match lp.solve() {
        LpOutcome::Optimal { mut x, value } => {
            x.truncate(m);
            Some((value, x))
        }
        _ => None,
    }
}

/// Find `y >= 0` on `w` with `sum y = 1` and `sign * (y^T Gamma)_r <= 0` for
/// every reaction; `free_rest` adds unconstrained multipliers off `w`.
fn dual_witness(g: &[Vec<Rational>], n: usize, m: usize, w: &[usize], sign: i64, free_rest: bool) -> Option<Vec<Rational>> {
    let vars: Vec<usize> = (0..n).filter(|i| free_rest || w.binary_search(i).is_ok()).collect();
    let mut lp = Lp::new(vars.len());
    for (k, &i) in vars.iter().enumerate() {
        lp.free[k] = w.binary_search(&i).is_err();
    }
    lp.add(
        vars.iter().map(|i| if w.binary_search(i).is_ok() { q(1) } else { q(0) }).collect(),
        Rel::Eq,
        q(1),
    );
    for r in 0..m {
        lp.add(vars.iter().map(|&i| &g[i][r] * q(sign)).collect(), Rel::Le, q(0));
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let mut y = vec![Rational::zero(); n];
            for (k, &i) in vars.iter().enumerate() {
                y[i] = x[k].clone();
            }
            Some(y)
        }
        _ => None,
    }
}

/// Critical iff no nonnegative conservation law is supported inside `w`.
/// The certificate is a conservation vector when non-critical and a
/// separating reaction combination when critical.
pub fn is_critical(net: &ReactionNetwork, w: &[usize]) -> Result<(bool, Certificate), SiphonError> {
    let w = check_set(net, w)?;
    if !is_siphon(net, &w)? {
        return Err(SiphonError::NotSiphon(w));
    }
    Ok(criticality(net, &w))
}

fn criticality(net: &ReactionNetwork, w: &[usize]) -> (bool, Certificate) {
    let g = gamma_q(net);
    let n = net.n_species();
    let m = net.n_reactions();
    // c >= 0 on w, sum c = 1, c^T Gamma = 0
    let mut lp = Lp::new(w.len());
    lp.add(vec![q(1); w.len()], Rel::Eq, q(1));
    for r in 0..m {
        lp.add(w.iter().map(|&i| g[i][r].clone()).collect(), Rel::Eq, q(0));
    }
    if let LpOutcome::Optimal { x, .. } = lp.solve() {
        let mut c = vec![Rational::zero(); n];
        for (k, &i) in w.iter().enumerate() {
            c[i] = x[k].clone();
        }
        return (
            false,
            Certificate { kind: CertificateKind::Conservation, set: w.to_vec(), reactions: None, vector: c },
        );
    }
    // Farkas alternative: signed u in [-1, 1]^m with (Gamma u)_i >= t > 0 on w
    let mut lp = Lp::new(m + 1);
    lp.free[m] = true;
    lp.objective[m] = q(1);
    for j in 0..m {
        lp.free[j] = true;
        let mut e = vec![q(0); m + 1];
        e[j] = q(1);
        lp.add(e.clone(), Rel::Le, q(1));
        lp.add(e, Rel::Ge, q(-1));
    }
    for &i in w {
        let mut c = g[i].clone();
        c.push(q(-1));
        lp.add(c, Rel::Ge, q(0));
    }
    let u = match lp.solve() {
        LpOutcome::Optimal { mut x, value } if value.is_positive() => {
            x.truncate(m);
            x
        }
        other => unreachable!("conservation infeasible but no separating vector: {other:?}"),
    };
    (true, Certificate { kind: CertificateKind::Separation, set: w.to_vec(), reactions: None, vector: u })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplicationMode {
    /// Only the rows of the set are constrained.
    Restricted,
    /// Additionally, net production is zero outside the set.
    Strict,
}

/// Self-replicability with its certificate: a flux when true, a dual
/// multiplier vector when false.
pub fn replicability(net: &ReactionNetwork, w: &[usize], mode: ReplicationMode) -> Result<(bool, Certificate), SiphonError> {
    let w = check_set(net, w)?;
    let g = gamma_q(net);
    let (n, m) = (net.n_species(), net.n_reactions());
    let strict = mode == ReplicationMode::Strict;
    if let Some((t, v)) = flux_lp(&g, m, &w, 1, strict) {
        if t.is_positive() {
            let kind = if strict { CertificateKind::ReplicateFluxStrict } else { CertificateKind::ReplicateFlux };
            return Ok((true, Certificate { kind, set: w, reactions: None, vector: v }));
        }
    }
    let y = dual_witness(&g, n, m, &w, 1, strict).expect("alternative system must be feasible");
    let kind = if strict { CertificateKind::NoReplicateStrict } else { CertificateKind::NoReplicate };
    Ok((false, Certificate { kind, set: w, reactions: None, vector: y }))
}

pub fn drainability(net: &ReactionNetwork, w: &[usize]) -> Result<(bool, Certificate), SiphonError> {
    let w = check_set(net, w)?;
    let g = gamma_q(net);
    let (n, m) = (net.n_species(), net.n_reactions());
    if let Some((t, v)) = flux_lp(&g, m, &w, -1, false) {
        if t.is_positive() {
            return Ok((true, Certificate { kind: CertificateKind::DrainFlux, set: w, reactions: None, vector: v }));
        }
    }
    let y = dual_witness(&g, n, m, &w, -1, false).expect("alternative system must be feasible");
    Ok((false, Certificate { kind: CertificateKind::NoDrain, set: w, reactions: None, vector: y }))
}

/// Autocatalytic siphon test: a strict replicating flux whose support has
/// every member of `w` among its reactants. The support is maximized over
/// the closed cone of admissible fluxes so a single LP per reaction decides it.
pub fn autocatalytic(net: &ReactionNetwork, w: &[usize]) -> Result<(bool, Option<Certificate>), SiphonError> {
    let w = check_set(net, w)?;
    let (ok, cert) = replicability(net, &w, ReplicationMode::Strict)?;
    if !ok {
        return Ok((false, None));
    }
    let g = gamma_q(net);
    let m = net.n_reactions();
    let mut v = cert.vector.clone();
    for r in 0..m {
        if !v[r].is_zero() {
            continue;
        }
        let mut lp = Lp::new(m);
        lp.objective[r] = q(1);
        lp.add(vec![q(1); m], Rel::Eq, q(1));
        for (i, row) in g.iter().enumerate() {
            let rel = if w.binary_search(&i).is_ok() { Rel::Ge } else { Rel::Eq };
            lp.add(row.clone(), rel, q(0));
        }
        if let LpOutcome::Optimal { x, value } = lp.solve() {
            if value.is_positive() {
                for (a, b) in v.iter_mut().zip(x) {
                    *a += b;
                }
            }
        }
    }
    let covered = w.iter().all(|&i| (0..m).any(|r| !v[r].is_zero() && net.reactions[r].reactants.contains_key(&i)));
    if !covered {
        return Ok((false, None));
    }
    Ok((true, Some(Certificate { kind: CertificateKind::AutocatalyticFlux, set: w, reactions: None, vector: v })))
}

/// Every listed reaction consumes at least one species of `m_set`.
pub fn is_exclusive(net: &ReactionNetwork, reactions: &[usize], m_set: &[usize]) -> Result<bool, SiphonError> {
    if m_set.is_empty() {
        return Err(SiphonError::Empty);
    }
    if let Some(&r) = reactions.iter().find(|&&r| r >= net.n_reactions()) {
        return Err(SiphonError::ReactionOutOfRange(r));
    }
    Ok(reactions.iter().all(|&r| net.reactions[r].consumes(m_set)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiphonReport {
    pub set: SpeciesSet,
    pub species: Vec<String>,
    pub is_siphon: bool,
    pub is_minimal: bool,
    pub is_critical: bool,
    pub is_drainable: bool,
    pub is_self_replicable_restricted: bool,
    pub is_self_replicable_strict: bool,
    pub is_autocatalytic: bool,
    /// Every reaction carrying the restricted replication flux consumes a
    /// member of the set; false when the set is not self-replicable.
    pub is_exclusive: bool,
    pub certificates: Vec<Certificate>,
}

pub fn analyze_siphon(net: &ReactionNetwork, w: &[usize], minimal: bool) -> Result<SiphonReport, SiphonError> {
    let w = check_set(net, w)?;
    let siphon = is_siphon(net, &w)?;
    let (critical, c_crit) = criticality(net, &w);
    let (drain, c_drain) = drainability(net, &w)?;
    let (rep, c_rep) = replicability(net, &w, ReplicationMode::Restricted)?;
    let (rep_s, c_rep_s) = replicability(net, &w, ReplicationMode::Strict)?;
    let (auto, c_auto) = autocatalytic(net, &w)?;
    let exclusive = rep && {
        let supp: Vec<usize> = (0..net.n_reactions()).filter(|&r| !c_rep.vector[r].is_zero()).collect();
        is_exclusive(net, &supp, &w)?
    };
    let mut certificates = vec![c_crit, c_drain, c_rep, c_rep_s];
    certificates.extend(c_auto);
    Ok(SiphonReport {
        species: net.names_of(&w),
        set: w,
        is_siphon: siphon,
        is_minimal: minimal,
        is_critical: critical,
        is_drainable: drain,
        is_self_replicable_restricted: rep,
        is_self_replicable_strict: rep_s,
        is_autocatalytic: auto,
        is_exclusive: exclusive,
        certificates,
    })
}

/// Reports for every minimal siphon, in enumeration order.
pub fn siphon_reports(net: &ReactionNetwork, exec: Execution) -> Vec<SiphonReport> {
    let sets = minimal_siphons_with(net, exec);
    exec.map(&sets, |w| analyze_siphon(net, w, true).expect("minimal siphons are nonempty"))
}

/// Union of the minimal critical siphons.
pub fn total_siphon(net: &ReactionNetwork) -> SpeciesSet {
    let mut out: BTreeSet<usize> = BTreeSet::new();
    for w in minimal_siphons(net) {
        if criticality(net, &w).0 {
            out.extend(w);
        }
    }
    out.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Core {
    pub species: SpeciesSet,
    pub reactions: Vec<usize>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreSearch {
    pub cores: Vec<Core>,
    /// Largest size actually searched.
    pub searched_up_to: usize,
    pub truncated: bool,
}

pub const MAX_CORE_SIZE: usize = 12;

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    go(items, k, 0, &mut cur, &mut out);
    out
}

/// Minimal square submatrices `Gamma[U, R_U]` admitting `v >= 0` with
/// `A v > 0`. Every reaction of `R_U` must consume a species of `U`, so an
/// inflow alone never counts as a core.
pub fn autocatalytic_cores(net: &ReactionNetwork, max_core_size: usize) -> CoreSearch {
    autocatalytic_cores_with(net, max_core_size, Execution::default())
}

pub fn autocatalytic_cores_with(net: &ReactionNetwork, max_core_size: usize, exec: Execution) -> CoreSearch {
    let truncated = max_core_size > MAX_CORE_SIZE;
    let limit = max_core_size.min(MAX_CORE_SIZE).min(net.n_species());
    let g = gamma_q(net);
    let species: Vec<usize> = (0..net.n_species()).collect();
    let mut cores: Vec<Core> = Vec::new();
    for k in 1..=limit {
        let candidates: Vec<(Vec<usize>, Vec<usize>)> = combinations(&species, k)
            .into_iter()
            .flat_map(|u| {
                let rx: Vec<usize> = (0..net.n_reactions()).filter(|&r| net.reactions[r].consumes(&u)).collect();
                combinations(&rx, k).into_iter().map(move |cols| (u.clone(), cols))
            })
            .filter(|(u, cols)| {
                u.iter().all(|&i| cols.iter().any(|&r| g[i][r].is_positive()))
                    && !cores.iter().any(|c| {
                        c.species.iter().all(|s| u.contains(s)) && c.reactions.iter().all(|r| cols.contains(r))
                    })
            })
            .collect();
        let found = exec.map(&candidates, |(u, cols)| {
            let sub: Vec<Vec<Rational>> = u.iter().map(|&i| cols.iter().map(|&r| g[i][r].clone()).collect()).collect();
            let all: Vec<usize> = (0..u.len()).collect();
            flux_lp(&sub, cols.len(), &all, 1, false)
                .filter(|(t, _)| t.is_positive())
                .map(|(_, v)| Core {
                    species: u.clone(),
                    reactions: cols.clone(),
                    certificate: Certificate {
                        kind: CertificateKind::CoreFlux,
                        set: u.clone(),
                        reactions: Some(cols.clone()),
                        vector: v,
                    },
                })
        });
        cores.extend(found.into_iter().flatten());
    }
    CoreSearch { cores, searched_up_to: limit, truncated }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::parse_network;

    fn net(src: &str) -> ReactionNetwork {
        parse_network(src).unwrap()
    }

    #[test]
    fn whole_closed_network_is_siphon() {
        let n = net("reactions:\nA -> B @ k*A\nB -> A @ k*B\n");
        assert!(is_siphon(&n, &[0, 1]).unwrap());
        assert_eq!(is_siphon(&n, &[]), Err(SiphonError::Empty));
    }

    #[test]
    fn closed_chain_is_not_critical() {
        let n = net("reactions:\nA -> B @ k*A\n");
        let (crit, cert) = is_critical(&n, &[0, 1]).unwrap();
        assert!(!crit);
        assert_eq!(cert.kind, CertificateKind::Conservation);
        assert_eq!(cert.vector, vec![Rational::new(1.into(), 2.into()); 2]);
        assert!(cert.verify(&n));
    }

    #[test]
    fn single_infection_row() {
        let n = net("reactions:\ns + i1 -> 2*i1 @ b*s*i1\ni1 -> 0 @ m*i1\n");
        let w = [1];
        let (rep, c) = replicability(&n, &w, ReplicationMode::Restricted).unwrap();
        assert!(rep && c.verify(&n));
        assert!(c.vector[0].is_positive() && c.vector[1].is_zero());
        let (dr, c) = drainability(&n, &w).unwrap();
        assert!(dr && c.verify(&n));
        assert!(c.vector[1].is_positive());
    }

    #[test]
    fn one_way_feed_modes_disagree() {
        let n = net("reactions:\nA -> B @ k*A\n");
        let (r, c) = replicability(&n, &[1], ReplicationMode::Restricted).unwrap();
        assert!(r && c.verify(&n));
        let (s, c) = replicability(&n, &[1], ReplicationMode::Strict).unwrap();
        assert!(!s && c.verify(&n));
    }

    #[test]
    fn no_reactions_nothing_holds() {
        let n = net("species: A\nreactions:\n");
        let (r, c) = replicability(&n, &[0], ReplicationMode::Restricted).unwrap();
        assert!(!r && c.verify(&n));
        let (d, c) = drainability(&n, &[0]).unwrap();
        assert!(!d && c.verify(&n));
    }

    #[test]
    fn exclusivity() {
        let n = net("reactions:\n0 -> S @ la\nS + I -> 2*I @ b*S*I\n");
        assert!(is_exclusive(&n, &[1], &[1]).unwrap());
        assert!(!is_exclusive(&n, &[0, 1], &[0, 1]).unwrap());
        assert!(is_exclusive(&n, &[7], &[0]).is_err());
    }

    #[test]
    fn simple_core() {
        let n = net("reactions:\nS + I -> 2*I @ b*S*I\n");
        let cs = autocatalytic_cores(&n, 4);
        assert_eq!(cs.cores.len(), 1);
        assert_eq!(cs.cores[0].species, vec![1]);
        assert!(cs.cores[0].certificate.verify(&n));
        assert!(autocatalytic_cores(&n, 13).truncated);
    }

    #[test]
    fn branch_and_bound_matches_brute_force_on_chain() {
        let n = net("reactions:\n0 -> A @ k\nA + B -> 2*B @ k*A*B\nB + C -> 2*C @ k*B*C\nC -> B @ k*C\nD -> E @ k*D\nE -> D @ k*E\n");
        assert_eq!(minimal_siphons(&n), minimal_siphons_brute_force(&n));
        assert_eq!(
            minimal_siphons_with(&n, Execution::Sequential),
            minimal_siphons_with(&n, Execution::Parallel)
        );
    }
}
