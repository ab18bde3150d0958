//! Exact rational linear programming: dense two-phase simplex with Bland's rule.

use num::{One, Signed, Zero};

use crate::poly::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub rel: Rel,
    pub rhs: Rational,
}

/// `maximize objective·x` subject to the constraints, with `x_j >= 0` unless
/// `free[j]`.
#[derive(Clone, Debug)]
pub struct Lp {
    pub n: usize,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[Rational], &Rational)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

pub fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

impl Lp {
    pub fn new(n: usize) -> Self {
        Lp { n, objective: vec![Rational::zero(); n], constraints: Vec::new(), free: vec![false; n] }
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, rel: Rel, rhs: Rational) {
        debug_assert_eq!(coeffs.len(), self.n);
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        // free variables are split as x = x+ - x-; column n + k holds x-
        let frees: Vec<usize> = (0..self.n).filter(|&j| self.free[j]).collect();
        let nv = self.n + frees.len();
        let expand = |row: &[Rational]| -> Vec<Rational> {
            let mut out = row.to_vec();
            for &j in &frees {
                out.push(-row[j].clone());
            }
            out
        };

        let mut rows: Vec<(Vec<Rational>, Rel, Rational)> = self
            .constraints
            .iter()
            .map(|c| {
                let mut a = expand(&c.coeffs);
                let mut b = c.rhs.clone();
                let mut rel = c.rel;
                if b.is_negative() {
                    a.iter_mut().for_each(|x| *x = -x.clone());
                    b = -b;
                    rel = match rel {
                        Rel::Le => Rel::Ge,
                        Rel::Ge => Rel::Le,
                        Rel::Eq => Rel::Eq,
                    };
                }
                (a, rel, b)
            })
            .collect();

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Rel::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Rel::Le).count();
        let width = nv + n_slack + n_art;
        let art_start = nv + n_slack;

        let mut t = Tableau {
            a: Vec::with_capacity(m),
            obj: vec![Rational::zero(); width + 1],
            basis: Vec::with_capacity(m),
        };
        let (mut si, mut ai) = (nv, art_start);
        for (coeffs, rel, b) in rows.drain(..) {
            let mut row = coeffs;
            row.resize(width + 1, Rational::zero());
            row[width] = b;
            match rel {
                Rel::Le => {
                    row[si] = Rational::one();
                    t.basis.push(si);
                    si += 1;
                }
                Rel::Ge => {
                    row[si] = -Rational::one();
                    si += 1;
                    row[ai] = Rational::one();
                    t.basis.push(ai);
                    ai += 1;
                }
                Rel::Eq => {
                    row[ai] = Rational::one();
                    t.basis.push(ai);
                    ai += 1;
                }
            }
            t.a.push(row);
        }

        // phase 1: minimize the sum of artificials
        if n_art > 0 {
            for j in art_start..width {
                t.obj[j] = Rational::one();
            }
            for i in 0..m {
                if t.basis[i] >= art_start {
                    let row = t.a[i].clone();
                    for (o, v) in t.obj.iter_mut().zip(row.iter()) {
                        *o -= v;
                    }
                }
            }
            if t.run(width).is_err() {
                unreachable!("phase 1 is bounded below by zero");
            }
            if !t.obj[width].is_zero() {
                return LpOutcome::Infeasible;
            }
            // drive remaining artificials out of the basis
            let mut i = 0;
            while i < t.a.len() {
                if t.basis[i] >= art_start {
                    match (0..art_start).find(|&j| !t.a[i][j].is_zero()) {
                        Some(j) => {
                            t.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            t.a.remove(i);
                            t.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
            for row in t.a.iter_mut() {
                row.drain(art_start..width);
            }
        }
        let width = art_start;

        // phase 2: minimize -objective
        let c = expand(&self.objective);
        t.obj = vec![Rational::zero(); width + 1];
        for (j, cj) in c.iter().enumerate() {
            t.obj[j] = -cj.clone();
        }
        for i in 0..t.a.len() {
            let b = t.basis[i];
            let f = t.obj[b].clone();
            if !f.is_zero() {
                let row = t.a[i].clone();
                for (o, v) in t.obj.iter_mut().zip(row.iter()) {
                    *o -= &f * v;
                }
            }
        }
        if t.run(width).is_err() {
            return LpOutcome::Unbounded;
        }

        let mut xs = vec![Rational::zero(); width];
        for (i, &b) in t.basis.iter().enumerate() {
            xs[b] = t.a[i][width].clone();
        }
        let mut x: Vec<Rational> = xs[..self.n].to_vec();
        for (k, &j) in frees.iter().enumerate() {
            x[j] -= &xs[self.n + k];
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    obj: Vec<Rational>,
    basis: Vec<usize>,
}

struct Unbounded;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        if !p.is_one() {
            for v in self.a[r].iter_mut() {
                *v /= &p;
            }
        }
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(prow.iter()) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimize over columns `0..width`; Bland's rule throughout.
    fn run(&mut self, width: usize) -> Result<(), Unbounded> {
        let rhs = self.obj.len() - 1;
        loop {
            let Some(c) = (0..width).find(|&j| self.obj[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][c];
                if !aij.is_positive() {
                    continue;
                }
                let ratio = &self.a[i][rhs] / aij;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Err(Unbounded),
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}
