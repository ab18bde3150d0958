//! Equilibria on siphon faces, their stability, invasion numbers, and the
//! invasion graph.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::halton::halton_point;
use crate::linalg::{self, Mat};
use crate::netio::{build_rhs, ParameterAssignment, ReactionNetwork};
use crate::ngm::{NgmError, NgmModel};
use crate::poly::CompiledPoly;
use crate::siphons::{is_siphon, total_siphon, SpeciesSet};
use crate::Execution;

pub const FACE_STARTS: usize = 64;
pub const DFE_STARTS: usize = 16;
pub const MAX_ITER: usize = 200;
pub const SOLVE_TOL: f64 = 1e-11;
pub const VERIFY_TOL: f64 = 1e-9;
pub const DEDUP_TOL: f64 = 1e-6;
pub const MARGINAL_BAND: f64 = 1e-9;
pub const POSITIVE_TOL: f64 = 1e-9;
pub const MAX_INVASION_SIPHONS: usize = 20;
const START_LO: f64 = 0.01;
const START_HI: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("total siphon is empty, there is no disease-free face")]
    EmptyTotalSiphon,
    #[error("face {{{0}}} is not a siphon")]
    NotSiphon(String),
    #[error("no Newton start converged")]
    NoConvergence,
    #[error("{0} distinct nonnegative disease-free equilibria found")]
    MultipleDfe(usize),
    #[error("only negative solutions found on the disease-free face")]
    NegativeOnly,
    #[error("W is not contained in the equilibrium's face")]
    NotInFace,
    #[error("{0} siphons inside the total siphon exceed the limit of {MAX_INVASION_SIPHONS}")]
    TooManySiphons(usize),
    #[error("not a two-strain Lotka-Volterra-Kolmogorov model: {0}")]
    NotLvk(String),
    #[error("{0}")]
    Eval(String),
    #[error(transparent)]
    Ngm(#[from] NgmError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    ClosedFormFixture,
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryEquilibrium {
    pub face: SpeciesSet,
    pub values: Vec<f64>,
    pub residual: f64,
    /// (re, im) pairs of the full Jacobian.
    pub eigenvalues: Vec<(f64, f64)>,
    pub spectral_abscissa: f64,
    pub classification: Classification,
    pub source: Source,
}

impl BoundaryEquilibrium {
    /// Species that are strictly positive at the point.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] > POSITIVE_TOL).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumSearch {
    pub face: SpeciesSet,
    pub equilibria: Vec<BoundaryEquilibrium>,
    pub starts: usize,
    pub converged: usize,
    pub negative_discarded: usize,
}

/// Compiled right-hand side and full Jacobian at fixed parameters.
pub struct System {
    n: usize,
    rhs: Vec<CompiledPoly>,
    jac: Vec<Vec<CompiledPoly>>,
}

impl System {
    pub fn new(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<Self, BoundaryError> {
        let idx = net.index_map();
        let pm = params.as_map();
        let polys = build_rhs(net);
        let rhs = polys
            .iter()
            .map(|p| p.compile(&idx, &pm))
            .collect::<Result<Vec<_>, _>>()
            .map_err(BoundaryError::Eval)?;
        let jac = polys
            .iter()
            .map(|p| {
                net.species
                    .iter()
                    .map(|s| p.diff_species(s).compile(&idx, &pm))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(BoundaryError::Eval)?;
        Ok(System { n: net.n_species(), rhs, jac })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        self.rhs.iter().map(|p| p.eval(x)).collect()
    }

    pub fn rhs_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.rhs) {
            *o = p.eval(x);
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.jac[i][j].eval(x))
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rhs.iter().map(|p| p.eval(x).abs()).fold(0.0, f64::max)
    }

    fn embed(&self, free: &[usize], z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (k, &i) in free.iter().enumerate() {
            x[i] = z[k];
        }
        x
    }

    fn reduced(&self, free: &[usize], z: &[f64]) -> DVector<f64> {
        let x = self.embed(free, z);
        DVector::from_iterator(free.len(), free.iter().map(|&i| self.rhs[i].eval(&x)))
    }

    /// Damped Newton on the free coordinates, face coordinates pinned at 0.
    fn newton(&self, free: &[usize], start: Vec<f64>) -> Option<Vec<f64>> {
        let k = free.len();
        let mut z = DVector::from_vec(start);
        let mut f = self.reduced(free, z.as_slice());
        let mut converged_at = None;
        for it in 0..MAX_ITER {
            let fmax = f.amax();
            if !fmax.is_finite() {
                return None;
            }
            if fmax < SOLVE_TOL && converged_at.is_none() {
                converged_at = Some(it);
            }
            // a few polishing steps past convergence
            if converged_at.is_some_and(|c| it >= c + 3) {
                break;
            }
            let x = self.embed(free, z.as_slice());
            let j = Mat::from_fn(k, k, |a, b| self.jac[free[a]][free[b]].eval(&x));
            let svd = j.svd(true, true);
            let smax = svd.singular_values.max();
            let step = svd.solve(&(-&f), 1e-14 * smax.max(f64::MIN_POSITIVE)).ok()?;
            let norm0 = f.norm();
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-10 {
                let trial = &z + &step * lambda;
                let ft = self.reduced(free, trial.as_slice());
                if ft.norm() < (1.0 - 1e-4 * lambda) * norm0 || (converged_at.is_some() && ft.amax() <= fmax) {
                    z = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted || z.amax() > 1e12 {
                break;
            }
        }
        (f.amax() < SOLVE_TOL).then(|| z.as_slice().to_vec())
    }

    fn classify(&self, face: &[usize], values: Vec<f64>) -> BoundaryEquilibrium {
        let jac = self.jacobian(&values);
        let ev = linalg::eigenvalues(&jac);
        let abscissa = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let classification = if abscissa < -MARGINAL_BAND {
            Classification::Stable
        } else if abscissa > MARGINAL_BAND {
            Classification::Unstable
        } else {
            Classification::Marginal
        };
        BoundaryEquilibrium {
            face: face.to_vec(),
            residual: self.residual(&values),
            values,
            eigenvalues: ev.iter().map(|z| (z.re, z.im)).collect(),
            spectral_abscissa: abscissa,
            classification,
            source: Source::Newton,
        }
    }

    /// Multistart search on a face. The face is not validated here.
    pub fn search(&self, face: &[usize], starts: usize, exec: Execution) -> EquilibriumSearch {
        let free: Vec<usize> = (0..self.n).filter(|i| !face.contains(i)).collect();
        let raw: Vec<Option<Vec<f64>>> = if free.is_empty() {
            vec![Some(Vec::new())]
        } else {
            let ks: Vec<u64> = (0..starts as u64).collect();
            exec.map(&ks, |&k| self.newton(&free, halton_point(k, free.len(), START_LO, START_HI)))
        };
        let converged = raw.iter().filter(|r| r.is_some()).count();
        let mut negative = 0;
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for z in raw.into_iter().flatten() {
            let mut x = self.embed(&free, &z);
            if x.iter().any(|&v| v < -POSITIVE_TOL) {
                negative += 1;
                continue;
            }
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            // Newton leaves underflow-sized values on coordinates that are zero
            let snapped: Vec<f64> = x.iter().map(|&v| if v < POSITIVE_TOL { 0.0 } else { v }).collect();
            if self.residual(&snapped) < VERIFY_TOL {
                x = snapped;
            }
            if self.residual(&x) >= VERIFY_TOL {
                continue;
            }
            if !kept.iter().any(|k| max_dist(k, &x) <= DEDUP_TOL) {
                kept.push(x);
            }
        }
        kept.sort_by(|a, b| {
            a.iter().zip(b).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        EquilibriumSearch {
            face: face.to_vec(),
            equilibria: kept.into_iter().map(|x| self.classify(face, x)).collect(),
            starts: if free.is_empty() { 1 } else { starts },
            converged,
            negative_discarded: negative,
        }
    }
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub fn find_dfe(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<BoundaryEquilibrium, BoundaryError> {
    let ts = total_siphon(net);
    if ts.is_empty() {
        return Err(BoundaryError::EmptyTotalSiphon);
    }
    let sys = System::new(net, params)?;
    let mut s = sys.search(&ts, DFE_STARTS, Execution::default());
    match s.equilibria.len() {
        1 => Ok(s.equilibria.remove(0)),
        0 if s.negative_discarded > 0 => Err(BoundaryError::NegativeOnly),
        0 => Err(BoundaryError::NoConvergence),
        k => Err(BoundaryError::MultipleDfe(k)),
    }
}

pub fn find_boundary_equilibria(
    net: &ReactionNetwork,
    params: &ParameterAssignment,
    face: &[usize],
) -> Result<EquilibriumSearch, BoundaryError> {
    check_face(net, face)?;
    Ok(System::new(net, params)?.search(face, FACE_STARTS, Execution::default()))
}

fn check_face(net: &ReactionNetwork, face: &[usize]) -> Result<(), BoundaryError> {
    if face.is_empty() {
        return Ok(());
    }
    match is_siphon(net, face) {
        Ok(true) => Ok(()),
        Ok(false) => Err(BoundaryError::NotSiphon(net.names_of(face).join(", "))),
        Err(e) => Err(BoundaryError::Eval(e.to_string())),
    }
}

/// Spectral abscissa of the `W` rows and columns of the Jacobian at `eq`.
pub fn invasion_abscissa(
    net: &ReactionNetwork,
    params: &ParameterAssignment,
    eq: &BoundaryEquilibrium,
    w: &[usize],
) -> Result<f64, BoundaryError> {
    if !w.iter().all(|s| eq.face.contains(s)) {
        return Err(BoundaryError::NotInFace);
    }
    let jac = System::new(net, params)?.jacobian(&eq.values);
    Ok(linalg::spectral_abscissa(&linalg::submatrix(&jac, w, w)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvasionNumber {
    pub block: usize,
    pub species: Vec<String>,
    pub value: f64,
}

/// Reproduction function of every block lying inside the face, evaluated
/// at the equilibrium's resident values.
pub fn invasion_numbers(
    net: &ReactionNetwork,
    params: &ParameterAssignment,
    model: &NgmModel,
    eq: &BoundaryEquilibrium,
) -> Result<Vec<InvasionNumber>, BoundaryError> {
    let mut out = Vec::new();
    for j in 0..model.n_blocks() {
        let b = model.block_species(j);
        if b.iter().all(|s| eq.face.contains(s)) {
            out.push(InvasionNumber {
                block: j,
                species: net.names_of(&b),
                value: model.reproduction_eval(net, j, &eq.values, params)?,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvasionNode {
    pub siphon: SpeciesSet,
    pub names: Vec<String>,
    pub resident: BoundaryEquilibrium,
    /// Number of face equilibria with a positive community.
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvasionEdge {
    pub from: usize,
    pub block: usize,
    pub value: f64,
    /// Node reached by removing the block from the siphon, when it is a node.
    pub to: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvasionGraph {
    pub nodes: Vec<InvasionNode>,
    pub edges: Vec<InvasionEdge>,
    pub blocks: Vec<Vec<String>>,
    pub errors: Vec<String>,
}

/// All siphons contained in the total siphon, the empty set included.
pub fn siphons_within_total(net: &ReactionNetwork) -> Result<Vec<SpeciesSet>, BoundaryError> {
    let ts = total_siphon(net);
    if ts.len() > 20 {
        return Err(BoundaryError::TooManySiphons(usize::MAX));
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << ts.len()) {
        let s: SpeciesSet = (0..ts.len()).filter(|b| mask >> b & 1 == 1).map(|b| ts[b]).collect();
        if s.is_empty() || is_siphon(net, &s).unwrap_or(false) {
            out.push(s);
        }
    }
    if out.len() > MAX_INVASION_SIPHONS {
        return Err(BoundaryError::TooManySiphons(out.len()));
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    Ok(out)
}

pub fn build_invasion_graph(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<InvasionGraph, BoundaryError> {
    let model = NgmModel::new(net)?;
    let sys = System::new(net, params)?;
    let ts = total_siphon(net);
    let candidates = siphons_within_total(net)?;
    let searches = Execution::default().map(&candidates, |s| sys.search(s, FACE_STARTS, Execution::Sequential));
    let mut nodes = Vec::new();
    for (s, search) in candidates.iter().zip(searches) {
        let community: Vec<usize> = ts.iter().copied().filter(|i| !s.contains(i)).collect();
        let residents: Vec<&BoundaryEquilibrium> = search
            .equilibria
            .iter()
            .filter(|e| community.iter().all(|&i| e.values[i] > POSITIVE_TOL))
            .collect();
        if let Some(first) = residents.first() {
            nodes.push(InvasionNode {
                siphon: s.clone(),
                names: net.names_of(s),
                resident: (*first).clone(),
                candidates: residents.len(),
            });
        }
    }
    let mut edges = Vec::new();
    let mut errors = Vec::new();
    for (ni, node) in nodes.iter().enumerate() {
        match invasion_numbers(net, params, &model, &node.resident) {
            Ok(nums) => {
                for inv in nums.into_iter().filter(|v| v.value > 1.0) {
                    let b = model.block_species(inv.block);
                    let target: Vec<usize> = node.siphon.iter().copied().filter(|i| !b.contains(i)).collect();
                    let to = nodes.iter().position(|n| n.siphon == target);
                    edges.push(InvasionEdge { from: ni, block: inv.block, value: inv.value, to });
                }
            }
            Err(e) => errors.push(format!("{{{}}}: {e}", node.names.join(", "))),
        }
    }
    Ok(InvasionGraph {
        nodes,
        edges,
        blocks: (0..model.n_blocks()).map(|j| net.names_of(&model.block_species(j))).collect(),
        errors,
    })
}

impl InvasionGraph {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph invasion {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "  S{i} [label=\"{{{}}}\"];", n.names.join(", "));
        }
        for e in &self.edges {
            let label = format!("T{}: {:.6}", e.block + 1, e.value);
            match e.to {
                Some(t) => {
                    let _ = writeln!(s, "  S{} -> S{} [label=\"{}\"];", e.from, t, label);
                }
                None => {
                    let _ = writeln!(s, "  S{}_T{} [shape=point];\n  S{} -> S{}_T{} [label=\"{}\"];", e.from, e.block + 1, e.from, e.from, e.block + 1, label);
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LcpClassification {
    pub label: String,
    pub r1: f64,
    pub r2: f64,
    /// Invasion number of block 2 at the block-1 equilibrium.
    pub r21: Option<f64>,
    /// Invasion number of block 1 at the block-2 equilibrium.
    pub r12: Option<f64>,
}

fn divisible_by(p: &crate::poly::Polynomial, name: &str) -> bool {
    p.raw_terms().all(|(sig, _)| sig.species.get(name).copied().unwrap_or(0) >= 1)
}

/// Four-region classification for two single-species Lotka-Volterra-type
/// infected blocks.
pub fn lcp_classify(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<LcpClassification, BoundaryError> {
    let model = NgmModel::new(net)?;
    lcp_classify_with(net, params, &model)
}

pub fn lcp_classify_with(
    net: &ReactionNetwork,
    params: &ParameterAssignment,
    model: &NgmModel,
) -> Result<LcpClassification, BoundaryError> {
    if model.n_blocks() != 2 {
        return Err(BoundaryError::NotLvk(format!("{} blocks", model.n_blocks())));
    }
    let rhs = build_rhs(net);
    for j in 0..2 {
        let b = model.block_species(j);
        if b.len() != 1 {
            return Err(BoundaryError::NotLvk(format!("block {} has {} species", j + 1, b.len())));
        }
        if !divisible_by(&rhs[b[0]], &net.species[b[0]]) {
            return Err(BoundaryError::NotLvk(format!("{} equation is not divisible by {}", net.species[b[0]], net.species[b[0]])));
        }
    }
    let sys = System::new(net, params)?;
    let ts = total_siphon(net);
    let mut dfe = sys.search(&ts, DFE_STARTS, Execution::Sequential);
    if dfe.equilibria.len() != 1 {
        return Err(BoundaryError::MultipleDfe(dfe.equilibria.len()));
    }
    let dfe = dfe.equilibria.remove(0);
    let r1 = model.reproduction_eval(net, 0, &dfe.values, params)?;
    let r2 = model.reproduction_eval(net, 1, &dfe.values, params)?;
    let b1 = model.block_species(0);
    let b2 = model.block_species(1);
    let resident = |face: &[usize], pos: usize| -> Option<BoundaryEquilibrium> {
        sys.search(face, FACE_STARTS, Execution::Sequential)
            .equilibria
            .into_iter()
            .find(|e| e.values[pos] > POSITIVE_TOL)
    };
    let r21 = if r1 > 1.0 {
        let e1 = resident(&b2, b1[0]).ok_or(BoundaryError::NoConvergence)?;
        Some(model.reproduction_eval(net, 1, &e1.values, params)?)
    } else {
        None
    };
    let r12 = if r2 > 1.0 {
        let e2 = resident(&b1, b2[0]).ok_or(BoundaryError::NoConvergence)?;
        Some(model.reproduction_eval(net, 0, &e2.values, params)?)
    } else {
        None
    };
    Ok(LcpClassification { label: lcp_label(r1, r2, r21, r12), r1, r2, r21, r12 })
}

/// Region label from the four decision quantities. A missing invasion
/// number means the corresponding single-strain equilibrium does not exist.
pub fn lcp_label(r1: f64, r2: f64, r21: Option<f64>, r12: Option<f64>) -> String {
    let near = |v: f64| (v - 1.0).abs() <= 1e-9;
    if [Some(r1), Some(r2), r21, r12].into_iter().flatten().any(near) {
        return "boundary".into();
    }
    let mut labels = Vec::new();
    if r1.max(r2) <= 1.0 {
        labels.push("DFE stable");
    }
    if r1 > 1.0 && r21.is_some_and(|v| v <= 1.0) {
        labels.push("E1 stable");
    }
    if r2 > 1.0 && r12.is_some_and(|v| v <= 1.0) {
        labels.push("E2 stable");
    }
    if r1 > 1.0 && r2 > 1.0 && r21.is_some_and(|v| v > 1.0) && r12.is_some_and(|v| v > 1.0) {
        labels.push("E* stable");
    }
    if labels.is_empty() {
        "none".into()
    } else {
        labels.join("+")
    }
}
