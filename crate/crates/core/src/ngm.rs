//! Next-generation matrices: Jacobian blocks, the algorithmic F/V splitting,
//! K = F V^-1, block reproduction numbers and the ME-model checklist.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::igms::{amsd_check, AmsdVerdict, EdgeRule};
use crate::linalg::{self, Mat, EIG_RTOL, SIGN_TOL};
use crate::netio::{build_rhs, stoich, ParameterAssignment, ReactionNetwork};
use crate::poly::{CompiledPoly, Polynomial};
use crate::siphons::{total_siphon, SpeciesSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NgmError {
    #[error("no infected variables: the total siphon is empty")]
    EmptyInfected,
    #[error("V is singular at the evaluation point")]
    Singular,
    #[error("splitting is not regular at the evaluation point: {}", .0.join("; "))]
    NotRegular(Vec<String>),
    #[error("block {0} out of range")]
    BadBlock(usize),
    #[error("{0}")]
    Eval(String),
}

/// Infected (`x`) and resident (`y`) species, as indices into the network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VariableSplit {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

impl VariableSplit {
    /// `y` is the complement of `x` in network order.
    pub fn new(net: &ReactionNetwork, x: Vec<usize>) -> Self {
        let y = (0..net.n_species()).filter(|i| !x.contains(i)).collect();
        VariableSplit { x, y }
    }
}

/// Split on the total siphon, ordered by the AMSD topological order when
/// the decomposition holds. Blocks are ranges of positions in `x`.
pub fn infer_split(net: &ReactionNetwork) -> (VariableSplit, Vec<Vec<usize>>, AmsdVerdict) {
    let amsd = amsd_check(net, EdgeRule::default());
    let (x, blocks) = match (amsd.holds(), amsd.blocks()) {
        (true, Some(bl)) => {
            let mut x = Vec::new();
            let mut pos = Vec::new();
            for b in bl {
                pos.push((x.len()..x.len() + b.len()).collect());
                x.extend(b);
            }
            (x, pos)
        }
        _ => {
            let x: SpeciesSet = total_siphon(net);
            let all = (0..x.len()).collect::<Vec<_>>();
            (x, if all.is_empty() { vec![] } else { vec![all] })
        }
    };
    (VariableSplit::new(net, x), blocks, amsd)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub entries: Vec<Vec<Polynomial>>,
}

impl Serialize for PolyMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let text: Vec<Vec<String>> =
            self.entries.iter().map(|r| r.iter().map(|p| p.to_string()).collect()).collect();
        let mut st = s.serialize_struct("PolyMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("entries", &text)?;
        st.end()
    }
}

impl PolyMatrix {
    pub fn compile(&self, idx: &HashMap<String, usize>, params: &HashMap<String, f64>) -> Result<CompiledMatrix, String> {
        let cells = self
            .entries
            .iter()
            .map(|r| r.iter().map(|p| p.compile(idx, params)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledMatrix { nrows: self.rows.len(), ncols: self.cols.len(), cells })
    }

    pub fn sub(&self, other: &PolyMatrix) -> PolyMatrix {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p.sub(q)).collect())
            .collect();
        PolyMatrix { rows: self.rows.clone(), cols: self.cols.clone(), entries }
    }
}

pub struct CompiledMatrix {
    nrows: usize,
    ncols: usize,
    cells: Vec<Vec<CompiledPoly>>,
}

impl CompiledMatrix {
    pub fn eval(&self, x: &[f64]) -> Mat {
        Mat::from_fn(self.nrows, self.ncols, |i, j| self.cells[i][j].eval(x))
    }
}

fn jac(rhs: &[Polynomial], net: &ReactionNetwork, rows: &[usize], cols: &[usize]) -> PolyMatrix {
    PolyMatrix {
        rows: net.names_of(rows),
        cols: net.names_of(cols),
        entries: rows
            .iter()
            .map(|&i| cols.iter().map(|&j| rhs[i].diff_species(&net.species[j])).collect())
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JacobianBlocks {
    pub jx: PolyMatrix,
    pub jy: PolyMatrix,
    pub jxy: PolyMatrix,
    pub jyx: PolyMatrix,
}

pub fn jacobian_blocks(net: &ReactionNetwork, split: &VariableSplit) -> JacobianBlocks {
    let rhs = build_rhs(net);
    JacobianBlocks {
        jx: jac(&rhs, net, &split.x, &split.x),
        jy: jac(&rhs, net, &split.y, &split.y),
        jxy: jac(&rhs, net, &split.x, &split.y),
        jyx: jac(&rhs, net, &split.y, &split.x),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Splitting {
    pub f: PolyMatrix,
    pub v: PolyMatrix,
}

/// F collects, for each infected row, the positive terms of reactions that
/// produce that species from a resident reactant or from no infected
/// reactant at all, differentiated in `x`. V is F minus Jx.
pub fn algorithmic_fv(net: &ReactionNetwork, split: &VariableSplit) -> Result<Splitting, NgmError> {
    if split.x.is_empty() {
        return Err(NgmError::EmptyInfected);
    }
    let st = stoich(net);
    let rhs = build_rhs(net);
    let jx = jac(&rhs, net, &split.x, &split.x);
    let mut entries = Vec::with_capacity(split.x.len());
    for &xi in &split.x {
        let mut gain = Polynomial::zero();
        for (r, rx) in net.reactions.iter().enumerate() {
            let g = st.gamma[xi][r];
            if g <= 0 {
                continue;
            }
            let from_resident = split.y.iter().any(|s| rx.reactants.contains_key(s));
            let no_infected = !split.x.iter().any(|s| rx.reactants.contains_key(s));
            if from_resident || no_infected {
                gain = gain.add(&rx.rate.scale(&crate::lp::q(g)));
            }
        }
        let gain = gain.positive_part();
        entries.push(split.x.iter().map(|&xj| gain.diff_species(&net.species[xj])).collect());
    }
    let f = PolyMatrix { rows: jx.rows.clone(), cols: jx.cols.clone(), entries };
    let v = f.sub(&jx);
    Ok(Splitting { f, v })
}

pub fn metzler_check(m: &Mat) -> bool {
    linalg::is_metzler(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub singular: bool,
    pub violations: Vec<String>,
}

/// Numeric regular-splitting gate on evaluated F and V.
pub fn regular_splitting_check(f: &Mat, v: &Mat, labels: &[String]) -> (RegularityReport, Option<Mat>) {
    let mut violations = Vec::new();
    for i in 0..f.nrows() {
        for j in 0..f.ncols() {
            if f[(i, j)] < -SIGN_TOL {
                violations.push(format!("F[{},{}] = {:e} < 0", labels[i], labels[j], f[(i, j)]));
            }
        }
    }
    let inv = linalg::inverse(v);
    match &inv {
        None => violations.push("V is singular".into()),
        Some(vi) => {
            for i in 0..vi.nrows() {
                for j in 0..vi.ncols() {
                    if vi[(i, j)] < -SIGN_TOL {
                        violations.push(format!("V^-1[{},{}] = {:e} < 0", labels[i], labels[j], vi[(i, j)]));
                    }
                }
            }
        }
    }
    (RegularityReport { regular: violations.is_empty(), singular: inv.is_none(), violations }, inv)
}

/// Polynomial structure of a network's NGM, built once and evaluated at
/// many points.
#[derive(Clone, Debug, Serialize)]
pub struct NgmModel {
    pub split: VariableSplit,
    /// Blocks as position lists into `split.x`.
    pub blocks: Vec<Vec<usize>>,
    pub jacobian: JacobianBlocks,
    pub splitting: Splitting,
    pub amsd_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NgmResult {
    pub species: Vec<String>,
    pub point: Vec<f64>,
    pub params: ParameterAssignment,
    pub x_vars: Vec<String>,
    pub y_vars: Vec<String>,
    pub f: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
    pub kd: Option<Vec<Vec<f64>>>,
    pub blocks: Vec<Vec<String>>,
    pub rho_per_block: Vec<f64>,
    /// Blocks whose spectral radius is attained by more than one eigenvalue.
    pub peripheral_multiple: Vec<bool>,
    pub r0: f64,
    pub rho_kd: f64,
    pub similarity_ok: bool,
    pub is_block_lower_triangular: bool,
    pub is_triangular: bool,
    pub splitting_regular: bool,
    pub jx: Vec<Vec<f64>>,
    pub jy: Vec<Vec<f64>>,
}

impl NgmResult {
    pub fn k_matrix(&self) -> Mat {
        let n = self.k.len();
        Mat::from_fn(n, n, |i, j| self.k[i][j])
    }
}

fn triangular(k: &Mat) -> bool {
    let n = k.nrows();
    let lower = (0..n).all(|i| (i + 1..n).all(|j| k[(i, j)].abs() < SIGN_TOL));
    let upper = (0..n).all(|i| (0..i).all(|j| k[(i, j)].abs() < SIGN_TOL));
    lower || upper
}

impl NgmModel {
    pub fn new(net: &ReactionNetwork) -> Result<Self, NgmError> {
        let (split, blocks, amsd) = infer_split(net);
        Self::with_split(net, split, blocks, amsd.holds())
    }

    pub fn with_split(
        net: &ReactionNetwork,
        split: VariableSplit,
        blocks: Vec<Vec<usize>>,
        amsd_holds: bool,
    ) -> Result<Self, NgmError> {
        let splitting = algorithmic_fv(net, &split)?;
        let jacobian = jacobian_blocks(net, &split);
        Ok(NgmModel { split, blocks, jacobian, splitting, amsd_holds })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block of infected species names.
    pub fn block_species(&self, j: usize) -> Vec<usize> {
        self.blocks[j].iter().map(|&p| self.split.x[p]).collect()
    }

    /// Evaluated F and V at a full species vector.
    pub fn fv_at(&self, net: &ReactionNetwork, point: &[f64], params: &HashMap<String, f64>) -> Result<(Mat, Mat), NgmError> {
        let idx = net.index_map();
        let f = self.splitting.f.compile(&idx, params).map_err(NgmError::Eval)?.eval(point);
        let v = self.splitting.v.compile(&idx, params).map_err(NgmError::Eval)?.eval(point);
        Ok((f, v))
    }

    /// NGM at a point. Refuses when the splitting is not regular there.
    pub fn at(
        &self,
        net: &ReactionNetwork,
        point: &[f64],
        params: &ParameterAssignment,
        with_kd: bool,
    ) -> Result<NgmResult, NgmError> {
        let pm = params.as_map();
        let idx = net.index_map();
        let (f, v) = self.fv_at(net, point, &pm)?;
        let (report, inv) = regular_splitting_check(&f, &v, &self.splitting.f.rows);
        if report.singular {
            return Err(NgmError::Singular);
        }
        if !report.regular {
            return Err(NgmError::NotRegular(report.violations));
        }
        let vi = inv.expect("checked above");
        let k = &f * &vi;
        let kd = &vi * &f;
        let r0 = linalg::spectral_radius(&k);
        let rho_kd = linalg::spectral_radius(&kd);
        let similarity_ok = (r0 - rho_kd).abs() <= EIG_RTOL * r0.max(rho_kd).max(1.0);

        let mut rho_per_block = Vec::new();
        let mut peripheral_multiple = Vec::new();
        for b in &self.blocks {
            let kb = linalg::submatrix(&k, b, b);
            rho_per_block.push(linalg::spectral_radius(&kb));
            peripheral_multiple.push(linalg::spectral_radius(&kb) > 0.0 && linalg::peripheral_count(&kb) > 1);
        }
        let block_of: Vec<usize> = (0..k.nrows())
            .map(|p| self.blocks.iter().position(|b| b.contains(&p)).unwrap_or(0))
            .collect();
        let is_block_lower_triangular = (0..k.nrows())
            .all(|i| (0..k.ncols()).all(|j| block_of[j] <= block_of[i] || k[(i, j)].abs() < SIGN_TOL));

        let jx = self.jacobian.jx.compile(&idx, &pm).map_err(NgmError::Eval)?.eval(point);
        let jy = self.jacobian.jy.compile(&idx, &pm).map_err(NgmError::Eval)?.eval(point);
        Ok(NgmResult {
            species: net.species.clone(),
            point: point.to_vec(),
            params: params.clone(),
            x_vars: net.names_of(&self.split.x),
            y_vars: net.names_of(&self.split.y),
            f: linalg::to_rows(&f),
            v: linalg::to_rows(&v),
            is_triangular: triangular(&k),
            k: linalg::to_rows(&k),
            kd: with_kd.then(|| linalg::to_rows(&kd)),
            blocks: (0..self.blocks.len()).map(|j| net.names_of(&self.block_species(j))).collect(),
            rho_per_block,
            peripheral_multiple,
            r0,
            rho_kd,
            similarity_ok,
            is_block_lower_triangular,
            splitting_regular: true,
            jx: linalg::to_rows(&jx),
            jy: linalg::to_rows(&jy),
        })
    }

    /// Spectral radius of block `j` of K at `x = 0`, residents from `point`.
    pub fn reproduction_eval(
        &self,
        net: &ReactionNetwork,
        j: usize,
        point: &[f64],
        params: &ParameterAssignment,
    ) -> Result<f64, NgmError> {
        let b = self.blocks.get(j).ok_or(NgmError::BadBlock(j))?;
        let mut p = point.to_vec();
        for &xi in &self.split.x {
            p[xi] = 0.0;
        }
        let (f, v) = self.fv_at(net, &p, &params.as_map())?;
        let (report, inv) = regular_splitting_check(&f, &v, &self.splitting.f.rows);
        if report.singular {
            return Err(NgmError::Singular);
        }
        if !report.regular {
            return Err(NgmError::NotRegular(report.violations));
        }
        let k = &f * &inv.expect("checked above");
        Ok(linalg::spectral_radius(&linalg::submatrix(&k, b, b)))
    }
}

pub fn ngm_at(
    net: &ReactionNetwork,
    point: &[f64],
    params: &ParameterAssignment,
) -> Result<NgmResult, NgmError> {
    NgmModel::new(net)?.at(net, point, params, false)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Reactions whose stoichiometric column is nonnegative and nonzero while
/// consuming something.
pub fn hidden_inflows(net: &ReactionNetwork) -> Vec<usize> {
    let st = stoich(net);
    (0..net.n_reactions())
        .filter(|&r| {
            let col = st.column(r);
            !net.reactions[r].reactants.is_empty() && col.iter().all(|&g| g >= 0) && col.iter().any(|&g| g != 0)
        })
        .collect()
}

pub fn me_model_check(net: &ReactionNetwork, params: &ParameterAssignment) -> Vec<CheckItem> {
    let mut out = Vec::new();
    let ts = total_siphon(net);
    out.push(CheckItem {
        name: "total-siphon-nonempty",
        passed: !ts.is_empty(),
        detail: format!("{{{}}}", net.names_of(&ts).join(", ")),
    });
    let dfe = crate::boundary::find_dfe(net, params);
    let model = NgmModel::new(net);
    let pm = params.as_map();
    let idx = net.index_map();
    match &dfe {
        Ok(e) => out.push(CheckItem { name: "dfe-exists", passed: true, detail: format!("{:?}", e.values) }),
        Err(e) => out.push(CheckItem { name: "dfe-exists", passed: false, detail: e.to_string() }),
    }
    let fail = |name: &'static str, why: &str| CheckItem { name, passed: false, detail: why.to_string() };
    match (&dfe, &model) {
        (Ok(e), Ok(m)) => {
            let jy = m.jacobian.jy.compile(&idx, &pm).map(|c| c.eval(&e.values));
            let jx = m.jacobian.jx.compile(&idx, &pm).map(|c| c.eval(&e.values));
            match jy {
                Ok(jy) => {
                    let a = linalg::spectral_abscissa(&jy);
                    out.push(CheckItem { name: "jy-hurwitz", passed: a < -1e-9 || jy.is_empty(), detail: format!("abscissa {a:e}") });
                }
                Err(err) => out.push(fail("jy-hurwitz", &err)),
            }
            match jx {
                Ok(jx) => out.push(CheckItem { name: "jx-metzler", passed: metzler_check(&jx), detail: String::new() }),
                Err(err) => out.push(fail("jx-metzler", &err)),
            }
            match m.fv_at(net, &e.values, &pm) {
                Ok((f, v)) => {
                    let (rep, _) = regular_splitting_check(&f, &v, &m.splitting.f.rows);
                    out.push(CheckItem { name: "splitting-regular", passed: rep.regular, detail: rep.violations.join("; ") });
                }
                Err(err) => out.push(fail("splitting-regular", &err.to_string())),
            }
        }
        (Err(_), _) => {
            for n in ["jy-hurwitz", "jx-metzler", "splitting-regular"] {
                out.push(fail(n, "no DFE"));
            }
        }
        (_, Err(err)) => {
            for n in ["jy-hurwitz", "jx-metzler", "splitting-regular"] {
                out.push(fail(n, &err.to_string()));
            }
        }
    }
    let hir = hidden_inflows(net);
    out.push(CheckItem {
        name: "no-hidden-inflows",
        passed: hir.is_empty(),
        detail: hir.iter().map(|&r| net.reaction_label(r)).collect::<Vec<_>>().join("; "),
    });
    out
}
