//! ODE integration (Dormand-Prince 5(4)), persistence diagnostics, and
//! two-parameter classification scans.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::boundary::{lcp_classify_with, Classification, System, DFE_STARTS, FACE_STARTS};
use crate::netio::{build_rhs, ParameterAssignment, ReactionNetwork};
use crate::ngm::NgmModel;
use crate::poly::CompiledPoly;
use crate::siphons::{minimal_siphons, total_siphon};
use crate::Execution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("initial state has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("initial state must be nonnegative")]
    NegativeStart,
    #[error("t_end must be positive")]
    BadHorizon,
    #[error("step size underflow at t = {0}; the system is likely stiff, try looser tolerances or a shorter horizon")]
    StepUnderflow(f64),
    #[error("step limit of {0} reached")]
    TooManySteps(usize),
    #[error("initial state lies on the boundary")]
    BoundaryStart,
    #[error("{0}")]
    Eval(String),
    #[error("bad axis `{0}`: expected name:lo:hi:n")]
    BadAxis(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Output times; defaults to 1001 uniform points on [0, t_end].
    pub grid: Option<Vec<f64>>,
    /// Fixed step size instead of adaptive control.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { rtol: 1e-8, atol: 1e-10, grid: None, fixed_step: None, max_steps: 10_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub species: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend(self.species.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut rec = vec![fmt17(*t)];
            rec.extend(x.iter().map(|v| fmt17(*v)));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

/// Shortest round-trip representation, capped at 17 significant digits.
pub fn fmt17(v: f64) -> String {
    let s = format!("{v:.16e}");
    s.parse::<f64>().map(|p| if p == v { format!("{v}") } else { s.clone() }).unwrap_or(s)
}

// Dormand-Prince coefficients
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Stepper<'a, F> {
    f: &'a F,
    n: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl<'a, F: Fn(&[f64], &mut [f64])> Stepper<'a, F> {
    fn new(f: &'a F, n: usize) -> Self {
        Stepper { f, n, k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }

    /// One step from y with k[0] = f(y) already set. Writes the new state
    /// into `y1`, the error estimate into `err`, and leaves f(y1) in k[6].
    fn step(&mut self, y: &[f64], h: f64, y1: &mut [f64], err: &mut [f64]) {
        let n = self.n;
        let combos: [&[f64]; 5] = [
            &[A21],
            &[A31, A32],
            &[A41, A42, A43],
            &[A51, A52, A53, A54],
            &[A61, A62, A63, A64, A65],
        ];
        for (s, a) in combos.iter().enumerate() {
            for i in 0..n {
                let mut acc = y[i];
                for (j, &aj) in a.iter().enumerate() {
                    acc += h * aj * self.k[j][i];
                }
                self.tmp[i] = acc;
            }
            let (_, rest) = self.k.split_at_mut(s + 1);
            (self.f)(&self.tmp, &mut rest[0]);
        }
        for i in 0..n {
            y1[i] = y[i]
                + h * (A71 * self.k[0][i] + A73 * self.k[2][i] + A74 * self.k[3][i] + A75 * self.k[4][i] + A76 * self.k[5][i]);
        }
        let (_, last) = self.k.split_at_mut(6);
        (self.f)(y1, &mut last[0]);
        for i in 0..n {
            err[i] = h
                * (E1 * self.k[0][i] + E3 * self.k[2][i] + E4 * self.k[3][i] + E5 * self.k[4][i] + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
        }
    }

    /// Continuous extension on [t, t + h] at fraction `theta`.
    fn dense(&self, y0: &[f64], y1: &[f64], h: f64, theta: f64, out: &mut [f64]) {
        let t1 = 1.0 - theta;
        for i in 0..self.n {
            let diff = y1[i] - y0[i];
            let bspl = h * self.k[0][i] - diff;
            let r4 = diff - h * self.k[6][i] - bspl;
            let r5 = h
                * (D1 * self.k[0][i] + D3 * self.k[2][i] + D4 * self.k[3][i] + D5 * self.k[4][i] + D6 * self.k[5][i]
                    + D7 * self.k[6][i]);
            out[i] = y0[i] + theta * (diff + t1 * (bspl + theta * (r4 + t1 * r5)));
        }
    }
}

fn err_norm(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub steps: usize,
    pub rejected: usize,
}

/// Integrate `y' = f(y)` from `y0` at t = 0, reporting states at `grid`
/// (increasing, starting at or after 0).
pub fn integrate<F>(f: &F, y0: &[f64], grid: &[f64], opts: &SimOptions) -> Result<(Vec<Vec<f64>>, StepStats), SimError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y0.len();
    let t_end = grid.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(grid.len());
    let mut gi = 0;
    while gi < grid.len() && grid[gi] <= 0.0 {
        out.push(y0.to_vec());
        gi += 1;
    }
    let mut st = Stepper::new(f, n);
    let mut y = y0.to_vec();
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut dense = vec![0.0; n];
    f(&y, &mut st.k[0]);
    let mut t = 0.0;
    let mut stats = StepStats::default();
    let mut h = match opts.fixed_step {
        Some(h) => h,
        None => initial_step(f, &y, &st.k[0], opts),
    };
    let mut last_rejected = false;
    while t < t_end && gi < grid.len() {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(SimError::TooManySteps(opts.max_steps));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) && t + h < t_end {
            return Err(SimError::StepUnderflow(t));
        }
        st.step(&y, h, &mut y1, &mut err);
        let e = if opts.fixed_step.is_some() { 0.0 } else { err_norm(&err, &y, &y1, opts.rtol, opts.atol) };
        if !e.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }
        if e <= 1.0 {
            let t_new = if t + h >= t_end { t_end } else { t + h };
            while gi < grid.len() && grid[gi] <= t_new {
                let theta = if h > 0.0 { ((grid[gi] - t) / h).clamp(0.0, 1.0) } else { 1.0 };
                if theta >= 1.0 {
                    dense.copy_from_slice(&y1);
                } else {
                    st.dense(&y, &y1, h, theta, &mut dense);
                }
                project(&mut dense, opts.atol);
                out.push(dense.clone());
                gi += 1;
            }
            let clipped = project(&mut y1, opts.atol);
            std::mem::swap(&mut y, &mut y1);
            // FSAL: f(y_new) is in k[6] unless the projection moved y
            if clipped {
                f(&y, &mut st.k[0]);
            } else {
                let (first, rest) = st.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
            t = t_new;
            stats.steps += 1;
            if opts.fixed_step.is_none() {
                let fac = if e == 0.0 { 10.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 10.0) };
                h *= if last_rejected { fac.min(1.0) } else { fac };
            }
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
            last_rejected = true;
        }
    }
    while out.len() < grid.len() {
        out.push(y.clone());
    }
    Ok((out, stats))
}

fn project(y: &mut [f64], atol: f64) -> bool {
    let mut changed = false;
    for v in y.iter_mut() {
        if *v < 0.0 && *v >= -atol {
            *v = 0.0;
            changed = true;
        }
    }
    changed
}

fn initial_step<F: Fn(&[f64], &mut [f64])>(f: &F, y: &[f64], dy: &[f64], opts: &SimOptions) -> f64 {
    let n = y.len().max(1) as f64;
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (dy.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(dy).map(|(a, b)| a + h0 * b).collect();
    let mut dy1 = vec![0.0; y.len()];
    f(&y1, &mut dy1);
    let d2 = (dy1.iter().zip(dy).zip(&sc).map(|((a, b), s)| ((a - b) / s).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

pub struct CompiledRhs {
    rhs: Vec<CompiledPoly>,
}

impl CompiledRhs {
    pub fn new(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<Self, SimError> {
        let idx = net.index_map();
        let pm = params.as_map();
        let rhs = build_rhs(net)
            .iter()
            .map(|p| p.compile(&idx, &pm))
            .collect::<Result<Vec<_>, _>>()
            .map_err(SimError::Eval)?;
        Ok(CompiledRhs { rhs })
    }

    pub fn eval(&self, y: &[f64], dy: &mut [f64]) {
        for (d, p) in dy.iter_mut().zip(&self.rhs) {
            *d = p.eval(y);
        }
    }
}

pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

pub fn simulate(
    net: &ReactionNetwork,
    params: &ParameterAssignment,
    x0: &[f64],
    t_end: f64,
    opts: &SimOptions,
) -> Result<Trajectory, SimError> {
    if x0.len() != net.n_species() {
        return Err(SimError::Dimension { expected: net.n_species(), got: x0.len() });
    }
    if x0.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(SimError::NegativeStart);
    }
    if t_end <= 0.0 || !t_end.is_finite() {
        return Err(SimError::BadHorizon);
    }
    let rhs = CompiledRhs::new(net, params)?;
    let grid = match &opts.grid {
        Some(g) => g.iter().copied().filter(|&t| t <= t_end).collect(),
        None => uniform_grid(t_end, 1001),
    };
    let f = |y: &[f64], dy: &mut [f64]| rhs.eval(y, dy);
    let (states, stats) = integrate(&f, x0, &grid, opts)?;
    Ok(Trajectory { species: net.species.clone(), times: grid, states, steps: stats.steps, rejected: stats.rejected })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PersistentLike,
    NonpersistentLike,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PersistenceThresholds {
    pub slope: f64,
    pub extinct_level: f64,
    pub persistent_level: f64,
}

impl Default for PersistenceThresholds {
    fn default() -> Self {
        PersistenceThresholds { slope: 1e-4, extinct_level: 1e-6, persistent_level: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersistenceReport {
    pub min_trace: Vec<f64>,
    pub tail_slope: f64,
    pub final_min: f64,
    pub window_min: f64,
    pub verdict: Verdict,
}

pub fn persistence_diagnostic(traj: &Trajectory, window_fraction: f64) -> Result<PersistenceReport, SimError> {
    persistence_diagnostic_with(traj, window_fraction, PersistenceThresholds::default())
}

pub fn persistence_diagnostic_with(
    traj: &Trajectory,
    window_fraction: f64,
    th: PersistenceThresholds,
) -> Result<PersistenceReport, SimError> {
    let first = traj.states.first().ok_or(SimError::BadHorizon)?;
    if first.iter().any(|&v| v <= 0.0) {
        return Err(SimError::BoundaryStart);
    }
    let mins: Vec<f64> = traj.states.iter().map(|x| x.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let min_trace: Vec<f64> = mins.iter().map(|m| m.max(1e-300).log10()).collect();
    let t0 = traj.times[0];
    let t1 = *traj.times.last().unwrap();
    let cut = t1 - window_fraction.clamp(0.0, 1.0) * (t1 - t0);
    let idx: Vec<usize> = (0..traj.times.len()).filter(|&i| traj.times[i] >= cut).collect();
    let tail_slope = ls_slope(idx.iter().map(|&i| (traj.times[i], min_trace[i])));
    let final_min = *mins.last().unwrap();
    let window_min = idx.iter().map(|&i| mins[i]).fold(f64::INFINITY, f64::min);
    let verdict = if tail_slope < -th.slope && final_min < th.extinct_level {
        Verdict::NonpersistentLike
    } else if window_min > th.persistent_level && tail_slope.abs() < th.slope {
        Verdict::PersistentLike
    } else {
        Verdict::Inconclusive
    };
    Ok(PersistenceReport { min_trace, tail_slope, final_min, window_min, verdict })
}

fn ls_slope<I: Iterator<Item = (f64, f64)>>(pts: I) -> f64 {
    let pts: Vec<(f64, f64)> = pts.collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl FromStr for ScanAxis {
    type Err = SimError;

    /// `name:lo:hi:n`
    fn from_str(s: &str) -> Result<Self, SimError> {
        let bad = || SimError::BadAxis(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let [name, lo, hi, n] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 || name.is_empty() {
            return Err(bad());
        }
        Ok(ScanAxis::linspace(name, lo, hi, n))
    }
}

impl ScanAxis {
    pub fn linspace(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        let values = if n == 1 { vec![lo] } else { (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect() };
        ScanAxis { name: name.to_string(), values }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classifier {
    /// Four-region two-strain classification.
    Lcp,
    /// Set of stable equilibria on the DFE face and minimal-siphon faces.
    Generic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub axes: [ScanAxis; 2],
    /// `cells[i][j]` is the label at `(axes[0].values[i], axes[1].values[j])`.
    pub cells: Vec<Vec<String>>,
    pub legend: BTreeMap<String, String>,
    pub classifier: Classifier,
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([self.axes[0].name.as_str(), self.axes[1].name.as_str(), "label"]).expect("in-memory write");
        for (i, a) in self.axes[0].values.iter().enumerate() {
            for (j, b) in self.axes[1].values.iter().enumerate() {
                w.write_record([fmt17(*a), fmt17(*b), self.cells[i][j].clone()]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

fn legend_for(label: &str, classifier: Classifier) -> String {
    match (classifier, label) {
        (_, "error") => "classifier failed in this cell".into(),
        (Classifier::Lcp, "DFE stable") => "both reproduction numbers at most 1".into(),
        (Classifier::Lcp, "E1 stable") => "strain 1 persists and strain 2 cannot invade it".into(),
        (Classifier::Lcp, "E2 stable") => "strain 2 persists and strain 1 cannot invade it".into(),
        (Classifier::Lcp, "E* stable") => "each strain invades the other: coexistence".into(),
        (Classifier::Lcp, "boundary") => "a decision quantity is within 1e-9 of 1".into(),
        (Classifier::Generic, "none") => "no stable boundary equilibrium".into(),
        (_, l) if l.contains('+') => "several regions at once".into(),
        (Classifier::Generic, l) => format!("stable boundary equilibria with positive support {l}"),
        (Classifier::Lcp, _) => "no region condition holds".into(),
    }
}

/// Label a cell by the supports of stable equilibria on the DFE face and on
/// every minimal-siphon face.
pub fn generic_label(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<String, String> {
    let sys = System::new(net, params).map_err(|e| e.to_string())?;
    let mut faces = minimal_siphons(net);
    let ts = total_siphon(net);
    if !ts.is_empty() && !faces.contains(&ts) {
        faces.push(ts.clone());
    }
    let mut stable: Vec<String> = Vec::new();
    for face in &faces {
        let starts = if *face == ts { DFE_STARTS } else { FACE_STARTS };
        for e in sys.search(face, starts, Execution::Sequential).equilibria {
            if e.classification == Classification::Stable {
                let label = format!("{{{}}}", net.names_of(&e.support()).join(","));
                if !stable.contains(&label) {
                    stable.push(label);
                }
            }
        }
    }
    stable.sort();
    Ok(if stable.is_empty() { "none".into() } else { stable.join("+") })
}

pub fn scan(
    net: &ReactionNetwork,
    base: &ParameterAssignment,
    axis1: &ScanAxis,
    axis2: &ScanAxis,
    classifier: Classifier,
    exec: Execution,
) -> Result<ScanResult, SimError> {
    for a in [axis1, axis2] {
        if !net.parameters.contains(&a.name) {
            return Err(SimError::UnknownParameter(a.name.clone()));
        }
    }
    let model = NgmModel::new(net).ok();
    let cells_idx: Vec<(usize, usize)> =
        (0..axis1.values.len()).flat_map(|i| (0..axis2.values.len()).map(move |j| (i, j))).collect();
    let labels = exec.map(&cells_idx, |&(i, j)| {
        let p = base.with(&axis1.name, axis1.values[i]).with(&axis2.name, axis2.values[j]);
        match classifier {
            Classifier::Lcp => match &model {
                Some(m) => lcp_classify_with(net, &p, m).map(|c| c.label).unwrap_or_else(|_| "error".into()),
                None => "error".into(),
            },
            Classifier::Generic => generic_label(net, &p).unwrap_or_else(|_| "error".into()),
        }
    });
    let mut cells = vec![vec![String::new(); axis2.values.len()]; axis1.values.len()];
    let mut legend = BTreeMap::new();
    for ((i, j), l) in cells_idx.into_iter().zip(labels) {
        legend.entry(l.clone()).or_insert_with(|| legend_for(&l, classifier));
        cells[i][j] = l;
    }
    Ok(ScanResult { axes: [axis1.clone(), axis2.clone()], cells, legend, classifier })
}
