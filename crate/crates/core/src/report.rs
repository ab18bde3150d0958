//! One-shot analysis bundle. Each section carries either a value or an
//! error, so one failing step never hides the others.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::boundary::{self, BoundaryEquilibrium, InvasionNumber};
use crate::igms::{amsd_check, build_igms, cycles, AmsdVerdict, EdgeRule};
use crate::netio::{build_rhs, stoich, ParameterAssignment, ReactionNetwork, StoichStructure};
use crate::ngm::{me_model_check, CheckItem, NgmModel, NgmResult};
use crate::siphons::{autocatalytic_cores, siphon_reports, total_siphon, CoreSearch, SiphonReport, MAX_CORE_SIZE};
use crate::Execution;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Section<T> {
    pub value: Option<T>,
    pub error: Option<String>,
}

impl<T> Section<T> {
    fn ok(v: T) -> Self {
        Section { value: Some(v), error: None }
    }

    fn err(e: impl ToString) -> Self {
        Section { value: None, error: Some(e.to_string()) }
    }

    fn empty() -> Self {
        Section { value: None, error: None }
    }

    fn from<E: ToString>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Self::ok(v),
            Err(e) => Self::err(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IgmsSummary {
    pub nodes: Vec<Vec<String>>,
    /// (from, to, witnessing reaction labels)
    pub edges: Vec<(usize, usize, Vec<String>)>,
    pub cycles: Vec<Vec<usize>>,
    pub amsd: AmsdVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub variables: Vec<String>,
    pub parameters: Vec<String>,
    pub params: ParameterAssignment,
    pub rhs: BTreeMap<String, String>,
    pub stoichiometry: StoichStructure,
    pub minimal_siphons: Vec<SiphonReport>,
    pub total_siphon: Vec<String>,
    pub igms: IgmsSummary,
    pub cores: CoreSearch,
    pub dfe: Section<BoundaryEquilibrium>,
    pub ngm: Section<NgmResult>,
    pub reproduction_numbers: Section<Vec<InvasionNumber>>,
    pub boundary: Section<Vec<BoundaryEquilibrium>>,
    pub me_checklist: Vec<CheckItem>,
}

pub fn igms_summary(net: &ReactionNetwork, rule: EdgeRule) -> IgmsSummary {
    let amsd = amsd_check(net, rule);
    let graph = build_igms(net, &amsd.siphons, rule);
    let mut pairs = graph.node_edges();
    pairs.sort();
    pairs.dedup();
    IgmsSummary {
        nodes: amsd.siphons.iter().map(|s| net.names_of(s)).collect(),
        edges: pairs
            .into_iter()
            .map(|(a, b)| (a, b, graph.witnesses(a, b).iter().map(|&r| net.reaction_label(r)).collect()))
            .collect(),
        cycles: cycles(&graph),
        amsd,
    }
}

/// Deduplicated equilibria over every nonempty siphon face inside the
/// total siphon.
pub fn boundary_equilibria(net: &ReactionNetwork, params: &ParameterAssignment) -> Result<Vec<BoundaryEquilibrium>, String> {
    let faces: Vec<_> = boundary::siphons_within_total(net)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|f| !f.is_empty())
        .collect();
    let sys = boundary::System::new(net, params).map_err(|e| e.to_string())?;
    let found = Execution::default().map(&faces, |f| sys.search(f, boundary::FACE_STARTS, Execution::Sequential));
    let mut out: Vec<BoundaryEquilibrium> = Vec::new();
    for s in found {
        for e in s.equilibria {
            let dup = out.iter().any(|o| {
                o.values.iter().zip(&e.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= boundary::DEDUP_TOL
            });
            if !dup {
                out.push(e);
            }
        }
    }
    Ok(out)
}

pub fn report(net: &ReactionNetwork, params: &ParameterAssignment) -> Report {
    let ts = total_siphon(net);
    let rhs = build_rhs(net);
    let has_infected = !ts.is_empty();

    let (dfe, ngm, repro, bnd) = if has_infected {
        let dfe = boundary::find_dfe(net, params);
        let model = NgmModel::new(net);
        let ngm = match (&dfe, &model) {
            (Ok(e), Ok(m)) => Section::from(m.at(net, &e.values, params, false)),
            (Err(e), _) => Section::err(format!("no DFE: {e}")),
            (_, Err(e)) => Section::err(e),
        };
        let repro = match (&dfe, &model) {
            (Ok(e), Ok(m)) => Section::from(boundary::invasion_numbers(net, params, m, e)),
            (Err(e), _) => Section::err(format!("no DFE: {e}")),
            (_, Err(e)) => Section::err(e),
        };
        (Section::from(dfe), ngm, repro, Section::from(boundary_equilibria(net, params)))
    } else {
        (Section::empty(), Section::empty(), Section::empty(), Section::empty())
    };

    Report {
        variables: net.species.clone(),
        parameters: net.parameters.clone(),
        params: params.clone(),
        rhs: net.species.iter().cloned().zip(rhs.iter().map(|p| p.to_string())).collect(),
        stoichiometry: stoich(net),
        minimal_siphons: siphon_reports(net, Execution::default()),
        total_siphon: net.names_of(&ts),
        igms: igms_summary(net, EdgeRule::default()),
        cores: autocatalytic_cores(net, MAX_CORE_SIZE),
        dfe,
        ngm,
        reproduction_numbers: repro,
        boundary: bnd,
        me_checklist: if has_infected || net.n_species() > 0 { me_model_check(net, params) } else { Vec::new() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::parse_network;

    #[test]
    fn empty_network_has_no_errors() {
        let net = parse_network("").unwrap();
        let r = report(&net, &ParameterAssignment::default());
        assert!(r.minimal_siphons.is_empty());
        assert!(r.dfe.error.is_none() && r.ngm.error.is_none() && r.boundary.error.is_none());
        assert!(r.me_checklist.is_empty());
    }
}
