//! Interaction graph on minimal siphons, its elementary cycles, and the
//! acyclic-decomposition check that yields a block-triangular NGM ordering.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::netio::ReactionNetwork;
use crate::siphons::{is_critical, minimal_siphons, total_siphon, SpeciesSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// Reaction consumes a species of the source and has positive net
    /// production of a species of the target.
    #[default]
    NetProducing,
    /// Reaction consumes a species of the source and lists a species of the
    /// target among its products.
    Touching,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub reaction: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IgmsGraph {
    pub nodes: Vec<SpeciesSet>,
    pub edges: Vec<Edge>,
    pub edge_rule: EdgeRule,
}

pub fn edge_witnessed(net: &ReactionNetwork, from: &[usize], to: &[usize], r: usize, rule: EdgeRule) -> bool {
    let rx = &net.reactions[r];
    rx.consumes(from)
        && match rule {
            EdgeRule::NetProducing => to.iter().any(|&s| rx.net(s) > 0),
            EdgeRule::Touching => rx.produces_any(to),
        }
}

pub fn build_igms(net: &ReactionNetwork, siphons: &[SpeciesSet], rule: EdgeRule) -> IgmsGraph {
    let mut edges = Vec::new();
    for (i, a) in siphons.iter().enumerate() {
        for (j, b) in siphons.iter().enumerate() {
            if i == j {
                continue;
            }
            for r in 0..net.n_reactions() {
                if edge_witnessed(net, a, b, r, rule) {
                    edges.push(Edge { from: i, to: j, reaction: r });
                }
            }
        }
    }
    IgmsGraph { nodes: siphons.to_vec(), edges, edge_rule: rule }
}

impl IgmsGraph {
    /// Deduplicated successor lists.
    pub fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.from].insert(e.to);
        }
        adj
    }

    pub fn node_edges(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.from, e.to)).collect();
        v.dedup();
        v
    }

    pub fn witnesses(&self, from: usize, to: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.from == from && e.to == to).map(|e| e.reaction).collect()
    }

    pub fn to_dot(&self, net: &ReactionNetwork) -> String {
        let mut s = String::from("digraph igms {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "  T{} [label=\"T{}: {{{}}}\"];", i + 1, i + 1, net.names_of(n).join(", "));
        }
        let mut pairs = self.node_edges();
        pairs.sort();
        pairs.dedup();
        for (a, b) in pairs {
            let w: Vec<String> = self.witnesses(a, b).iter().map(|r| format!("r{r}")).collect();
            let _ = writeln!(s, "  T{} -> T{} [label=\"{}\"];", a + 1, b + 1, w.join(","));
        }
        s.push_str("}\n");
        s
    }
}

/// Elementary cycles by Johnson's algorithm. Each cycle starts at its
/// smallest node; the list is sorted.
pub fn cycles(graph: &IgmsGraph) -> Vec<Vec<usize>> {
    let adj = graph.adjacency();
    let n = adj.len();
    let mut out = Vec::new();
    for s in 0..n {
        let mut blocked = vec![false; n];
        let mut bmap: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut stack = Vec::new();
        circuit(s, s, &adj, &mut blocked, &mut bmap, &mut stack, &mut out);
    }
    out.sort();
    out
}

fn unblock(u: usize, blocked: &mut [bool], bmap: &mut [BTreeSet<usize>]) {
    blocked[u] = false;
    let ws: Vec<usize> = std::mem::take(&mut bmap[u]).into_iter().collect();
    for w in ws {
        if blocked[w] {
            unblock(w, blocked, bmap);
        }
    }
}

fn circuit(
    v: usize,
    s: usize,
    adj: &[BTreeSet<usize>],
    blocked: &mut Vec<bool>,
    bmap: &mut Vec<BTreeSet<usize>>,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) -> bool {
    let mut found = false;
    stack.push(v);
    blocked[v] = true;
    for &w in adj[v].iter().filter(|&&w| w >= s) {
        if w == s {
            out.push(stack.clone());
            found = true;
        } else if !blocked[w] && circuit(w, s, adj, blocked, bmap, stack, out) {
            found = true;
        }
    }
    if found {
        unblock(v, blocked, bmap);
    } else {
        for &w in adj[v].iter().filter(|&&w| w >= s) {
            bmap[w].insert(v);
        }
    }
    stack.pop();
    found
}

/// Plain DFS enumeration, used as a reference in tests.
pub fn cycles_brute_force(graph: &IgmsGraph) -> Vec<Vec<usize>> {
    let adj = graph.adjacency();
    let mut out = Vec::new();
    fn dfs(v: usize, s: usize, adj: &[BTreeSet<usize>], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for &w in &adj[v] {
            if w == s {
                out.push(path.clone());
            } else if w > s && !path.contains(&w) {
                path.push(w);
                dfs(w, s, adj, path, out);
                path.pop();
            }
        }
    }
    for s in 0..adj.len() {
        let mut path = vec![s];
        dfs(s, s, &adj, &mut path, &mut out);
    }
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AmsdVerdict {
    pub edge_rule: EdgeRule,
    /// All minimal siphons.
    pub siphons: Vec<SpeciesSet>,
    /// Indices into `siphons` of the critical ones; these are the blocks.
    pub critical: Vec<usize>,
    pub is_partition: bool,
    pub is_acyclic: bool,
    /// Topological order of the critical siphons (indices into `siphons`).
    pub topo_order: Option<Vec<usize>>,
    pub species_order: Option<Vec<usize>>,
    /// Whether the other edge rule gives the same acyclicity verdict.
    pub rules_agree: bool,
}

impl AmsdVerdict {
    pub fn holds(&self) -> bool {
        self.is_partition && self.is_acyclic
    }

    /// Blocks in topological order, as species index lists.
    pub fn blocks(&self) -> Option<Vec<SpeciesSet>> {
        let order = self.topo_order.as_ref()?;
        self.is_partition.then(|| order.iter().map(|&i| self.siphons[i].clone()).collect())
    }
}

fn acyclic_order(graph: &IgmsGraph, keep: &[usize]) -> Option<Vec<usize>> {
    let k = keep.len();
    let pos = |i: usize| keep.iter().position(|&x| x == i);
    let mut indeg = vec![0usize; k];
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for (a, b) in graph.node_edges() {
        if let (Some(pa), Some(pb)) = (pos(a), pos(b)) {
            if succ[pa].insert(pb) {
                indeg[pb] += 1;
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..k).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(k);
    while let Some(&i) = ready.iter().next() {
        ready.remove(&i);
        order.push(keep[i]);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert(j);
            }
        }
    }
    (order.len() == k).then_some(order)
}

/// Acyclic minimal siphon decomposition check. Blocks are the minimal
/// critical siphons: non-critical siphons never carry infection and are
/// left out of both the partition test and the acyclicity test.
pub fn amsd_check(net: &ReactionNetwork, rule: EdgeRule) -> AmsdVerdict {
    let siphons = minimal_siphons(net);
    let critical: Vec<usize> = (0..siphons.len())
        .filter(|&i| is_critical(net, &siphons[i]).map(|(c, _)| c).unwrap_or(false))
        .collect();
    let ts = total_siphon(net);
    let mut seen = BTreeSet::new();
    let mut disjoint = true;
    for &i in &critical {
        for &s in &siphons[i] {
            disjoint &= seen.insert(s);
        }
    }
    let is_partition = !critical.is_empty() && disjoint && seen.into_iter().collect::<Vec<_>>() == ts;
    let graph = build_igms(net, &siphons, rule);
    let topo = acyclic_order(&graph, &critical);
    let other = match rule {
        EdgeRule::NetProducing => EdgeRule::Touching,
        EdgeRule::Touching => EdgeRule::NetProducing,
    };
    let other_topo = acyclic_order(&build_igms(net, &siphons, other), &critical);
    let species_order = match (&topo, is_partition) {
        (Some(order), true) => Some(order.iter().flat_map(|&i| siphons[i].iter().copied()).collect()),
        _ => None,
    };
    AmsdVerdict {
        edge_rule: rule,
        rules_agree: topo.is_some() == other_topo.is_some(),
        is_acyclic: topo.is_some(),
        topo_order: topo,
        species_order,
        is_partition,
        critical,
        siphons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::parse_network;

    fn graph(n: usize, edges: &[(usize, usize)]) -> IgmsGraph {
        IgmsGraph {
            nodes: (0..n).map(|i| vec![i]).collect(),
            edges: edges.iter().map(|&(from, to)| Edge { from, to, reaction: 0 }).collect(),
            edge_rule: EdgeRule::NetProducing,
        }
    }

    #[test]
    fn complete_three_has_five_cycles() {
        let g = graph(3, &[(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]);
        let c = cycles(&g);
        assert_eq!(c.len(), 5);
        assert_eq!(c.iter().filter(|c| c.len() == 3).count(), 2);
        assert_eq!(c, cycles_brute_force(&g));
    }

    #[test]
    fn single_node_and_dag() {
        assert!(cycles(&graph(1, &[])).is_empty());
        assert!(cycles(&graph(3, &[(0, 1), (1, 2), (0, 2)])).is_empty());
    }

    #[test]
    fn catalytic_reaction_splits_rules() {
        // B is a product of the first reaction but not net-produced
        let net = parse_network("reactions:\nA + B -> A + B @ k*A*B\nA -> 2*A @ k*A\nB -> 2*B @ k*B\nA -> 0 @ m*A\nB -> 0 @ m*B\n").unwrap();
        let s = minimal_siphons(&net);
        assert_eq!(s, vec![vec![0], vec![1]]);
        assert!(build_igms(&net, &s, EdgeRule::NetProducing).edges.is_empty());
        assert_eq!(build_igms(&net, &s, EdgeRule::Touching).edges.len(), 2);
        let v = amsd_check(&net, EdgeRule::NetProducing);
        assert!(v.holds());
        assert!(!v.rules_agree);
    }
}
