//! Bundled model files with a default parameter point each.

use crate::netio::{parse_network, ParameterAssignment, ReactionNetwork};

pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
    pub defaults: &'static [(&'static str, f64)],
}

impl Fixture {
    pub fn network(&self) -> ReactionNetwork {
        parse_network(self.source).unwrap_or_else(|e| panic!("fixture {} does not parse: {e}", self.name))
    }

    pub fn params(&self) -> ParameterAssignment {
        ParameterAssignment::new(self.defaults.iter().map(|&(k, v)| (k, v)))
    }
}

macro_rules! fixture {
    ($name:literal, $desc:literal, [$($k:literal => $v:expr),* $(,)?]) => {
        Fixture {
            name: $name,
            description: $desc,
            source: include_str!(concat!("../fixtures/", $name, ".crn")),
            defaults: &[$(($k, $v)),*],
        }
    };
}

pub static FIXTURES: &[Fixture] = &[
    fixture!("sirs", "SIRS without demography", [
        "be" => 2.0, "gi" => 1.0, "gr" => 0.5, "gs" => 0.2,
    ]),
    fixture!("ex3", "two infections, a combination and two mutations", [
        "Lambda" => 2.0, "mu" => 1.0, "mu1" => 1.0, "mu2" => 1.2, "mu3" => 1.0, "be1" => 1.5,
        "be2" => 1.4, "de" => 0.5, "m1" => 0.3, "m2" => 0.4,
    ]),
    fixture!("ex4", "critical and non-critical minimal siphons", [
        "la" => 1.0, "mu" => 1.0, "be1" => 2.0, "be2" => 1.5, "k1" => 1.0, "k2" => 1.0,
    ]),
    fixture!("si2v", "two strains with vaccination", [
        "La" => 1.0, "mu" => 1.0, "mu1" => 1.0, "mu2" => 1.0, "muv" => 1.0, "rho" => 0.5,
        "be1" => 3.0, "be2" => 2.0, "bev" => 1.0,
    ]),
    fixture!("gavish", "two strains with secondary infection", [
        "La" => 2.0, "mu" => 0.5, "be1" => 1.0, "be2" => 0.8, "si1" => 0.5, "si2" => 0.6,
        "et1" => 0.7, "et2" => 0.8, "ga1" => 1.0, "ga2" => 1.0, "th1" => 0.3, "th2" => 0.4,
        "th12" => 0.2,
    ]),
    fixture!("gk", "coinfection with seeding and combination", [
        "b" => 2.0, "mu0" => 1.0, "al1" => 1.5, "al2" => 1.2, "al3" => 0.4, "bt1" => 0.2,
        "bt2" => 0.3, "ga1" => 0.5, "ga2" => 0.4, "et1" => 1.0, "et2" => 1.0, "mu1" => 1.0,
        "mu2" => 1.0, "mu3" => 1.0,
    ]),
    fixture!("gk-antisym", "coinfection without seeding or combination", [
        "b" => 4.0, "mu0" => 1.0, "al1" => 1.5, "al2" => 1.4, "al3" => 0.8, "et1" => 0.2,
        "et2" => 0.15, "mu1" => 1.0, "mu2" => 1.0, "mu3" => 1.0,
    ]),
    fixture!("fivecycles", "complete interaction graph with a block-diagonal NGM", [
        "la" => 2.0, "mu" => 1.0, "be1" => 1.5, "be2" => 1.2, "de" => 0.5, "et1" => 0.3,
        "et2" => 0.4, "mu1" => 1.0, "mu2" => 1.0, "mu12" => 1.0,
    ]),
    fixture!("threetier", "three sequentially seeded tiers", [
        "la" => 2.0, "mu" => 1.0, "be1" => 1.5, "be2" => 1.0, "be3" => 1.0, "mu1" => 1.0,
        "mu2" => 1.0, "mu3" => 1.0,
    ]),
    fixture!("mayleonard", "symmetric three-species competition", [
        "a1" => 0.8, "be" => 1.2,
    ]),
    fixture!("sdas-ex9", "tree interaction graph, no stoichiometric autocatalysis", [
        "la" => 1.0, "mu" => 1.0, "be" => 1.0, "ro" => 1.0, "mu1" => 1.0, "mu2" => 1.0,
    ]),
    fixture!("sdas-ex10", "cyclic interaction graph with autocatalysis", [
        "la" => 2.0, "mu" => 1.0, "be" => 1.5, "ro12" => 1.0, "ro21" => 0.5, "mu1" => 1.0,
        "mu2" => 1.0,
    ]),
    fixture!("sdas-ex11", "three-tier autocatalytic system", [
        "la" => 2.0, "mu" => 1.0, "be1" => 1.5, "be2" => 1.0, "be3" => 1.0, "mu1" => 1.0,
        "mu2" => 1.0, "mu3" => 1.0,
    ]),
    fixture!("sdas-ex12", "cross-tier catalysis", [
        "la" => 2.0, "mu" => 1.0, "be1" => 1.5, "be2" => 1.2, "si" => 0.5, "mu1" => 1.0,
        "mu2" => 1.0, "mu3" => 1.0,
    ]),
];

pub fn get(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

pub fn names() -> Vec<&'static str> {
    FIXTURES.iter().map(|f| f.name).collect()
}
