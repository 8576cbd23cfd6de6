//! Scenarios and graphs shipped with the binary.

use serde::Deserialize;

pub const SCENARIOS: &[(&str, &str)] = &[
    ("fig1a-surrogate", include_str!("../scenarios/fig1a-surrogate.json")),
    ("fig1b-surrogate", include_str!("../scenarios/fig1b-surrogate.json")),
    ("table1-protocol", include_str!("../scenarios/table1-protocol.json")),
];

pub const GRAPHS: &[(&str, &str)] = &[
    ("five-node.graph.json", include_str!("../scenarios/five-node.graph.json")),
    ("six-node.graph.json", include_str!("../scenarios/six-node.graph.json")),
];

pub const PROPERTIES: &str = include_str!("../scenarios/properties.json");

pub fn scenario(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn graph(name: &str) -> Option<&'static str> {
    GRAPHS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// A robustness claim about a bundled graph, checked by the certifier in
/// the test suite.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyCheck {
    pub r: usize,
    pub s: usize,
    pub hops: usize,
    pub flavor: mwmsr::Flavor,
    pub f: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyManifest {
    pub scenario: String,
    pub graph: String,
    pub checks: Vec<PropertyCheck>,
}

pub fn properties() -> Vec<PropertyManifest> {
    serde_json::from_str(PROPERTIES).expect("bundled property manifest parses")
}
