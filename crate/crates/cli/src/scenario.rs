//! Scenario files: graph, fault model, initial states, simulation settings
//! and algorithm variants.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use mwmsr::engine::Variant;
use mwmsr::{validate_fault_model, FaultModelF64, Graph, RelayModel, SimConfigF64};
use serde::{Deserialize, Serialize};

use crate::bundled;

pub const SPEC_VERSION: u32 = 1;

/// Inline graph or a path to a graph file, relative to the scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File(String),
    Inline(Graph),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub runs: usize,
    /// Initial normal states are drawn uniformly from this interval.
    pub range: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub spec: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub graph: GraphSource,
    pub fault_model: FaultModelF64,
    /// Initial states of the normal nodes in ascending id order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_hat0: Option<Vec<f64>>,
    #[serde(default)]
    pub sim: SimConfigF64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloSpec>,
}

/// A scenario with its graph loaded.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub scenario: Scenario,
    pub graph: Graph,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(text).context("invalid scenario JSON")?;
        ensure!(sc.spec == SPEC_VERSION, "unsupported scenario spec version {} (expected {SPEC_VERSION})", sc.spec);
        Ok(sc)
    }

    /// Load from a bundled scenario name or a file path.
    pub fn load(name_or_path: &str) -> Result<Loaded> {
        if let Some(text) = bundled::scenario(name_or_path) {
            let scenario = Scenario::parse(text)?;
            let graph = match &scenario.graph {
                GraphSource::Inline(g) => g.clone(),
                GraphSource::File(f) => bundled::graph(f)
                    .with_context(|| format!("bundled graph {f} is missing"))?
                    .parse()?,
            };
            return Loaded::new(scenario, graph);
        }
        let path = Path::new(name_or_path);
        let text = fs::read_to_string(path).with_context(|| format!("cannot read scenario {}", path.display()))?;
        let scenario = Scenario::parse(&text)?;
        let graph = match &scenario.graph {
            GraphSource::Inline(g) => g.clone(),
            GraphSource::File(f) => load_graph_file(&path.parent().unwrap_or(Path::new(".")).join(f))?,
        };
        Loaded::new(scenario, graph)
    }

    /// Variants requested on the command line, else those of the scenario,
    /// else the base configuration alone.
    pub fn variants(&self, requested: &[String]) -> Result<Vec<Variant>> {
        if !requested.is_empty() {
            return requested.iter().map(|s| parse_variant(s)).collect();
        }
        if !self.variants.is_empty() {
            return Ok(self.variants.clone());
        }
        Ok(vec![Variant { name: "base".into(), hops: None, relay: None }])
    }
}

pub fn load_graph_file(path: &PathBuf) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read graph {}", path.display()))?;
    text.parse::<Graph>().with_context(|| format!("invalid graph {}", path.display()))
}

impl Loaded {
    fn new(scenario: Scenario, graph: Graph) -> Result<Loaded> {
        let loaded = Loaded { scenario, graph };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn normal_count(&self) -> usize {
        self.graph.all().difference(self.scenario.fault_model.adversary_set()).len()
    }

    fn validate(&self) -> Result<()> {
        let sc = &self.scenario;
        sc.sim.validate()?;
        validate_fault_model(&self.graph, &sc.fault_model, sc.sim.hops)?;
        for v in &sc.variants {
            v.apply(&sc.sim).validate()?;
            validate_fault_model(&self.graph, &sc.fault_model, v.apply(&sc.sim).hops)?;
        }
        let n = self.normal_count();
        ensure!(
            sc.x0.is_empty() || sc.x0.len() == n,
            "x0 has {} entries but there are {n} normal nodes",
            sc.x0.len()
        );
        if let Some(h) = &sc.x_hat0 {
            ensure!(h.len() == n, "x_hat0 has {} entries but there are {n} normal nodes", h.len());
        }
        if let Some(mc) = &sc.montecarlo {
            ensure!(mc.range.0 <= mc.range.1 && mc.range.0.is_finite() && mc.range.1.is_finite(), "invalid montecarlo range");
        }
        Ok(())
    }
}

/// Parse `l=2,relay=package[,name=...]`.
pub fn parse_variant(spec: &str) -> Result<Variant> {
    let mut hops = None;
    let mut relay = None;
    let mut name = None;
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("variant entry {part:?} is not key=value"))?;
        match key.trim() {
            "l" | "hops" => {
                let l: usize = value.trim().parse().with_context(|| format!("invalid hop count {value:?}"))?;
                ensure!(l >= 1, "hop count must be at least 1");
                hops = Some(l);
            }
            "relay" => relay = Some(value.trim().parse::<RelayModel>()?),
            "name" => name = Some(value.trim().to_string()),
            other => bail!("unknown variant key {other:?} (expected l, relay or name)"),
        }
    }
    let name = name.unwrap_or_else(|| {
        let mut parts = Vec::new();
        if let Some(l) = hops {
            parts.push(format!("l{l}"));
        }
        if let Some(r) = relay {
            parts.push(r.to_string().replace(':', ""));
        }
        if parts.is_empty() {
            "base".to_string()
        } else {
            parts.join("-")
        }
    });
    ensure!(
        !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
        "variant name {name:?} must be alphanumeric with - or _"
    );
    Ok(Variant { name, hops, relay })
}
