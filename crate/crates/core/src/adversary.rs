//! Byzantine behaviors. Adversaries may choose any value per target and per
//! step and may alter values they relay, but every path they emit is the
//! truthful extension of the path they received.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NodeId, NodeSet, Path};
use crate::msr::Message;
use crate::robustness::Flavor;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy<T> {
    /// Same value to everyone; relays forwarded unchanged.
    Constant { value: T },
    /// One value per target neighbor, `default` for unlisted targets. With
    /// `tamper_relays`, relayed values are replaced the same way.
    PerNeighbor {
        #[serde(deserialize_with = "node_keyed")]
        values: BTreeMap<NodeId, T>,
        default: T,
        #[serde(default)]
        tamper_relays: bool,
    },
    /// `offset + amplitude * (-1)^floor(k / period)`.
    Oscillate {
        amplitude: T,
        offset: T,
        #[serde(default = "one")]
        period: usize,
    },
    /// Emits `value`; every relayed value is shifted by `offset`.
    RelayTamper { value: T, offset: T },
    /// Silent: no emissions, no relays.
    Crash {},
}

fn one() -> usize {
    1
}

// Map keys arrive as strings once buffered by the tagged-enum machinery.
fn node_keyed<'de, D, T>(d: D) -> Result<BTreeMap<NodeId, T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    BTreeMap::<String, T>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<NodeId>()
                .map(|id| (id, v))
                .map_err(|_| serde::de::Error::custom(format!("invalid node id {k:?}")))
        })
        .collect()
}

impl<T: Scalar> Strategy<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Constant { .. } => "constant",
            Strategy::PerNeighbor { .. } => "per_neighbor",
            Strategy::Oscillate { .. } => "oscillate",
            Strategy::RelayTamper { .. } => "relay_tamper",
            Strategy::Crash {} => "crash",
        }
    }

    /// Own value sent to `target` at step `k`, or `None` when silent.
    pub fn value_for(&self, target: NodeId, k: i64) -> Option<T> {
        match self {
            Strategy::Constant { value } => Some(*value),
            Strategy::PerNeighbor { values, default, .. } => Some(values.get(&target).copied().unwrap_or(*default)),
            Strategy::Oscillate { amplitude, offset, period } => {
                let phase = k.div_euclid((*period).max(1) as i64);
                let sign = if phase.rem_euclid(2) == 0 { T::one() } else { -T::one() };
                Some(*offset + *amplitude * sign)
            }
            Strategy::RelayTamper { value, .. } => Some(*value),
            Strategy::Crash {} => None,
        }
    }

    fn relayed_value(&self, original: T, target: NodeId, k: i64) -> Option<T> {
        match self {
            Strategy::PerNeighbor { tamper_relays: true, .. } => self.value_for(target, k),
            Strategy::RelayTamper { offset, .. } => Some(original + *offset),
            Strategy::Crash {} => None,
            _ => Some(original),
        }
    }
}

/// Own-value messages of adversary `node` at step `k`, one per target.
pub fn adversarial_emit<T: Scalar>(
    node: NodeId,
    strategy: &Strategy<T>,
    targets: NodeSet,
    k: i64,
) -> Vec<(NodeId, Message<T>)> {
    targets
        .iter()
        .filter_map(|t| strategy.value_for(t, k).map(|v| (t, Message::new(v, Path::start(node), k))))
        .collect()
}

/// Relay of `m` (whose path ends at the sender) through adversary `node`
/// toward `target`. The path is extended with `node`; only the value may
/// change.
pub fn adversarial_relay<T: Scalar>(
    node: NodeId,
    strategy: &Strategy<T>,
    m: &Message<T>,
    target: NodeId,
    k: i64,
) -> Option<Message<T>> {
    strategy
        .relayed_value(m.value, target, k)
        .map(|v| Message::new(v, m.path.extended(node), m.send_time))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultModel<T> {
    pub flavor: Flavor,
    pub f: usize,
    #[serde(default = "BTreeMap::new")]
    pub adversaries: BTreeMap<NodeId, Strategy<T>>,
}

impl<T> FaultModel<T> {
    pub fn none(f: usize) -> Self {
        FaultModel { flavor: Flavor::Total, f, adversaries: BTreeMap::new() }
    }

    pub fn adversary_set(&self) -> NodeSet {
        self.adversaries.keys().copied().collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FaultModelError {
    #[error("adversary {0} is not a node of the graph")]
    UnknownNode(NodeId),
    #[error("{count} adversaries exceed the f-total bound f={f}")]
    TooManyAdversaries { count: usize, f: usize },
    #[error("normal node {node} has {count} adversaries within its {l}-hop in-neighborhood, f-local bound is f={f}")]
    LocalBoundExceeded { node: NodeId, count: usize, f: usize, l: usize },
    #[error("hop count must be at least 1")]
    ZeroHops,
}

/// Check that the adversary set is admissible for the declared flavor.
pub fn validate_fault_model<T>(g: &Graph, fm: &FaultModel<T>, l: usize) -> Result<(), FaultModelError> {
    if l == 0 {
        return Err(FaultModelError::ZeroHops);
    }
    if let Some(&bad) = fm.adversaries.keys().find(|&&a| !g.contains(a)) {
        return Err(FaultModelError::UnknownNode(bad));
    }
    let adv = fm.adversary_set();
    match fm.flavor {
        Flavor::Total if adv.len() > fm.f => Err(FaultModelError::TooManyAdversaries { count: adv.len(), f: fm.f }),
        Flavor::Total => Ok(()),
        Flavor::Local => {
            for i in g.all().difference(adv).iter() {
                let hood = g.in_neighbors_l(i, l).expect("node exists and l >= 1");
                let count = hood.intersection(adv).len();
                if count > fm.f {
                    return Err(FaultModelError::LocalBoundExceeded { node: i, count, f: fm.f, l });
                }
            }
            Ok(())
        }
    }
}
