//! Per-node state machine of a normal agent: receive, update, evaluate the
//! event trigger, transmit and relay.
//!
//! A node never learns which of its peers are adversarial; nothing here
//! depends on the fault model.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, NodeSet, Path};
use crate::msr::{msr_update, Message, MessageSet};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("c0 must be finite and nonnegative")]
    NegativeC0,
    #[error("c1 schedule must be nonnegative and nonincreasing")]
    BadSchedule,
    #[error("relay period must be at least 1")]
    ZeroPeriod,
    #[error("unknown relay model {0:?} (expected immediate, package or periodic:N)")]
    UnknownRelay(String),
}

/// Decaying part of the trigger threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum C1Schedule<T> {
    /// Identically zero.
    Zero,
    /// `scale * exp(-rate * (k + shift))`, set to zero once below `floor` so
    /// the schedule reaches zero in finite time.
    Exponential { scale: T, rate: T, shift: T, floor: T },
    /// Explicit values for `k = 0, 1, ...`; zero past the end.
    Table { values: Vec<T> },
}

impl<T: Scalar> C1Schedule<T> {
    /// Value at step `k`; negative steps use the value at 0.
    pub fn at(&self, k: i64) -> T {
        let k = k.max(0);
        match self {
            C1Schedule::Zero => T::zero(),
            C1Schedule::Exponential { scale, rate, shift, floor } => {
                let v = *scale * (-(*rate) * (T::of(k as f64) + *shift)).exp();
                if v < *floor {
                    T::zero()
                } else {
                    v
                }
            }
            C1Schedule::Table { values } => values.get(k as usize).copied().unwrap_or_else(T::zero),
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        match self {
            C1Schedule::Zero => Ok(()),
            C1Schedule::Exponential { scale, rate, shift, floor } => {
                let ok = *scale >= T::zero()
                    && *rate >= T::zero()
                    && *floor > T::zero()
                    && scale.is_finite()
                    && rate.is_finite()
                    && shift.is_finite()
                    && (*rate > T::zero() || *scale < *floor);
                ok.then_some(()).ok_or(ProtocolError::BadSchedule)
            }
            C1Schedule::Table { values } => {
                let nonneg = values.iter().all(|v| *v >= T::zero() && v.is_finite());
                let mono = values.windows(2).all(|w| w[0] >= w[1]);
                (nonneg && mono).then_some(()).ok_or(ProtocolError::BadSchedule)
            }
        }
    }
}

/// Threshold `c0 + c1[k]` of the event trigger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerParams<T> {
    pub c0: T,
    pub c1: C1Schedule<T>,
}

impl<T: Scalar> TriggerParams<T> {
    /// No threshold: transmit on every change.
    pub fn always() -> Self {
        TriggerParams { c0: T::zero(), c1: C1Schedule::Zero }
    }

    /// `c0 = 1.215e-2`, `c1[k] = 0.5 exp(-0.06 (k + 20))` truncated below 1e-12.
    pub fn standard() -> Self {
        TriggerParams {
            c0: T::of(1.215e-2),
            c1: C1Schedule::Exponential { scale: T::of(0.5), rate: T::of(0.06), shift: T::of(20.0), floor: T::of(1e-12) },
        }
    }

    pub fn threshold(&self, k: i64) -> T {
        self.c0 + self.c1.at(k)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.c0 >= T::zero() && self.c0.is_finite()) {
            return Err(ProtocolError::NegativeC0);
        }
        self.c1.validate()
    }
}

/// How relayed messages are forwarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelayModel {
    /// Forward everything received every `period` steps; `period == 1` is
    /// immediate relaying.
    Periodic { period: usize },
    /// Forward buffered messages only together with an own event.
    Package,
}

impl RelayModel {
    pub const IMMEDIATE: RelayModel = RelayModel::Periodic { period: 1 };

    pub fn validate(self) -> Result<(), ProtocolError> {
        match self {
            RelayModel::Periodic { period: 0 } => Err(ProtocolError::ZeroPeriod),
            _ => Ok(()),
        }
    }

    /// Whether buffered relays go out during the delivery phase of step `k`.
    pub fn flushes_at(self, k: i64) -> bool {
        match self {
            RelayModel::Periodic { period } => k.rem_euclid(period as i64) == 0,
            RelayModel::Package => false,
        }
    }
}

impl fmt::Display for RelayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelayModel::Periodic { period: 1 } => write!(f, "immediate"),
            RelayModel::Periodic { period } => write!(f, "periodic:{period}"),
            RelayModel::Package => write!(f, "package"),
        }
    }
}

impl FromStr for RelayModel {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, ProtocolError> {
        let model = match s.trim() {
            "immediate" => RelayModel::IMMEDIATE,
            "package" => RelayModel::Package,
            other => {
                let period = other
                    .strip_prefix("periodic:")
                    .and_then(|p| p.parse::<usize>().ok())
                    .ok_or_else(|| ProtocolError::UnknownRelay(s.to_string()))?;
                RelayModel::Periodic { period }
            }
        };
        model.validate()?;
        Ok(model)
    }
}

impl Serialize for RelayModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RelayModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Most recent value received along one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InboxEntry<T> {
    pub value: T,
    pub send_time: i64,
}

/// Outcome of the trigger check at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trigger<T> {
    pub fire: bool,
    /// `x_hat[k] - x[k+1]`.
    pub error: T,
}

/// Fire iff `|x_hat - x_next| > c0 + c1[k]`.
pub fn evaluate_trigger<T: Scalar>(x_hat: T, x_next: T, params: &TriggerParams<T>, k: i64) -> Trigger<T> {
    let error = x_hat - x_next;
    Trigger { fire: error.abs() - params.threshold(k) > T::zero(), error }
}

/// Messages a node puts on the wire in one transmit step. Each goes to every
/// one-hop out-neighbor not already on its path.
#[derive(Clone, Debug, PartialEq)]
pub struct Emission<T> {
    pub own: Option<Message<T>>,
    pub relays: Vec<Message<T>>,
}

impl<T> Emission<T> {
    pub fn is_empty(&self) -> bool {
        self.own.is_none() && self.relays.is_empty()
    }
}

/// State of one normal agent.
#[derive(Clone, Debug)]
pub struct NodeState<T> {
    id: NodeId,
    hops: usize,
    in_neighbors: NodeSet,
    /// Current state `x_i[k]`.
    pub x: T,
    /// Last transmitted state `x_hat_i[k]`.
    pub x_hat: T,
    inbox: BTreeMap<Path, InboxEntry<T>>,
    relay_buffer: BTreeMap<Path, Message<T>>,
    last_flushed: BTreeMap<Path, T>,
    steps_since_update: usize,
    dropped: usize,
}

impl<T: Scalar> NodeState<T> {
    /// `x_hat` starts equal to `x0` unless overridden.
    pub fn new(id: NodeId, hops: usize, in_neighbors: NodeSet, x0: T, x_hat0: Option<T>) -> Self {
        NodeState {
            id,
            hops,
            in_neighbors,
            x: x0,
            x_hat: x_hat0.unwrap_or(x0),
            inbox: BTreeMap::new(),
            relay_buffer: BTreeMap::new(),
            last_flushed: BTreeMap::new(),
            steps_since_update: 0,
            dropped: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    /// Stored values keyed by the complete path (source first, this node last).
    pub fn inbox(&self) -> &BTreeMap<Path, InboxEntry<T>> {
        &self.inbox
    }

    pub fn relay_buffer(&self) -> impl Iterator<Item = &Message<T>> {
        self.relay_buffer.values()
    }

    pub fn steps_since_update(&self) -> usize {
        self.steps_since_update
    }

    /// Messages rejected because their path could not have reached this node.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Accept one message whose path ends at the sending neighbor.
    ///
    /// The path is extended with this node's id. The value is stored if it is
    /// newer than what is held for that path, and buffered for relaying while
    /// the path has fewer than `hops` edges. Returns whether it was stored.
    pub fn receive(&mut self, msg: Message<T>) -> bool {
        let sender = msg.path.last();
        if !self.in_neighbors.contains(sender)
            || msg.path.contains(self.id)
            || msg.path.hops() >= self.hops
            || !msg.value.is_finite()
        {
            self.dropped += 1;
            return false;
        }
        let path = msg.path.extended(self.id);
        let fresh = self.inbox.get(&path).is_none_or(|e| msg.send_time > e.send_time);
        if !fresh {
            return false;
        }
        self.inbox.insert(path.clone(), InboxEntry { value: msg.value, send_time: msg.send_time });
        if path.hops() < self.hops {
            self.relay_buffer
                .insert(path.clone(), Message::new(msg.value, path, msg.send_time));
        }
        true
    }

    /// Current message set: own value plus every stored value.
    pub fn message_set(&self) -> MessageSet<T> {
        let received = self
            .inbox
            .iter()
            .map(|(p, e)| Message::new(e.value, p.clone(), e.send_time));
        MessageSet::new(self.id, self.x, received).expect("inbox paths end at this node")
    }

    /// Scheduled update: `x <- fuse(trim(M, f))`. Returns the new state.
    pub fn update(&mut self, f: usize) -> T {
        self.x = msr_update(&self.message_set(), f);
        self.steps_since_update = 0;
        self.x
    }

    /// Unscheduled step: the state is kept.
    pub fn hold(&mut self) {
        self.steps_since_update += 1;
    }

    /// Transmit step after the trigger check at step `k`.
    ///
    /// On `fire` the auxiliary state takes the current value and an own
    /// message is emitted; under the package model the relay buffer rides
    /// along. Periodic relays are released by [`NodeState::take_relays`].
    pub fn transmit(&mut self, fire: bool, model: RelayModel, k: i64, changed_only: bool) -> Emission<T> {
        if !fire {
            return Emission { own: None, relays: Vec::new() };
        }
        self.x_hat = self.x;
        let own = Message::new(self.x, Path::start(self.id), k);
        let relays = match model {
            RelayModel::Package => self.take_relays(changed_only),
            RelayModel::Periodic { .. } => Vec::new(),
        };
        Emission { own: Some(own), relays }
    }

    /// Drain the relay buffer. With `changed_only`, messages whose value
    /// equals the last copy forwarded on the same path are dropped.
    pub fn take_relays(&mut self, changed_only: bool) -> Vec<Message<T>> {
        let buffered = std::mem::take(&mut self.relay_buffer);
        let mut out = Vec::with_capacity(buffered.len());
        for (path, m) in buffered {
            if changed_only && self.last_flushed.get(&path) == Some(&m.value) {
                continue;
            }
            if changed_only {
                self.last_flushed.insert(path, m.value);
            }
            out.push(m);
        }
        out
    }

    /// The own-value message exchanged before the first step. It carries
    /// `x_hat[0]` and has send time -1.
    pub fn initial_message(&self) -> Message<T> {
        Message::new(self.x_hat, Path::start(self.id), -1)
    }
}

/// Initial exchange: one own-value message per node.
pub fn initial_exchange<T: Scalar>(states: &[NodeState<T>]) -> Vec<Message<T>> {
    states.iter().map(NodeState::initial_message).collect()
}
