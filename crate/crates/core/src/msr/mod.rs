//! Multi-hop weighted MSR value fusion: message sets, the two-sided trim
//! based on minimum message covers, and the uniform-weight update.

mod cover;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NodeId, NodeSet, Path};
use crate::scalar::Scalar;

pub use cover::{minimum_cover, Cover};
pub(crate) use cover::{cover_mask, hitting_set_at_most};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MsrError {
    #[error("message path {0} does not end at destination {1}")]
    WrongDestination(Path, NodeId),
    #[error("more than one message for path {0}")]
    DuplicatePath(Path),
    #[error("non-finite value on path {0}")]
    NonFinite(Path),
    #[error("cannot fuse an empty message set")]
    Empty,
}

/// A value together with the path it travelled. The source is the first
/// path entry; `send_time` is the step at which the source emitted it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message<T> {
    pub value: T,
    pub path: Path,
    pub send_time: i64,
}

impl<T> Message<T> {
    pub fn new(value: T, path: Path, send_time: i64) -> Self {
        Message { value, path, send_time }
    }

    pub fn source(&self) -> NodeId {
        self.path.source()
    }
}

/// All messages a node fuses at one step: its own value plus the most recent
/// value per received path. Every path ends at `dest`.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageSet<T> {
    dest: NodeId,
    messages: Vec<Message<T>>,
}

impl<T: Scalar> MessageSet<T> {
    /// Build a set from the destination's own value and received messages.
    /// The self-message is stored first with path `(dest)`.
    pub fn new(dest: NodeId, own_value: T, received: impl IntoIterator<Item = Message<T>>) -> Result<Self, MsrError> {
        let own = Message::new(own_value, Path::start(dest), 0);
        if !own_value.is_finite() {
            return Err(MsrError::NonFinite(own.path));
        }
        let mut messages = vec![own];
        let mut seen = BTreeSet::new();
        for m in received {
            if m.path.last() != dest || m.path.hops() == 0 {
                return Err(MsrError::WrongDestination(m.path, dest));
            }
            if !m.value.is_finite() {
                return Err(MsrError::NonFinite(m.path));
            }
            if !seen.insert(m.path.clone()) {
                return Err(MsrError::DuplicatePath(m.path));
            }
            messages.push(m);
        }
        Ok(MessageSet { dest, messages })
    }

    pub fn dest(&self) -> NodeId {
        self.dest
    }

    pub fn own_value(&self) -> T {
        self.messages[0].value
    }

    /// Self-message first, then received messages in insertion order.
    pub fn messages(&self) -> &[Message<T>] {
        &self.messages
    }
}

/// Result of the two-sided trim. `kept` preserves the input order and always
/// starts with the self-message.
#[derive(Clone, Debug, PartialEq)]
pub struct Trimmed<T> {
    pub kept: Vec<Message<T>>,
    pub removed_high: Vec<Message<T>>,
    pub removed_low: Vec<Message<T>>,
}

impl<T> Trimmed<T> {
    pub fn removed(&self) -> impl Iterator<Item = &Message<T>> {
        self.removed_high.iter().chain(&self.removed_low)
    }
}

/// Remove the largest values whose minimum cover has cardinality `f`, and the
/// smallest values likewise.
///
/// Messages strictly above the own value form the high side. If their
/// minimum cover is smaller than `f` all of them are removed. Otherwise the
/// removed set is a largest subset that is closed downward in value order
/// (nothing kept exceeds anything removed) with minimum cover exactly `f`.
/// The low side is symmetric. Values equal to the own value are always kept.
pub fn trim<T: Scalar>(set: &MessageSet<T>, f: usize) -> Trimmed<T> {
    let x = set.own_value();
    let dest = set.dest;
    let msgs = &set.messages;

    let mut high: Vec<usize> = (0..msgs.len()).filter(|&k| msgs[k].value > x).collect();
    high.sort_by(|&a, &b| {
        msgs[b]
            .value
            .partial_cmp(&msgs[a].value)
            .unwrap()
            .then_with(|| tie_key(&msgs[a]).cmp(&tie_key(&msgs[b])))
    });
    let mut low: Vec<usize> = (0..msgs.len()).filter(|&k| msgs[k].value < x).collect();
    low.sort_by(|&a, &b| {
        msgs[a]
            .value
            .partial_cmp(&msgs[b].value)
            .unwrap()
            .then_with(|| tie_key(&msgs[a]).cmp(&tie_key(&msgs[b])))
    });

    let drop_high = extreme_subset(msgs, &high, dest, f);
    let drop_low = extreme_subset(msgs, &low, dest, f);

    let mut removed = vec![false; msgs.len()];
    for &k in drop_high.iter().chain(&drop_low) {
        removed[k] = true;
    }
    Trimmed {
        kept: (0..msgs.len()).filter(|&k| !removed[k]).map(|k| msgs[k].clone()).collect(),
        removed_high: drop_high.iter().map(|&k| msgs[k].clone()).collect(),
        removed_low: drop_low.iter().map(|&k| msgs[k].clone()).collect(),
    }
}

fn tie_key<T>(m: &Message<T>) -> (NodeId, &Path) {
    (m.source(), &m.path)
}

/// Indices (into `msgs`) removed from one side. `side` is ordered most
/// extreme value first.
fn extreme_subset<T: Scalar>(msgs: &[Message<T>], side: &[usize], dest: NodeId, f: usize) -> Vec<usize> {
    if side.is_empty() {
        return Vec::new();
    }
    let masks: Vec<u64> = side.iter().map(|&k| cover_mask(&msgs[k], dest)).collect();
    if f > 0 && hitting_set_at_most(&masks, f - 1).is_some() {
        return side.to_vec();
    }

    // Grow by whole groups of equal value while the cover stays within f.
    let mut base_end = 0;
    let mut start = 0;
    while start < side.len() {
        let v = msgs[side[start]].value;
        let end = start + side[start..].iter().take_while(|&&k| msgs[k].value == v).count();
        if hitting_set_at_most(&masks[..end], f).is_none() {
            let chosen = best_partial_group(&masks[..base_end], &masks[start..end], f);
            let mut out = side[..base_end].to_vec();
            out.extend(chosen.into_iter().map(|j| side[start + j]));
            return out;
        }
        base_end = end;
        start = end;
    }
    side.to_vec()
}

/// Largest subset of the tied boundary `group` that can join `base` with a
/// cover of at most `f` nodes. Returns positions within `group`.
///
/// Every such subset is hit by some node set of size at most `f` that also
/// hits `base`, so it suffices to try those node sets.
fn best_partial_group(base: &[u64], group: &[u64], f: usize) -> Vec<usize> {
    if group.len() <= 1 {
        return Vec::new();
    }
    let ground: Vec<u64> = {
        let all = base.iter().chain(group).fold(0u64, |a, &m| a | m);
        (0..64).map(|b| 1u64 << b).filter(|b| all & b != 0).collect()
    };
    let mut best: (usize, u64) = (0, 0);
    let mut found = false;
    let mut visit = |t: u64| {
        if base.iter().all(|&m| m & t != 0) {
            let hits = group.iter().filter(|&&m| m & t != 0).count();
            if !found || hits > best.0 {
                best = (hits, t);
                found = true;
            }
        }
    };
    for size in 0..=f.min(ground.len()) {
        combinations(&ground, size, 0, 0, &mut visit);
    }
    group
        .iter()
        .enumerate()
        .filter(|(_, &m)| found && m & best.1 != 0)
        .map(|(j, _)| j)
        .collect()
}

fn combinations(ground: &[u64], size: usize, from: usize, acc: u64, visit: &mut impl FnMut(u64)) {
    if size == 0 {
        visit(acc);
        return;
    }
    for k in from..ground.len() {
        if ground.len() - k < size {
            break;
        }
        combinations(ground, size - 1, k + 1, acc | ground[k], visit);
    }
}

/// Uniform-weight average of the kept values.
pub fn fuse<T: Scalar>(kept: &[Message<T>]) -> Result<T, MsrError> {
    if kept.is_empty() {
        return Err(MsrError::Empty);
    }
    let sum = kept.iter().fold(T::zero(), |acc, m| acc + m.value);
    Ok(sum / T::from_usize(kept.len()).unwrap())
}

/// Trim then fuse: the next state of the destination.
pub fn msr_update<T: Scalar>(set: &MessageSet<T>, f: usize) -> T {
    fuse(&trim(set, f).kept).expect("the self-message is always kept")
}

/// Lower bound on the uniform fusion weight, `1 / (1 + P)` where `P` is the
/// largest number of at-most-`l`-hop paths into any node.
pub fn weight_floor<T: Scalar>(g: &Graph, l: usize) -> T {
    let most = g
        .nodes()
        .map(|i| g.paths_into(i, l, NodeSet::EMPTY, NodeSet::EMPTY).len())
        .max()
        .unwrap_or(0);
    T::one() / T::from_usize(1 + most).unwrap()
}
