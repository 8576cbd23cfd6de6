//! Minimum message covers, computed as exact minimum hitting sets.

use crate::graph::{NodeId, NodeSet};

use super::Message;

/// A minimum cover of a message set: a smallest node set meeting every
/// message path, destination excluded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cover {
    pub nodes: NodeSet,
    pub size: usize,
}

/// Path node set of `m` minus the destination.
pub(crate) fn cover_mask<T>(m: &Message<T>, dest: NodeId) -> u64 {
    m.path.node_set().without(dest).bits()
}

/// Minimum cover of `msgs` with respect to destination `dest`.
///
/// Any minimizer may be returned, the cardinality is canonical. An empty
/// input has the empty cover. A message whose path is just `(dest)` cannot be
/// covered; callers never pass the self-message.
pub fn minimum_cover<T>(msgs: &[Message<T>], dest: NodeId) -> Cover {
    let sets: Vec<u64> = msgs.iter().map(|m| cover_mask(m, dest)).collect();
    let nodes = NodeSet::from_bits(min_hitting_set(&sets));
    Cover { nodes, size: nodes.len() }
}

/// Keep inclusion-minimal sets only, in a canonical order.
fn reduce(sets: &[u64]) -> Vec<u64> {
    let mut v: Vec<u64> = sets.to_vec();
    v.sort_by_key(|s| (s.count_ones(), *s));
    v.dedup();
    let mut out: Vec<u64> = Vec::with_capacity(v.len());
    for s in v {
        if !out.iter().any(|&k| k & !s == 0) {
            out.push(s);
        }
    }
    out
}

/// Exact minimum hitting set by branch and bound. Empty member sets are
/// ignored.
pub(crate) fn min_hitting_set(sets: &[u64]) -> u64 {
    let sets: Vec<u64> = reduce(sets).into_iter().filter(|&s| s != 0).collect();
    if sets.is_empty() {
        return 0;
    }
    // Greedy upper bound: lowest element of each still-unhit set.
    let mut best = 0u64;
    for &s in &sets {
        if s & best == 0 {
            best |= s & s.wrapping_neg();
        }
    }
    search(&sets, 0, &mut best, None);
    best
}

/// A hitting set of size at most `k`, if one exists.
pub(crate) fn hitting_set_at_most(sets: &[u64], k: usize) -> Option<u64> {
    let sets: Vec<u64> = reduce(sets).into_iter().filter(|&s| s != 0).collect();
    if sets.is_empty() {
        return Some(0);
    }
    // Sentinel meaning "nothing found yet" that is worse than any k-set.
    let mut best = u64::MAX;
    search(&sets, 0, &mut best, Some(k));
    (best != u64::MAX).then_some(best)
}

fn search(sets: &[u64], chosen: u64, best: &mut u64, limit: Option<usize>) {
    let size = chosen.count_ones() as usize;
    let budget = match limit {
        Some(k) if *best == u64::MAX => k + 1,
        _ => best.count_ones() as usize,
    };
    let unhit: Vec<u64> = sets.iter().copied().filter(|&s| s & chosen == 0).collect();
    if unhit.is_empty() {
        if size < budget {
            *best = chosen;
        }
        return;
    }
    // Pairwise disjoint unhit sets each need their own element.
    let mut packed = 0u64;
    let mut lower = 0usize;
    for &s in &unhit {
        if s & packed == 0 {
            packed |= s;
            lower += 1;
        }
    }
    if size + lower >= budget {
        return;
    }
    let pivot = *unhit.iter().min_by_key(|s| (s.count_ones(), **s)).unwrap();
    let mut rest = pivot;
    while rest != 0 {
        let e = rest & rest.wrapping_neg();
        rest &= rest - 1;
        search(sets, chosen | e, best, limit);
        if limit.is_some() && *best != u64::MAX {
            return;
        }
    }
}
