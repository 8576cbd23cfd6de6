//! Deliberately naive reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mwmsr::{Graph, NodeId, NodeSet};
use rand::Rng;

fn bit(id: NodeId) -> u64 {
    1 << (id - 1)
}

/// Smallest number of nodes meeting every set, by trying all node subsets
/// in order of size.
pub fn min_hitting_set_size(sets: &[u64]) -> usize {
    let universe = sets.iter().fold(0u64, |a, s| a | s);
    let ids: Vec<u64> = (0..64).map(|b| 1u64 << b).filter(|b| universe & b != 0).collect();
    for size in 0..=ids.len() {
        let mut found = false;
        combinations(ids.len(), size, &mut |pick| {
            let chosen = pick.iter().fold(0u64, |a, &i| a | ids[i]);
            if sets.iter().all(|s| s & chosen != 0) {
                found = true;
            }
            found
        });
        if found {
            return size;
        }
    }
    unreachable!("the union always hits every nonempty set")
}

/// Calls `visit` on every `k`-subset of `0..n`; stops when it returns true.
pub fn combinations(n: usize, k: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return visit(cur);
        }
        for i in start..n {
            cur.push(i);
            if rec(i + 1, n, k, cur, visit) {
                return true;
            }
            cur.pop();
        }
        false
    }
    rec(0, n, k, &mut Vec::new(), visit);
}

/// One received message: value and path node set without the destination.
#[derive(Clone, Debug)]
pub struct Msg {
    pub value: f64,
    pub nodes: u64,
}

/// Removed values on one side: every value-closed subset of the side is
/// tried (a message is in only if every strictly more extreme one is).
/// Returns the removed values sorted ascending.
pub fn brute_side(side: &[Msg], f: usize, high: bool) -> Vec<f64> {
    let sets: Vec<u64> = side.iter().map(|m| m.nodes).collect();
    if min_hitting_set_size(&sets) < f {
        return sorted(side.iter().map(|m| m.value).collect());
    }
    let more_extreme = |a: f64, b: f64| if high { a > b } else { a < b };
    let mut best: Option<Vec<f64>> = None;
    for mask in 0u32..(1 << side.len()) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let closed = (0..side.len())
            .filter(|&i| inside(i))
            .all(|i| (0..side.len()).all(|j| !more_extreme(side[j].value, side[i].value) || inside(j)));
        if !closed {
            continue;
        }
        let chosen: Vec<u64> = (0..side.len()).filter(|&i| inside(i)).map(|i| side[i].nodes).collect();
        if min_hitting_set_size(&chosen) != f {
            continue;
        }
        if best.as_ref().is_none_or(|b| chosen.len() > b.len()) {
            best = Some((0..side.len()).filter(|&i| inside(i)).map(|i| side[i].value).collect());
        }
    }
    sorted(best.expect("a closed subset with cover exactly f exists"))
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// All simple paths of 1..=l hops ending at `i` inside `universe`, as
/// (source, node set without `i`, interior set).
fn paths_into(g: &Graph, i: NodeId, l: usize, universe: u64) -> Vec<(NodeId, u64, u64)> {
    let mut out = Vec::new();
    // walk backwards from i: stack holds reversed paths
    let mut stack: Vec<Vec<NodeId>> = vec![vec![i]];
    while let Some(rev) = stack.pop() {
        let head = *rev.last().unwrap();
        for &(j, k) in g.edges() {
            if k != head || universe & bit(j) == 0 || rev.contains(&j) {
                continue;
            }
            let mut next = rev.clone();
            next.push(j);
            let nodes = next[1..].iter().fold(0u64, |a, &x| a | bit(x));
            let interior = next[1..next.len() - 1].iter().fold(0u64, |a, &x| a | bit(x));
            out.push((j, nodes, interior));
            if next.len() - 1 < l {
                stack.push(next);
            }
        }
    }
    out
}

/// Largest set of pairwise node-disjoint paths (apart from the end node).
fn max_disjoint(paths: &[u64], used: u64, from: usize) -> usize {
    let mut best = 0;
    for idx in from..paths.len() {
        if paths[idx] & used == 0 {
            best = best.max(1 + max_disjoint(paths, used | paths[idx], idx + 1));
        }
    }
    best
}

fn z(g: &Graph, va: u64, universe: u64, fault: u64, r: usize, l: usize) -> u64 {
    let mut out = 0;
    for i in 1..=g.n() {
        if va & bit(i) == 0 {
            continue;
        }
        let paths: Vec<u64> = paths_into(g, i, l, universe)
            .into_iter()
            .filter(|&(src, _, interior)| va & bit(src) == 0 && interior & fault == 0)
            .map(|(_, nodes, _)| nodes)
            .collect();
        if max_disjoint(&paths, 0, 0) >= r {
            out |= bit(i);
        }
    }
    out
}

/// (r,s)-robustness with l hops of the subgraph induced by `universe`,
/// fault nodes barred from being intermediate. Tries all 3-colorings.
pub fn brute_rs_robust(g: &Graph, universe: u64, fault: u64, r: usize, s: usize, l: usize) -> bool {
    let members: Vec<NodeId> = (1..=g.n()).filter(|&i| universe & bit(i) != 0).collect();
    let total = 3usize.pow(members.len() as u32);
    for code in 0..total {
        let (mut v1, mut v2, mut c) = (0u64, 0u64, code);
        for &m in &members {
            match c % 3 {
                1 => v1 |= bit(m),
                2 => v2 |= bit(m),
                _ => {}
            }
            c /= 3;
        }
        if v1 == 0 || v2 == 0 {
            continue;
        }
        let z1 = z(g, v1, universe, fault, r, l);
        let z2 = z(g, v2, universe, fault, r, l);
        if z1 != v1 && z2 != v2 && (z1.count_ones() + z2.count_ones()) < s as u32 {
            return false;
        }
    }
    true
}

/// Nodes with a path of at most `l` hops into `i`, by repeated relaxation.
pub fn reach_into(g: &Graph, i: NodeId, l: usize) -> u64 {
    let mut frontier = bit(i);
    let mut seen = 0u64;
    for _ in 0..l {
        let mut next = 0u64;
        for &(j, k) in g.edges() {
            if frontier & bit(k) != 0 {
                next |= bit(j);
            }
        }
        seen |= next;
        frontier = next;
    }
    seen & !bit(i)
}

pub fn brute_admissible(g: &Graph, fault: u64, f: usize, local: bool, l: usize) -> bool {
    if !local {
        return fault.count_ones() as usize <= f;
    }
    (1..=g.n())
        .filter(|&i| fault & bit(i) == 0)
        .all(|i| (reach_into(g, i, l) & fault).count_ones() as usize <= f)
}

pub fn brute_strongly_robust(g: &Graph, r: usize, s: usize, l: usize, f: usize, local: bool) -> bool {
    let all = (1u64 << g.n()) - 1;
    (0..=all)
        .filter(|&fault| brute_admissible(g, fault, f, local, l))
        .all(|fault| brute_rs_robust(g, all & !fault, 0, r, s, l))
}

pub fn random_digraph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let edges: Vec<(NodeId, NodeId)> = (1..=n)
        .flat_map(|j| (1..=n).map(move |i| (j, i)))
        .filter(|&(j, i)| j != i)
        .filter(|_| rng.gen_bool(p))
        .collect();
    Graph::new(n, edges).unwrap()
}

pub fn random_undirected(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let pairs: Vec<(NodeId, NodeId)> = (1..=n)
        .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    Graph::undirected(n, pairs).unwrap()
}

pub fn nodeset(mask: u64) -> NodeSet {
    NodeSet::from_bits(mask)
}

/// Classic synchronous one-hop W-MSR on `g`. Normal node `i` at step `k`
/// sees each in-neighbor's state at `k`; adversary `a` contributes
/// `adversary(a, i, k)`. Returns the states of the normal nodes for
/// `0..=steps`, in ascending id order.
pub fn wmsr_reference(
    g: &Graph,
    f: usize,
    x0: &BTreeMap<NodeId, f64>,
    adversary: &dyn Fn(NodeId, NodeId, i64) -> Option<f64>,
    adversaries: &[NodeId],
    steps: usize,
) -> Vec<Vec<f64>> {
    let mut x = x0.clone();
    let mut rows = vec![x.values().copied().collect::<Vec<_>>()];
    for k in 0..steps {
        let mut next = BTreeMap::new();
        for (&i, &xi) in &x {
            let mut heard: Vec<(NodeId, f64)> = Vec::new();
            for j in g.nodes() {
                if !g.has_edge(j, i) {
                    continue;
                }
                if adversaries.contains(&j) {
                    // silent adversaries leave the last heard value in place
                    let mut step = k as i64 - 1;
                    let v = loop {
                        if let Some(v) = adversary(j, i, step) {
                            break Some(v);
                        }
                        if step < -1 {
                            break None;
                        }
                        step -= 1;
                    };
                    heard.extend(v.map(|v| (j, v)));
                } else {
                    heard.push((j, x[&j]));
                }
            }
            let mut above: Vec<(NodeId, f64)> = heard.iter().copied().filter(|&(_, v)| v > xi).collect();
            above.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut below: Vec<(NodeId, f64)> = heard.iter().copied().filter(|&(_, v)| v < xi).collect();
            below.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let dropped: Vec<NodeId> = above.iter().take(f).chain(below.iter().take(f)).map(|&(j, _)| j).collect();
            // own value first, then neighbors by id, so rounding matches a
            // sum over messages ordered by path
            let kept: Vec<f64> =
                std::iter::once(xi).chain(heard.iter().filter(|(j, _)| !dropped.contains(j)).map(|&(_, v)| v)).collect();
            next.insert(i, kept.iter().sum::<f64>() / kept.len() as f64);
        }
        x = next;
        rows.push(x.values().copied().collect());
    }
    rows
}
