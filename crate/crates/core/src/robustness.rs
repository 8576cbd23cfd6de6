//! Exact decision procedures for (r,s)-robustness with l hops and for
//! r-strong robustness with l hops under f-total / f-local fault models.
//!
//! Paths are *independent* when they share no node other than the common
//! destination, so in particular their sources are distinct. Nodes of the
//! fault set may appear on a path only as its source or destination.
//!
//! Everything here is exhaustive. Maximum independent path sets are found by
//! branch and bound over the enumerated paths, and the partition conditions
//! are checked over every pair of disjoint nonempty node sets, so the
//! certifier is limited to [`MAX_CERTIFY_NODES`] nodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId, NodeSet};

pub const MAX_CERTIFY_NODES: usize = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RobustnessError {
    #[error("exact certification supports at most {MAX_CERTIFY_NODES} nodes, graph has {0}")]
    TooLarge(usize),
    #[error("invalid robustness query: {0}")]
    InvalidQuery(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Locality flavor of an adversary or fault set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// At most `f` nodes in total.
    #[serde(rename = "f-total")]
    Total,
    /// At most `f` nodes among every outside node's l-hop in-neighbors.
    #[serde(rename = "f-local")]
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultSpec {
    Model { flavor: Flavor, f: usize },
    Explicit(NodeSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RobustnessQuery {
    pub r: usize,
    pub s: usize,
    pub l: usize,
    pub faults: FaultSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "F")]
    pub fault_set: NodeSet,
    #[serde(rename = "V1")]
    pub v1: NodeSet,
    #[serde(rename = "V2")]
    pub v2: NodeSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustnessCertificate {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl RobustnessCertificate {
    fn from_witness(witness: Option<Witness>) -> Self {
        RobustnessCertificate { holds: witness.is_none(), witness }
    }
}

/// Whether `fault_set` is admissible for `flavor` with bound `f` on `g`.
///
/// For [`Flavor::Local`] every node outside the set must have at most `f`
/// members of it among its l-hop in-neighbors.
pub fn satisfies_fault_model(g: &Graph, fault_set: NodeSet, flavor: Flavor, f: usize, l: usize) -> bool {
    match flavor {
        Flavor::Total => fault_set.len() <= f,
        Flavor::Local => {
            let hoods: Vec<NodeSet> = g.nodes().map(|i| g.in_neighbors_l(i, l).expect("valid node")).collect();
            locally_bounded(g, &hoods, fault_set, f)
        }
    }
}

fn locally_bounded(g: &Graph, hoods: &[NodeSet], fault_set: NodeSet, f: usize) -> bool {
    g.all()
        .difference(fault_set)
        .iter()
        .all(|i| hoods[i - 1].intersection(fault_set).len() <= f)
}

/// Size of a largest set of independent paths of at most `l` hops into `i`
/// whose sources lie in `sources` and whose intermediate nodes avoid `fault_set`.
pub fn max_independent_paths(g: &Graph, i: NodeId, sources: NodeSet, fault_set: NodeSet, l: usize) -> Result<usize, GraphError> {
    g.in_neighbors_l(i, l)?;
    let cands = Candidates::new(g, i, l, NodeSet::EMPTY, fault_set);
    Ok(cands.pack(sources.without(i), usize::MAX))
}

/// Nodes of `va` with at least `r` independent paths from outside `va`.
pub fn z_set(g: &Graph, va: NodeSet, fault_set: NodeSet, r: usize, l: usize) -> Result<NodeSet, GraphError> {
    if l == 0 {
        return Err(GraphError::ZeroHops);
    }
    let ctx = Context::new(g, l, NodeSet::EMPTY, fault_set);
    Ok(ctx.z(va, r))
}

/// (r,s)-robustness with l hops with respect to a fixed fault set.
pub fn is_rs_robust_wrt(
    g: &Graph,
    r: usize,
    s: usize,
    l: usize,
    fault_set: NodeSet,
) -> Result<RobustnessCertificate, RobustnessError> {
    validate(g, r, s, l)?;
    if !fault_set.is_subset(g.all()) {
        let id = fault_set.difference(g.all()).first().unwrap();
        return Err(GraphError::UnknownNode { id, n: g.n() }.into());
    }
    let ctx = Context::new(g, l, NodeSet::EMPTY, fault_set);
    let witness = ctx
        .first_violation(r, s)
        .map(|(v1, v2)| Witness { fault_set, v1, v2 });
    Ok(RobustnessCertificate::from_witness(witness))
}

/// r-strong robustness with l hops: for every admissible fault set `F` the
/// subgraph induced by `V \ F` is (r,1)-robust with l hops.
pub fn is_strongly_robust(
    g: &Graph,
    r: usize,
    l: usize,
    f: usize,
    flavor: Flavor,
) -> Result<RobustnessCertificate, RobustnessError> {
    is_strongly_rs_robust(g, r, 1, l, f, flavor)
}

/// Like [`is_strongly_robust`] with condition (3) threshold `s`.
pub fn is_strongly_rs_robust(
    g: &Graph,
    r: usize,
    s: usize,
    l: usize,
    f: usize,
    flavor: Flavor,
) -> Result<RobustnessCertificate, RobustnessError> {
    validate(g, r, s, l)?;
    let fault_sets = admissible_fault_sets(g, flavor, f, l);
    let witness = fault_sets.par_iter().find_map_first(|&fs| {
        let ctx = Context::new(g, l, fs, NodeSet::EMPTY);
        ctx.first_violation(r, s).map(|(v1, v2)| Witness { fault_set: fs, v1, v2 })
    });
    Ok(RobustnessCertificate::from_witness(witness))
}

/// Dispatch a query to the matching decision procedure.
pub fn certify(g: &Graph, q: &RobustnessQuery) -> Result<RobustnessCertificate, RobustnessError> {
    match q.faults {
        FaultSpec::Explicit(fs) => is_rs_robust_wrt(g, q.r, q.s, q.l, fs),
        FaultSpec::Model { flavor, f } => is_strongly_rs_robust(g, q.r, q.s, q.l, f, flavor),
    }
}

/// Every fault set admissible under the model, in ascending bit order.
pub fn admissible_fault_sets(g: &Graph, flavor: Flavor, f: usize, l: usize) -> Vec<NodeSet> {
    let full = g.all().bits();
    match flavor {
        Flavor::Total => (0..=full)
            .map(NodeSet::from_bits)
            .filter(|fs| fs.len() <= f)
            .collect(),
        Flavor::Local => {
            let hoods: Vec<NodeSet> = g.nodes().map(|i| g.in_neighbors_l(i, l).expect("valid node")).collect();
            (0..=full)
                .map(NodeSet::from_bits)
                .filter(|&fs| fs.len() <= f || locally_bounded(g, &hoods, fs, f))
                .collect()
        }
    }
}

fn validate(g: &Graph, r: usize, s: usize, l: usize) -> Result<(), RobustnessError> {
    if g.n() > MAX_CERTIFY_NODES {
        return Err(RobustnessError::TooLarge(g.n()));
    }
    if r == 0 {
        return Err(RobustnessError::InvalidQuery("r must be at least 1"));
    }
    if s == 0 {
        return Err(RobustnessError::InvalidQuery("s must be at least 1"));
    }
    if l == 0 {
        return Err(RobustnessError::InvalidQuery("hop count must be at least 1"));
    }
    Ok(())
}

/// Candidate paths into one destination, grouped by the last node before it.
/// Two paths through the same penultimate node are never independent, so a
/// packing takes at most one path per group.
struct Candidates {
    /// (penultimate node, [(source, node mask without the destination)])
    groups: Vec<(NodeId, Vec<(NodeId, u64)>)>,
}

impl Candidates {
    fn new(g: &Graph, i: NodeId, l: usize, excluded: NodeSet, fault_set: NodeSet) -> Self {
        let mut groups: Vec<(NodeId, Vec<(NodeId, u64)>)> = Vec::new();
        for p in g.paths_into(i, l, excluded, fault_set) {
            let nodes = p.nodes();
            let pen = nodes[nodes.len() - 2];
            let mask = p.node_set().without(i).bits();
            match groups.iter_mut().find(|(u, _)| *u == pen) {
                Some((_, list)) => list.push((p.source(), mask)),
                None => groups.push((pen, vec![(p.source(), mask)])),
            }
        }
        groups.sort_by_key(|(u, _)| *u);
        Candidates { groups }
    }

    /// Largest packing using only paths whose source is in `sources`, stopping
    /// early once `target` is reached.
    fn pack(&self, sources: NodeSet, target: usize) -> usize {
        let groups: Vec<Vec<u64>> = self
            .groups
            .iter()
            .map(|(_, list)| {
                let mut masks: Vec<u64> = list
                    .iter()
                    .filter(|(src, _)| sources.contains(*src))
                    .map(|&(_, m)| m)
                    .collect();
                masks.sort_by_key(|m| (m.count_ones(), *m));
                masks.dedup();
                // A path whose node set contains another's is never better.
                let mut minimal: Vec<u64> = Vec::with_capacity(masks.len());
                for m in masks {
                    if !minimal.iter().any(|&k| k & !m == 0) {
                        minimal.push(m);
                    }
                }
                minimal
            })
            .filter(|g| !g.is_empty())
            .collect();
        let bound = groups.len().min(target);
        let mut best = 0;
        pack_rec(&groups, 0, 0, 0, &mut best, bound);
        best
    }
}

fn pack_rec(groups: &[Vec<u64>], idx: usize, used: u64, count: usize, best: &mut usize, target: usize) {
    if count > *best {
        *best = count;
    }
    if *best >= target || count + (groups.len() - idx) <= *best {
        return;
    }
    for &m in &groups[idx] {
        if m & used == 0 {
            pack_rec(groups, idx + 1, used | m, count + 1, best, target);
            if *best >= target {
                return;
            }
        }
    }
    pack_rec(groups, idx + 1, used, count, best, target);
}

/// Certification context: `excluded` nodes are deleted (induced subgraph on
/// the rest), `fault_set` nodes may not be intermediate.
struct Context {
    universe: NodeSet,
    cands: Vec<Option<Candidates>>,
}

impl Context {
    fn new(g: &Graph, l: usize, excluded: NodeSet, fault_set: NodeSet) -> Self {
        let universe = g.all().difference(excluded);
        let cands = g
            .nodes()
            .map(|i| universe.contains(i).then(|| Candidates::new(g, i, l, excluded, fault_set)))
            .collect();
        Context { universe, cands }
    }

    fn z(&self, va: NodeSet, r: usize) -> NodeSet {
        let sources = self.universe.difference(va);
        va.intersection(self.universe)
            .iter()
            .filter(|&i| {
                self.cands[i - 1]
                    .as_ref()
                    .is_some_and(|c| c.pack(sources, r) >= r)
            })
            .collect()
    }

    /// First pair (V1, V2) in ascending bit order violating all three conditions.
    fn first_violation(&self, r: usize, s: usize) -> Option<(NodeSet, NodeSet)> {
        let u = self.universe.bits();
        if u.count_ones() < 2 {
            return None;
        }
        // z is computed once per subset of the universe.
        let mut z = vec![0u64; (u as usize) + 1];
        let mut sub = next_submask(0, u);
        while sub != 0 {
            z[sub as usize] = self.z(NodeSet::from_bits(sub), r).bits();
            sub = next_submask(sub, u);
        }
        let mut v1 = next_submask(0, u);
        while v1 != 0 {
            let z1 = z[v1 as usize];
            if z1 != v1 {
                let rest = u & !v1;
                let mut v2 = next_submask(0, rest);
                while v2 != 0 {
                    let z2 = z[v2 as usize];
                    if z2 != v2 && (z1.count_ones() + z2.count_ones()) < s as u32 {
                        return Some((NodeSet::from_bits(v1), NodeSet::from_bits(v2)));
                    }
                    v2 = next_submask(v2, rest);
                }
            }
            v1 = next_submask(v1, u);
        }
        None
    }
}

/// Next submask of `universe` after `cur` in ascending numeric order; 0 when
/// exhausted.
fn next_submask(cur: u64, universe: u64) -> u64 {
    (cur | !universe).wrapping_add(1) & universe
}
