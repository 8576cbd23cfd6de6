//! Directed graphs over dense node ids `1..=n`, bounded-length simple path
//! enumeration, and l-hop neighborhoods.
//!
//! An edge `(j, i)` means node `i` can get information from node `j`. The
//! l-th power multigraph is never built; callers that need it enumerate the
//! paths directly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node identifier, 1-based.
pub type NodeId = usize;

/// Largest graph representable with [`NodeSet`] bitsets.
pub const MAX_NODES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("graph has {0} nodes, at most {MAX_NODES} are supported")]
    TooManyNodes(usize),
    #[error("unknown node id {id} (valid ids are 1..={n})")]
    UnknownNode { id: NodeId, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Bitset over node ids `1..=64`; bit `id - 1` marks membership.
///
/// Ordering is by the raw bit pattern, which is the enumeration order used for
/// reproducible witnesses.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        NodeSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_NODES);
        if n == 64 {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(id: NodeId) -> Self {
        NodeSet(bit(id))
    }

    pub fn contains(self, id: NodeId) -> bool {
        (1..=MAX_NODES).contains(&id) && self.0 & bit(id) != 0
    }

    pub fn insert(&mut self, id: NodeId) {
        self.0 |= bit(id);
    }

    pub fn remove(&mut self, id: NodeId) {
        self.0 &= !bit(id);
    }

    pub fn with(self, id: NodeId) -> Self {
        NodeSet(self.0 | bit(id))
    }

    pub fn without(self, id: NodeId) -> Self {
        NodeSet(self.0 & !bit(id))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: NodeSet) -> Self {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> Self {
        NodeSet(self.0 & other.0)
    }

    pub fn difference(self, other: NodeSet) -> Self {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: NodeSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<NodeId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize + 1)
    }

    /// Members in ascending order.
    pub fn iter(self) -> NodeSetIter {
        NodeSetIter(self.0)
    }

    pub fn to_vec(self) -> Vec<NodeId> {
        self.iter().collect()
    }
}

fn bit(id: NodeId) -> u64 {
    debug_assert!((1..=MAX_NODES).contains(&id), "node id {id} out of bitset range");
    1u64 << (id - 1)
}

pub struct NodeSetIter(u64);

impl Iterator for NodeSetIter {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        if self.0 == 0 {
            return None;
        }
        let tz = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(tz + 1)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for NodeSetIter {}

impl IntoIterator for NodeSet {
    type Item = NodeId;
    type IntoIter = NodeSetIter;

    fn into_iter(self) -> NodeSetIter {
        self.iter()
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut s = NodeSet::EMPTY;
        for id in iter {
            s.insert(id);
        }
        s
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for NodeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for NodeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ids = Vec::<NodeId>::deserialize(d)?;
        if let Some(bad) = ids.iter().find(|&&id| id == 0 || id > MAX_NODES) {
            return Err(serde::de::Error::custom(format!("node id {bad} out of range")));
        }
        Ok(ids.into_iter().collect())
    }
}

/// A sequence of distinct nodes, each consecutive pair an edge. During relay
/// only the filled prefix is stored; a complete path has `l + 1` entries.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<NodeId>);

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        debug_assert!(!nodes.is_empty());
        Path(nodes)
    }

    /// Path consisting of the source alone (a freshly emitted message).
    pub fn start(source: NodeId) -> Self {
        Path(vec![source])
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn source(&self) -> NodeId {
        self.0[0]
    }

    /// Last filled entry: the destination of a complete path, or the current
    /// holder of a message in relay.
    pub fn last(&self) -> NodeId {
        *self.0.last().expect("paths are nonempty")
    }

    /// Number of edges traversed.
    pub fn hops(&self) -> usize {
        self.0.len() - 1
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.contains(&id)
    }

    pub fn node_set(&self) -> NodeSet {
        self.0.iter().copied().collect()
    }

    /// Nodes strictly between source and last entry.
    pub fn interior(&self) -> &[NodeId] {
        if self.0.len() <= 2 {
            &[]
        } else {
            &self.0[1..self.0.len() - 1]
        }
    }

    /// Copy with `id` appended.
    pub fn extended(&self, id: NodeId) -> Path {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(id);
        Path(v)
    }

    /// Whether the entries are pairwise distinct and follow edges of `g`.
    pub fn is_valid_in(&self, g: &Graph) -> bool {
        let distinct = self.node_set().len() == self.0.len();
        distinct
            && self.0.iter().all(|&v| g.contains(v))
            && self.0.windows(2).all(|w| g.has_edge(w[0], w[1]))
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Directed graph with node ids `1..=n`, no self-loops or duplicate edges.
/// Immutable after construction.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    in_adj: Vec<NodeSet>,
    out_adj: Vec<NodeSet>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    n: usize,
    edges: Vec<[NodeId; 2]>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if n > MAX_NODES {
            return Err(GraphError::TooManyNodes(n));
        }
        let mut in_adj = vec![NodeSet::EMPTY; n];
        let mut out_adj = vec![NodeSet::EMPTY; n];
        let mut list = Vec::new();
        for (j, i) in edges {
            for id in [j, i] {
                if id == 0 || id > n {
                    return Err(GraphError::UnknownNode { id, n });
                }
            }
            if j == i {
                return Err(GraphError::SelfLoop(j));
            }
            if in_adj[i - 1].contains(j) {
                return Err(GraphError::DuplicateEdge(j, i));
            }
            in_adj[i - 1].insert(j);
            out_adj[j - 1].insert(i);
            list.push((j, i));
        }
        list.sort_unstable();
        Ok(Graph { n, edges: list, in_adj, out_adj })
    }

    /// Graph with both `(a, b)` and `(b, a)` for every listed pair.
    pub fn undirected(n: usize, pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, GraphError> {
        Graph::new(n, pairs.into_iter().flat_map(|(a, b)| [(a, b), (b, a)]))
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        Graph::new(n, (1..=n).flat_map(|j| (1..=n).filter(move |&i| i != j).map(move |i| (j, i))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.n
    }

    pub fn all(&self) -> NodeSet {
        NodeSet::full(self.n)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        (1..=self.n).contains(&id)
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn has_edge(&self, j: NodeId, i: NodeId) -> bool {
        self.contains(j) && self.contains(i) && self.in_adj[i - 1].contains(j)
    }

    /// One-hop in-neighbors. Panics on an unknown id.
    pub fn in_neighbors(&self, i: NodeId) -> NodeSet {
        self.in_adj[i - 1]
    }

    /// One-hop out-neighbors. Panics on an unknown id.
    pub fn out_neighbors(&self, i: NodeId) -> NodeSet {
        self.out_adj[i - 1]
    }

    pub fn in_degree(&self, i: NodeId) -> usize {
        self.in_adj[i - 1].len()
    }

    fn check(&self, id: NodeId) -> Result<(), GraphError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode { id, n: self.n })
        }
    }

    /// Nodes that reach `i` through a path of at most `l` hops, excluding `i`.
    pub fn in_neighbors_l(&self, i: NodeId, l: usize) -> Result<NodeSet, GraphError> {
        self.check(i)?;
        if l == 0 {
            return Err(GraphError::ZeroHops);
        }
        Ok(self.bounded_reach(i, l, |v| self.in_adj[v - 1]))
    }

    /// Nodes reachable from `i` through a path of at most `l` hops, excluding `i`.
    pub fn out_neighbors_l(&self, i: NodeId, l: usize) -> Result<NodeSet, GraphError> {
        self.check(i)?;
        if l == 0 {
            return Err(GraphError::ZeroHops);
        }
        Ok(self.bounded_reach(i, l, |v| self.out_adj[v - 1]))
    }

    // Shortest walks are simple paths, so breadth-first layers suffice.
    fn bounded_reach(&self, start: NodeId, l: usize, step: impl Fn(NodeId) -> NodeSet) -> NodeSet {
        let mut seen = NodeSet::singleton(start);
        let mut frontier = seen;
        for _ in 0..l {
            let next = frontier
                .iter()
                .fold(NodeSet::EMPTY, |acc, v| acc.union(step(v)))
                .difference(seen);
            if next.is_empty() {
                break;
            }
            seen = seen.union(next);
            frontier = next;
        }
        seen.without(start)
    }

    /// All simple paths from `j` to `i` with at most `l` hops, in
    /// lexicographic order of their node sequences.
    pub fn enumerate_paths(&self, j: NodeId, i: NodeId, l: usize) -> Result<Vec<Path>, GraphError> {
        self.check(j)?;
        self.check(i)?;
        if l == 0 {
            return Err(GraphError::ZeroHops);
        }
        let mut out = Vec::new();
        if j == i {
            return Ok(out);
        }
        let mut stack = vec![j];
        self.dfs_forward(i, l, NodeSet::singleton(j), &mut stack, &mut out);
        out.sort();
        Ok(out)
    }

    fn dfs_forward(&self, target: NodeId, l: usize, visited: NodeSet, stack: &mut Vec<NodeId>, out: &mut Vec<Path>) {
        let at = *stack.last().unwrap();
        for next in self.out_adj[at - 1].difference(visited) {
            stack.push(next);
            if next == target {
                out.push(Path(stack.clone()));
            } else if stack.len() <= l {
                self.dfs_forward(target, l, visited.with(next), stack, out);
            }
            stack.pop();
        }
    }

    /// All simple paths of `1..=l` hops ending at `i`, from any source.
    ///
    /// Nodes in `excluded` may not appear anywhere on a path; nodes in
    /// `no_interior` may appear only as the source. Output is sorted.
    pub fn paths_into(&self, i: NodeId, l: usize, excluded: NodeSet, no_interior: NodeSet) -> Vec<Path> {
        let mut out = Vec::new();
        if excluded.contains(i) {
            return out;
        }
        let mut rev = vec![i];
        self.dfs_backward(l, excluded, no_interior, NodeSet::singleton(i), &mut rev, &mut out);
        out.sort();
        out
    }

    fn dfs_backward(
        &self,
        l: usize,
        excluded: NodeSet,
        no_interior: NodeSet,
        visited: NodeSet,
        rev: &mut Vec<NodeId>,
        out: &mut Vec<Path>,
    ) {
        let at = *rev.last().unwrap();
        for prev in self.in_adj[at - 1].difference(visited).difference(excluded) {
            rev.push(prev);
            let mut p = rev.clone();
            p.reverse();
            out.push(Path(p));
            if rev.len() <= l && !no_interior.contains(prev) {
                self.dfs_backward(l, excluded, no_interior, visited.with(prev), rev, out);
            }
            rev.pop();
        }
    }

    /// Parse `{"n": int, "edges": [[j, i], ...]}`.
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        Graph::new(doc.n, doc.edges.into_iter().map(|[j, i]| (j, i)))
    }

    /// Parse one `j i` pair per line; `#` starts a comment. The node count is
    /// the largest id mentioned.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<NodeId, GraphError> {
                tok.ok_or_else(|| GraphError::Parse(format!("line {}: expected two node ids", lineno + 1)))?
                    .parse::<NodeId>()
                    .map_err(|e| GraphError::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let j = parse(it.next())?;
            let i = parse(it.next())?;
            if it.next().is_some() {
                return Err(GraphError::Parse(format!("line {}: trailing tokens", lineno + 1)));
            }
            edges.push((j, i));
        }
        let n = edges.iter().map(|&(j, i)| j.max(i)).max().unwrap_or(0);
        Graph::new(n, edges)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDoc { n: self.n, edges: self.edges.iter().map(|&(j, i)| [j, i]).collect() };
        serde_json::to_string(&doc).expect("graph serializes")
    }
}

impl FromStr for Graph {
    type Err = GraphError;

    /// JSON when the text starts with `{`, edge list otherwise.
    fn from_str(s: &str) -> Result<Self, GraphError> {
        if s.trim_start().starts_with('{') {
            Graph::from_json(s)
        } else {
            Graph::from_edge_list(s)
        }
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph").field("n", &self.n).field("edges", &self.edges).finish()
    }
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphDoc { n: self.n, edges: self.edges.iter().map(|&(j, i)| [j, i]).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(d)?;
        Graph::new(doc.n, doc.edges.into_iter().map(|[j, i]| (j, i))).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle3() -> Graph {
        Graph::new(3, [(1, 2), (2, 3), (3, 1)]).unwrap()
    }

    fn set(ids: &[NodeId]) -> NodeSet {
        ids.iter().copied().collect()
    }

    #[test]
    fn in_neighbors_on_cycle() {
        let g = cycle3();
        assert_eq!(g.in_neighbors_l(1, 1).unwrap(), set(&[3]));
        assert_eq!(g.in_neighbors_l(1, 2).unwrap(), set(&[2, 3]));
    }

    #[test]
    fn in_neighbors_on_path_graph() {
        let g = Graph::new(4, [(1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(g.in_neighbors_l(4, 2).unwrap(), set(&[2, 3]));
        assert_eq!(g.in_neighbors_l(4, 3).unwrap(), set(&[1, 2, 3]));
    }

    #[test]
    fn out_neighbors() {
        let g = cycle3();
        assert_eq!(g.out_neighbors_l(1, 1).unwrap(), set(&[2]));
        assert_eq!(g.out_neighbors_l(1, 2).unwrap(), set(&[2, 3]));
        let iso = Graph::new(3, [(1, 2)]).unwrap();
        for l in 1..4 {
            assert!(iso.out_neighbors_l(3, l).unwrap().is_empty());
        }
    }

    #[test]
    fn unknown_node_is_an_error() {
        let g = cycle3();
        assert_eq!(g.in_neighbors_l(4, 1), Err(GraphError::UnknownNode { id: 4, n: 3 }));
        assert!(g.out_neighbors_l(0, 1).is_err());
        assert!(g.enumerate_paths(1, 9, 2).is_err());
        assert_eq!(g.in_neighbors_l(1, 0), Err(GraphError::ZeroHops));
    }

    #[test]
    fn paths_on_cycle_and_complete() {
        let g = cycle3();
        assert_eq!(g.enumerate_paths(2, 1, 2).unwrap(), vec![Path::new(vec![2, 3, 1])]);
        let k3 = Graph::complete(3).unwrap();
        assert_eq!(
            k3.enumerate_paths(2, 1, 2).unwrap(),
            vec![Path::new(vec![2, 1]), Path::new(vec![2, 3, 1])]
        );
        let single = Graph::new(2, [(1, 2)]).unwrap();
        assert!(single.enumerate_paths(2, 1, 3).unwrap().is_empty());
    }

    #[test]
    fn paths_into_respects_exclusions() {
        let k4 = Graph::complete(4).unwrap();
        let all = k4.paths_into(1, 2, NodeSet::EMPTY, NodeSet::EMPTY);
        // 3 direct + 3*2 two-hop
        assert_eq!(all.len(), 9);
        let no3 = k4.paths_into(1, 2, NodeSet::EMPTY, set(&[3]));
        assert!(no3.iter().all(|p| !p.interior().contains(&3)));
        assert!(no3.contains(&Path::new(vec![3, 2, 1])));
        let ex3 = k4.paths_into(1, 2, set(&[3]), NodeSet::EMPTY);
        assert!(ex3.iter().all(|p| !p.contains(3)));
        assert_eq!(ex3.len(), 4);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::new(2, [(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(Graph::new(2, [(1, 2), (1, 2)]), Err(GraphError::DuplicateEdge(1, 2)));
        assert_eq!(Graph::new(2, [(1, 3)]), Err(GraphError::UnknownNode { id: 3, n: 2 }));
        assert_eq!(Graph::new(0, []), Err(GraphError::Empty));
    }

    #[test]
    fn parses_both_formats() {
        let a: Graph = r#"{"n": 3, "edges": [[1,2],[2,3],[3,1]]}"#.parse().unwrap();
        let b: Graph = "# a 3-cycle\n1 2\n2 3 # inline\n\n3 1\n".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, cycle3());
        assert!(Graph::from_json(r#"{"n": 3, "edges": [], "extra": 1}"#).is_err());
        assert!("1 2 3".parse::<Graph>().is_err());
        assert!("{not json".parse::<Graph>().is_err());
        let round = Graph::from_json(&a.to_json()).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn nodeset_basics() {
        let s = set(&[5, 1, 3]);
        assert_eq!(s.to_vec(), vec![1, 3, 5]);
        assert_eq!(s.len(), 3);
        assert!(s.contains(3) && !s.contains(2));
        assert_eq!(s.first(), Some(1));
        assert_eq!(NodeSet::full(3), set(&[1, 2, 3]));
        assert_eq!(NodeSet::full(64).len(), 64);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[1,3,5]");
    }
}
