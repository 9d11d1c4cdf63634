//! Data graphs, pattern graphs, node orders, and the bucket hash.
//!
//! The data graph is a large immutable undirected simple graph with an O(1)
//! edge test and a sorted adjacency index. The pattern ("sample") graph is a
//! small undirected graph whose instances are sought. Node ids are arbitrary
//! 64-bit values kept verbatim, so hash-derived orders are reproducible.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Multiplier of the fixed multiplicative mix used for bucket hashing.
pub const HASH_MULT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Hash a node into one of `b` buckets, numbered 1..=b.
///
/// Defined bit-exactly as `((u * HASH_MULT + seed) mod 2^64) mod b + 1` so
/// that reducer assignment and all cost reports are reproducible across runs.
pub fn bucket_hash(node: u64, b: u64, seed: u64) -> u64 {
    debug_assert!(b >= 1);
    node.wrapping_mul(HASH_MULT).wrapping_add(seed) % b + 1
}

/// Immutable undirected simple graph over u64 node ids.
#[derive(Debug, Clone)]
pub struct DataGraph {
    nodes: Vec<u64>,
    edges: Vec<(u64, u64)>,
    adj: HashMap<u64, Vec<u64>>,
    edge_set: HashSet<(u64, u64)>,
    duplicates_collapsed: u64,
}

impl DataGraph {
    /// Build a graph from an edge iterator. Self-loops are rejected,
    /// duplicate edges (in either orientation) are collapsed and counted.
    pub fn from_edges(iter: impl IntoIterator<Item = (u64, u64)>) -> Result<DataGraph> {
        let mut raw = Vec::new();
        for (line, (u, v)) in iter.into_iter().enumerate() {
            if u == v {
                return Err(Error::SelfLoop {
                    line: line + 1,
                    node: u,
                });
            }
            raw.push((u.min(v), u.max(v)));
        }
        Ok(Self::assemble(raw))
    }

    fn assemble(raw: Vec<(u64, u64)>) -> DataGraph {
        let mut edge_set = HashSet::with_capacity(raw.len());
        let mut duplicates = 0u64;
        for &e in &raw {
            if !edge_set.insert(e) {
                duplicates += 1;
            }
        }
        let mut edges: Vec<(u64, u64)> = edge_set.iter().copied().collect();
        edges.sort_unstable();
        let mut adj: HashMap<u64, Vec<u64>> = HashMap::new();
        for &(u, v) in &edges {
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        }
        for list in adj.values_mut() {
            list.sort_unstable();
        }
        let mut nodes: Vec<u64> = adj.keys().copied().collect();
        nodes.sort_unstable();
        DataGraph {
            nodes,
            edges,
            adj,
            edge_set,
            duplicates_collapsed: duplicates,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Distinct undirected edges, each as `(lo, hi)`, sorted.
    pub fn edges(&self) -> &[(u64, u64)] {
        &self.edges
    }

    /// Node ids present in the graph, sorted.
    pub fn nodes(&self) -> &[u64] {
        &self.nodes
    }

    /// How many duplicate input edges were collapsed during loading.
    pub fn duplicates_collapsed(&self) -> u64 {
        self.duplicates_collapsed
    }

    pub fn degree(&self, u: u64) -> usize {
        self.adj.get(&u).map_or(0, |l| l.len())
    }

    pub fn neighbors(&self, u: u64) -> &[u64] {
        self.adj.get(&u).map_or(&[], |l| l.as_slice())
    }

    pub fn max_degree(&self) -> usize {
        self.adj.values().map(|l| l.len()).max().unwrap_or(0)
    }

    /// Unchecked symmetric membership test; `u == v` simply returns false.
    pub fn has_edge(&self, u: u64, v: u64) -> bool {
        self.edge_set.contains(&(u.min(v), u.max(v)))
    }

    /// Membership test with the contract `u != v` enforced.
    pub fn edge_exists(&self, u: u64, v: u64) -> Result<bool> {
        if u == v {
            return Err(Error::EqualEndpoints(u));
        }
        Ok(self.has_edge(u, v))
    }
}

/// Parse an edge-list text: one `u v` pair per line, `#` comments and blank
/// lines ignored, optional `p <count>` header.
type ParsedEdgeList = (Option<usize>, Vec<(u64, u64)>);

fn parse_edge_list(text: &str) -> Result<ParsedEdgeList> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let a = toks.next().unwrap();
        if a == "p" && declared.is_none() && edges.is_empty() {
            let n: usize =
                toks.next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::MalformedLine {
                        line: line_no,
                        text: body.to_string(),
                    })?;
            if toks.next().is_some() {
                return Err(Error::MalformedLine {
                    line: line_no,
                    text: body.to_string(),
                });
            }
            declared = Some(n);
            continue;
        }
        let parse = |t: &str| -> Result<u64> {
            t.parse().map_err(|_| Error::MalformedLine {
                line: line_no,
                text: body.to_string(),
            })
        };
        let u = parse(a)?;
        let v = parse(toks.next().ok_or_else(|| Error::MalformedLine {
            line: line_no,
            text: body.to_string(),
        })?)?;
        if toks.next().is_some() {
            return Err(Error::MalformedLine {
                line: line_no,
                text: body.to_string(),
            });
        }
        if u == v {
            return Err(Error::SelfLoop {
                line: line_no,
                node: u,
            });
        }
        edges.push((u, v));
    }
    Ok((declared, edges))
}

/// Load a data graph from edge-list text.
pub fn load_edge_list(text: &str) -> Result<DataGraph> {
    let (_, edges) = parse_edge_list(text)?;
    DataGraph::from_edges(edges)
}

/// Small undirected pattern graph with named nodes (variables).
///
/// Edges keep their insertion order; the relational subgoals of every
/// generated query follow that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleGraph {
    names: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl SampleGraph {
    pub fn new(names: Vec<String>, edges: Vec<(usize, usize)>) -> Result<SampleGraph> {
        let p = names.len();
        if p == 0 {
            return Err(Error::domain("pattern graph needs at least one node"));
        }
        let mut seen = HashSet::new();
        for (a, b) in &edges {
            if a == b {
                return Err(Error::domain(format!("pattern self-loop at {}", names[*a])));
            }
            if *a >= p || *b >= p {
                return Err(Error::domain("pattern edge endpoint out of range"));
            }
            if !seen.insert((*a.min(b), *a.max(b))) {
                return Err(Error::domain("duplicate pattern edge"));
            }
        }
        let edges = edges
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        Ok(SampleGraph { names, edges })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    /// Edges in insertion order, each normalized `(lo, hi)` by node index.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let e = (a.min(b), a.max(b));
        self.edges.contains(&e)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| *a == v || *b == v)
            .count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_regular(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.node_count())
            .all(|v| self.degree(v) == d)
            .then_some(d)
    }

    /// Is the subgraph induced by `vars` connected? Singletons count as
    /// connected; the empty set does not.
    pub fn is_connected_subset(&self, vars: &[usize]) -> bool {
        if vars.is_empty() {
            return false;
        }
        let set: HashSet<usize> = vars.iter().copied().collect();
        let mut stack = vec![vars[0]];
        let mut seen = HashSet::from([vars[0]]);
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if set.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == vars.len()
    }

    pub fn is_connected(&self) -> bool {
        let all: Vec<usize> = (0..self.node_count()).collect();
        self.is_connected_subset(&all)
    }

    /// Built-in pattern graphs by name: `edge`, `triangle`, `square`,
    /// `lollipop`, `cycle:p`, `path:p`, `star:p`, `clique:p`.
    pub fn builtin(spec: &str) -> Result<SampleGraph> {
        let named = |names: &[&str], edges: Vec<(usize, usize)>| {
            SampleGraph::new(names.iter().map(|s| s.to_string()).collect(), edges)
        };
        if let Some((kind, arg)) = spec.split_once(':') {
            let p: usize = arg
                .parse()
                .map_err(|_| Error::domain(format!("bad pattern size in {spec:?}")))?;
            return match kind {
                "cycle" => {
                    if p < 3 {
                        return Err(Error::domain("cycle needs at least 3 nodes"));
                    }
                    let names = (1..=p).map(|i| format!("X{i}")).collect();
                    let mut edges: Vec<_> = (0..p - 1).map(|i| (i, i + 1)).collect();
                    edges.push((0, p - 1));
                    SampleGraph::new(names, edges)
                }
                "path" => {
                    if p < 2 {
                        return Err(Error::domain("path needs at least 2 nodes"));
                    }
                    let names = (1..=p).map(|i| format!("X{i}")).collect();
                    SampleGraph::new(names, (0..p - 1).map(|i| (i, i + 1)).collect())
                }
                "star" => {
                    if p < 2 {
                        return Err(Error::domain("star needs at least 2 nodes"));
                    }
                    let mut names = vec!["C".to_string()];
                    names.extend((1..p).map(|i| format!("L{i}")));
                    SampleGraph::new(names, (1..p).map(|i| (0, i)).collect())
                }
                "clique" => {
                    if p < 2 {
                        return Err(Error::domain("clique needs at least 2 nodes"));
                    }
                    let names = (1..=p).map(|i| format!("V{i}")).collect();
                    let mut edges = Vec::new();
                    for a in 0..p {
                        for b in a + 1..p {
                            edges.push((a, b));
                        }
                    }
                    SampleGraph::new(names, edges)
                }
                _ => Err(Error::domain(format!("unknown pattern {spec:?}"))),
            };
        }
        match spec {
            "edge" => named(&["A", "B"], vec![(0, 1)]),
            "triangle" => named(&["X", "Y", "Z"], vec![(0, 1), (1, 2), (0, 2)]),
            "square" => named(&["W", "X", "Y", "Z"], vec![(0, 1), (1, 2), (2, 3), (0, 3)]),
            "lollipop" => named(&["W", "X", "Y", "Z"], vec![(0, 1), (1, 2), (1, 3), (2, 3)]),
            _ => Err(Error::domain(format!("unknown pattern {spec:?}"))),
        }
    }

    /// Load a pattern graph from edge-list text (same format as data graphs,
    /// optional `p <count>` header; numeric node ids become variable names).
    pub fn load(text: &str) -> Result<SampleGraph> {
        let (declared, edges) = parse_edge_list(text)?;
        let mut ids: Vec<u64> = Vec::new();
        for &(u, v) in &edges {
            for x in [u, v] {
                if !ids.contains(&x) {
                    ids.push(x);
                }
            }
        }
        if let Some(n) = declared {
            for x in 0..n as u64 {
                if !ids.contains(&x) {
                    ids.push(x);
                }
            }
        }
        let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let names = ids.iter().map(|x| x.to_string()).collect();
        SampleGraph::new(
            names,
            edges
                .into_iter()
                .map(|(u, v)| (index[&u], index[&v]))
                .collect(),
        )
    }
}

impl fmt::Display for SampleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={}", self.node_count())?;
        for &(a, b) in &self.edges {
            write!(f, " {}-{}", self.names[a], self.names[b])?;
        }
        Ok(())
    }
}

/// Which total order on data-graph nodes to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    Id,
    BucketThenId,
    DegreeThenId,
}

/// A total order on data-graph nodes.
///
/// `bucket-then-id` compares `(h(u), u)` lexicographically, `degree-then-id`
/// compares `(deg(u), u)`, and `id` compares node ids directly.
#[derive(Debug, Clone)]
pub enum NodeOrder {
    Id,
    BucketThenId { b: u64, seed: u64 },
    DegreeThenId { deg: HashMap<u64, u64> },
}

impl NodeOrder {
    pub fn id() -> NodeOrder {
        NodeOrder::Id
    }

    pub fn key(&self, u: u64) -> (u64, u64) {
        match self {
            NodeOrder::Id => (0, u),
            NodeOrder::BucketThenId { b, seed } => (bucket_hash(u, *b, *seed), u),
            NodeOrder::DegreeThenId { deg } => (deg.get(&u).copied().unwrap_or(0), u),
        }
    }

    pub fn lt(&self, u: u64, v: u64) -> bool {
        self.key(u) < self.key(v)
    }

    /// The smaller/larger endpoint of `{u, v}` under this order.
    pub fn sort_pair(&self, u: u64, v: u64) -> (u64, u64) {
        if self.lt(u, v) {
            (u, v)
        } else {
            (v, u)
        }
    }
}

/// Build a node order over a specific graph.
pub fn make_order(g: &DataGraph, kind: OrderKind, b: u64, seed: u64) -> Result<NodeOrder> {
    match kind {
        OrderKind::Id => Ok(NodeOrder::Id),
        OrderKind::BucketThenId => {
            if b < 1 {
                return Err(Error::domain("bucket-then-id order needs b >= 1"));
            }
            Ok(NodeOrder::BucketThenId { b, seed })
        }
        OrderKind::DegreeThenId => {
            let deg = g.nodes().iter().map(|&u| (u, g.degree(u) as u64)).collect();
            Ok(NodeOrder::DegreeThenId { deg })
        }
    }
}

/// Deterministic graph generators used by the CLI bench and the test suites.
pub mod generators {
    use super::DataGraph;
    use std::collections::HashSet;

    /// splitmix64; tiny, deterministic, and good enough for test graphs.
    #[derive(Debug, Clone)]
    pub struct Rng {
        state: u64,
    }

    impl Rng {
        pub fn new(seed: u64) -> Rng {
            Rng { state: seed }
        }

        pub fn next_u64(&mut self) -> u64 {
            self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = self.state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        }

        pub fn below(&mut self, n: u64) -> u64 {
            self.next_u64() % n
        }

        pub fn next_f64(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    /// G(n, q): every pair independently an edge with probability q.
    pub fn gnp(n: u64, q: f64, seed: u64) -> DataGraph {
        let mut rng = Rng::new(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.next_f64() < q {
                    edges.push((u, v));
                }
            }
        }
        DataGraph::from_edges(edges).expect("generator emits no self-loops")
    }

    /// Exactly m distinct random edges over n nodes.
    pub fn gnm(n: u64, m: u64, seed: u64) -> DataGraph {
        assert!(m <= n * (n - 1) / 2, "too many edges requested");
        let mut rng = Rng::new(seed);
        let mut set = HashSet::with_capacity(m as usize);
        while (set.len() as u64) < m {
            let u = rng.below(n);
            let v = rng.below(n);
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        DataGraph::from_edges(set).expect("distinct endpoints")
    }

    pub fn complete(n: u64) -> DataGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        DataGraph::from_edges(edges).unwrap()
    }

    pub fn cycle(n: u64) -> DataGraph {
        assert!(n >= 3);
        let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        edges.push((n - 1, 0));
        DataGraph::from_edges(edges).unwrap()
    }

    pub fn path(n: u64) -> DataGraph {
        DataGraph::from_edges((0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    pub fn star(leaves: u64) -> DataGraph {
        DataGraph::from_edges((1..=leaves).map(|i| (0, i))).unwrap()
    }

    /// The Petersen graph: outer 5-cycle, inner pentagram, five spokes.
    pub fn petersen() -> DataGraph {
        let mut edges = Vec::new();
        for i in 0..5u64 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        DataGraph::from_edges(edges).unwrap()
    }

    /// A random forest: each node after the first in its tree attaches to a
    /// random earlier node.
    pub fn random_forest(n: u64, trees: u64, seed: u64) -> DataGraph {
        assert!(trees >= 1 && trees <= n);
        let mut rng = Rng::new(seed);
        let mut edges = Vec::new();
        for v in trees..n {
            edges.push((rng.below(v), v));
        }
        DataGraph::from_edges(edges).unwrap()
    }
}
