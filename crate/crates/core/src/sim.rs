//! One simulated map-reduce round: route keyed edge copies per mapping
//! scheme, account communication exactly, and evaluate the queries at each
//! reducer.
//!
//! Reducers are independent tasks over immutable routed edge lists; they
//! share nothing, may run in any order, and the final instance list is
//! identical regardless of schedule (keys are processed in sorted order and
//! each reducer's output is deterministic).

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::cq::{Atom, CQSet, ConjunctiveQuery};
use crate::error::{Error, Result};
use crate::graph::{bucket_hash, DataGraph, NodeOrder, SampleGraph};

/// A reducer identifier: bucket numbers whose meaning depends on the scheme
/// (strictly increasing set, ordered tuple, or nondecreasing multiset).
pub type Key = Vec<u32>;

/// The mapping schemes of the simulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheme {
    /// Nodes partitioned into b groups, reducers are 3-subsets of groups.
    /// Triangles only.
    Partition { b: u64 },
    /// Ordered bucket triples `[x, y, z]`, one share b per variable.
    /// Triangles only.
    MultiwayTriangle { b: u64 },
    /// Nondecreasing bucket multisets of length p, node order bucket-then-id.
    BucketOrdered { b: u64 },
    /// One slot per query variable, per-variable share counts.
    VariableOriented { shares: Vec<u64> },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Partition { .. } => "partition",
            Scheme::MultiwayTriangle { .. } => "multiway",
            Scheme::BucketOrdered { .. } => "bucket-ordered",
            Scheme::VariableOriented { .. } => "variable-oriented",
        }
    }
}

/// Routed edges plus exact communication counts.
#[derive(Debug, Clone)]
pub struct Routing {
    pub keys: BTreeMap<Key, Vec<(u64, u64)>>,
    /// Exact key-value pairs emitted (per subgoal role where applicable).
    pub kv_emitted: u64,
    /// Pairs before collapsing duplicate keys, where the scheme has any.
    pub kv_raw: Option<u64>,
    /// Size of the scheme's whole key space.
    pub key_space: u64,
}

/// Exact accounting of one simulated round.
#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub scheme: String,
    pub seed: u64,
    pub buckets: Option<u64>,
    pub shares: Option<Vec<u64>>,
    pub edges: u64,
    pub key_space: u64,
    pub key_value_pairs: u64,
    pub key_value_pairs_raw: Option<u64>,
    pub reducers_used: u64,
    pub per_edge_replication: f64,
    pub instances_found: u64,
    /// Sum over reducers of (local edge count)^exponent.
    pub reducer_work_proxy: f64,
    pub work_proxy_exponent: f64,
    /// (local edge count, number of reducers with that count), sorted.
    pub reducer_edge_histogram: Vec<(u64, u64)>,
}

/// One discovered instance: the query that produced it and the data nodes in
/// pattern-variable order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Instance {
    pub cq: usize,
    pub tuple: Vec<u64>,
}

impl Instance {
    pub fn render(&self, s: &SampleGraph) -> String {
        let vals: Vec<String> = self
            .tuple
            .iter()
            .enumerate()
            .map(|(v, node)| format!("v({})={}", s.name(v), node))
            .collect();
        format!("cq{}: {}", self.cq, vals.join(" "))
    }
}

fn add_edge(keys: &mut BTreeMap<Key, Vec<(u64, u64)>>, key: Key, e: (u64, u64)) {
    keys.entry(key).or_default().push(e);
}

/// Partition routing: an edge inside one group goes to every 3-subset
/// containing that group, a cross-group edge to every 3-subset containing
/// both groups.
pub fn map_partition(g: &DataGraph, b: u64, seed: u64) -> Result<Routing> {
    if b < 3 {
        return Err(Error::domain(
            "partition routing needs b >= 3 (no 3-subsets otherwise)",
        ));
    }
    let mut keys = BTreeMap::new();
    let mut kv = 0u64;
    for &(u, v) in g.edges() {
        let pu = bucket_hash(u, b, seed) as u32;
        let pv = bucket_hash(v, b, seed) as u32;
        if pu == pv {
            for i in 1..=b as u32 {
                for j in i + 1..=b as u32 {
                    if i == pu || j == pu {
                        continue;
                    }
                    let mut key = vec![pu, i, j];
                    key.sort_unstable();
                    add_edge(&mut keys, key, (u, v));
                    kv += 1;
                }
            }
        } else {
            for w in 1..=b as u32 {
                if w == pu || w == pv {
                    continue;
                }
                let mut key = vec![pu, pv, w];
                key.sort_unstable();
                add_edge(&mut keys, key, (u, v));
                kv += 1;
            }
        }
    }
    let key_space = (b * (b - 1) * (b - 2) / 6).max(1);
    Ok(Routing {
        keys,
        kv_emitted: kv,
        kv_raw: None,
        key_space,
    })
}

/// Ordered-triple routing for the triangle join: each edge is sent to the
/// three groups `[h(u),h(v),*]`, `[*,h(u),h(v)]`, `[h(u),*,h(v)]`; exactly
/// two of the 3b raw keys coincide, leaving 3b-2 distinct keys per edge.
pub fn map_multiway_triangle(g: &DataGraph, b: u64, seed: u64) -> Result<Routing> {
    if b < 1 {
        return Err(Error::domain("multiway routing needs b >= 1"));
    }
    let mut keys = BTreeMap::new();
    let mut kv = 0u64;
    let mut raw = 0u64;
    for &(u, v) in g.edges() {
        let hu = bucket_hash(u, b, seed) as u32;
        let hv = bucket_hash(v, b, seed) as u32;
        let mut distinct: HashSet<Key> = HashSet::with_capacity(3 * b as usize);
        for w in 1..=b as u32 {
            distinct.insert(vec![hu, hv, w]);
            distinct.insert(vec![w, hu, hv]);
            distinct.insert(vec![hu, w, hv]);
        }
        raw += 3 * b;
        debug_assert_eq!(distinct.len() as u64, 3 * b - 2);
        kv += distinct.len() as u64;
        for key in distinct {
            add_edge(&mut keys, key, (u, v));
        }
    }
    Ok(Routing {
        keys,
        kv_emitted: kv,
        kv_raw: Some(raw),
        key_space: b.pow(3),
    })
}

/// Bucket-oriented routing: the key multiset holds `{h(u), h(v)}` plus p-2
/// free bucket values, sorted nondecreasing.
pub fn map_bucket_ordered(g: &DataGraph, b: u64, p: usize, seed: u64) -> Result<Routing> {
    if b < 1 || p < 2 {
        return Err(Error::domain(
            "bucket-ordered routing needs b >= 1 and p >= 2",
        ));
    }
    let mut keys = BTreeMap::new();
    let mut kv = 0u64;
    let mut filler: Vec<u32> = Vec::with_capacity(p - 2);
    for &(u, v) in g.edges() {
        let hu = bucket_hash(u, b, seed) as u32;
        let hv = bucket_hash(v, b, seed) as u32;
        fill_multisets(b as u32, p - 2, 1, &mut filler, &mut |fill| {
            let mut key: Key = Vec::with_capacity(p);
            key.push(hu);
            key.push(hv);
            key.extend_from_slice(fill);
            key.sort_unstable();
            add_edge(&mut keys, key, (u, v));
            kv += 1;
        });
    }
    let key_space = crate::plan::useful_reducer_count(b, p as u64)?;
    let key_space = u64::try_from(key_space)
        .map_err(|_| Error::domain("key space exceeds u64 at this scale"))?;
    Ok(Routing {
        keys,
        kv_emitted: kv,
        kv_raw: None,
        key_space,
    })
}

fn fill_multisets(b: u32, need: usize, from: u32, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if need == 0 {
        f(cur);
        return;
    }
    for x in from..=b {
        cur.push(x);
        fill_multisets(b, need - 1, x, cur, f);
        cur.pop();
    }
}

/// Variable-oriented routing: for every oriented subgoal E(A,B) in the set,
/// each properly ordered data tuple (u,v) goes to every key whose A slot is
/// h(u) mod share_A and B slot is h(v) mod share_B, all other slots free.
/// The emitted-pair count equals the cost expression exactly.
pub fn map_variable_oriented(
    g: &DataGraph,
    cqs: &CQSet,
    shares: &[u64],
    seed: u64,
) -> Result<Routing> {
    let p = cqs.sample.node_count();
    if shares.len() != p || shares.iter().any(|&s| s < 1) {
        return Err(Error::domain(
            "one integer share >= 1 per pattern variable is required",
        ));
    }
    let mut oriented: Vec<(usize, usize)> = Vec::new();
    for q in &cqs.queries {
        for sg in &q.subgoals {
            if !oriented.contains(&(sg.first, sg.second)) {
                oriented.push((sg.first, sg.second));
            }
        }
    }
    let key_space: u64 = shares
        .iter()
        .try_fold(1u64, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::domain("share product exceeds u64"))?;

    let mut keys = BTreeMap::new();
    let mut kv = 0u64;
    let mut dedup: HashSet<Key> = HashSet::new();
    for &(u, v) in g.edges() {
        dedup.clear();
        for &(a, bvar) in &oriented {
            let mut slots: Vec<u32> = vec![0; p];
            slots[a] = bucket_hash(u, shares[a], seed) as u32;
            slots[bvar] = bucket_hash(v, shares[bvar], seed) as u32;
            let free: Vec<usize> = (0..p).filter(|&i| i != a && i != bvar).collect();
            enumerate_free(&free, shares, &mut slots, 0, &mut |key| {
                kv += 1;
                dedup.insert(key.to_vec());
            });
        }
        for key in &dedup {
            add_edge(&mut keys, key.clone(), (u, v));
        }
    }
    Ok(Routing {
        keys,
        kv_emitted: kv,
        kv_raw: None,
        key_space,
    })
}

fn enumerate_free(
    free: &[usize],
    shares: &[u64],
    slots: &mut Vec<u32>,
    i: usize,
    f: &mut impl FnMut(&[u32]),
) {
    if i == free.len() {
        f(slots);
        return;
    }
    let var = free[i];
    for x in 1..=shares[var] as u32 {
        slots[var] = x;
        enumerate_free(free, shares, slots, i + 1, f);
    }
    slots[var] = 0;
}

/// Scheme-specific rule restricting which data node a variable may take at a
/// given reducer, plus a whole-assignment acceptance test. Together they
/// guarantee each instance is emitted by exactly one reducer.
enum SlotRule<'a> {
    /// Assignment hashes must use up the key multiset exactly.
    Multiset {
        remaining: HashMap<u32, u32>,
        b: u64,
        seed: u64,
    },
    /// Variable v must hash to key[v] under its own share count.
    Positional {
        key: &'a Key,
        shares: Vec<u64>,
        seed: u64,
    },
    /// Node groups must lie inside the key; the instance belongs to the
    /// lexicographically smallest valid key containing its group support.
    PartitionCanonical { key: &'a Key, b: u64, seed: u64 },
}

impl SlotRule<'_> {
    fn try_bind(&mut self, var: usize, node: u64) -> bool {
        match self {
            SlotRule::Multiset { remaining, b, seed } => {
                let h = bucket_hash(node, *b, *seed) as u32;
                match remaining.get_mut(&h) {
                    Some(c) if *c > 0 => {
                        *c -= 1;
                        true
                    }
                    _ => false,
                }
            }
            SlotRule::Positional { key, shares, seed } => {
                bucket_hash(node, shares[var], *seed) as u32 == key[var]
            }
            SlotRule::PartitionCanonical { key, b, seed } => {
                key.contains(&(bucket_hash(node, *b, *seed) as u32))
            }
        }
    }

    fn unbind(&mut self, _var: usize, node: u64) {
        if let SlotRule::Multiset { remaining, b, seed } = self {
            let h = bucket_hash(node, *b, *seed) as u32;
            *remaining.get_mut(&h).expect("unbinding a bound hash") += 1;
        }
    }

    fn accept_full(&self, assignment: &[u64]) -> bool {
        match self {
            SlotRule::Multiset { .. } | SlotRule::Positional { .. } => true,
            SlotRule::PartitionCanonical { key, b, seed } => {
                let mut support: Vec<u32> = assignment
                    .iter()
                    .map(|&n| bucket_hash(n, *b, *seed) as u32)
                    .collect();
                support.sort_unstable();
                support.dedup();
                let mut canonical = support.clone();
                let mut next = 1u32;
                while canonical.len() < 3 {
                    if !support.contains(&next) {
                        canonical.push(next);
                    }
                    next += 1;
                }
                canonical.sort_unstable();
                canonical == **key
            }
        }
    }
}

struct LocalGraph {
    edges: HashSet<(u64, u64)>,
    adj: HashMap<u64, Vec<u64>>,
}

impl LocalGraph {
    fn new(edges: &[(u64, u64)]) -> LocalGraph {
        let mut set = HashSet::with_capacity(edges.len());
        let mut adj: HashMap<u64, Vec<u64>> = HashMap::new();
        for &(u, v) in edges {
            if set.insert((u.min(v), u.max(v))) {
                adj.entry(u).or_default().push(v);
                adj.entry(v).or_default().push(u);
            }
        }
        for l in adj.values_mut() {
            l.sort_unstable();
        }
        LocalGraph { edges: set, adj }
    }

    fn has(&self, u: u64, v: u64) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    fn neighbors(&self, u: u64) -> &[u64] {
        self.adj.get(&u).map_or(&[], |l| l.as_slice())
    }
}

/// Process subgoals in an order where each one (after the first) shares a
/// variable with those already processed, when possible.
fn subgoal_order(q: &ConjunctiveQuery) -> Vec<usize> {
    let n = q.subgoals.len();
    let mut order = Vec::with_capacity(n);
    let mut bound: HashSet<usize> = HashSet::new();
    let mut used = vec![false; n];
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !used[i])
            .max_by_key(|&i| {
                let sg = &q.subgoals[i];
                usize::from(bound.contains(&sg.first)) + usize::from(bound.contains(&sg.second))
            })
            .unwrap();
        used[next] = true;
        bound.insert(q.subgoals[next].first);
        bound.insert(q.subgoals[next].second);
        order.push(next);
    }
    order
}

fn condition_holds(cq: &ConjunctiveQuery, vals: &[u64], order: &NodeOrder) -> bool {
    if cq.condition.disjuncts.is_empty() {
        return true;
    }
    cq.condition.disjuncts.iter().any(|conj| {
        conj.iter().all(|atom| match *atom {
            Atom::Lt(a, b) => order.lt(vals[a], vals[b]),
            Atom::Ne(a, b) => vals[a] != vals[b],
        })
    })
}

/// Evaluate every query of the set on one reducer's local subgraph.
pub fn reduce_evaluate(
    key: &Key,
    edges: &[(u64, u64)],
    cqs: &CQSet,
    order: &NodeOrder,
    scheme: &Scheme,
    seed: u64,
) -> Vec<Instance> {
    let local = LocalGraph::new(edges);
    let p = cqs.sample.node_count();
    let mut out = Vec::new();
    for (qi, q) in cqs.queries.iter().enumerate() {
        let mut rule = make_rule(key, scheme, seed, p);
        let sg_order = subgoal_order(q);
        let mut assign: Vec<Option<u64>> = vec![None; p];
        let mut used: HashSet<u64> = HashSet::new();
        eval_rec(
            &local,
            q,
            qi,
            order,
            &sg_order,
            0,
            &mut assign,
            &mut used,
            &mut rule,
            &mut out,
        );
    }
    out
}

fn make_rule<'a>(key: &'a Key, scheme: &Scheme, seed: u64, p: usize) -> SlotRule<'a> {
    match scheme {
        Scheme::Partition { b } => SlotRule::PartitionCanonical { key, b: *b, seed },
        Scheme::MultiwayTriangle { b } => SlotRule::Positional {
            key,
            shares: vec![*b; p],
            seed,
        },
        Scheme::BucketOrdered { b } => {
            let mut remaining: HashMap<u32, u32> = HashMap::new();
            for &x in key {
                *remaining.entry(x).or_insert(0) += 1;
            }
            SlotRule::Multiset {
                remaining,
                b: *b,
                seed,
            }
        }
        Scheme::VariableOriented { shares } => SlotRule::Positional {
            key,
            shares: shares.clone(),
            seed,
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn eval_rec(
    local: &LocalGraph,
    q: &ConjunctiveQuery,
    qi: usize,
    order: &NodeOrder,
    sg_order: &[usize],
    step: usize,
    assign: &mut Vec<Option<u64>>,
    used: &mut HashSet<u64>,
    rule: &mut SlotRule,
    out: &mut Vec<Instance>,
) {
    if step == sg_order.len() {
        // all subgoals satisfied; variables outside every subgoal stay
        // unbound only for patterns with isolated nodes
        if assign.iter().any(|a| a.is_none()) {
            let v = assign.iter().position(|a| a.is_none()).unwrap();
            let nodes: Vec<u64> = local.adj.keys().copied().collect();
            for node in nodes {
                if bind(rule, used, assign, v, node) {
                    eval_rec(local, q, qi, order, sg_order, step, assign, used, rule, out);
                    release(rule, used, assign, v, node);
                }
            }
            return;
        }
        let vals: Vec<u64> = assign.iter().map(|a| a.unwrap()).collect();
        if condition_holds(q, &vals, order) && rule.accept_full(&vals) {
            out.push(Instance {
                cq: qi,
                tuple: vals,
            });
        }
        return;
    }
    let sg = q.subgoals[sg_order[step]];
    let (a, b) = (sg.first, sg.second);
    match (assign[a], assign[b]) {
        (Some(x), Some(y)) => {
            if order.lt(x, y) && local.has(x, y) {
                eval_rec(
                    local,
                    q,
                    qi,
                    order,
                    sg_order,
                    step + 1,
                    assign,
                    used,
                    rule,
                    out,
                );
            }
        }
        (Some(x), None) => {
            let nbrs: Vec<u64> = local.neighbors(x).to_vec();
            for y in nbrs {
                if order.lt(x, y) && bind(rule, used, assign, b, y) {
                    eval_rec(
                        local,
                        q,
                        qi,
                        order,
                        sg_order,
                        step + 1,
                        assign,
                        used,
                        rule,
                        out,
                    );
                    release(rule, used, assign, b, y);
                }
            }
        }
        (None, Some(y)) => {
            let nbrs: Vec<u64> = local.neighbors(y).to_vec();
            for x in nbrs {
                if order.lt(x, y) && bind(rule, used, assign, a, x) {
                    eval_rec(
                        local,
                        q,
                        qi,
                        order,
                        sg_order,
                        step + 1,
                        assign,
                        used,
                        rule,
                        out,
                    );
                    release(rule, used, assign, a, x);
                }
            }
        }
        (None, None) => {
            let edges: Vec<(u64, u64)> = local.edges.iter().copied().collect();
            for (u, v) in edges {
                let (x, y) = order.sort_pair(u, v);
                if bind(rule, used, assign, a, x) {
                    if bind(rule, used, assign, b, y) {
                        eval_rec(
                            local,
                            q,
                            qi,
                            order,
                            sg_order,
                            step + 1,
                            assign,
                            used,
                            rule,
                            out,
                        );
                        release(rule, used, assign, b, y);
                    }
                    release(rule, used, assign, a, x);
                }
            }
        }
    }
}

fn bind(
    rule: &mut SlotRule,
    used: &mut HashSet<u64>,
    assign: &mut [Option<u64>],
    var: usize,
    node: u64,
) -> bool {
    if used.contains(&node) {
        return false;
    }
    if !rule.try_bind(var, node) {
        return false;
    }
    used.insert(node);
    assign[var] = Some(node);
    true
}

fn release(
    rule: &mut SlotRule,
    used: &mut HashSet<u64>,
    assign: &mut [Option<u64>],
    var: usize,
    node: u64,
) {
    rule.unbind(var, node);
    used.remove(&node);
    assign[var] = None;
}

/// Route edges for a scheme. Partition and the ordered-triple scheme apply
/// to the triangle pattern only.
pub fn route(g: &DataGraph, scheme: &Scheme, cqs: &CQSet, seed: u64) -> Result<Routing> {
    let p = cqs.sample.node_count();
    match scheme {
        Scheme::Partition { b } => {
            require_triangle(cqs)?;
            map_partition(g, *b, seed)
        }
        Scheme::MultiwayTriangle { b } => {
            require_triangle(cqs)?;
            map_multiway_triangle(g, *b, seed)
        }
        Scheme::BucketOrdered { b } => map_bucket_ordered(g, *b, p, seed),
        Scheme::VariableOriented { shares } => map_variable_oriented(g, cqs, shares, seed),
    }
}

fn require_triangle(cqs: &CQSet) -> Result<()> {
    let s = &cqs.sample;
    if s.node_count() != 3 || s.edge_count() != 3 {
        return Err(Error::structural(format!(
            "this scheme handles the triangle pattern only, got {s}"
        )));
    }
    Ok(())
}

/// The node order a scheme uses for the edge relation and the conditions.
pub fn scheme_order(scheme: &Scheme, seed: u64) -> NodeOrder {
    match scheme {
        Scheme::BucketOrdered { b } => NodeOrder::BucketThenId { b: *b, seed },
        _ => NodeOrder::Id,
    }
}

/// Output of one simulated round.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub instances: Vec<Instance>,
    pub report: CostReport,
}

/// Run one full round: route, evaluate every reducer (in parallel), and
/// account costs exactly. The global instance list has no duplicates and,
/// with a correct query set, equals the serial result.
pub fn run_round(g: &DataGraph, scheme: &Scheme, cqs: &CQSet, seed: u64) -> Result<RunOutput> {
    let routing = route(g, scheme, cqs, seed)?;
    let order = scheme_order(scheme, seed);

    let entries: Vec<(&Key, &Vec<(u64, u64)>)> = routing.keys.iter().collect();
    let mut per_reducer: Vec<Vec<Instance>> = entries
        .par_iter()
        .map(|(key, edges)| {
            let mut found = reduce_evaluate(key, edges, cqs, &order, scheme, seed);
            found.sort();
            found
        })
        .collect();
    let mut instances = Vec::new();
    for found in per_reducer.iter_mut() {
        instances.append(found);
    }

    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut work = 0.0f64;
    for edges in routing.keys.values() {
        let m = edges.len() as u64;
        *histogram.entry(m).or_insert(0) += 1;
        work += (m as f64).powf(1.5);
    }
    let m = g.edge_count() as u64;
    let report = CostReport {
        scheme: scheme.name().to_string(),
        seed,
        buckets: match scheme {
            Scheme::Partition { b }
            | Scheme::MultiwayTriangle { b }
            | Scheme::BucketOrdered { b } => Some(*b),
            Scheme::VariableOriented { .. } => None,
        },
        shares: match scheme {
            Scheme::VariableOriented { shares } => Some(shares.clone()),
            _ => None,
        },
        edges: m,
        key_space: routing.key_space,
        key_value_pairs: routing.kv_emitted,
        key_value_pairs_raw: routing.kv_raw,
        reducers_used: routing.keys.len() as u64,
        per_edge_replication: if m == 0 {
            0.0
        } else {
            routing.kv_emitted as f64 / m as f64
        },
        instances_found: instances.len() as u64,
        reducer_work_proxy: work,
        work_proxy_exponent: 1.5,
        reducer_edge_histogram: histogram.into_iter().collect(),
    };
    Ok(RunOutput { instances, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclecq::cycle_cqs;
    use crate::enumerate::{brute_force_oracle, canonical_instance_set};
    use crate::graph::generators;
    use crate::samplecq::generate_cqs;

    fn triangle_cqs() -> CQSet {
        generate_cqs(&SampleGraph::builtin("triangle").unwrap()).unwrap()
    }

    fn check_exactly_once_vs_oracle(g: &DataGraph, cqs: &CQSet, out: &RunOutput) {
        let auts = crate::cq::automorphisms(&cqs.sample).unwrap();
        let (set, dups) =
            canonical_instance_set(out.instances.iter().map(|i| i.tuple.clone()), &auts);
        assert_eq!(dups, 0, "an instance was discovered twice");
        let oracle = brute_force_oracle(g, &cqs.sample).unwrap();
        assert_eq!(set, oracle);
    }

    #[test]
    fn partition_per_edge_replication() {
        let g = generators::gnm(500, 10_000, 3);
        let r = map_partition(&g, 12, 99).unwrap();
        let per_edge = r.kv_emitted as f64 / g.edge_count() as f64;
        assert!(
            (per_edge - 13.75).abs() / 13.75 < 0.02,
            "per-edge {per_edge}"
        );
        assert_eq!(r.key_space, 220);
    }

    #[test]
    fn partition_cross_edge_single_key_at_b3() {
        let g = crate::graph::load_edge_list("1 2").unwrap();
        let (u, v) = g.edges()[0];
        let seed = 5;
        if bucket_hash(u, 3, seed) != bucket_hash(v, 3, seed) {
            let r = map_partition(&g, 3, seed).unwrap();
            assert_eq!(r.kv_emitted, 1);
        }
    }

    #[test]
    fn multiway_key_counts() {
        let g = generators::gnm(100, 500, 7);
        let r = map_multiway_triangle(&g, 6, 11).unwrap();
        assert_eq!(r.kv_emitted, 16 * 500);
        assert_eq!(r.kv_raw, Some(18 * 500));
        assert_eq!(r.key_space, 216);

        let r1 = map_multiway_triangle(&g, 1, 11).unwrap();
        assert_eq!(r1.kv_emitted, 500);
        assert_eq!(r1.keys.len(), 1);
    }

    #[test]
    fn bucket_ordered_key_counts() {
        let g = generators::gnm(200, 2_000, 1);
        let r = map_bucket_ordered(&g, 10, 3, 42).unwrap();
        assert_eq!(r.kv_emitted, 10 * 2_000);
        assert_eq!(r.key_space, 220);

        let r = map_bucket_ordered(&g, 7, 2, 42).unwrap();
        assert_eq!(r.kv_emitted, 2_000);
    }

    #[test]
    fn variable_oriented_matches_cost_expression() {
        let cqs = generate_cqs(&SampleGraph::builtin("square").unwrap()).unwrap();
        let g = generators::gnp(20, 0.3, 9);
        let shares = vec![2u64, 3, 2, 3];
        let r = map_variable_oriented(&g, &cqs, &shares, 4).unwrap();
        // e * (yz + 2wz + 2wx + xy) with (w,x,y,z) = (2,3,2,3)
        let per_edge = 2 * 3 + 2 * (2 * 3) + 2 * (2 * 3) + 3 * 2;
        assert_eq!(r.kv_emitted, per_edge * g.edge_count() as u64);
        assert_eq!(r.key_space, 36);
    }

    #[test]
    fn variable_oriented_single_edge_trivial() {
        let cqs = generate_cqs(&SampleGraph::builtin("edge").unwrap()).unwrap();
        let g = crate::graph::load_edge_list("3 9").unwrap();
        let r = map_variable_oriented(&g, &cqs, &[1, 1], 0).unwrap();
        assert_eq!(r.kv_emitted, 1);
        assert_eq!(r.keys.len(), 1);
    }

    #[test]
    fn k4_triangles_bucket_ordered() {
        let g = generators::complete(4);
        let out = run_round(&g, &Scheme::BucketOrdered { b: 2 }, &triangle_cqs(), 17).unwrap();
        assert_eq!(out.instances.len(), 4);
        check_exactly_once_vs_oracle(&g, &triangle_cqs(), &out);
    }

    #[test]
    fn single_bucket_is_serial_evaluation() {
        let g = generators::gnp(15, 0.4, 2);
        let cqs = triangle_cqs();
        let out = run_round(&g, &Scheme::BucketOrdered { b: 1 }, &cqs, 5).unwrap();
        assert_eq!(out.report.reducers_used, 1);
        assert_eq!(out.report.per_edge_replication, 1.0);
        check_exactly_once_vs_oracle(&g, &cqs, &out);
    }

    #[test]
    fn petersen_pentagons_bucket_ordered() {
        let g = generators::petersen();
        let cqs = cycle_cqs(5).unwrap();
        let out = run_round(&g, &Scheme::BucketOrdered { b: 3 }, &cqs, 23).unwrap();
        assert_eq!(out.instances.len(), 12);
        check_exactly_once_vs_oracle(&g, &cqs, &out);
    }

    #[test]
    fn four_cycle_square_once() {
        let g = generators::cycle(4);
        let cqs = generate_cqs(&SampleGraph::builtin("square").unwrap()).unwrap();
        let out = run_round(&g, &Scheme::BucketOrdered { b: 2 }, &cqs, 3).unwrap();
        assert_eq!(out.instances.len(), 1);
    }

    #[test]
    fn schemes_agree_on_triangles() {
        let g = generators::gnp(18, 0.35, 6);
        let cqs = triangle_cqs();
        let oracle = brute_force_oracle(&g, &cqs.sample).unwrap();
        let auts = crate::cq::automorphisms(&cqs.sample).unwrap();
        for scheme in [
            Scheme::Partition { b: 4 },
            Scheme::MultiwayTriangle { b: 3 },
            Scheme::BucketOrdered { b: 3 },
            Scheme::VariableOriented {
                shares: vec![2, 2, 2],
            },
        ] {
            let out = run_round(&g, &scheme, &cqs, 31).unwrap();
            let (set, dups) =
                canonical_instance_set(out.instances.iter().map(|i| i.tuple.clone()), &auts);
            assert_eq!(dups, 0, "{}", scheme.name());
            assert_eq!(set, oracle, "{}", scheme.name());
        }
    }

    #[test]
    fn variable_oriented_c6_exactly_once() {
        let g = generators::gnp(14, 0.5, 8);
        let cqs = cycle_cqs(6).unwrap();
        let out = run_round(
            &g,
            &Scheme::VariableOriented {
                shares: vec![1, 2, 2, 1, 2, 2],
            },
            &cqs,
            9,
        )
        .unwrap();
        check_exactly_once_vs_oracle(&g, &cqs, &out);
    }

    #[test]
    fn runs_are_deterministic() {
        let g = generators::gnp(16, 0.4, 12);
        let cqs = triangle_cqs();
        let a = run_round(&g, &Scheme::BucketOrdered { b: 4 }, &cqs, 77).unwrap();
        let b = run_round(&g, &Scheme::BucketOrdered { b: 4 }, &cqs, 77).unwrap();
        assert_eq!(a.instances, b.instances);
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
    }

    #[test]
    fn partition_rejects_non_triangles() {
        let g = generators::complete(4);
        let cqs = generate_cqs(&SampleGraph::builtin("square").unwrap()).unwrap();
        assert!(run_round(&g, &Scheme::Partition { b: 4 }, &cqs, 0).is_err());
        assert!(map_partition(&g, 2, 0).is_err());
    }

    #[test]
    fn instance_rendering() {
        let s = SampleGraph::builtin("triangle").unwrap();
        let i = Instance {
            cq: 0,
            tuple: vec![3, 5, 9],
        };
        assert_eq!(i.render(&s), "cq0: v(X)=3 v(Y)=5 v(Z)=9");
    }
}
