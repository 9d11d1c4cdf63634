//! Serial enumeration: the brute-force oracle, properly ordered 2-paths, the
//! odd-cycle algorithm, pattern decomposition, instance composition, and the
//! bounded-degree enumerator.
//!
//! An instance is an injective mapping from pattern variables to data nodes
//! that preserves every pattern edge, identified by the lexicographically
//! smallest node tuple in its automorphism orbit. Every enumerator in this
//! module emits each instance class exactly once.

use std::collections::{BTreeSet, HashMap, HashSet};

use itertools::Itertools;

use crate::cq::automorphisms;
use crate::error::{Error, Result};
use crate::graph::{DataGraph, NodeOrder, SampleGraph};

/// Node budget for the brute-force oracle.
pub const ORACLE_NODE_LIMIT: usize = 64;

/// The canonical member of a tuple's automorphism orbit.
pub fn canonical_tuple(tuple: &[u64], auts: &[Vec<usize>]) -> Vec<u64> {
    let mut best: Option<Vec<u64>> = None;
    for alpha in auts {
        let cand: Vec<u64> = alpha.iter().map(|&v| tuple[v]).collect();
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.expect("automorphism group contains the identity")
}

/// Canonicalize a stream of instance tuples, counting collisions. A nonzero
/// duplicate count means some instance class was produced more than once.
pub fn canonical_instance_set(
    tuples: impl IntoIterator<Item = Vec<u64>>,
    auts: &[Vec<usize>],
) -> (BTreeSet<Vec<u64>>, u64) {
    let mut set = BTreeSet::new();
    let mut duplicates = 0;
    for t in tuples {
        if !set.insert(canonical_tuple(&t, auts)) {
            duplicates += 1;
        }
    }
    (set, duplicates)
}

/// Ground truth: backtracking over all injective edge-preserving mappings,
/// deduplicated by automorphism class.
pub fn brute_force_oracle(g: &DataGraph, s: &SampleGraph) -> Result<BTreeSet<Vec<u64>>> {
    if g.node_count() > ORACLE_NODE_LIMIT {
        return Err(Error::OracleGuard {
            n: g.node_count(),
            limit: ORACLE_NODE_LIMIT,
        });
    }
    let p = s.node_count();
    let auts = automorphisms(s)?;

    // assign variables in an order that keeps each prefix as connected as
    // possible, so edge constraints prune early
    let mut var_order: Vec<usize> = Vec::with_capacity(p);
    let mut remaining: BTreeSet<usize> = (0..p).collect();
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .copied()
            .max_by_key(|&v| {
                (
                    s.neighbors(v)
                        .iter()
                        .filter(|w| var_order.contains(w))
                        .count(),
                    s.degree(v),
                )
            })
            .unwrap();
        remaining.remove(&next);
        var_order.push(next);
    }

    let mut out = BTreeSet::new();
    let mut assignment = vec![0u64; p];
    let mut used: HashSet<u64> = HashSet::new();
    oracle_rec(
        g,
        s,
        &var_order,
        0,
        &mut assignment,
        &mut used,
        &auts,
        &mut out,
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn oracle_rec(
    g: &DataGraph,
    s: &SampleGraph,
    var_order: &[usize],
    depth: usize,
    assignment: &mut Vec<u64>,
    used: &mut HashSet<u64>,
    auts: &[Vec<usize>],
    out: &mut BTreeSet<Vec<u64>>,
) {
    if depth == var_order.len() {
        out.insert(canonical_tuple(assignment, auts));
        return;
    }
    let v = var_order[depth];
    let assigned_nbrs: Vec<usize> = s
        .neighbors(v)
        .into_iter()
        .filter(|w| var_order[..depth].contains(w))
        .collect();
    let try_node = |node: u64,
                    assignment: &mut Vec<u64>,
                    used: &mut HashSet<u64>,
                    out: &mut BTreeSet<Vec<u64>>| {
        if used.contains(&node) {
            return;
        }
        if assigned_nbrs
            .iter()
            .all(|&w| g.has_edge(node, assignment[w]))
        {
            assignment[v] = node;
            used.insert(node);
            oracle_rec(g, s, var_order, depth + 1, assignment, used, auts, out);
            used.remove(&node);
        }
    };
    if let Some(&w) = assigned_nbrs.first() {
        // candidates must neighbor the first assigned pattern-neighbor
        for &node in g.neighbors(assignment[w]) {
            try_node(node, assignment, used, out);
        }
    } else {
        for &node in g.nodes() {
            try_node(node, assignment, used, out);
        }
    }
}

/// A 2-path whose midpoint precedes both endpoints in the active order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoPath {
    pub mid: u64,
    /// Endpoints, smaller one first under the active order.
    pub ends: (u64, u64),
}

/// All properly ordered 2-paths; with a degree-nondecreasing order there are
/// O(m^{3/2}) of them.
pub fn properly_ordered_2paths(g: &DataGraph, order: &NodeOrder) -> Vec<TwoPath> {
    let mut out = Vec::new();
    for &v in g.nodes() {
        let after: Vec<u64> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| order.lt(v, u))
            .collect();
        for i in 0..after.len() {
            for j in i + 1..after.len() {
                let (a, b) = order.sort_pair(after[i], after[j]);
                out.push(TwoPath {
                    mid: v,
                    ends: (a, b),
                });
            }
        }
    }
    out
}

/// Count properly ordered 2-paths without materializing them.
pub fn properly_ordered_2path_count(g: &DataGraph, order: &NodeOrder) -> u64 {
    g.nodes()
        .iter()
        .map(|&v| {
            let d = g.neighbors(v).iter().filter(|&&u| order.lt(v, u)).count() as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum()
}

/// Enumerate all cycles with 2k+1 nodes, each exactly once.
///
/// The outer loop runs over properly ordered 2-paths `v_{2k+1} - v1 - v2`
/// with `v1 < v2 < v_{2k+1}`; the inner loop over sets of k-1 node-disjoint
/// edges avoiding those three nodes, with `v1` preceding every selected
/// endpoint; permutations and orientations of the selected edges are then
/// checked against the edge index. k=1 (triangles) closes 2-paths directly.
pub fn odd_cycle_enum(g: &DataGraph, k: usize, order: &NodeOrder) -> Result<BTreeSet<Vec<u64>>> {
    Ok(odd_cycle_enum_counted(g, k, order)?.0)
}

/// Same as [`odd_cycle_enum`], also returning the number of edge-subset
/// combinations inspected (a deterministic work measure).
pub fn odd_cycle_enum_counted(
    g: &DataGraph,
    k: usize,
    order: &NodeOrder,
) -> Result<(BTreeSet<Vec<u64>>, u64)> {
    if k < 1 {
        return Err(Error::domain("odd cycle enumeration needs k >= 1"));
    }
    let p = 2 * k + 1;
    let cycle_auts = automorphisms(&SampleGraph::builtin(&format!("cycle:{p}"))?)?;
    let mut out = BTreeSet::new();
    let mut work = 0u64;

    if k == 1 {
        for tp in properly_ordered_2paths(g, order) {
            work += 1;
            if g.has_edge(tp.ends.0, tp.ends.1) {
                out.insert(canonical_tuple(
                    &[tp.mid, tp.ends.0, tp.ends.1],
                    &cycle_auts,
                ));
            }
        }
        return Ok((out, work));
    }

    let perms: Vec<Vec<usize>> = crate::cq::permutations_lex(k - 1);
    for tp in properly_ordered_2paths(g, order) {
        let (v1, v2, vlast) = (tp.mid, tp.ends.0, tp.ends.1);
        let mut chosen: Vec<(u64, u64)> = Vec::with_capacity(k - 1);
        let mut used: HashSet<u64> = HashSet::from([v1, v2, vlast]);
        pick_edges(
            g,
            0,
            k - 1,
            v1,
            order,
            &mut chosen,
            &mut used,
            &perms,
            &cycle_auts,
            v2,
            vlast,
            &mut out,
            &mut work,
        );
    }
    Ok((out, work))
}

#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
fn pick_edges(
    g: &DataGraph,
    start: usize,
    need: usize,
    v1: u64,
    order: &NodeOrder,
    chosen: &mut Vec<(u64, u64)>,
    used: &mut HashSet<u64>,
    perms: &[Vec<usize>],
    cycle_auts: &[Vec<usize>],
    v2: u64,
    vlast: u64,
    out: &mut BTreeSet<Vec<u64>>,
    work: &mut u64,
) {
    if need == 0 {
        *work += 1;
        close_cycle(g, v1, v2, vlast, chosen, perms, cycle_auts, out);
        return;
    }
    let edges = g.edges();
    for idx in start..edges.len() {
        let (a, b) = edges[idx];
        if used.contains(&a) || used.contains(&b) {
            continue;
        }
        if !order.lt(v1, a) || !order.lt(v1, b) {
            continue;
        }
        chosen.push((a, b));
        used.insert(a);
        used.insert(b);
        pick_edges(
            g,
            idx + 1,
            need - 1,
            v1,
            order,
            chosen,
            used,
            perms,
            cycle_auts,
            v2,
            vlast,
            out,
            work,
        );
        used.remove(&a);
        used.remove(&b);
        chosen.pop();
    }
}

/// Try all orders and orientations of the selected edges between v2 and
/// v_{2k+1}; emit every completion present in the edge index.
#[allow(clippy::too_many_arguments)]
fn close_cycle(
    g: &DataGraph,
    v1: u64,
    v2: u64,
    vlast: u64,
    chosen: &[(u64, u64)],
    perms: &[Vec<usize>],
    cycle_auts: &[Vec<usize>],
    out: &mut BTreeSet<Vec<u64>>,
) {
    let k1 = chosen.len();
    for perm in perms {
        for bits in 0u32..(1 << k1) {
            let mut seq = Vec::with_capacity(2 * k1 + 3);
            seq.push(v1);
            seq.push(v2);
            let mut prev = v2;
            let mut ok = true;
            for (j, &e) in perm.iter().enumerate() {
                let (a, b) = chosen[e];
                let (x, y) = if bits & (1 << j) != 0 { (b, a) } else { (a, b) };
                if !g.has_edge(prev, x) {
                    ok = false;
                    break;
                }
                seq.push(x);
                seq.push(y);
                prev = y;
            }
            if ok && g.has_edge(prev, vlast) {
                seq.push(vlast);
                out.insert(canonical_tuple(&seq, cycle_auts));
            }
        }
    }
}

/// What a decomposition block is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartKind {
    Isolated,
    Edge,
    /// An odd block with a Hamilton cycle, listed in cycle order.
    OddHam {
        cycle: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Part {
    /// Pattern variables of the block, sorted.
    pub vars: Vec<usize>,
    pub kind: PartKind,
}

/// A partition of the pattern nodes into isolated nodes, edges, and blocks
/// with an odd Hamilton cycle, plus the pattern edges that cross blocks.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub parts: Vec<Part>,
    pub cross_edges: Vec<(usize, usize)>,
    /// Exponents of the resulting O(n^alpha m^beta) enumerator.
    pub alpha: usize,
    pub beta: f64,
}

fn hamilton_cycle(s: &SampleGraph, block: &[usize]) -> Option<Vec<usize>> {
    let n = block.len();
    if n < 3 {
        return None;
    }
    let rest: Vec<usize> = block[1..].to_vec();
    let k = rest.len();
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        // anchor block[0] first; halve by orientation
        if rest[perm[0]] < rest[perm[k - 1]] {
            let cycle: Vec<usize> = std::iter::once(block[0])
                .chain(perm.iter().map(|&i| rest[i]))
                .collect();
            let ok = (0..n).all(|i| s.has_edge(cycle[i], cycle[(i + 1) % n]));
            if ok {
                return Some(cycle);
            }
        }
        let i = (0..k.saturating_sub(1))
            .rev()
            .find(|&i| perm[i] < perm[i + 1])?;
        let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}

fn classify_block(
    s: &SampleGraph,
    block: &[usize],
    memo: &mut HashMap<Vec<usize>, Option<Vec<usize>>>,
) -> Option<PartKind> {
    match block.len() {
        1 => Some(PartKind::Isolated),
        2 => s.has_edge(block[0], block[1]).then_some(PartKind::Edge),
        n if n % 2 == 0 => None,
        _ => {
            let cached = memo
                .entry(block.to_vec())
                .or_insert_with(|| hamilton_cycle(s, block))
                .clone();
            cached.map(|cycle| PartKind::OddHam { cycle })
        }
    }
}

/// Search all node partitions for a valid decomposition, minimizing the
/// number of isolated nodes and then preferring larger odd blocks.
pub fn decompose_sample(s: &SampleGraph) -> Result<Decomposition> {
    let p = s.node_count();
    if p > crate::cq::MAX_PATTERN_NODES {
        return Err(Error::SampleTooLarge {
            p,
            limit: crate::cq::MAX_PATTERN_NODES,
        });
    }
    let mut ham_memo: HashMap<Vec<usize>, Option<Vec<usize>>> = HashMap::new();
    let mut best: Option<(usize, i64, Vec<Vec<usize>>)> = None;
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    partition_rec(s, 0, &mut blocks, &mut ham_memo, &mut best);

    let (_, _, blocks) = best.expect("the all-isolated partition is always valid");
    let mut parts = Vec::new();
    for b in &blocks {
        let kind = classify_block(s, b, &mut ham_memo).expect("winning partition is valid");
        parts.push(Part {
            vars: b.clone(),
            kind,
        });
    }
    let block_of = |v: usize| parts.iter().position(|pt| pt.vars.contains(&v)).unwrap();
    let cross_edges: Vec<(usize, usize)> = s
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| block_of(a) != block_of(b))
        .collect();
    let q = parts
        .iter()
        .filter(|pt| pt.kind == PartKind::Isolated)
        .count();
    Ok(Decomposition {
        parts,
        cross_edges,
        alpha: q,
        beta: (p - q) as f64 / 2.0,
    })
}

fn partition_rec(
    s: &SampleGraph,
    next: usize,
    blocks: &mut Vec<Vec<usize>>,
    ham_memo: &mut HashMap<Vec<usize>, Option<Vec<usize>>>,
    best: &mut Option<(usize, i64, Vec<Vec<usize>>)>,
) {
    let p = s.node_count();
    if next == p {
        let mut q = 0usize;
        let mut odd_sum = 0i64;
        for b in blocks.iter() {
            match classify_block(s, b, ham_memo) {
                Some(PartKind::Isolated) => q += 1,
                Some(PartKind::Edge) => {}
                Some(PartKind::OddHam { .. }) => odd_sum += b.len() as i64,
                None => return,
            }
        }
        let key = (q, -odd_sum, blocks.clone());
        if best.as_ref().is_none_or(|b| key < *b) {
            *best = Some(key);
        }
        return;
    }
    for i in 0..blocks.len() {
        if blocks[i].len() < 9 {
            blocks[i].push(next);
            partition_rec(s, next + 1, blocks, ham_memo, best);
            blocks[i].pop();
        }
    }
    blocks.push(vec![next]);
    partition_rec(s, next + 1, blocks, ham_memo, best);
    blocks.pop();
}

fn induced_sample(s: &SampleGraph, vars: &[usize]) -> SampleGraph {
    let local: HashMap<usize, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let names = vars.iter().map(|&v| s.name(v).to_string()).collect();
    let edges = s
        .edges()
        .iter()
        .filter(|(a, b)| local.contains_key(a) && local.contains_key(b))
        .map(|&(a, b)| (local[&a], local[&b]))
        .collect();
    SampleGraph::new(names, edges).expect("induced subgraph is valid")
}

/// Combine per-block instance sets into instances of the whole pattern.
///
/// Every way of re-embedding each block class on its node set is considered;
/// a combination survives if the blocks are node-disjoint and every
/// cross-block pattern edge exists in the data graph. A surviving full
/// mapping is emitted only if, among its automorphic variants, it minimizes
/// the pair (block-origin string over the sorted data nodes, node tuple) --
/// the lexicographically-first rule that makes composition exactly-once.
pub fn compose(
    parts_instances: &[BTreeSet<Vec<u64>>],
    s: &SampleGraph,
    d: &Decomposition,
    g: &DataGraph,
) -> Result<BTreeSet<Vec<u64>>> {
    let p = s.node_count();
    let sample_auts = automorphisms(s)?;
    let part_auts: Vec<Vec<Vec<usize>>> = d
        .parts
        .iter()
        .map(|part| automorphisms(&induced_sample(s, &part.vars)))
        .collect::<Result<_>>()?;
    let mut block_of = vec![0usize; p];
    for (i, part) in d.parts.iter().enumerate() {
        for &v in &part.vars {
            block_of[v] = i;
        }
    }
    let mut out = BTreeSet::new();
    let mut chosen: Vec<&Vec<u64>> = Vec::with_capacity(d.parts.len());
    rec_compose(
        g,
        s,
        d,
        parts_instances,
        &part_auts,
        &sample_auts,
        &block_of,
        0,
        &mut chosen,
        &mut out,
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn rec_compose<'a>(
    g: &DataGraph,
    s: &SampleGraph,
    d: &Decomposition,
    parts_instances: &'a [BTreeSet<Vec<u64>>],
    part_auts: &[Vec<Vec<usize>>],
    sample_auts: &[Vec<usize>],
    block_of: &[usize],
    depth: usize,
    chosen: &mut Vec<&'a Vec<u64>>,
    out: &mut BTreeSet<Vec<u64>>,
) {
    if depth == d.parts.len() {
        realize_and_emit(g, s, d, part_auts, sample_auts, block_of, chosen, out);
        return;
    }
    'cand: for tuple in &parts_instances[depth] {
        for prev in chosen.iter() {
            for x in tuple {
                if prev.contains(x) {
                    continue 'cand;
                }
            }
        }
        chosen.push(tuple);
        rec_compose(
            g,
            s,
            d,
            parts_instances,
            part_auts,
            sample_auts,
            block_of,
            depth + 1,
            chosen,
            out,
        );
        chosen.pop();
    }
}

#[allow(clippy::too_many_arguments)]
fn realize_and_emit(
    g: &DataGraph,
    s: &SampleGraph,
    d: &Decomposition,
    part_auts: &[Vec<Vec<usize>>],
    sample_auts: &[Vec<usize>],
    block_of: &[usize],
    chosen: &[&Vec<u64>],
    out: &mut BTreeSet<Vec<u64>>,
) {
    let p = s.node_count();
    // all distinct re-embeddings of each block class on its node set
    let realizations: Vec<Vec<Vec<u64>>> = chosen
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut r: Vec<Vec<u64>> = part_auts[i]
                .iter()
                .map(|alpha| alpha.iter().map(|&v| t[v]).collect())
                .collect();
            r.sort();
            r.dedup();
            r
        })
        .collect();
    let mut full = vec![0u64; p];
    for combo in realizations.iter().multi_cartesian_product() {
        for (i, part) in d.parts.iter().enumerate() {
            for (j, &v) in part.vars.iter().enumerate() {
                full[v] = combo[i][j];
            }
        }
        if !d
            .cross_edges
            .iter()
            .all(|&(a, b)| g.has_edge(full[a], full[b]))
        {
            continue;
        }
        if is_lex_first_construction(&full, sample_auts, block_of) {
            out.insert(canonical_tuple(&full, sample_auts));
        }
    }
}

/// The lexicographically-first test: sort the instance's data nodes, label
/// each with the block its preimage belongs to, and accept only the variant
/// minimizing (label string, node tuple) over the automorphism orbit.
fn is_lex_first_construction(full: &[u64], sample_auts: &[Vec<usize>], block_of: &[usize]) -> bool {
    let key = |tuple: &[u64]| -> (Vec<usize>, Vec<u64>) {
        let mut nodes: Vec<u64> = tuple.to_vec();
        nodes.sort_unstable();
        let labels = nodes
            .iter()
            .map(|n| block_of[tuple.iter().position(|x| x == n).unwrap()])
            .collect();
        (labels, tuple.to_vec())
    };
    let mine = key(full);
    sample_auts.iter().all(|alpha| {
        let variant: Vec<u64> = alpha.iter().map(|&v| full[v]).collect();
        key(&variant) >= mine
    })
}

/// Inductive enumerator for connected patterns: peel a non-articulation
/// variable, enumerate the rest, and extend through a neighbor's adjacency
/// list. Per smaller-pattern instance the extension costs O(max degree).
pub fn bounded_degree_enum(g: &DataGraph, s: &SampleGraph) -> Result<BTreeSet<Vec<u64>>> {
    if !s.is_connected() || s.node_count() < 2 {
        return Err(Error::structural(
            "bounded-degree enumeration needs a connected pattern with at least 2 nodes",
        ));
    }
    let vars: Vec<usize> = (0..s.node_count()).collect();
    bde_rec(g, s, &vars)
}

fn bde_rec(g: &DataGraph, s: &SampleGraph, active: &[usize]) -> Result<BTreeSet<Vec<u64>>> {
    if active.len() == 2 {
        return Ok(g
            .edges()
            .iter()
            .map(|&(a, b)| vec![a.min(b), a.max(b)])
            .collect());
    }
    let sub = induced_sample(s, active);
    let auts = automorphisms(&sub)?;
    // peel the largest non-articulation variable
    let u_local = (0..active.len())
        .rev()
        .find(|&cand| {
            let rest: Vec<usize> = (0..active.len()).filter(|&i| i != cand).collect();
            sub.is_connected_subset(&rest)
        })
        .expect("a connected graph has a non-articulation node");
    let u = active[u_local];
    let rest: Vec<usize> = active.iter().copied().filter(|&v| v != u).collect();
    let inner = bde_rec(g, s, &rest)?;
    let inner_auts = automorphisms(&induced_sample(s, &rest))?;

    let u_nbrs_global: Vec<usize> = s
        .neighbors(u)
        .into_iter()
        .filter(|v| rest.contains(v))
        .collect();
    let nbr_locals: Vec<usize> = u_nbrs_global
        .iter()
        .map(|&v| rest.iter().position(|&w| w == v).unwrap())
        .collect();
    let anchor_local = nbr_locals[0];
    let block_of: Vec<usize> = (0..active.len())
        .map(|i| usize::from(i == u_local))
        .collect();

    let mut out = BTreeSet::new();
    let mut full = vec![0u64; active.len()];
    for class in &inner {
        let mut seen_real: HashSet<Vec<u64>> = HashSet::new();
        for alpha in &inner_auts {
            let real: Vec<u64> = alpha.iter().map(|&v| class[v]).collect();
            if !seen_real.insert(real.clone()) {
                continue;
            }
            for &c in g.neighbors(real[anchor_local]) {
                if real.contains(&c) {
                    continue;
                }
                if !nbr_locals.iter().all(|&w| g.has_edge(c, real[w])) {
                    continue;
                }
                let mut ri = 0;
                for (i, slot) in full.iter_mut().enumerate() {
                    if i == u_local {
                        *slot = c;
                    } else {
                        *slot = real[ri];
                        ri += 1;
                    }
                }
                if is_lex_first_construction(&full, &auts, &block_of) {
                    out.insert(canonical_tuple(&full, &auts));
                }
            }
        }
    }
    Ok(out)
}

/// Enumerate instances of an arbitrary pattern.
///
/// Connected patterns on data graphs whose maximum degree is at most
/// sqrt(m) go through the inductive extension enumerator; everything else is
/// decomposed into isolated nodes, edges, and odd Hamilton blocks, the
/// blocks are enumerated separately (odd blocks via the cycle algorithm),
/// and the results composed.
pub fn enumerate_general(
    g: &DataGraph,
    s: &SampleGraph,
    degree_hint: Option<usize>,
) -> Result<BTreeSet<Vec<u64>>> {
    if g.edge_count() == 0 && s.edge_count() > 0 {
        return Ok(BTreeSet::new());
    }
    if s.edge_count() == 0 {
        // bag of isolated variables: any p distinct nodes, order-free
        let p = s.node_count();
        let mut out = BTreeSet::new();
        for combo in g.nodes().iter().combinations(p) {
            out.insert(combo.into_iter().copied().collect());
        }
        return Ok(out);
    }
    let max_deg = degree_hint.unwrap_or_else(|| g.max_degree());
    let sqrt_m = (g.edge_count() as f64).sqrt();
    if s.is_connected() && s.node_count() >= 2 && (max_deg as f64) <= sqrt_m {
        return bounded_degree_enum(g, s);
    }
    let d = decompose_sample(s)?;
    let order = crate::graph::make_order(g, crate::graph::OrderKind::DegreeThenId, 1, 0)?;
    let mut parts_instances = Vec::with_capacity(d.parts.len());
    for part in &d.parts {
        let set = match &part.kind {
            PartKind::Isolated => g.nodes().iter().map(|&v| vec![v]).collect(),
            PartKind::Edge => g.edges().iter().map(|&(a, b)| vec![a, b]).collect(),
            PartKind::OddHam { cycle } => odd_ham_part_instances(g, s, &part.vars, cycle, &order)?,
        };
        parts_instances.push(set);
    }
    compose(&parts_instances, s, &d, g)
}

/// Instances of one odd block: enumerate plain cycles of the block's length,
/// then try every cycle orientation and keep those where the block's
/// non-cycle edges also exist.
fn odd_ham_part_instances(
    g: &DataGraph,
    s: &SampleGraph,
    vars: &[usize],
    cycle: &[usize],
    order: &NodeOrder,
) -> Result<BTreeSet<Vec<u64>>> {
    let n = vars.len();
    let k = (n - 1) / 2;
    let sub = induced_sample(s, vars);
    let sub_auts = automorphisms(&sub)?;
    let cycle_local: Vec<usize> = cycle
        .iter()
        .map(|&v| vars.iter().position(|&w| w == v).unwrap())
        .collect();
    let extra_edges: Vec<(usize, usize)> = sub
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| {
            let pa = cycle_local.iter().position(|&x| x == a).unwrap();
            let pb = cycle_local.iter().position(|&x| x == b).unwrap();
            let diff = (pa + n - pb) % n;
            diff != 1 && diff != n - 1
        })
        .collect();
    let cycles = odd_cycle_enum(g, k, order)?;
    let dihedral = automorphisms(&SampleGraph::builtin(&format!("cycle:{n}"))?)?;
    let mut out = BTreeSet::new();
    for t in &cycles {
        for alpha in &dihedral {
            // block var at cycle position j maps to t[alpha[j]]
            let mut local = vec![0u64; n];
            for (j, &lv) in cycle_local.iter().enumerate() {
                local[lv] = t[alpha[j]];
            }
            if extra_edges
                .iter()
                .all(|&(a, b)| g.has_edge(local[a], local[b]))
            {
                out.insert(canonical_tuple(&local, &sub_auts));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generators, make_order, OrderKind};

    fn sample(name: &str) -> SampleGraph {
        SampleGraph::builtin(name).unwrap()
    }

    #[test]
    fn oracle_counts_on_small_graphs() {
        let k4 = generators::complete(4);
        assert_eq!(
            brute_force_oracle(&k4, &sample("triangle")).unwrap().len(),
            4
        );
        let c4 = generators::cycle(4);
        assert_eq!(brute_force_oracle(&c4, &sample("square")).unwrap().len(), 1);
        let k5 = generators::complete(5);
        assert_eq!(
            brute_force_oracle(&k5, &sample("cycle:5")).unwrap().len(),
            12
        );
    }

    #[test]
    fn oracle_guard_refuses_large_graphs() {
        let g = generators::gnm(100, 200, 1);
        assert!(matches!(
            brute_force_oracle(&g, &sample("triangle")),
            Err(Error::OracleGuard { .. })
        ));
    }

    #[test]
    fn two_paths_on_k3() {
        let g = crate::graph::load_edge_list("1 2\n2 3\n1 3").unwrap();
        let order = make_order(&g, OrderKind::DegreeThenId, 1, 0).unwrap();
        let tps = properly_ordered_2paths(&g, &order);
        assert_eq!(
            tps,
            vec![TwoPath {
                mid: 1,
                ends: (2, 3)
            }]
        );
    }

    #[test]
    fn two_paths_on_path_and_star() {
        let path = crate::graph::load_edge_list("1 2\n2 3").unwrap();
        let order = make_order(&path, OrderKind::DegreeThenId, 1, 0).unwrap();
        assert!(properly_ordered_2paths(&path, &order).is_empty());

        let star = generators::star(3);
        let order = make_order(&star, OrderKind::DegreeThenId, 1, 0).unwrap();
        assert!(properly_ordered_2paths(&star, &order).is_empty());
    }

    #[test]
    fn two_path_count_matches_enumeration() {
        let g = generators::gnp(30, 0.3, 5);
        let order = make_order(&g, OrderKind::DegreeThenId, 1, 0).unwrap();
        assert_eq!(
            properly_ordered_2paths(&g, &order).len() as u64,
            properly_ordered_2path_count(&g, &order)
        );
    }

    #[test]
    fn two_path_bound_holds() {
        for (n, m, seed) in [
            (50u64, 200u64, 1u64),
            (100, 1000, 2),
            (60, 400, 3),
            (2000, 100_000, 4),
            (700, 100_000, 5), // denser: average degree ~286
        ] {
            let g = generators::gnm(n, m, seed);
            let order = make_order(&g, OrderKind::DegreeThenId, 1, 0).unwrap();
            let count = properly_ordered_2path_count(&g, &order) as f64;
            assert!(count <= 4.0 * (m as f64).powf(1.5), "n={n} m={m}: {count}");
        }
    }

    #[test]
    fn odd_cycles_on_k5_and_petersen() {
        let order = |g: &DataGraph| make_order(g, OrderKind::DegreeThenId, 1, 0).unwrap();
        let k5 = generators::complete(5);
        assert_eq!(odd_cycle_enum(&k5, 2, &order(&k5)).unwrap().len(), 12);
        let pet = generators::petersen();
        assert_eq!(odd_cycle_enum(&pet, 2, &order(&pet)).unwrap().len(), 12);
    }

    #[test]
    fn odd_cycles_empty_on_forests() {
        let f = generators::random_forest(40, 3, 9);
        let order = make_order(&f, OrderKind::DegreeThenId, 1, 0).unwrap();
        for k in 1..=3 {
            assert!(odd_cycle_enum(&f, k, &order).unwrap().is_empty());
        }
    }

    #[test]
    fn odd_cycles_match_oracle_on_random_graphs() {
        for seed in 1..=4 {
            let g = generators::gnp(16, 0.4, seed);
            let order = make_order(&g, OrderKind::DegreeThenId, 1, 0).unwrap();
            for k in [1usize, 2, 3] {
                let p = 2 * k + 1;
                let oracle = brute_force_oracle(&g, &sample(&format!("cycle:{p}"))).unwrap();
                let got = odd_cycle_enum(&g, k, &order).unwrap();
                assert_eq!(got, oracle, "seed {seed} k {k}");
            }
        }
    }

    #[test]
    fn decompositions_match_expected_shapes() {
        let d = decompose_sample(&sample("edge")).unwrap();
        assert_eq!((d.alpha, d.beta), (0, 1.0));

        let d = decompose_sample(&sample("cycle:5")).unwrap();
        assert_eq!((d.alpha, d.beta), (0, 2.5));
        assert_eq!(d.parts.len(), 1);
        assert!(matches!(d.parts[0].kind, PartKind::OddHam { .. }));

        let d = decompose_sample(&sample("square")).unwrap();
        assert_eq!((d.alpha, d.beta), (0, 2.0));
        assert_eq!(d.parts.len(), 2);
        assert!(d.parts.iter().all(|pt| pt.kind == PartKind::Edge));

        let d = decompose_sample(&sample("star:4")).unwrap();
        assert_eq!(d.alpha, 2);
    }

    #[test]
    fn compose_square_from_two_edges() {
        let s = sample("square");
        let d = decompose_sample(&s).unwrap();
        let g = generators::cycle(4);
        let edges: BTreeSet<Vec<u64>> = g.edges().iter().map(|&(a, b)| vec![a, b]).collect();
        let parts = vec![edges.clone(), edges];
        let got = compose(&parts, &s, &d, &g).unwrap();
        assert_eq!(got, brute_force_oracle(&g, &s).unwrap());
    }

    #[test]
    fn compose_with_empty_part_is_empty() {
        let s = sample("square");
        let d = decompose_sample(&s).unwrap();
        let g = generators::cycle(4);
        let edges: BTreeSet<Vec<u64>> = g.edges().iter().map(|&(a, b)| vec![a, b]).collect();
        let parts = vec![edges, BTreeSet::new()];
        assert!(compose(&parts, &s, &d, &g).unwrap().is_empty());
    }

    #[test]
    fn compose_lollipop_on_k4() {
        let s = sample("lollipop");
        let g = generators::complete(4);
        let got = enumerate_general(&g, &s, Some(usize::MAX)).unwrap();
        assert_eq!(got, brute_force_oracle(&g, &s).unwrap());
    }

    #[test]
    fn bounded_degree_examples() {
        // every internal node of a 4-regular-ish tree roots choose(4,2) stars
        let tree =
            crate::graph::load_edge_list("0 1\n0 2\n0 3\n0 4\n1 5\n1 6\n1 7\n2 8\n2 9\n2 10")
                .unwrap();
        let s3 = sample("star:3");
        let got = bounded_degree_enum(&tree, &s3).unwrap();
        assert_eq!(got, brute_force_oracle(&tree, &s3).unwrap());

        assert!(bounded_degree_enum(&tree, &sample("triangle"))
            .unwrap()
            .is_empty());

        let path = generators::path(3);
        assert_eq!(
            bounded_degree_enum(&path, &sample("path:3")).unwrap().len(),
            1
        );

        let two_parts = SampleGraph::new(
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            vec![(0, 1), (2, 3)],
        )
        .unwrap();
        assert!(bounded_degree_enum(&path, &two_parts).is_err());
    }

    #[test]
    fn bounded_degree_matches_oracle() {
        for seed in 1..=3 {
            let g = generators::gnp(14, 0.35, seed);
            for name in [
                "triangle", "square", "lollipop", "star:4", "clique:4", "path:4",
            ] {
                let s = sample(name);
                let got = bounded_degree_enum(&g, &s).unwrap();
                assert_eq!(
                    got,
                    brute_force_oracle(&g, &s).unwrap(),
                    "{name} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn general_enumerator_matches_oracle() {
        for seed in [1u64, 2] {
            let g = generators::gnp(15, 0.4, seed);
            for name in [
                "triangle", "square", "lollipop", "cycle:5", "cycle:6", "cycle:7",
            ] {
                let s = sample(name);
                let got = enumerate_general(&g, &s, None).unwrap();
                assert_eq!(
                    got,
                    brute_force_oracle(&g, &s).unwrap(),
                    "{name} seed {seed}"
                );
            }
        }
        // force the decomposition path as well
        for seed in [3u64, 4] {
            let g = generators::gnp(15, 0.4, seed);
            for name in ["lollipop", "cycle:7", "clique:4", "cycle:6"] {
                let s = sample(name);
                let got = enumerate_general(&g, &s, Some(usize::MAX)).unwrap();
                assert_eq!(
                    got,
                    brute_force_oracle(&g, &s).unwrap(),
                    "{name} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn disconnected_pattern_through_decomposition() {
        // triangle plus a disjoint edge
        let s = SampleGraph::new(
            vec!["A".into(), "B".into(), "C".into(), "D".into(), "E".into()],
            vec![(0, 1), (1, 2), (0, 2), (3, 4)],
        )
        .unwrap();
        let g = generators::gnp(12, 0.45, 7);
        let got = enumerate_general(&g, &s, None).unwrap();
        assert_eq!(got, brute_force_oracle(&g, &s).unwrap());
    }

    #[test]
    fn empty_data_graph_yields_nothing() {
        let g = DataGraph::from_edges(Vec::<(u64, u64)>::new()).unwrap();
        assert!(enumerate_general(&g, &sample("triangle"), None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn odd_cycle_work_scales_with_exponent() {
        // doubling m should scale the work counter by about 2^{(2k+1)/2}
        let k = 2usize;
        let mut prev: Option<f64> = None;
        for (n, m) in [(60u64, 300u64), (85, 600), (120, 1200)] {
            let g = generators::gnm(n, m, 11);
            let order = make_order(&g, OrderKind::DegreeThenId, 1, 0).unwrap();
            let (_, work) = odd_cycle_enum_counted(&g, k, &order).unwrap();
            if let Some(last) = prev {
                let ratio = work as f64 / last;
                let limit = 2f64.powf((2 * k + 1) as f64 / 2.0 + 0.3);
                assert!(ratio <= limit, "work ratio {ratio} exceeds {limit}");
            }
            prev = Some(work as f64);
        }
    }
}
