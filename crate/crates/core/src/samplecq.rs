//! Query generation for arbitrary pattern graphs: one chain query per
//! ordering class, then queries with identical edge orientations are merged
//! by OR-ing their arithmetic conditions.
//!
//! The merged condition is simplified in two stages. First, two disjuncts
//! that differ only in the orientation of a single variable pair collapse to
//! one disjunct with that pair replaced by a disequality. Second, if the
//! surviving disjunction is expressible as a single conjunction of `<` and
//! `!=` atoms, that conjunction is synthesized directly from the accepted
//! orderings. Every simplification is validated semantically: over all
//! orderings-with-ties of the variables, the simplified condition (together
//! with the subgoal orientations) must accept exactly the union of the source
//! chains. If validation fails the raw disjunction of chains is kept.

use std::collections::HashMap;

use crate::cq::{
    coset_representatives, cq_from_ordering, distinct_subgoal_lists, Atom, CQSet, Condition,
    ConjunctiveQuery, Subgoal, VarOrdering,
};
use crate::error::Result;
use crate::graph::SampleGraph;

/// Largest pattern for which merged conditions are simplified and validated;
/// beyond it the raw disjunction of chains is used (it is exact by
/// construction).
const MAX_SIMPLIFY_NODES: usize = 8;

/// Generate the minimal query set for a pattern graph: ordering classes,
/// chain queries, then orientation grouping.
pub fn generate_cqs(s: &SampleGraph) -> Result<CQSet> {
    let reps = coset_representatives(s)?;
    let queries: Vec<ConjunctiveQuery> = reps.iter().map(|o| cq_from_ordering(s, o)).collect();
    let provenance: Vec<Vec<VarOrdering>> = reps.iter().map(|o| vec![o.clone()]).collect();
    let labels = vec![String::new(); queries.len()];
    let set = CQSet {
        sample: s.clone(),
        queries,
        provenance,
        labels,
    };
    Ok(group_by_orientation(&set))
}

/// Merge queries with identical subgoal lists, OR-ing their conditions.
pub fn group_by_orientation(set: &CQSet) -> CQSet {
    let mut order: Vec<Vec<Subgoal>> = Vec::new();
    let mut groups: HashMap<Vec<Subgoal>, Vec<usize>> = HashMap::new();
    for (i, q) in set.queries.iter().enumerate() {
        let entry = groups.entry(q.subgoals.clone()).or_insert_with(|| {
            order.push(q.subgoals.clone());
            Vec::new()
        });
        entry.push(i);
    }
    let mut queries = Vec::with_capacity(order.len());
    let mut provenance = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    for subgoals in order {
        let members = &groups[&subgoals];
        let sources: Vec<VarOrdering> = members
            .iter()
            .flat_map(|&i| set.provenance[i].iter().cloned())
            .collect();
        let condition = if sources.len() == members.len() && !sources.is_empty() {
            merge_chain_conditions(set.sample.node_count(), &subgoals, &sources)
        } else {
            // non-chain inputs: plain OR of the existing disjuncts
            Condition {
                disjuncts: members
                    .iter()
                    .flat_map(|&i| set.queries[i].condition.disjuncts.iter().cloned())
                    .collect(),
            }
        };
        queries.push(ConjunctiveQuery {
            subgoals,
            condition,
        });
        provenance.push(sources);
        labels.push(String::new());
    }
    let merged = CQSet {
        sample: set.sample.clone(),
        queries,
        provenance,
        labels,
    };
    debug_assert!(distinct_subgoal_lists(&merged));
    merged
}

fn chain_atoms(o: &VarOrdering) -> Vec<Atom> {
    o.0.windows(2).map(|w| Atom::Lt(w[0], w[1])).collect()
}

/// OR together the chain conditions of one orientation group and simplify.
fn merge_chain_conditions(p: usize, subgoals: &[Subgoal], sources: &[VarOrdering]) -> Condition {
    if sources.len() == 1 {
        return Condition::single(chain_atoms(&sources[0]));
    }
    let raw = || Condition {
        disjuncts: sources.iter().map(chain_atoms).collect(),
    };
    if p > MAX_SIMPLIFY_NODES {
        return raw();
    }
    let orient: Vec<(usize, usize)> = subgoals.iter().map(|sg| (sg.first, sg.second)).collect();

    let mut disjuncts: Vec<Vec<Atom>> = sources.iter().map(chain_atoms).collect();
    pairwise_swap_merge(p, &orient, &mut disjuncts);

    let candidate = if disjuncts.len() == 1 {
        Condition { disjuncts }
    } else if let Some(conj) = synthesize_conjunction(p, &orient, sources) {
        Condition::single(conj)
    } else {
        Condition { disjuncts }
    };
    if validate_merge(p, &orient, &candidate, sources) {
        candidate
    } else {
        raw()
    }
}

/// Collapse pairs of disjuncts that differ only by one swapped pair, keeping
/// the earlier disjunct's atoms with the swapped atom replaced in place by a
/// disequality. Repeats to a fixpoint.
fn pairwise_swap_merge(p: usize, orient: &[(usize, usize)], disjuncts: &mut Vec<Vec<Atom>>) {
    'outer: loop {
        for i in 0..disjuncts.len() {
            for j in i + 1..disjuncts.len() {
                if let Some(merged) = try_swap_merge(p, orient, &disjuncts[i], &disjuncts[j]) {
                    disjuncts[i] = merged;
                    disjuncts.remove(j);
                    continue 'outer;
                }
            }
        }
        return;
    }
}

fn try_swap_merge(
    p: usize,
    orient: &[(usize, usize)],
    a: &[Atom],
    b: &[Atom],
) -> Option<Vec<Atom>> {
    let mut swapped: Option<(usize, usize)> = None;
    for atom in a {
        if let Atom::Lt(x, y) = *atom {
            if b.contains(&Atom::Lt(y, x)) {
                if swapped.is_some() {
                    return None;
                }
                swapped = Some((x, y));
            }
        }
    }
    let (x, y) = swapped?;
    let rest_a: Vec<Atom> = a.iter().copied().filter(|&t| t != Atom::Lt(x, y)).collect();
    let rest_b: Vec<Atom> = b.iter().copied().filter(|&t| t != Atom::Lt(y, x)).collect();
    let ne = |atoms: &[Atom]| {
        let mut v: Vec<(usize, usize)> = atoms
            .iter()
            .filter_map(|t| match *t {
                Atom::Ne(a, b) => Some((a.min(b), a.max(b))),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v
    };
    if ne(&rest_a) != ne(&rest_b) {
        return None;
    }
    if strict_closure(p, orient, &rest_a) != strict_closure(p, orient, &rest_b) {
        return None;
    }
    Some(
        a.iter()
            .map(|&t| {
                if t == Atom::Lt(x, y) {
                    Atom::Ne(x.min(y), x.max(y))
                } else {
                    t
                }
            })
            .collect(),
    )
}

/// Reachability matrix of the strict order generated by the subgoal
/// orientations plus the `<` atoms of a conjunct.
fn strict_closure(p: usize, orient: &[(usize, usize)], atoms: &[Atom]) -> Vec<bool> {
    let mut reach = vec![false; p * p];
    for &(a, b) in orient {
        reach[a * p + b] = true;
    }
    for t in atoms {
        if let Atom::Lt(a, b) = *t {
            reach[a * p + b] = true;
        }
    }
    for k in 0..p {
        for i in 0..p {
            if reach[i * p + k] {
                for j in 0..p {
                    if reach[k * p + j] {
                        reach[i * p + j] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Try to express the union of the source orderings as one conjunction of
/// `<` and `!=` atoms. Pairs ordered the same way in every source become a
/// strict inequality; mixed pairs become a disequality. The result is kept
/// only if it accepts exactly the sources among all orderings.
fn synthesize_conjunction(
    p: usize,
    orient: &[(usize, usize)],
    sources: &[VarOrdering],
) -> Option<Vec<Atom>> {
    let positions: Vec<Vec<usize>> = sources.iter().map(|o| o.positions()).collect();
    let mut lt = Vec::new();
    let mut ne = Vec::new();
    for x in 0..p {
        for y in x + 1..p {
            let forward = positions.iter().filter(|pos| pos[x] < pos[y]).count();
            if forward == positions.len() {
                lt.push(Atom::Lt(x, y));
            } else if forward == 0 {
                lt.push(Atom::Lt(y, x));
            } else {
                ne.push(Atom::Ne(x, y));
            }
        }
    }
    prune_transitive(p, &mut lt);
    lt.sort_by_key(|t| match *t {
        Atom::Lt(a, b) => (a, b),
        Atom::Ne(a, b) => (a, b),
    });
    let mut atoms = lt;
    atoms.extend(ne);

    // exactness over all orderings of distinct values
    let accepted: std::collections::HashSet<&[usize]> =
        positions.iter().map(|v| v.as_slice()).collect();
    for perm in crate::cq::permutations_lex(p) {
        let mut pos = vec![0usize; p];
        for (rank, &v) in perm.iter().enumerate() {
            pos[v] = rank;
        }
        let ranks: Vec<u64> = pos.iter().map(|&r| r as u64).collect();
        let sat = atoms.iter().all(|a| a.eval_ranks(&ranks))
            && orient.iter().all(|&(a, b)| ranks[a] < ranks[b]);
        if sat != accepted.contains(pos.as_slice()) {
            return None;
        }
    }
    Some(atoms)
}

/// Drop `<` atoms implied transitively by the remaining `<` atoms.
fn prune_transitive(p: usize, lt: &mut Vec<Atom>) {
    let mut idx = 0;
    while idx < lt.len() {
        let Atom::Lt(a, b) = lt[idx] else {
            unreachable!()
        };
        let others: Vec<Atom> = lt
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, &t)| t)
            .collect();
        let reach = strict_closure(p, &[], &others);
        if reach[a * p + b] {
            lt.remove(idx);
        } else {
            idx += 1;
        }
    }
}

/// Semantic guard: over every assignment of the variables to ranks with
/// ties, `condition AND orientations` must hold exactly when the assignment
/// realizes one of the source chains.
fn validate_merge(
    p: usize,
    orient: &[(usize, usize)],
    condition: &Condition,
    sources: &[VarOrdering],
) -> bool {
    let chains: Vec<Vec<Atom>> = sources.iter().map(chain_atoms).collect();
    let mut ranks = vec![0u64; p];
    fn rec(
        i: usize,
        max_used: u64,
        ranks: &mut Vec<u64>,
        orient: &[(usize, usize)],
        condition: &Condition,
        chains: &[Vec<Atom>],
    ) -> bool {
        let p = ranks.len();
        if i == p {
            let cond =
                condition.eval_ranks(ranks) && orient.iter().all(|&(a, b)| ranks[a] < ranks[b]);
            let union = chains.iter().any(|c| c.iter().all(|t| t.eval_ranks(ranks)));
            return cond == union;
        }
        for r in 0..=max_used + 1 {
            ranks[i] = r;
            let next_max = max_used.max(r);
            if !rec(i + 1, next_max, ranks, orient, condition, chains) {
                return false;
            }
        }
        true
    }
    // first variable pinned at rank 0: rank patterns are restricted growth
    ranks[0] = 0;
    rec(1, 0, &mut ranks, orient, condition, &chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SampleGraph;

    fn texts(set: &CQSet) -> Vec<String> {
        set.queries.iter().map(|q| q.render(&set.sample)).collect()
    }

    #[test]
    fn square_yields_three_queries() {
        let s = SampleGraph::builtin("square").unwrap();
        let set = generate_cqs(&s).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(
            texts(&set),
            vec![
                "E(W,X) & E(X,Y) & E(Y,Z) & E(W,Z) & W<X & X<Y & Y<Z",
                "E(W,X) & E(X,Y) & E(Z,Y) & E(W,Z) & W<X & X<Z & Z<Y",
                "E(W,X) & E(Y,X) & E(Y,Z) & E(W,Z) & W<Y & Y<X & X<Z",
            ]
        );
    }

    #[test]
    fn lollipop_merges_to_six_queries() {
        let s = SampleGraph::builtin("lollipop").unwrap();
        let set = generate_cqs(&s).unwrap();
        assert_eq!(set.len(), 6);
        assert_eq!(
            texts(&set),
            vec![
                "E(W,X) & E(X,Y) & E(X,Z) & E(Y,Z) & W<X & X<Y & Y<Z",
                "E(W,X) & E(Y,X) & E(X,Z) & E(Y,Z) & W\u{2260}Y & Y<X & X<Z",
                "E(W,X) & E(Y,X) & E(Z,X) & E(Y,Z) & W<X & Y<Z & Z<X & W\u{2260}Y & W\u{2260}Z",
                "E(X,W) & E(X,Y) & E(X,Z) & E(Y,Z) & X<W & X<Y & Y<Z & W\u{2260}Y & W\u{2260}Z",
                "E(X,W) & E(Y,X) & E(X,Z) & E(Y,Z) & Y<X & X<W & W\u{2260}Z",
                "E(X,W) & E(Y,X) & E(Z,X) & E(Y,Z) & Y<Z & Z<X & X<W",
            ]
        );
    }

    #[test]
    fn lollipop_group_sizes_match_orientations() {
        let s = SampleGraph::builtin("lollipop").unwrap();
        let set = generate_cqs(&s).unwrap();
        let sizes: Vec<usize> = set.provenance.iter().map(|p| p.len()).collect();
        assert_eq!(sizes, vec![1, 2, 3, 3, 2, 1]);
    }

    #[test]
    fn single_edge_single_query() {
        let s = SampleGraph::builtin("edge").unwrap();
        let set = generate_cqs(&s).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(texts(&set), vec!["E(A,B) & A<B"]);
    }

    #[test]
    fn pentagon_general_method_gives_seven() {
        let s = SampleGraph::builtin("cycle:5").unwrap();
        let set = generate_cqs(&s).unwrap();
        assert_eq!(set.len(), 7);
    }

    #[test]
    fn merged_conditions_have_acyclic_strict_parts() {
        for name in ["square", "lollipop", "cycle:5", "star:4", "cycle:6"] {
            let s = SampleGraph::builtin(name).unwrap();
            let set = generate_cqs(&s).unwrap();
            let p = s.node_count();
            for q in &set.queries {
                for disjunct in &q.condition.disjuncts {
                    let reach = strict_closure(p, &[], disjunct);
                    for v in 0..p {
                        assert!(!reach[v * p + v], "cyclic strict condition in {name}");
                    }
                }
            }
        }
    }
}
