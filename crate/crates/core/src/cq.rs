//! Conjunctive queries over the edge relation, and the permutation machinery
//! (automorphism groups, orderings) they are generated from.
//!
//! A query has one relational subgoal `E(A,B)` per pattern edge plus an
//! arithmetic condition: a disjunction of conjunctions of strict inequalities
//! and disequalities over the pattern variables. The edge relation stores
//! each data edge once, in the orientation given by the active node order, so
//! a subgoal `E(A,B)` also implies `A < B` at match time.

use std::collections::HashSet;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::SampleGraph;

/// Largest pattern size for which exhaustive permutation search is allowed.
pub const MAX_PATTERN_NODES: usize = 10;

/// A permutation of the pattern variables, listed smallest-first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarOrdering(pub Vec<usize>);

impl VarOrdering {
    /// position[v] = rank of variable v in this ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (rank, &v) in self.0.iter().enumerate() {
            pos[v] = rank;
        }
        pos
    }

    pub fn render(&self, s: &SampleGraph) -> String {
        self.0
            .iter()
            .map(|&v| s.name(v))
            .collect::<Vec<_>>()
            .join("<")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Strict inequality `A < B`.
    Lt(usize, usize),
    /// Disequality `A != B`.
    Ne(usize, usize),
}

impl Atom {
    pub fn eval_ranks(&self, ranks: &[u64]) -> bool {
        match *self {
            Atom::Lt(a, b) => ranks[a] < ranks[b],
            Atom::Ne(a, b) => ranks[a] != ranks[b],
        }
    }

    pub fn render(&self, s: &SampleGraph) -> String {
        match *self {
            Atom::Lt(a, b) => format!("{}<{}", s.name(a), s.name(b)),
            Atom::Ne(a, b) => format!("{}\u{2260}{}", s.name(a), s.name(b)),
        }
    }
}

/// Disjunction of conjunctions of atoms. An empty disjunct list is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Condition {
    pub disjuncts: Vec<Vec<Atom>>,
}

impl Condition {
    pub fn always() -> Condition {
        Condition { disjuncts: vec![] }
    }

    pub fn single(atoms: Vec<Atom>) -> Condition {
        Condition {
            disjuncts: vec![atoms],
        }
    }

    /// Evaluate against a rank vector (one rank per variable; ties allowed).
    pub fn eval_ranks(&self, ranks: &[u64]) -> bool {
        if self.disjuncts.is_empty() {
            return true;
        }
        self.disjuncts
            .iter()
            .any(|conj| conj.iter().all(|a| a.eval_ranks(ranks)))
    }

    pub fn render(&self, s: &SampleGraph) -> String {
        let conj = |atoms: &[Atom]| {
            atoms
                .iter()
                .map(|a| a.render(s))
                .collect::<Vec<_>>()
                .join(" & ")
        };
        match self.disjuncts.len() {
            0 => String::new(),
            1 => conj(&self.disjuncts[0]),
            _ => self
                .disjuncts
                .iter()
                .map(|d| format!("({})", conj(d)))
                .collect::<Vec<_>>()
                .join(" | "),
        }
    }

    pub fn to_json(&self, s: &SampleGraph) -> Value {
        Value::Array(
            self.disjuncts
                .iter()
                .map(|conj| {
                    Value::Array(
                        conj.iter()
                            .map(|a| match *a {
                                Atom::Lt(x, y) => json!(["lt", s.name(x), s.name(y)]),
                                Atom::Ne(x, y) => json!(["ne", s.name(x), s.name(y)]),
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Relational subgoal `E(first, second)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subgoal {
    pub first: usize,
    pub second: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConjunctiveQuery {
    pub subgoals: Vec<Subgoal>,
    pub condition: Condition,
}

impl ConjunctiveQuery {
    /// The strict orders implied by the subgoal argument orientation.
    pub fn orientation_atoms(&self) -> Vec<Atom> {
        self.subgoals
            .iter()
            .map(|sg| Atom::Lt(sg.first, sg.second))
            .collect()
    }

    pub fn render(&self, s: &SampleGraph) -> String {
        let mut parts: Vec<String> = self
            .subgoals
            .iter()
            .map(|sg| format!("E({},{})", s.name(sg.first), s.name(sg.second)))
            .collect();
        let cond = self.condition.render(s);
        if !cond.is_empty() {
            parts.push(cond);
        }
        parts.join(" & ")
    }

    pub fn to_json(&self, s: &SampleGraph) -> Value {
        json!({
            "subgoals": self
                .subgoals
                .iter()
                .map(|sg| json!([s.name(sg.first), s.name(sg.second)]))
                .collect::<Vec<_>>(),
            "condition": self.condition.to_json(s),
            "text": self.render(s),
        })
    }
}

/// A set of conjunctive queries that together discover each instance of the
/// pattern exactly once. Distinct queries have distinct subgoal lists.
#[derive(Debug, Clone)]
pub struct CQSet {
    pub sample: SampleGraph,
    pub queries: Vec<ConjunctiveQuery>,
    /// Source orderings per query (empty for run-sequence queries).
    pub provenance: Vec<Vec<VarOrdering>>,
    /// Short per-query labels (run-sequence digits for cycle queries).
    pub labels: Vec<String>,
}

impl CQSet {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pattern": self.sample.names(),
            "edges": self
                .sample
                .edges()
                .iter()
                .map(|&(a, b)| json!([self.sample.name(a), self.sample.name(b)]))
                .collect::<Vec<_>>(),
            "queries": self
                .queries
                .iter()
                .enumerate()
                .map(|(i, q)| {
                    let mut v = q.to_json(&self.sample);
                    let obj = v.as_object_mut().unwrap();
                    if !self.labels[i].is_empty() {
                        obj.insert("label".into(), json!(self.labels[i]));
                    }
                    if !self.provenance[i].is_empty() {
                        obj.insert(
                            "orderings".into(),
                            json!(self
                                .provenance[i]
                                .iter()
                                .map(|o| o.render(&self.sample))
                                .collect::<Vec<_>>()),
                        );
                    }
                    v
                })
                .collect::<Vec<_>>(),
        })
    }
}

/// All permutations of 0..p in lexicographic order.
pub fn permutations_lex(p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..p).collect();
    loop {
        out.push(cur.clone());
        // next_permutation
        let Some(i) = (0..p.saturating_sub(1))
            .rev()
            .find(|&i| cur[i] < cur[i + 1])
        else {
            break;
        };
        let j = (i + 1..p).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// Lehmer rank of a permutation; used as a compact orbit marker.
fn lehmer_rank(perm: &[usize]) -> usize {
    let p = perm.len();
    let mut rank = 0usize;
    let mut fact = 1usize;
    for i in (0..p).rev() {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        rank += smaller * fact;
        fact *= p - i;
    }
    rank
}

/// The full automorphism group of the pattern (including the identity),
/// found by exhaustive backtracking. Closed under composition and inverse.
pub fn automorphisms(s: &SampleGraph) -> Result<Vec<Vec<usize>>> {
    let p = s.node_count();
    if p > MAX_PATTERN_NODES {
        return Err(Error::SampleTooLarge {
            p,
            limit: MAX_PATTERN_NODES,
        });
    }
    let degs: Vec<usize> = (0..p).map(|v| s.degree(v)).collect();
    let mut out = Vec::new();
    let mut image = vec![usize::MAX; p];
    let mut used = vec![false; p];
    fn rec(
        s: &SampleGraph,
        degs: &[usize],
        image: &mut Vec<usize>,
        used: &mut Vec<bool>,
        v: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let p = degs.len();
        if v == p {
            out.push(image.clone());
            return;
        }
        for c in 0..p {
            if used[c] || degs[c] != degs[v] {
                continue;
            }
            let ok = (0..v).all(|w| s.has_edge(v, w) == s.has_edge(c, image[w]));
            if ok {
                image[v] = c;
                used[c] = true;
                rec(s, degs, image, used, v + 1, out);
                used[c] = false;
                image[v] = usize::MAX;
            }
        }
    }
    rec(s, &degs, &mut image, &mut used, 0, &mut out);
    Ok(out)
}

/// One representative ordering per equivalence class `o ~ mu . o`
/// (pointwise automorphism application); the representative is the member
/// whose variable-position vector `(pos[v0], pos[v1], ...)` is
/// lexicographically smallest, i.e. the earliest-listed variables sit as low
/// as the class allows. Class count is `p! / |Aut(S)|`.
///
/// For a cycle this makes every representative start at X1 with X2 below Xp,
/// and for patterns whose automorphisms fix a prefix of the variables it
/// degenerates to the plain lexicographically-smallest ordering.
pub fn coset_representatives(s: &SampleGraph) -> Result<Vec<VarOrdering>> {
    let p = s.node_count();
    let auts = automorphisms(s)?;
    let total: usize = (1..=p).product();
    let mut seen = vec![false; total];
    let mut reps = Vec::with_capacity(total / auts.len());
    for perm in permutations_lex(p) {
        if seen[lehmer_rank(&perm)] {
            continue;
        }
        let mut best: Option<(Vec<usize>, Vec<usize>)> = None;
        let mut image = vec![0usize; p];
        for mu in &auts {
            for (k, &v) in perm.iter().enumerate() {
                image[k] = mu[v];
            }
            seen[lehmer_rank(&image)] = true;
            let pos = VarOrdering(image.clone()).positions();
            if best.as_ref().is_none_or(|(bp, _)| pos < *bp) {
                best = Some((pos, image.clone()));
            }
        }
        reps.push(VarOrdering(best.unwrap().1));
    }
    Ok(reps)
}

/// The query for one ordering: one subgoal per pattern edge with arguments
/// in ordering position, and the full chain of strict inequalities.
pub fn cq_from_ordering(s: &SampleGraph, ordering: &VarOrdering) -> ConjunctiveQuery {
    let pos = ordering.positions();
    let subgoals = s
        .edges()
        .iter()
        .map(|&(a, b)| {
            if pos[a] < pos[b] {
                Subgoal {
                    first: a,
                    second: b,
                }
            } else {
                Subgoal {
                    first: b,
                    second: a,
                }
            }
        })
        .collect();
    let atoms = ordering
        .0
        .windows(2)
        .map(|w| Atom::Lt(w[0], w[1]))
        .collect();
    ConjunctiveQuery {
        subgoals,
        condition: Condition::single(atoms),
    }
}

/// Check a CQ set invariant: distinct queries must differ in their subgoals.
pub fn distinct_subgoal_lists(set: &CQSet) -> bool {
    let mut seen = HashSet::new();
    set.queries.iter().all(|q| seen.insert(q.subgoals.clone()))
}
