//! Minimum query sets for cycles, built from run sequences.
//!
//! Around a cycle instance, read off the runs of "up" edges (toward a larger
//! node) and "down" edges, starting at a node smaller than both neighbors.
//! The run lengths form an even-length composition of p whose pattern string
//! starts with a u-run and ends with a d-run. Two run sequences describe the
//! same cycles exactly when one is an even cyclic shift of the other, with an
//! optional flip (reverse the pattern, then swap u and d); one query per
//! equivalence class suffices, with extra inequalities where a pattern is
//! flip-symmetric or periodic.

use crate::cq::{Atom, CQSet, Condition, ConjunctiveQuery, Subgoal};
use crate::error::{Error, Result};
use crate::graph::SampleGraph;

/// An even-length composition of p with its derived u/d pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSequence {
    pub runs: Vec<u32>,
    pub pattern: String,
}

impl RunSequence {
    pub fn from_runs(runs: Vec<u32>) -> RunSequence {
        let pattern = pattern_of(&runs);
        RunSequence { runs, pattern }
    }

    /// Run lengths as a digit string, e.g. `1122`.
    pub fn digits(&self) -> String {
        self.runs.iter().map(|r| r.to_string()).collect()
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a run sequence always covers at least three edges
    }
}

fn pattern_of(runs: &[u32]) -> String {
    let mut s = String::new();
    for (i, &r) in runs.iter().enumerate() {
        let c = if i % 2 == 0 { 'u' } else { 'd' };
        for _ in 0..r {
            s.push(c);
        }
    }
    s
}

/// Reverse the pattern and swap u with d; equivalently, reverse the run list.
pub fn flip_pattern(pattern: &str) -> String {
    pattern
        .chars()
        .rev()
        .map(|c| if c == 'u' { 'd' } else { 'u' })
        .collect()
}

fn runs_of_pattern(pattern: &str) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut chars = pattern.chars();
    let mut cur = chars.next().expect("nonempty pattern");
    let mut count = 1u32;
    for c in chars {
        if c == cur {
            count += 1;
        } else {
            runs.push(count);
            cur = c;
            count = 1;
        }
    }
    runs.push(count);
    runs
}

/// All even-length compositions of p, each with its pattern.
pub fn run_sequences(p: usize) -> Result<Vec<RunSequence>> {
    if p < 3 {
        return Err(Error::domain("cycles need p >= 3"));
    }
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::new();
    fn rec(remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<RunSequence>) {
        if remaining == 0 {
            if !cur.is_empty() && cur.len().is_multiple_of(2) {
                out.push(RunSequence::from_runs(cur.clone()));
            }
            return;
        }
        for r in 1..=remaining {
            cur.push(r);
            rec(remaining - r, cur, out);
            cur.pop();
        }
    }
    rec(p as u32, &mut cur, &mut out);
    Ok(out)
}

/// The orbit of a run sequence: cyclic shifts by an even number of run
/// positions, optionally composed with the flip.
fn orbit_patterns(runs: &[u32]) -> Vec<String> {
    let mut out = Vec::new();
    let reversed: Vec<u32> = runs.iter().rev().copied().collect();
    for base in [runs.to_vec(), reversed] {
        let n = base.len();
        let mut shift = 0;
        while shift < n {
            let rotated: Vec<u32> = (0..n).map(|i| base[(i + shift) % n]).collect();
            out.push(pattern_of(&rotated));
            shift += 2;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// One representative per equivalence class, chosen as the member whose
/// pattern is lexicographically smallest, returned sorted by pattern.
pub fn canonical_run_sequences(p: usize) -> Result<Vec<RunSequence>> {
    let all = run_sequences(p)?;
    let mut reps = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for seq in &all {
        let orbit = orbit_patterns(&seq.runs);
        let min = orbit[0].clone();
        if !seen.contains(&min) {
            seen.push(min.clone());
            reps.push(RunSequence::from_runs(runs_of_pattern(&min)));
        }
    }
    reps.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    Ok(reps)
}

/// Number of equivalence classes of length-p orientation strings under
/// rotation and flip, by direct orbit enumeration over all 2^p - 2
/// non-constant strings. This is the exact minimum query count for C_p.
pub fn orientation_class_count(p: usize) -> usize {
    assert!((3..24).contains(&p));
    let n = 1u64 << p;
    let rotate = |s: u64, k: usize| -> u64 {
        if k == 0 {
            s
        } else {
            ((s >> k) | (s << (p - k))) & (n - 1)
        }
    };
    let reverse = |s: u64| -> u64 {
        let mut r = 0u64;
        for i in 0..p {
            if s & (1 << i) != 0 {
                r |= 1 << (p - 1 - i);
            }
        }
        r
    };
    let mut seen = vec![false; n as usize];
    let mut classes = 0;
    for s in 1..n - 1 {
        if seen[s as usize] {
            continue;
        }
        classes += 1;
        for k in 0..p {
            let r = rotate(s, k);
            seen[r as usize] = true;
            seen[(reverse(r) ^ (n - 1)) as usize] = true;
        }
    }
    classes
}

fn rotate_left(pattern: &str, c: usize) -> String {
    let b = pattern.as_bytes();
    b[c..]
        .iter()
        .chain(b[..c].iter())
        .map(|&x| x as char)
        .collect()
}

/// Build the query for one canonical run sequence.
///
/// Subgoal i covers the cycle edge between X_i and X_{i+1} (X_p wraps to
/// X_1), oriented by the pattern character. The base condition restates the
/// per-edge inequalities. A matched cycle can be re-read from any starting
/// minimum in either direction; whenever such a re-reading reproduces the
/// pattern itself it would discover the cycle again, so one inequality is
/// added per nontrivial self-reading: `X1 < X_{1+c}` for a rotation by c
/// characters (with or without a direction flip), and `X2 < Xp` for the pure
/// flip. Periodic patterns and flip-palindromes are the special cases.
#[allow(clippy::needless_range_loop)] // indices are cycle positions
pub fn cq_from_run_sequence(seq: &RunSequence) -> ConjunctiveQuery {
    let p = seq.len();
    let chars: Vec<char> = seq.pattern.chars().collect();
    let mut subgoals = Vec::with_capacity(p);
    let mut atoms = Vec::with_capacity(p + 2);
    for i in 0..p {
        let a = i;
        let b = (i + 1) % p;
        let (lo, hi) = if chars[i] == 'u' { (a, b) } else { (b, a) };
        subgoals.push(Subgoal {
            first: lo,
            second: hi,
        });
        atoms.push(Atom::Lt(lo, hi));
    }
    let mut breakers = Vec::new();
    for c in 0..p {
        let forward = rotate_left(&seq.pattern, c);
        if c != 0 && forward == seq.pattern {
            breakers.push(Atom::Lt(0, c));
        }
        if flip_pattern(&forward) == seq.pattern {
            breakers.push(if c == 0 {
                Atom::Lt(1, p - 1)
            } else {
                Atom::Lt(0, c)
            });
        }
    }
    breakers.sort();
    breakers.dedup();
    atoms.extend(breakers);
    ConjunctiveQuery {
        subgoals,
        condition: Condition::single(atoms),
    }
}

/// The full run-sequence pipeline for C_p.
pub fn cycle_cqs(p: usize) -> Result<CQSet> {
    let sample = SampleGraph::builtin(&format!("cycle:{p}"))?;
    let reps = canonical_run_sequences(p)?;
    let queries: Vec<ConjunctiveQuery> = reps.iter().map(cq_from_run_sequence).collect();
    let labels = reps.iter().map(|r| r.digits()).collect();
    let provenance = vec![Vec::new(); queries.len()];
    Ok(CQSet {
        sample,
        queries,
        provenance,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentagon_has_eight_compositions() {
        let seqs = run_sequences(5).unwrap();
        let digits: Vec<String> = seqs.iter().map(|s| s.digits()).collect();
        let mut expect = vec!["14", "23", "32", "41", "1112", "1121", "1211", "2111"];
        expect.sort();
        let mut got = digits.clone();
        got.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn triangle_compositions() {
        let seqs = run_sequences(3).unwrap();
        let mut got: Vec<String> = seqs.iter().map(|s| s.digits()).collect();
        got.sort();
        assert_eq!(got, vec!["12", "21"]);
        assert!(run_sequences(2).is_err());
    }

    #[test]
    fn composition_14_pattern() {
        assert_eq!(RunSequence::from_runs(vec![1, 4]).pattern, "udddd");
    }

    #[test]
    fn pentagon_canonical_classes() {
        let reps = canonical_run_sequences(5).unwrap();
        let patterns: Vec<&str> = reps.iter().map(|r| r.pattern.as_str()).collect();
        // one class per orbit; uddud represents {ududd, uddud, uduud, uudud}
        assert_eq!(patterns, vec!["udddd", "uddud", "uuddd"]);
    }

    #[test]
    fn hexagon_canonical_classes() {
        let reps = canonical_run_sequences(6).unwrap();
        assert_eq!(reps.len(), 8);
        assert_eq!(reps.len(), orientation_class_count(6));
        let digits: Vec<String> = reps.iter().map(|r| r.digits()).collect();
        // the four-run class 1221 is not an even shift or flip of 1122 and
        // needs its own query: its cycles are matched by no other pattern
        assert!(digits.contains(&"1221".to_string()));
        assert!(digits.contains(&"1122".to_string()));
    }

    #[test]
    fn heptagon_canonical_classes() {
        let reps = canonical_run_sequences(7).unwrap();
        assert_eq!(reps.len(), 9);
        assert_eq!(reps.len(), orientation_class_count(7));
    }

    #[test]
    fn class_counts_match_orbit_enumeration() {
        for p in 3..=9 {
            assert_eq!(
                canonical_run_sequences(p).unwrap().len(),
                orientation_class_count(p),
                "p={p}"
            );
        }
    }

    #[test]
    fn prime_counts_match_closed_form() {
        for p in [3usize, 5, 7] {
            let expect = ((1usize << p) - 2) / (2 * p);
            assert_eq!(canonical_run_sequences(p).unwrap().len(), expect);
        }
    }

    #[test]
    fn palindrome_adds_second_versus_last() {
        let seq = RunSequence::from_runs(vec![3, 3]);
        let q = cq_from_run_sequence(&seq);
        assert!(q.condition.disjuncts[0].contains(&Atom::Lt(1, 5)));
    }

    #[test]
    fn alternating_hexagon_adds_rotation_breakers() {
        let seq = RunSequence::from_runs(vec![1, 1, 1, 1, 1, 1]);
        let q = cq_from_run_sequence(&seq);
        let atoms = &q.condition.disjuncts[0];
        assert!(atoms.contains(&Atom::Lt(0, 2)));
        assert!(atoms.contains(&Atom::Lt(0, 4)));
        assert!(atoms.contains(&Atom::Lt(1, 5)));
    }

    #[test]
    fn rotated_palindrome_gets_a_breaker() {
        // uduudd reproduces itself read backwards from its other minimum,
        // so the query needs X1 < X3 to avoid discovering each match twice
        let seq = RunSequence::from_runs(vec![1, 1, 2, 2]);
        assert_eq!(seq.pattern, "uduudd");
        let q = cq_from_run_sequence(&seq);
        assert!(q.condition.disjuncts[0].contains(&Atom::Lt(0, 2)));
    }

    #[test]
    fn pentagon_first_query_text() {
        let set = cycle_cqs(5).unwrap();
        let texts: Vec<String> = set.queries.iter().map(|q| q.render(&set.sample)).collect();
        let expected = "E(X1,X2) & E(X3,X2) & E(X4,X3) & E(X5,X4) & E(X1,X5) \
                        & X1<X2 & X3<X2 & X4<X3 & X5<X4 & X1<X5";
        assert!(texts.iter().any(|t| t == expected), "queries: {texts:#?}");
    }

    #[test]
    fn cycle_cqs_counts() {
        assert_eq!(cycle_cqs(3).unwrap().len(), 1);
        assert_eq!(cycle_cqs(4).unwrap().len(), 3);
        assert_eq!(cycle_cqs(5).unwrap().len(), 3);
        assert_eq!(cycle_cqs(6).unwrap().len(), 8);
        assert_eq!(cycle_cqs(7).unwrap().len(), 9);
    }

    #[test]
    fn flip_is_an_involution() {
        for pat in ["udddd", "uduudd", "ududud"] {
            assert_eq!(flip_pattern(&flip_pattern(pat)), pat);
        }
    }

    #[test]
    fn cycle_conditions_are_satisfiable() {
        // the strict atoms of every generated condition must be acyclic
        for p in 3..=10 {
            let set = cycle_cqs(p).unwrap();
            for q in &set.queries {
                for disjunct in &q.condition.disjuncts {
                    let mut reach = vec![false; p * p];
                    for atom in disjunct {
                        if let Atom::Lt(a, b) = *atom {
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
                    for v in 0..p {
                        assert!(!reach[v * p + v], "cyclic condition at p={p}");
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_reps_pairwise_inequivalent() {
        for p in 3..=8 {
            let reps = canonical_run_sequences(p).unwrap();
            for i in 0..reps.len() {
                for j in i + 1..reps.len() {
                    let oi = orbit_patterns(&reps[i].runs);
                    assert!(
                        !oi.contains(&reps[j].pattern),
                        "p={p}: {} and {} share an orbit",
                        reps[i].digits(),
                        reps[j].digits()
                    );
                }
            }
        }
    }
}
