//! Communication-cost planning: cost expressions, share optimization,
//! reducer counting, convertibility checks, and join-size bounds.
//!
//! The communication cost of evaluating a query with one reducer per list of
//! buckets is `e * sum over subgoals of coeff * product of the shares of the
//! variables absent from the subgoal`, where `e` is the edge-relation size
//! and a subgoal's coefficient is 2 when its edge is shipped in both
//! orientations. Minimizing under `product of shares = k` is a posynomial
//! program: in log-share space it is convex, and at the optimum the per-share
//! subset sums (total value of the terms containing that share) are all
//! equal. Flat directions are resolved by minimizing the variance of the log
//! shares, which picks a canonical optimum.

use std::collections::BTreeSet;

use crate::cq::{CQSet, ConjunctiveQuery};
use crate::error::{Error, Result};
use crate::graph::SampleGraph;

/// One additive term of a cost expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: u32,
    /// Free variables whose shares multiply into this term.
    pub absent: Vec<usize>,
    /// Subgoal label for reports, e.g. `E(W,X)`.
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct CostExpression {
    pub var_names: Vec<String>,
    /// Variables that carry a share.
    pub free: Vec<usize>,
    /// Dominated variables; their share is fixed at 1.
    pub dominated: Vec<usize>,
    pub terms: Vec<Term>,
}

impl CostExpression {
    /// Cost per data edge at the given shares (indexed by variable).
    pub fn cost_per_edge(&self, shares: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff as f64 * t.absent.iter().map(|&v| shares[v]).product::<f64>())
            .sum()
    }

    /// Per-term replication at the given shares, in term order.
    pub fn replication_per_term(&self, shares: &[f64]) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| t.coeff as f64 * t.absent.iter().map(|&v| shares[v]).product::<f64>())
            .collect()
    }

    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        for t in &self.terms {
            let mut s = String::new();
            if t.coeff != 1 {
                s.push_str(&t.coeff.to_string());
                s.push('*');
            }
            s.push('e');
            for &v in &t.absent {
                s.push('*');
                s.push_str(&self.var_names[v].to_lowercase());
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

/// Variables dominated within a list of subgoal variable pairs: `a` is
/// dominated when some other variable occurs in every subgoal `a` occurs in.
/// Mutually dominating variables (same subgoal sets) keep the first-listed
/// one free.
pub fn dominated_among(pairs: &[(usize, usize)], nvars: usize) -> BTreeSet<usize> {
    let occ: Vec<Vec<usize>> = (0..nvars)
        .map(|v| {
            pairs
                .iter()
                .enumerate()
                .filter(|(_, &(x, y))| x == v || y == v)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let contains = |big: &Vec<usize>, small: &Vec<usize>| small.iter().all(|i| big.contains(i));
    let mut out = BTreeSet::new();
    for a in 0..nvars {
        for b in 0..nvars {
            if a == b {
                continue;
            }
            if contains(&occ[b], &occ[a]) {
                let mutual = contains(&occ[a], &occ[b]);
                if !mutual || b < a {
                    out.insert(a);
                    break;
                }
            }
        }
    }
    out
}

/// Dominated variables of one query.
pub fn dominated_variables(q: &ConjunctiveQuery, nvars: usize) -> BTreeSet<usize> {
    let pairs: Vec<(usize, usize)> = q.subgoals.iter().map(|sg| (sg.first, sg.second)).collect();
    dominated_among(&pairs, nvars)
}

/// How a cost expression treats a query set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    /// A single query; every subgoal contributes a coefficient-1 term.
    SingleCq,
    /// All queries as one job; an edge shipped in both orientations doubles
    /// its subgoal's relation, so that term gets coefficient 2.
    VariableOriented,
}

/// Undirected pattern edges whose subgoal appears in both argument orders
/// somewhere in the set.
pub fn bidirectional_edges(set: &CQSet) -> BTreeSet<(usize, usize)> {
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut bidir = BTreeSet::new();
    for q in &set.queries {
        for sg in &q.subgoals {
            if seen.contains(&(sg.second, sg.first)) {
                bidir.insert((sg.first.min(sg.second), sg.first.max(sg.second)));
            }
            seen.insert((sg.first, sg.second));
        }
    }
    bidir
}

/// Build the communication-cost expression for a query set.
pub fn cost_expression(set: &CQSet, mode: CostMode) -> Result<CostExpression> {
    let s = &set.sample;
    let nvars = s.node_count();
    match mode {
        CostMode::SingleCq => {
            if set.queries.len() != 1 {
                return Err(Error::structural(format!(
                    "single-query cost expression needs exactly one query, got {}",
                    set.queries.len()
                )));
            }
            let q = &set.queries[0];
            let pairs: Vec<(usize, usize)> =
                q.subgoals.iter().map(|sg| (sg.first, sg.second)).collect();
            let dominated = dominated_among(&pairs, nvars);
            Ok(build_expression(
                s,
                &pairs,
                &vec![1; pairs.len()],
                &dominated,
            ))
        }
        CostMode::VariableOriented => {
            let edges: Vec<(usize, usize)> = s.edges().to_vec();
            for q in &set.queries {
                let mut qe: Vec<(usize, usize)> = q
                    .subgoals
                    .iter()
                    .map(|sg| (sg.first.min(sg.second), sg.first.max(sg.second)))
                    .collect();
                qe.sort_unstable();
                let mut se = edges.clone();
                se.sort_unstable();
                if qe != se {
                    return Err(Error::structural(
                        "variable-oriented mode needs every query to cover the same edges",
                    ));
                }
            }
            let bidir = bidirectional_edges(set);
            let coeffs: Vec<u32> = edges
                .iter()
                .map(|e| if bidir.contains(e) { 2 } else { 1 })
                .collect();
            let dominated = dominated_among(&edges, nvars);
            Ok(build_expression(s, &edges, &coeffs, &dominated))
        }
    }
}

fn build_expression(
    s: &SampleGraph,
    pairs: &[(usize, usize)],
    coeffs: &[u32],
    dominated: &BTreeSet<usize>,
) -> CostExpression {
    let nvars = s.node_count();
    let free: Vec<usize> = (0..nvars).filter(|v| !dominated.contains(v)).collect();
    let terms = pairs
        .iter()
        .zip(coeffs)
        .map(|(&(a, b), &coeff)| Term {
            coeff,
            absent: free.iter().copied().filter(|&v| v != a && v != b).collect(),
            label: format!("E({},{})", s.name(a), s.name(b)),
        })
        .collect();
    CostExpression {
        var_names: s.names().to_vec(),
        free,
        dominated: dominated.iter().copied().collect(),
        terms,
    }
}

/// Shares for every pattern variable, with product k.
#[derive(Debug, Clone)]
pub struct ShareAssignment {
    pub var_names: Vec<String>,
    pub shares: Vec<f64>,
    pub k: u64,
    pub cost_per_edge: f64,
    /// Worst relative deviation of the optimality conditions.
    pub kkt_residual: f64,
}

impl ShareAssignment {
    pub fn share_of(&self, name: &str) -> f64 {
        let i = self
            .var_names
            .iter()
            .position(|n| n == name)
            .expect("unknown variable");
        self.shares[i]
    }

    /// Shares rounded to the nearest integer, floored at 1.
    pub fn rounded(&self) -> Vec<u64> {
        self.shares
            .iter()
            .map(|&s| (s.round() as u64).max(1))
            .collect()
    }
}

/// Minimize the cost expression subject to `product of shares = k` and every
/// share at least 1. Deterministic: uniform initialization, fixed-point
/// balancing of the per-share subset sums, then variance-minimal resolution
/// of flat directions.
pub fn optimize_shares(expr: &CostExpression, k: u64) -> Result<ShareAssignment> {
    if k < 1 {
        return Err(Error::domain("reducer budget k must be at least 1"));
    }
    let nvars = expr.var_names.len();
    let q = expr.free.len();
    let l_total = (k as f64).ln();

    // compact indices for the free variables
    let compact: Vec<Option<usize>> = {
        let mut c = vec![None; nvars];
        for (i, &v) in expr.free.iter().enumerate() {
            c[v] = Some(i);
        }
        c
    };
    let terms: Vec<(f64, Vec<usize>)> = expr
        .terms
        .iter()
        .map(|t| {
            (
                t.coeff as f64,
                t.absent.iter().map(|&v| compact[v].unwrap()).collect(),
            )
        })
        .collect();

    // variables in no term are free parallelism: they absorb the whole
    // budget (variance-minimally split) while costed shares sit at 1
    let costed: Vec<bool> = {
        let mut c = vec![false; q];
        for (_, vs) in &terms {
            for &v in vs {
                c[v] = true;
            }
        }
        c
    };
    let n_costless = costed.iter().filter(|&&c| !c).count();

    let mut xi = vec![0.0f64; q];
    if n_costless > 0 {
        for (v, &is_costed) in costed.iter().enumerate() {
            if !is_costed {
                xi[v] = l_total / n_costless as f64;
            }
        }
    } else if q > 0 {
        xi = vec![l_total / q as f64; q];
        balance(&terms, &mut xi, l_total);
        canonicalize_flat(&terms, &mut xi, l_total);
    }

    let mut shares = vec![1.0f64; nvars];
    for (i, &v) in expr.free.iter().enumerate() {
        shares[v] = xi[i].exp();
    }
    let residual = kkt_residual(&terms, &xi);
    Ok(ShareAssignment {
        var_names: expr.var_names.clone(),
        shares: shares.clone(),
        k,
        cost_per_edge: expr.cost_per_edge(&shares),
        kkt_residual: residual,
    })
}

fn subset_sums(terms: &[(f64, Vec<usize>)], xi: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; xi.len()];
    for (coeff, vs) in terms {
        let val = coeff * (vs.iter().map(|&v| xi[v]).sum::<f64>()).exp();
        for &v in vs {
            sums[v] += val;
        }
    }
    sums
}

fn kkt_residual(terms: &[(f64, Vec<usize>)], xi: &[f64]) -> f64 {
    let sums = subset_sums(terms, xi);
    let interior: Vec<usize> = (0..xi.len())
        .filter(|&v| xi[v] > 1e-9 && sums[v] > 0.0)
        .collect();
    if interior.is_empty() {
        return 0.0;
    }
    let lam = interior.iter().map(|&v| sums[v]).sum::<f64>() / interior.len() as f64;
    let mut r: f64 = 0.0;
    for v in 0..xi.len() {
        if sums[v] == 0.0 {
            continue;
        }
        if xi[v] > 1e-9 {
            r = r.max((sums[v] - lam).abs() / lam);
        } else {
            // a floored share may only be under-demanded
            r = r.max((lam - sums[v]).max(0.0) / lam);
        }
    }
    r
}

/// Fixed-point balancing: nudge each log-share toward equalizing its subset
/// sum, projecting back onto the budget simplex.
fn balance(terms: &[(f64, Vec<usize>)], xi: &mut Vec<f64>, l_total: f64) {
    let q = xi.len();
    for sweep in 0..80_000u32 {
        let sums = subset_sums(terms, xi);
        let interior: Vec<usize> = (0..q).filter(|&v| xi[v] > 1e-12).collect();
        let pool = if interior.is_empty() {
            (0..q).collect::<Vec<_>>()
        } else {
            interior
        };
        let lam_ln =
            pool.iter().map(|&v| sums[v].max(1e-300).ln()).sum::<f64>() / pool.len() as f64;
        let step = 0.35;
        let next: Vec<f64> = (0..q)
            .map(|v| xi[v] + step * (lam_ln - sums[v].max(1e-300).ln()))
            .collect();
        let next = project_budget(&next, l_total);
        let moved = next
            .iter()
            .zip(xi.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        *xi = next;
        if moved < 1e-15 && sweep > 16 {
            break;
        }
        if sweep % 64 == 0 && kkt_residual(terms, xi) < 1e-13 {
            break;
        }
    }
}

/// Euclidean projection onto `{x >= 0, sum x = total}`.
fn project_budget(x: &[f64], total: f64) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - total) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Move along cost-flat directions to the variance-minimal optimum.
///
/// A direction is flat when it keeps the budget and every term exponent
/// unchanged; within the flat affine slice the squared norm of the log
/// shares (their variance, the mean being pinned by the budget) is
/// minimized, pinning any share that would cross below 1.
fn canonicalize_flat(terms: &[(f64, Vec<usize>)], xi: &mut Vec<f64>, l_total: f64) {
    let q = xi.len();
    let mut pinned: Vec<usize> = Vec::new();
    loop {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        rows.push(vec![1.0; q]);
        for (_, vs) in terms {
            let mut row = vec![0.0; q];
            for &v in vs {
                row[v] = 1.0;
            }
            rows.push(row);
        }
        for &v in &pinned {
            let mut row = vec![0.0; q];
            row[v] = 1.0;
            rows.push(row);
        }
        let null = nullspace(&rows, q);
        if null.is_empty() {
            return;
        }
        // least-norm point of xi + span(null)
        let d = null.len();
        let mut gram = vec![vec![0.0; d]; d];
        let mut rhs = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                gram[i][j] = dot(&null[i], &null[j]);
            }
            rhs[i] = -dot(&null[i], xi);
        }
        let theta = solve_dense(&mut gram, &mut rhs);
        let mut cand = xi.clone();
        for (i, &t) in theta.iter().enumerate() {
            for v in 0..q {
                cand[v] += t * null[i][v];
            }
        }
        if let Some(worst) = (0..q)
            .filter(|&v| cand[v] < -1e-9)
            .min_by(|&a, &b| cand[a].partial_cmp(&cand[b]).unwrap())
        {
            pinned.push(worst);
            continue;
        }
        for v in cand.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        // keep the budget exact against rounding drift
        let sum: f64 = cand.iter().sum();
        if sum > 0.0 {
            let fix = l_total - sum;
            let n_pos = cand.iter().filter(|&&v| v > 0.0).count().max(1);
            for v in cand.iter_mut() {
                if *v > 0.0 {
                    *v += fix / n_pos as f64;
                }
            }
        }
        *xi = cand;
        return;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Basis of the nullspace of the given rows, by Gaussian elimination.
#[allow(clippy::needless_range_loop)]
fn nullspace(rows: &[Vec<f64>], q: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let nr = m.len();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..q {
        let Some(best) = (r..nr)
            .filter(|&i| m[i][c].abs() > 1e-9)
            .max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap())
        else {
            continue;
        };
        m.swap(r, best);
        let piv = m[r][c];
        for x in m[r].iter_mut() {
            *x /= piv;
        }
        for i in 0..nr {
            if i != r && m[i][c].abs() > 1e-12 {
                let f = m[i][c];
                for j in 0..q {
                    let sub = f * m[r][j];
                    m[i][j] -= sub;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == nr {
            break;
        }
    }
    let mut basis = Vec::new();
    for c in 0..q {
        if pivot_cols.contains(&c) {
            continue;
        }
        let mut v = vec![0.0; q];
        v[c] = 1.0;
        for (ri, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[ri][c];
        }
        basis.push(v);
    }
    basis
}

#[allow(clippy::needless_range_loop)]
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        if a[c][c].abs() < 1e-12 {
            continue;
        }
        for i in 0..n {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in 0..n {
                    let sub = f * a[c][j];
                    a[i][j] -= sub;
                }
                b[i] -= f * b[c];
            }
        }
    }
    (0..n)
        .map(|i| {
            if a[i][i].abs() < 1e-12 {
                0.0
            } else {
                b[i] / a[i][i]
            }
        })
        .collect()
}

/// Uniform shares k^{1/p} for a regular pattern; closed form.
pub fn regular_shares(p: usize, k: u64) -> Result<ShareAssignment> {
    if p < 1 || k < 1 {
        return Err(Error::domain("regular shares need p >= 1 and k >= 1"));
    }
    let raw = (k as f64).powf(1.0 / p as f64);
    let share = snap(raw, p as u32, k);
    Ok(ShareAssignment {
        var_names: (1..=p).map(|i| format!("X{i}")).collect(),
        shares: vec![share; p],
        k,
        cost_per_edge: f64::NAN,
        kkt_residual: 0.0,
    })
}

/// Snap x to an integer when x^power equals k exactly.
fn snap(x: f64, power: u32, k: u64) -> f64 {
    let r = x.round();
    if (1.0..1e9).contains(&r) && (r as u128).checked_pow(power) == Some(k as u128) {
        return r;
    }
    x
}

/// The two-level share plan for a regular pattern whose bidirectional and
/// unidirectional edges split the nodes two ways: one side's shares are
/// twice the other's.
#[derive(Debug, Clone)]
pub struct MixedSharesPlan {
    pub assignment: ShareAssignment,
    /// Nodes taking the doubled share.
    pub double_side: Vec<usize>,
    /// Nodes taking the base share.
    pub single_side: Vec<usize>,
    /// Exact integer shares when the budget admits them.
    pub exact_shares: Option<Vec<u64>>,
    /// Exact per-edge replication (integer shares only).
    pub exact_per_edge: Option<u128>,
}

impl MixedSharesPlan {
    /// Exact total communication at m data edges, when exact shares exist.
    pub fn exact_total_communication(&self, m: u64) -> Option<u128> {
        self.exact_per_edge.map(|r| r * m as u128)
    }

    /// Exact average edges per reducer, when the division is exact.
    pub fn exact_per_reducer_load(&self, m: u64) -> Option<u128> {
        let total = self.exact_total_communication(m)?;
        let k = self.assignment.k as u128;
        (total % k == 0).then(|| total / k)
    }
}

/// Closed-form shares for a regular pattern with a valid two-set split: the
/// nodes on the bidirectional side take twice the share of the rest.
pub fn regular_mixed_shares(
    s: &SampleGraph,
    bidirectional: &BTreeSet<(usize, usize)>,
    k: u64,
) -> Result<MixedSharesPlan> {
    let p = s.node_count();
    if s.is_regular().is_none() {
        return Err(Error::structural(
            "mixed-share closed form needs a regular pattern",
        ));
    }
    let edges: Vec<(usize, usize)> = s.edges().to_vec();
    for e in bidirectional {
        if !edges.contains(e) {
            return Err(Error::structural("bidirectional edge not in the pattern"));
        }
    }
    let is_bi = |e: &(usize, usize)| bidirectional.contains(e);
    let touches_bi = |v: usize| {
        edges
            .iter()
            .any(|&(a, b)| (a == v || b == v) && is_bi(&(a, b)))
    };
    let touches_uni = |v: usize| {
        edges
            .iter()
            .any(|&(a, b)| (a == v || b == v) && !is_bi(&(a, b)))
    };

    // case (a): bidirectional edges inside S1, unidirectional between S1, S2
    let case_a = {
        let s1: Vec<usize> = (0..p).filter(|&v| touches_bi(v)).collect();
        let ok = edges.iter().all(|&(a, b)| {
            if is_bi(&(a, b)) {
                s1.contains(&a) && s1.contains(&b)
            } else {
                s1.contains(&a) != s1.contains(&b)
            }
        });
        ok.then(|| {
            let s2 = (0..p).filter(|v| !s1.contains(v)).collect::<Vec<_>>();
            (s1.clone(), s2)
        })
    };
    // case (b): bidirectional between S1 and S2, unidirectional inside S2
    let case_b = || {
        let s1: Vec<usize> = (0..p).filter(|&v| !touches_uni(v)).collect();
        let s2: Vec<usize> = (0..p).filter(|&v| touches_uni(v)).collect();
        let ok = edges.iter().all(|&(a, b)| {
            if is_bi(&(a, b)) {
                s1.contains(&a) != s1.contains(&b)
            } else {
                s2.contains(&a) && s2.contains(&b)
            }
        });
        ok.then_some((s1, s2))
    };
    let Some((double_side, single_side)) = case_a.or_else(case_b) else {
        return Err(Error::structural(
            "pattern does not meet the two-set split; use the numeric optimizer",
        ));
    };

    let s1c = double_side.len() as u32;
    let pow2 = 2f64.powi(s1c as i32);
    let mut z = (k as f64 / pow2).powf(1.0 / p as f64);
    if s1c < 63 && k.is_multiple_of(1u64 << s1c) {
        z = snap(z, p as u32, k >> s1c);
    }
    let mut shares = vec![0.0f64; p];
    for &v in &double_side {
        shares[v] = 2.0 * z;
    }
    for &v in &single_side {
        shares[v] = z;
    }

    let coeffs: Vec<u32> = edges.iter().map(|e| if is_bi(e) { 2 } else { 1 }).collect();
    let cost: f64 = edges
        .iter()
        .zip(&coeffs)
        .map(|(&(a, b), &c)| {
            c as f64
                * (0..p)
                    .filter(|&v| v != a && v != b)
                    .map(|v| shares[v])
                    .product::<f64>()
        })
        .sum();

    // exact integer path
    let mut exact_shares = None;
    let mut exact_per_edge = None;
    if z.fract() == 0.0 && z >= 1.0 {
        let ints: Vec<u64> = shares.iter().map(|&x| x.round() as u64).collect();
        if ints.iter().map(|&x| x as u128).product::<u128>() == k as u128 {
            let per_edge: u128 = edges
                .iter()
                .zip(&coeffs)
                .map(|(&(a, b), &c)| {
                    c as u128
                        * (0..p)
                            .filter(|&v| v != a && v != b)
                            .map(|v| ints[v] as u128)
                            .product::<u128>()
                })
                .sum();
            exact_shares = Some(ints);
            exact_per_edge = Some(per_edge);
        }
    }

    Ok(MixedSharesPlan {
        assignment: ShareAssignment {
            var_names: s.names().to_vec(),
            shares: shares.clone(),
            k,
            cost_per_edge: cost,
            kkt_residual: f64::NAN,
        },
        double_side,
        single_side,
        exact_shares,
        exact_per_edge,
    })
}

/// Per-tuple replication of the three-share closed form (splits of equal
/// size, half of each node's edges inside its own side, no edges inside the
/// middle set): shares are b, 2^{1/3} b, 2^{2/3} b and the replication is
/// `k p d (2^{2/3} + 2^{1/3}) / (4 k^{2/p})`.
pub fn eq2_replication(p: usize, d: usize, s1: usize, s2: usize, s3: usize, k: u64) -> Result<f64> {
    if s1 != s2 || s2 != s3 || s1 + s2 + s3 != p {
        return Err(Error::structural("three equal node sets are required"));
    }
    if !d.is_multiple_of(2) || d == 0 {
        return Err(Error::structural("the split needs an even pattern degree"));
    }
    let kf = k as f64;
    Ok(
        kf * p as f64 * d as f64 * (2f64.powf(2.0 / 3.0) + 2f64.powf(1.0 / 3.0))
            / (4.0 * kf.powf(2.0 / p as f64)),
    )
}

/// Per-tuple replication when the middle set is independent and covers every
/// edge: shares are a for both-orientation nodes and the middle, a/2 for the
/// rest, with a = k^{1/p} 2^{s3/p}; the replication is
/// `k p d / (2^{2 s3/p} k^{2/p})`.
pub fn eq3_replication(p: usize, d: usize, s1: usize, s2: usize, s3: usize, k: u64) -> Result<f64> {
    if s1 + s2 + s3 != p || s2 != s1 + s3 {
        return Err(Error::structural(
            "a covering independent middle set needs s2 = s1 + s3 = p/2",
        ));
    }
    if d == 0 {
        return Err(Error::structural("pattern degree must be positive"));
    }
    let kf = k as f64;
    Ok(
        kf * p as f64 * d as f64
            / (2f64.powf(2.0 * s3 as f64 / p as f64) * kf.powf(2.0 / p as f64)),
    )
}

/// Synthetic cost expression realizing the equal-thirds split structure.
pub fn eq2_cost_expression(p: usize, d: usize) -> Result<CostExpression> {
    if !p.is_multiple_of(3) {
        return Err(Error::structural("p must be divisible by 3"));
    }
    let s = p / 3;
    if !d.is_multiple_of(2) || d < 2 {
        return Err(Error::structural("d must be even and positive"));
    }
    let dh = d / 2;
    if !(s * dh).is_multiple_of(2) && !s.is_multiple_of(2) {
        return Err(Error::structural("inside-side degree is not realizable"));
    }
    let names: Vec<String> = (0..s)
        .map(|i| format!("A{i}"))
        .chain((0..s).map(|i| format!("Z{i}")))
        .chain((0..s).map(|i| format!("B{i}")))
        .collect();
    let mut pairs: Vec<((usize, usize), u32)> = Vec::new();
    let circulant = |base: usize, out: &mut Vec<((usize, usize), u32)>, coeff: u32| {
        let mut added: BTreeSet<(usize, usize)> = BTreeSet::new();
        for j in 1..=dh / 2 {
            for i in 0..s {
                let a = base + i;
                let b = base + (i + j) % s;
                let e = (a.min(b), a.max(b));
                if added.insert(e) {
                    out.push((e, coeff));
                }
            }
        }
        if dh % 2 == 1 {
            for i in 0..s / 2 {
                let e = (base + i, base + i + s / 2);
                out.push((e, coeff));
            }
        }
    };
    circulant(0, &mut pairs, 2); // inside the doubled side
    circulant(2 * s, &mut pairs, 1); // inside the single side
    for j in 0..dh {
        for i in 0..s {
            pairs.push(((i, s + (i + j) % s), 2)); // doubled side to middle
            pairs.push(((s + (i + j) % s, 2 * s + i), 1)); // middle to single side
        }
    }
    let sg = SampleGraph::new(names, pairs.iter().map(|&(e, _)| e).collect())?;
    let coeffs: Vec<u32> = pairs.iter().map(|&(_, c)| c).collect();
    let edge_list: Vec<(usize, usize)> = pairs.iter().map(|&(e, _)| e).collect();
    Ok(build_expression(&sg, &edge_list, &coeffs, &BTreeSet::new()))
}

/// Synthetic cost expression realizing the covering-middle structure.
pub fn eq3_cost_expression(p: usize, d: usize, s1: usize, s3: usize) -> Result<CostExpression> {
    let s2 = s1 + s3;
    if s1 + s2 + s3 != p {
        return Err(Error::structural("sizes must satisfy s2 = s1 + s3 = p/2"));
    }
    let names: Vec<String> = (0..s1)
        .map(|i| format!("A{i}"))
        .chain((0..s2).map(|i| format!("Z{i}")))
        .chain((0..s3).map(|i| format!("B{i}")))
        .collect();
    let left: Vec<(usize, u32)> = (0..s1)
        .map(|i| (i, 2u32))
        .chain((0..s3).map(|i| (s1 + s2 + i, 1u32)))
        .collect();
    let mut pairs = Vec::new();
    let mut coeffs = Vec::new();
    for j in 0..d {
        for (li, &(v, c)) in left.iter().enumerate() {
            let z = s1 + (li + j) % s2;
            pairs.push((v.min(z), v.max(z)));
            coeffs.push(c);
        }
    }
    let sg = SampleGraph::new(names, pairs.clone())?;
    Ok(build_expression(&sg, &pairs, &coeffs, &BTreeSet::new()))
}

fn binomial(n: u64, r: u64) -> Result<u128> {
    if r > n {
        return Ok(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or(Error::Overflow { n, k: r })?;
        acc /= (i + 1) as u128;
    }
    Ok(acc)
}

/// Number of reducers that can receive work under a bucket-respecting node
/// order: the nondecreasing b-ary lists of length p, `C(b+p-1, p)`.
pub fn useful_reducer_count(b: u64, p: u64) -> Result<u128> {
    if b < 1 || p < 1 {
        return Err(Error::domain("reducer counting needs b >= 1 and p >= 1"));
    }
    binomial(b + p - 1, p)
}

/// Reducers receiving each edge under bucket-oriented routing:
/// `C(b+p-3, p-2)`.
pub fn bucket_oriented_replication(b: u64, p: u64) -> Result<u128> {
    if b < 1 || p < 2 {
        return Err(Error::domain(
            "bucket-oriented replication needs b >= 1 and p >= 2",
        ));
    }
    binomial(b + p - 3, p - 2)
}

/// Average reducers receiving each edge when nodes are partitioned into b
/// groups and reducers are p-subsets of groups:
/// `((b-1)/b) C(b-2, p-2) + (1/b) C(b-1, p-1)`.
pub fn generalized_partition_replication(b: u64, p: u64) -> Result<f64> {
    if b < p {
        return Err(Error::domain("group partitioning needs b >= p"));
    }
    let cross = binomial(b - 2, p - 2)? as f64;
    let same = binomial(b - 1, p - 1)? as f64;
    Ok(((b - 1) as f64 * cross + same) / b as f64)
}

/// Verdict of the reducer-work accounting for a serial O(n^alpha m^beta)
/// enumerator under hash mapping: total reducer work scales by
/// b^(p - alpha - 2 beta), so a nonpositive exponent means convertible.
#[derive(Debug, Clone, Copy)]
pub struct Convertibility {
    pub work_inflation_exponent: f64,
    pub convertible: bool,
}

pub fn convertibility_check(alpha: f64, beta: f64, p: usize) -> Convertibility {
    let exponent = p as f64 - alpha - 2.0 * beta;
    Convertibility {
        work_inflation_exponent: exponent,
        convertible: exponent <= 1e-9,
    }
}

/// Worst-case size of the 5-cycle join over relations of the given sizes.
///
/// If every rotation satisfies `n1 n5 n3 >= n2 n4` the bound is the square
/// root of the product of all five sizes; otherwise it is the smallest
/// violating rotation's `n1 n5 n3`.
pub fn c5_join_bound(sizes: &[u64; 5]) -> f64 {
    let n = |r: usize, off: usize| sizes[(r + off) % 5] as u128;
    let mut violating: Option<u128> = None;
    for r in 0..5 {
        let lhs = n(r, 0) * n(r, 4) * n(r, 2);
        let rhs = n(r, 1) * n(r, 3);
        if lhs < rhs {
            violating = Some(violating.map_or(lhs, |v| v.min(lhs)));
        }
    }
    match violating {
        Some(v) => v as f64,
        None => sizes.iter().map(|&x| x as f64).product::<f64>().sqrt(),
    }
}

/// Outcome of comparing one combined evaluation against split evaluations.
#[derive(Debug, Clone)]
pub struct SplitComparison {
    pub combined_cost: f64,
    pub split_costs: Vec<f64>,
    pub holds: bool,
}

/// Numerically verify that evaluating the whole query group at once is never
/// more expensive than the sum of optimal evaluations of the split groups.
pub fn combined_vs_split_check(
    set: &CQSet,
    splits: &[Vec<usize>],
    k: u64,
) -> Result<SplitComparison> {
    let mut all: Vec<usize> = splits.iter().flatten().copied().collect();
    all.sort_unstable();
    let expect: Vec<usize> = (0..set.queries.len()).collect();
    if all != expect {
        return Err(Error::structural("splits must partition the query set"));
    }
    let combined = optimize_shares(&cost_expression(set, CostMode::VariableOriented)?, k)?;
    let mut split_costs = Vec::with_capacity(splits.len());
    for part in splits {
        let sub = CQSet {
            sample: set.sample.clone(),
            queries: part.iter().map(|&i| set.queries[i].clone()).collect(),
            provenance: part.iter().map(|&i| set.provenance[i].clone()).collect(),
            labels: part.iter().map(|&i| set.labels[i].clone()).collect(),
        };
        let opt = optimize_shares(&cost_expression(&sub, CostMode::VariableOriented)?, k)?;
        split_costs.push(opt.cost_per_edge);
    }
    let total: f64 = split_costs.iter().sum();
    Ok(SplitComparison {
        combined_cost: combined.cost_per_edge,
        split_costs,
        holds: combined.cost_per_edge <= total * (1.0 + 1e-9) + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplecq::generate_cqs;

    fn set(name: &str) -> CQSet {
        generate_cqs(&SampleGraph::builtin(name).unwrap()).unwrap()
    }

    fn single(name: &str, idx: usize) -> CQSet {
        let s = set(name);
        CQSet {
            sample: s.sample.clone(),
            queries: vec![s.queries[idx].clone()],
            provenance: vec![s.provenance[idx].clone()],
            labels: vec![s.labels[idx].clone()],
        }
    }

    #[test]
    fn domination_examples() {
        let lol = set("lollipop");
        let d = dominated_variables(&lol.queries[0], 4);
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![0]); // W

        let tri = set("triangle");
        assert!(dominated_variables(&tri.queries[0], 3).is_empty());

        let edge = set("edge");
        let d = dominated_variables(&edge.queries[0], 2);
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![1]); // keep A, drop B
    }

    #[test]
    fn lollipop_single_expression() {
        let expr = cost_expression(&single("lollipop", 0), CostMode::SingleCq).unwrap();
        assert_eq!(expr.render(), "e*y*z + e*z + e*y + e*x");
    }

    #[test]
    fn square_variable_oriented_expression() {
        let expr = cost_expression(&set("square"), CostMode::VariableOriented).unwrap();
        assert_eq!(expr.render(), "e*y*z + 2*e*w*z + 2*e*w*x + e*x*y");
    }

    #[test]
    fn single_edge_expression_and_plan() {
        let expr = cost_expression(&set("edge"), CostMode::SingleCq).unwrap();
        assert_eq!(expr.render(), "e");
        let opt = optimize_shares(&expr, 1).unwrap();
        assert_eq!(opt.shares, vec![1.0, 1.0]);
        assert!((opt.cost_per_edge - 1.0).abs() < 1e-12);
        // spare budget goes to the costless variable
        let opt = optimize_shares(&expr, 9).unwrap();
        assert!((opt.share_of("A") - 9.0).abs() < 1e-9);
        assert!((opt.share_of("B") - 1.0).abs() < 1e-12);
        assert!((opt.cost_per_edge - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lollipop_share_optimum_at_750() {
        let expr = cost_expression(&single("lollipop", 0), CostMode::SingleCq).unwrap();
        let opt = optimize_shares(&expr, 750).unwrap();
        assert!((opt.share_of("W") - 1.0).abs() < 1e-9);
        assert!(
            (opt.share_of("X") - 30.0).abs() < 1e-4,
            "x={}",
            opt.share_of("X")
        );
        assert!((opt.share_of("Y") - 5.0).abs() < 1e-4);
        assert!((opt.share_of("Z") - 5.0).abs() < 1e-4);
        assert!((opt.cost_per_edge - 65.0).abs() < 1e-3);
        assert!(opt.kkt_residual < 1e-8, "residual {}", opt.kkt_residual);
    }

    #[test]
    fn square_variable_oriented_optimum() {
        for k in [8u64, 128, 50_000] {
            let expr = cost_expression(&set("square"), CostMode::VariableOriented).unwrap();
            let opt = optimize_shares(&expr, k).unwrap();
            let (w, x, y, z) = (
                opt.share_of("W"),
                opt.share_of("X"),
                opt.share_of("Y"),
                opt.share_of("Z"),
            );
            assert!((x - z).abs() / x < 1e-6, "x={x} z={z}");
            assert!((y - 2.0 * w).abs() / y < 1e-6, "w={w} y={y}");
            let expect = 4.0 * (2.0 * k as f64).sqrt();
            assert!((opt.cost_per_edge - expect).abs() / expect < 1e-6);
            assert!(opt.kkt_residual < 1e-8);
        }
    }

    #[test]
    fn regular_patterns_get_uniform_shares() {
        for (name, k) in [("triangle", 1000u64), ("square", 4096), ("cycle:5", 7776)] {
            let one = single(name, 0);
            let expr = cost_expression(&one, CostMode::SingleCq).unwrap();
            let opt = optimize_shares(&expr, k).unwrap();
            let expect = (k as f64).powf(1.0 / one.sample.node_count() as f64);
            for &s in &opt.shares {
                assert!(
                    (s - expect).abs() / expect < 1e-6,
                    "{name}: {s} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn regular_shares_closed_form() {
        assert_eq!(
            regular_shares(3, 1000).unwrap().shares,
            vec![10.0, 10.0, 10.0]
        );
        assert_eq!(regular_shares(3, 216).unwrap().shares, vec![6.0, 6.0, 6.0]);
        assert_eq!(regular_shares(4, 1).unwrap().shares, vec![1.0; 4]);
    }

    #[test]
    fn c6_mixed_share_plan() {
        let set = set("cycle:6");
        let bidir = bidirectional_edges(&set);
        // the two edges at X1 stay one-way; the other four flip
        assert_eq!(bidir.len(), 4);
        let plan = regular_mixed_shares(&set.sample, &bidir, 500_000).unwrap();
        let shares = plan.exact_shares.clone().expect("budget admits integers");
        assert_eq!(shares, vec![5, 10, 10, 10, 10, 10]);
        // per the cost model every edge term evaluates to 10^4:
        // the one-way terms at X1 multiply four full shares, the doubled
        // terms multiply the halved X1 share twice over
        assert_eq!(plan.exact_per_edge, Some(60_000));
        assert_eq!(
            plan.exact_total_communication(1_000_000_000),
            Some(60_000_000_000_000)
        );
        assert_eq!(
            plan.exact_per_reducer_load(1_000_000_000),
            Some(120_000_000)
        );
    }

    #[test]
    fn mixed_share_plan_matches_numeric_optimum() {
        let set = set("cycle:6");
        let bidir = bidirectional_edges(&set);
        let plan = regular_mixed_shares(&set.sample, &bidir, 500_000).unwrap();
        let expr = cost_expression(&set, CostMode::VariableOriented).unwrap();
        let opt = optimize_shares(&expr, 500_000).unwrap();
        assert!(
            (opt.cost_per_edge - plan.assignment.cost_per_edge).abs() / opt.cost_per_edge < 1e-6
        );
    }

    #[test]
    fn mixed_share_plan_degenerates_without_bidirectional_edges() {
        let s = SampleGraph::builtin("cycle:4").unwrap();
        let plan = regular_mixed_shares(&s, &BTreeSet::new(), 4096).unwrap();
        for &x in &plan.assignment.shares {
            assert!((x - 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn eq_closed_forms_match_numeric_optimizer() {
        for (p, d, k) in [
            (6usize, 2usize, 1_000u64),
            (6, 2, 500_000),
            (12, 2, 1_000_000),
        ] {
            let expr = eq2_cost_expression(p, d).unwrap();
            let opt = optimize_shares(&expr, k).unwrap();
            let formula = eq2_replication(p, d, p / 3, p / 3, p / 3, k).unwrap();
            assert!(
                (opt.cost_per_edge - formula).abs() / formula < 1e-4,
                "p={p} d={d} k={k}: {} vs {formula}",
                opt.cost_per_edge
            );
        }
        for (p, d, s1, s3, k) in [
            (4usize, 2usize, 1usize, 1usize, 1_000u64),
            (6, 2, 2, 1, 729),
            (8, 2, 2, 2, 65_536),
        ] {
            let expr = eq3_cost_expression(p, d, s1, s3).unwrap();
            let opt = optimize_shares(&expr, k).unwrap();
            let formula = eq3_replication(p, d, s1, s1 + s3, s3, k).unwrap();
            assert!(
                (opt.cost_per_edge - formula).abs() / formula < 1e-4,
                "p={p} s1={s1} s3={s3} k={k}: {} vs {formula}",
                opt.cost_per_edge
            );
        }
    }

    #[test]
    fn eq3_square_structure_matches_known_optimum() {
        // the square's variable-oriented cost is the s1=s3=1, s2=2 case
        for k in [32u64, 5000] {
            let f = eq3_replication(4, 2, 1, 2, 1, k).unwrap();
            let expect = 4.0 * (2.0 * k as f64).sqrt();
            assert!((f - expect).abs() / expect < 1e-12);
        }
    }

    #[test]
    fn reducer_count_combinatorics() {
        assert_eq!(useful_reducer_count(10, 3).unwrap(), 220);
        assert_eq!(useful_reducer_count(1, 7).unwrap(), 1);
        for b in 1..=100u64 {
            assert_eq!(
                useful_reducer_count(b, 3).unwrap(),
                (b * (b + 1) * (b + 2) / 6) as u128
            );
        }
        assert_eq!(bucket_oriented_replication(10, 3).unwrap(), 10);
        assert_eq!(bucket_oriented_replication(7, 2).unwrap(), 1);
        assert_eq!(bucket_oriented_replication(10, 4).unwrap(), 55);
    }

    #[test]
    fn binomial_overflow_is_an_error() {
        assert!(matches!(
            useful_reducer_count(u64::MAX / 2, 10),
            Err(crate::error::Error::Overflow { .. })
        ));
    }

    #[test]
    fn partition_replication_values() {
        assert!((generalized_partition_replication(12, 3).unwrap() - 13.75).abs() < 1e-12);
        assert!((generalized_partition_replication(3, 3).unwrap() - 1.0).abs() < 1e-12);
        assert!(generalized_partition_replication(2, 3).is_err());
    }

    #[test]
    fn large_b_ratio_approaches_limit() {
        // at matched reducer budgets the group-partition scheme costs about
        // 1 + 1/(p-1) times the bucket-oriented scheme
        for p in [3u64, 4, 5] {
            let b = 1500u64;
            let gp = generalized_partition_replication(b + p - 1, p).unwrap();
            let bo = bucket_oriented_replication(b, p).unwrap() as f64;
            let limit = 1.0 + 1.0 / (p - 1) as f64;
            assert!(
                ((gp / bo) - limit).abs() / limit < 0.005,
                "p={p}: {}",
                gp / bo
            );
        }
    }

    #[test]
    fn convertibility_examples() {
        let c = convertibility_check(0.0, 1.5, 3);
        assert!(c.convertible && c.work_inflation_exponent.abs() < 1e-12);
        let c = convertibility_check(2.0, 2.5, 7); // q + 2 (p-q)/2 = p
        assert!(c.convertible);
        let c = convertibility_check(0.0, 1.0, 3);
        assert!(!c.convertible && (c.work_inflation_exponent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c5_bound_cases() {
        assert_eq!(c5_join_bound(&[1, 1, 1, 1, 1]), 1.0);
        for n in [2u64, 10, 100] {
            let expect = (n as f64).powf(2.5);
            assert!((c5_join_bound(&[n; 5]) - expect).abs() / expect < 1e-12);
        }
        // the alternating tuple violates the condition at one rotation only,
        // and that rotation's n1*n5*n3 is 1: three unit-size relations pin
        // every attribute, so the join output cannot exceed one tuple
        assert_eq!(c5_join_bound(&[1, 10, 1, 10, 1]), 1.0);
    }

    #[test]
    fn c5_bound_invariant_under_rotation_and_reversal() {
        let mut rng = crate::graph::generators::Rng::new(77);
        for _ in 0..100 {
            let t: Vec<u64> = (0..5).map(|_| 1 + rng.below(1000)).collect();
            let sizes: [u64; 5] = t.clone().try_into().unwrap();
            let base = c5_join_bound(&sizes);
            for r in 0..5 {
                let rot: [u64; 5] = std::array::from_fn(|i| t[(i + r) % 5]);
                assert!((c5_join_bound(&rot) - base).abs() <= 1e-9 * base.max(1.0));
                let rev: [u64; 5] = std::array::from_fn(|i| rot[4 - i]);
                assert!((c5_join_bound(&rev) - base).abs() <= 1e-9 * base.max(1.0));
            }
        }
    }

    #[test]
    fn combined_beats_splits() {
        let sq = set("square");
        let trivial = combined_vs_split_check(&sq, &[(0..sq.len()).collect()], 1000).unwrap();
        assert!(trivial.holds);
        assert!((trivial.combined_cost - trivial.split_costs[0]).abs() < 1e-9);

        let each_alone: Vec<Vec<usize>> = (0..sq.len()).map(|i| vec![i]).collect();
        let r = combined_vs_split_check(&sq, &each_alone, 1000).unwrap();
        assert!(r.holds);
        assert!(r.combined_cost < r.split_costs.iter().sum::<f64>());

        let lol = set("lollipop");
        let r = combined_vs_split_check(&lol, &[vec![0, 2, 4], vec![1, 3, 5]], 512).unwrap();
        assert!(r.holds);
    }
}
