//! Incumbent construction for the branch-and-bound.
//!
//! Bipartitions come from seeded minimum cuts: every DAG edge `u -> v` is a
//! unit-capacity arc, and an infinite reverse arc `v -> u` forces the
//! source side to be closed under predecessors, so the cut only contains
//! forward edges and the quotient graph stays acyclic. Seeds are the
//! vertices living entirely on the first `a` (source) or last `b` (sink)
//! qubits of a breadth-first qubit ordering. Oversized sides are split
//! again recursively; a chain of down-closed pieces is always acyclic.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;

use crate::dag::CircuitDag;

use super::{evaluate, Candidate, CutConstraints};

const TOP_ORDERINGS: usize = 24;
const INNER_ORDERINGS: usize = 8;
const TOP_BREADTH: usize = 12;
const INNER_BREADTH: usize = 2;

/// Best feasible clustering found, if any.
pub(super) fn best_candidate(dag: &CircuitDag, constraints: &CutConstraints) -> Option<Candidate> {
    let all: Vec<usize> = (0..dag.num_vertices()).collect();
    let mut partitions = prefix_chains(dag, constraints);
    partitions.extend(split(dag, constraints, &all, constraints.max_subcircuits, TOP_ORDERINGS, TOP_BREADTH));
    partitions
        .into_iter()
        .filter_map(|parts| {
            let mut assign = vec![0; dag.num_vertices()];
            for (c, part) in parts.iter().enumerate() {
                for &v in part {
                    assign[v] = c;
                }
            }
            evaluate(dag, &assign, constraints)
        })
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
}

/// Greedy time slices: each piece is the longest run of vertices in gate
/// order that fits the width limit.
fn prefix_chains(dag: &CircuitDag, constraints: &CutConstraints) -> Vec<Vec<Vec<usize>>> {
    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut qubits: HashSet<usize> = HashSet::new();
    for (v, vert) in dag.vertices().iter().enumerate() {
        let extra = vert.qubits.iter().filter(|q| !qubits.contains(q)).count();
        if qubits.len() + extra > constraints.max_subcircuit_qubits {
            parts.push(std::mem::take(&mut current));
            qubits.clear();
        }
        current.push(v);
        qubits.extend(vert.qubits);
    }
    parts.push(current);
    if parts.len() >= 2 && parts.len() <= constraints.max_subcircuits {
        vec![parts]
    } else {
        Vec::new()
    }
}

fn width(dag: &CircuitDag, part: &[usize]) -> usize {
    part.iter()
        .flat_map(|&v| dag.vertices()[v].qubits)
        .collect::<HashSet<_>>()
        .len()
}

/// Splits `part` into at most `budget` pieces that each fit, returning
/// several alternatives ordered best first. Pieces are in chain order.
fn split(
    dag: &CircuitDag,
    constraints: &CutConstraints,
    part: &[usize],
    budget: usize,
    orderings: usize,
    breadth: usize,
) -> Vec<Vec<Vec<usize>>> {
    let cap = constraints.max_subcircuit_qubits;
    let mut out = Vec::new();
    let fits = width(dag, part) <= cap;
    if fits && budget < constraints.max_subcircuits {
        out.push(vec![part.to_vec()]);
        return out;
    }
    if budget < 2 {
        return out;
    }
    let mut cands = bipartitions(dag, part, cap, orderings);
    // direct two-way splits are cheap to score, keep all of them
    for (a, b, _) in &cands {
        if width(dag, a) <= cap && width(dag, b) <= cap {
            out.push(vec![a.clone(), b.clone()]);
        }
    }
    cands.sort_by_key(|(a, b, cut)| (*cut, width(dag, a).max(width(dag, b))));
    let mut extended = 0;
    for (a, b, _) in cands {
        if extended >= breadth {
            break;
        }
        if width(dag, &a) <= cap && width(dag, &b) <= cap {
            continue;
        }
        let Some(left) = split(dag, constraints, &a, budget - 1, INNER_ORDERINGS, INNER_BREADTH).into_iter().next()
        else {
            continue;
        };
        let rest = budget - left.len();
        if rest == 0 {
            continue;
        }
        let Some(right) = split(dag, constraints, &b, rest, INNER_ORDERINGS, INNER_BREADTH).into_iter().next() else {
            continue;
        };
        let mut parts = left;
        parts.extend(right);
        out.push(parts);
        extended += 1;
    }
    out
}

/// Qubit orderings by breadth-first search over gate adjacency, one per
/// start qubit (evenly spaced when there are more qubits than `limit`).
fn qubit_orderings(dag: &CircuitDag, part: &[usize], limit: usize) -> Vec<Vec<usize>> {
    let mut adj: std::collections::BTreeMap<usize, std::collections::BTreeSet<usize>> = Default::default();
    for &v in part {
        let [a, b] = dag.vertices()[v].qubits;
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    }
    let qubits: Vec<usize> = adj.keys().copied().collect();
    let step = qubits.len().div_ceil(limit).max(1);
    qubits
        .iter()
        .step_by(step)
        .map(|&start| {
            let mut order = vec![start];
            let mut seen: HashSet<usize> = HashSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(q) = queue.pop_front() {
                for &r in &adj[&q] {
                    if seen.insert(r) {
                        order.push(r);
                        queue.push_back(r);
                    }
                }
            }
            order
        })
        .collect()
}

/// `(upstream, downstream, cut size)`.
type Bipartition = (Vec<usize>, Vec<usize>, usize);

/// Distinct down-closed bipartitions.
fn bipartitions(dag: &CircuitDag, part: &[usize], cap: usize, orderings: usize) -> Vec<Bipartition> {
    let orders = qubit_orderings(dag, part, orderings);
    let found: Vec<Vec<Bipartition>> = orders
        .par_iter()
        .map(|order| {
            let len = order.len();
            let mut rank = vec![usize::MAX; dag.num_qubits()];
            for (i, &q) in order.iter().enumerate() {
                rank[q] = i;
            }
            let mut local = Vec::new();
            for a in 2..len.min(cap + 1) {
                for b in 2..=(len - a).min(cap) {
                    let source: Vec<bool> = part
                        .iter()
                        .map(|&v| dag.vertices()[v].qubits.iter().all(|&q| rank[q] < a))
                        .collect();
                    let sink: Vec<bool> = part
                        .iter()
                        .map(|&v| dag.vertices()[v].qubits.iter().all(|&q| rank[q] >= len - b))
                        .collect();
                    if let Some(res) = closure_min_cut(dag, part, &source, &sink, 4 * cap) {
                        local.push(res);
                    }
                }
            }
            local
        })
        .collect();
    let mut seen = HashSet::new();
    found
        .into_iter()
        .flatten()
        .filter(|(a, _, _)| seen.insert(a.clone()))
        .collect()
}

struct Arc {
    to: usize,
    cap: u32,
}

/// Minimum cut separating the seed sets in the closure network over
/// `part`. `None` when the seeds are inconsistent, a side is empty, or the
/// cut exceeds `limit`.
fn closure_min_cut(
    dag: &CircuitDag,
    part: &[usize],
    source: &[bool],
    sink: &[bool],
    limit: usize,
) -> Option<(Vec<usize>, Vec<usize>, usize)> {
    const INF: u32 = u32::MAX / 4;
    if !source.iter().any(|&s| s) || !sink.iter().any(|&s| s) {
        return None;
    }
    let m = part.len();
    let s = m;
    let t = m + 1;
    let mut local = vec![usize::MAX; dag.num_vertices()];
    for (i, &v) in part.iter().enumerate() {
        local[v] = i;
    }
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
    let add = |arcs: &mut Vec<Arc>, adj: &mut Vec<Vec<usize>>, a: usize, b: usize, cap: u32| {
        adj[a].push(arcs.len());
        arcs.push(Arc { to: b, cap });
        adj[b].push(arcs.len());
        arcs.push(Arc { to: a, cap: 0 });
    };
    for e in dag.edges() {
        let (u, v) = (local[e.from], local[e.to]);
        if u == usize::MAX || v == usize::MAX {
            continue;
        }
        add(&mut arcs, &mut adj, u, v, 1);
        add(&mut arcs, &mut adj, v, u, INF);
    }
    for i in 0..m {
        if source[i] {
            add(&mut arcs, &mut adj, s, i, INF);
        }
        if sink[i] {
            add(&mut arcs, &mut adj, i, t, INF);
        }
    }

    let mut flow = 0usize;
    loop {
        let mut prev: Vec<Option<usize>> = vec![None; m + 2];
        let mut visited = vec![false; m + 2];
        visited[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x == t {
                break;
            }
            for &ai in &adj[x] {
                let y = arcs[ai].to;
                if arcs[ai].cap > 0 && !visited[y] {
                    visited[y] = true;
                    prev[y] = Some(ai);
                    queue.push_back(y);
                }
            }
        }
        if !visited[t] {
            let upstream: Vec<usize> = (0..m).filter(|&i| visited[i]).map(|i| part[i]).collect();
            let downstream: Vec<usize> = (0..m).filter(|&i| !visited[i]).map(|i| part[i]).collect();
            return Some((upstream, downstream, flow));
        }
        let mut bottleneck = INF;
        let mut y = t;
        while let Some(ai) = prev[y] {
            bottleneck = bottleneck.min(arcs[ai].cap);
            y = arcs[ai ^ 1].to;
        }
        if bottleneck >= INF {
            return None;
        }
        let mut y = t;
        while let Some(ai) = prev[y] {
            arcs[ai].cap -= bottleneck;
            arcs[ai ^ 1].cap += bottleneck;
            y = arcs[ai ^ 1].to;
        }
        flow += bottleneck as usize;
        if flow > limit {
            return None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::dag::build_dag;

    #[test]
    fn min_cut_on_a_chain() {
        // path 0-1-2-3 along the wires
        let c = Circuit::parse("qubits 5\ncx 0 1\ncx 1 2\ncx 2 3\ncx 3 4").unwrap();
        let dag = build_dag(&c);
        let part: Vec<usize> = (0..4).collect();
        let source = [true, false, false, false];
        let sink = [false, false, false, true];
        let (a, b, cut) = closure_min_cut(&dag, &part, &source, &sink, 10).unwrap();
        assert_eq!(cut, 1);
        assert!(a.contains(&0) && b.contains(&3));
        // down-closure: nothing in `a` has a predecessor in `b`
        for e in dag.edges() {
            assert!(!(b.contains(&e.from) && a.contains(&e.to)));
        }
    }

    #[test]
    fn inconsistent_seeds_are_rejected() {
        let c = Circuit::parse("qubits 3\ncx 0 1\ncx 1 2").unwrap();
        let dag = build_dag(&c);
        // sink seed upstream of source seed: closure forces infinite flow
        assert!(closure_min_cut(&dag, &[0, 1], &[false, true], &[true, false], 10).is_none());
    }
}
