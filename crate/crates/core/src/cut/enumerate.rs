//! Exhaustive enumeration of feasible clusterings, used as a ground truth
//! for the search on small DAGs. Shares nothing with the search beyond the
//! objective formula and the quotient ordering rule.

use crate::circuit::Circuit;
use crate::dag::{build_dag, CircuitDag};

use super::{objective, quotient_order, to_solution, Candidate, CutConstraints, CutError, CutSolution};

pub const MAX_ENUMERATION_VERTICES: usize = 14;

/// Every feasible clustering with at least two subcircuits, sorted by
/// `(L, K, canonical assignment)`. Constraints are taken as given, so an
/// impossible width limit simply yields an empty list.
pub fn enumerate_all_cuts(circuit: &Circuit, constraints: &CutConstraints) -> Result<Vec<CutSolution>, CutError> {
    let dag = build_dag(circuit);
    if dag.num_vertices() > MAX_ENUMERATION_VERTICES {
        return Err(CutError::TooLarge(dag.num_vertices()));
    }
    let mut found = Vec::new();
    let mut labels = Vec::with_capacity(dag.num_vertices());
    walk(&dag, constraints, &mut labels, 0, &mut found);
    found.sort_by(|a: &Candidate, b| {
        (a.objective, a.num_cuts, &a.assignment).cmp(&(b.objective, b.num_cuts, &b.assignment))
    });
    Ok(found.iter().map(|c| to_solution(&dag, c, true)).collect())
}

fn walk(dag: &CircuitDag, cons: &CutConstraints, labels: &mut Vec<usize>, used: usize, out: &mut Vec<Candidate>) {
    if labels.len() == dag.num_vertices() {
        if let Some(c) = score(dag, labels, used) {
            out.push(c);
        }
        return;
    }
    for c in 0..(used + 1).min(cons.max_subcircuits) {
        labels.push(c);
        if width_of(dag, labels, c) <= cons.max_subcircuit_qubits {
            walk(dag, cons, labels, used.max(c + 1), out);
        }
        labels.pop();
    }
}

fn width_of(dag: &CircuitDag, labels: &[usize], cluster: usize) -> usize {
    let mut qs: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == cluster)
        .flat_map(|(v, _)| dag.vertices()[v].qubits)
        .collect();
    qs.sort_unstable();
    qs.dedup();
    qs.len()
}

fn score(dag: &CircuitDag, labels: &[usize], k: usize) -> Option<Candidate> {
    if k < 2 {
        return None;
    }
    let arcs: Vec<(usize, usize)> = dag
        .edges()
        .iter()
        .filter(|e| labels[e.from] != labels[e.to])
        .map(|e| (labels[e.from], labels[e.to]))
        .collect();
    let order = quotient_order(k, arcs.iter().copied())?;
    let widths: Vec<usize> = order.iter().map(|&c| width_of(dag, labels, c)).collect();
    Some(Candidate {
        objective: objective(arcs.len(), &widths),
        num_cuts: arcs.len(),
        assignment: labels.to_vec(),
    })
}
