//! Cut search over the wire-segment DAG.
//!
//! A clustering of DAG vertices into subcircuits determines the cuts (the
//! cross-cluster edges). The search minimizes the number of floating-point
//! multiplications needed to rebuild the full distribution,
//!
//! ```text
//! L = 4^K * sum_{c=2}^{n_C} prod_{i=1}^{c} 2^{n_i}
//! ```
//!
//! where `K` is the number of cuts and `n_i` the width of subcircuit `i`,
//! subcircuits taken in topological order of the cluster quotient graph
//! (Kahn's algorithm, lowest canonical label first).
//!
//! [`find_cuts`] runs a seeded min-cut heuristic for an incumbent and then
//! an exact branch-and-bound; [`enumerate_all_cuts`] is the exhaustive
//! oracle for small DAGs.

mod enumerate;
mod heuristic;
mod search;

use std::collections::BinaryHeap;
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::dag::{build_dag, CircuitDag};

pub use enumerate::{enumerate_all_cuts, MAX_ENUMERATION_VERTICES};

/// Default cap on the number of subcircuits.
pub const DEFAULT_MAX_SUBCIRCUITS: usize = 5;
/// Branch-and-bound nodes explored before the search gives up on
/// certifying optimality.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CutError {
    #[error("no clustering satisfies the constraints")]
    Infeasible,
    #[error("circuit is not fully connected")]
    NotConnected,
    #[error("circuit has no multi-qubit gates")]
    EmptyDag,
    #[error("the whole {num_qubits}-qubit circuit fits a {max_subcircuit_qubits}-qubit subcircuit")]
    WholeCircuitFits {
        num_qubits: usize,
        max_subcircuit_qubits: usize,
    },
    #[error("DAG has {0} vertices, exhaustive enumeration is limited to {MAX_ENUMERATION_VERTICES}")]
    TooLarge(usize),
    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutConstraints {
    pub max_subcircuit_qubits: usize,
    pub max_subcircuits: usize,
}

impl CutConstraints {
    pub fn new(max_subcircuit_qubits: usize, max_subcircuits: usize) -> Result<Self, CutError> {
        let c = CutConstraints {
            max_subcircuit_qubits,
            max_subcircuits,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_device(max_subcircuit_qubits: usize) -> Result<Self, CutError> {
        Self::new(max_subcircuit_qubits, DEFAULT_MAX_SUBCIRCUITS)
    }

    pub fn validate(&self) -> Result<(), CutError> {
        if self.max_subcircuit_qubits < 2 {
            return Err(CutError::InvalidConstraints(
                "max_subcircuit_qubits must be at least 2".into(),
            ));
        }
        if self.max_subcircuits < 2 {
            return Err(CutError::InvalidConstraints(
                "max_subcircuits must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub node_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// One cut wire segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CutWire {
    pub qubit: usize,
    /// Lowered-circuit index of the last multi-qubit gate before the cut.
    pub upstream_gate: usize,
    /// Lowered-circuit index of the first multi-qubit gate after the cut.
    pub downstream_gate: usize,
    /// Measuring subcircuit.
    pub from: usize,
    /// Preparing subcircuit.
    pub to: usize,
}

/// A clustering of DAG vertices into subcircuits. Subcircuit indices follow
/// the topological order of the quotient graph, so every cut runs from a
/// lower to a higher index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSolution {
    pub num_qubits: usize,
    /// Gate index (lowered circuit) of each DAG vertex.
    pub vertex_gates: Vec<usize>,
    /// Subcircuit of each DAG vertex.
    pub assignment: Vec<usize>,
    /// Cuts sorted by `(upstream_gate, qubit)`.
    pub cuts: Vec<CutWire>,
    /// Width of each subcircuit: wires entering it, original or prepared.
    pub subcircuit_qubits: Vec<usize>,
    pub num_cuts: usize,
    pub objective: u128,
    pub log2_objective: f64,
    /// False when the search stopped on its node budget.
    pub certified: bool,
}

impl CutSolution {
    pub fn num_subcircuits(&self) -> usize {
        self.subcircuit_qubits.len()
    }

    /// Recomputes every derived field from `assignment` and checks it
    /// against `dag` and `constraints`.
    pub fn validate(&self, dag: &CircuitDag, constraints: &CutConstraints) -> Result<(), String> {
        if self.assignment.len() != dag.num_vertices() {
            return Err(format!(
                "assignment covers {} vertices, DAG has {}",
                self.assignment.len(),
                dag.num_vertices()
            ));
        }
        if self.num_qubits != dag.num_qubits() {
            return Err("qubit count mismatch".into());
        }
        let gates: Vec<usize> = dag.vertices().iter().map(|v| v.gate_index).collect();
        if gates != self.vertex_gates {
            return Err("vertex gate indices do not match the circuit".into());
        }
        let n_c = self.num_subcircuits();
        if n_c < 2 || n_c > constraints.max_subcircuits {
            return Err(format!("{n_c} subcircuits outside [2, {}]", constraints.max_subcircuits));
        }
        if self.assignment.iter().any(|&a| a >= n_c) {
            return Err("assignment label out of range".into());
        }
        let widths = cluster_widths(dag, &self.assignment, n_c);
        if widths != self.subcircuit_qubits {
            return Err(format!("widths {:?} != recomputed {:?}", self.subcircuit_qubits, widths));
        }
        if widths.iter().any(|&w| w == 0 || w > constraints.max_subcircuit_qubits) {
            return Err("subcircuit width outside [1, max_subcircuit_qubits]".into());
        }
        let mut cuts = cut_wires(dag, &self.assignment);
        cuts.sort_by_key(|c| (c.upstream_gate, c.qubit));
        if cuts != self.cuts || self.num_cuts != cuts.len() {
            return Err("cut list is not the set of cross-cluster edges".into());
        }
        if cuts.iter().any(|c| c.from >= c.to) {
            return Err("a cut runs against the subcircuit order".into());
        }
        if objective(self.num_cuts, &self.subcircuit_qubits) != self.objective {
            return Err("objective mismatch".into());
        }
        Ok(())
    }
}

/// The reconstruction cost `4^K * sum_{c>=2} prod_{i<=c} 2^{n_i}`,
/// saturating at `u128::MAX`.
pub fn objective(num_cuts: usize, qubit_counts: &[usize]) -> u128 {
    let mut total: u128 = 0;
    let mut prefix = 0usize;
    for (c, &n) in qubit_counts.iter().enumerate() {
        prefix += n;
        if c == 0 {
            continue;
        }
        let e = 2 * num_cuts + prefix;
        if e >= 128 {
            return u128::MAX;
        }
        total = total.saturating_add(1u128 << e);
    }
    total
}

/// `log2` of [`objective`] without saturation; `-inf` for an empty sum.
pub fn log2_objective(num_cuts: usize, qubit_counts: &[usize]) -> f64 {
    let mut prefix = 0usize;
    let exps: Vec<f64> = qubit_counts
        .iter()
        .enumerate()
        .filter_map(|(c, &n)| {
            prefix += n;
            (c > 0).then(|| (2 * num_cuts + prefix) as f64)
        })
        .collect();
    let Some(max) = exps.iter().copied().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    max + exps.iter().map(|e| (e - max).exp2()).sum::<f64>().log2()
}

/// Distinct qubits touched by each cluster.
pub(crate) fn cluster_widths(dag: &CircuitDag, assignment: &[usize], num_clusters: usize) -> Vec<usize> {
    let mut seen = vec![vec![false; dag.num_qubits()]; num_clusters];
    let mut widths = vec![0; num_clusters];
    for (v, vert) in dag.vertices().iter().enumerate() {
        let c = assignment[v];
        for &q in &vert.qubits {
            if !seen[c][q] {
                seen[c][q] = true;
                widths[c] += 1;
            }
        }
    }
    widths
}

fn cut_wires(dag: &CircuitDag, assignment: &[usize]) -> Vec<CutWire> {
    dag.edges()
        .iter()
        .filter(|e| assignment[e.from] != assignment[e.to])
        .map(|e| CutWire {
            qubit: e.qubit,
            upstream_gate: dag.vertices()[e.from].gate_index,
            downstream_gate: dag.vertices()[e.to].gate_index,
            from: assignment[e.from],
            to: assignment[e.to],
        })
        .collect()
}

/// Relabels clusters by first appearance in vertex order.
pub(crate) fn canonicalize(assignment: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    assignment
        .iter()
        .map(|&a| {
            let next = map.len();
            *map.entry(a).or_insert(next)
        })
        .collect()
}

/// Kahn's algorithm over `k` clusters, lowest label first. `None` on a
/// cycle.
pub(crate) fn quotient_order(k: usize, arcs: impl Iterator<Item = (usize, usize)>) -> Option<Vec<usize>> {
    let mut adj = vec![vec![false; k]; k];
    for (a, b) in arcs {
        adj[a][b] = true;
    }
    let mut indeg = vec![0usize; k];
    for row in &adj {
        for (b, &on) in row.iter().enumerate() {
            if on {
                indeg[b] += 1;
            }
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..k).filter(|&c| indeg[c] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(k);
    while let Some(Reverse(c)) = heap.pop() {
        order.push(c);
        for b in 0..k {
            if adj[c][b] {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    heap.push(Reverse(b));
                }
            }
        }
    }
    (order.len() == k).then_some(order)
}

/// A feasible clustering in canonical labels, scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Candidate {
    pub objective: u128,
    pub num_cuts: usize,
    pub assignment: Vec<usize>,
}

impl Candidate {
    fn key(&self) -> (u128, usize, &[usize]) {
        (self.objective, self.num_cuts, &self.assignment)
    }

    pub fn better_than(&self, other: &Candidate) -> bool {
        self.key() < other.key()
    }
}

/// Scores an arbitrary labelling; `None` when infeasible.
pub(crate) fn evaluate(dag: &CircuitDag, assignment: &[usize], constraints: &CutConstraints) -> Option<Candidate> {
    let canon = canonicalize(assignment);
    let k = canon.iter().copied().max().map_or(0, |m| m + 1);
    if k < 2 || k > constraints.max_subcircuits {
        return None;
    }
    let widths = cluster_widths(dag, &canon, k);
    if widths.iter().any(|&w| w > constraints.max_subcircuit_qubits) {
        return None;
    }
    let cuts: Vec<(usize, usize)> = dag
        .edges()
        .iter()
        .filter(|e| canon[e.from] != canon[e.to])
        .map(|e| (canon[e.from], canon[e.to]))
        .collect();
    let order = quotient_order(k, cuts.iter().copied())?;
    let ordered: Vec<usize> = order.iter().map(|&c| widths[c]).collect();
    Some(Candidate {
        objective: objective(cuts.len(), &ordered),
        num_cuts: cuts.len(),
        assignment: canon,
    })
}

/// Builds the public solution from a canonical candidate.
pub(crate) fn to_solution(dag: &CircuitDag, cand: &Candidate, certified: bool) -> CutSolution {
    let k = cand.assignment.iter().copied().max().map_or(0, |m| m + 1);
    let arcs: Vec<(usize, usize)> = dag
        .edges()
        .iter()
        .filter(|e| cand.assignment[e.from] != cand.assignment[e.to])
        .map(|e| (cand.assignment[e.from], cand.assignment[e.to]))
        .collect();
    let order = quotient_order(k, arcs.into_iter()).expect("candidate is acyclic");
    let mut position = vec![0; k];
    for (pos, &c) in order.iter().enumerate() {
        position[c] = pos;
    }
    let assignment: Vec<usize> = cand.assignment.iter().map(|&c| position[c]).collect();
    let widths = cluster_widths(dag, &assignment, k);
    let mut cuts = cut_wires(dag, &assignment);
    cuts.sort_by_key(|c| (c.upstream_gate, c.qubit));
    CutSolution {
        num_qubits: dag.num_qubits(),
        vertex_gates: dag.vertices().iter().map(|v| v.gate_index).collect(),
        assignment,
        num_cuts: cuts.len(),
        cuts,
        objective: objective(cand.num_cuts, &widths),
        log2_objective: log2_objective(cand.num_cuts, &widths),
        subcircuit_qubits: widths,
        certified,
    }
}

/// Finds the clustering with minimal reconstruction cost.
pub fn find_cuts(circuit: &Circuit, constraints: &CutConstraints) -> Result<CutSolution, CutError> {
    find_cuts_with(circuit, constraints, &SearchOptions::default())
}

pub fn find_cuts_with(
    circuit: &Circuit,
    constraints: &CutConstraints,
    options: &SearchOptions,
) -> Result<CutSolution, CutError> {
    constraints.validate()?;
    let dag = build_dag(circuit);
    if dag.is_empty() {
        return Err(CutError::EmptyDag);
    }
    if !circuit.is_fully_connected() {
        return Err(CutError::NotConnected);
    }
    if circuit.num_qubits() <= constraints.max_subcircuit_qubits {
        return Err(CutError::WholeCircuitFits {
            num_qubits: circuit.num_qubits(),
            max_subcircuit_qubits: constraints.max_subcircuit_qubits,
        });
    }
    let incumbent = heuristic::best_candidate(&dag, constraints);
    let (best, certified) = search::branch_and_bound(&dag, constraints, options.node_budget, incumbent);
    let best = best.ok_or(CutError::Infeasible)?;
    Ok(to_solution(&dag, &best, certified))
}
