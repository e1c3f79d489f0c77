//! Exact branch-and-bound over vertex → cluster assignments.
//!
//! Vertices are assigned in gate order, which is a topological order of
//! the DAG. Labels follow restricted growth (a new cluster opens only as
//! the next unused label), which removes label permutations. Pruning uses
//! capacity, acyclicity of the quotient graph, and the lower bound
//! `4^K * 2^(n + K)`: every completed clustering has `sum n_i = n + K` and
//! at least the full product term for its last subcircuit.

use crate::dag::CircuitDag;

use super::{evaluate, Candidate, CutConstraints};

struct Search<'a> {
    dag: &'a CircuitDag,
    constraints: &'a CutConstraints,
    assign: Vec<usize>,
    /// `[cluster][qubit]` vertex count.
    uses: Vec<Vec<u32>>,
    widths: Vec<usize>,
    /// `[from][to]` cut edge count.
    quotient: Vec<Vec<u32>>,
    cuts: usize,
    open: usize,
    nodes: u64,
    budget: u64,
    aborted: bool,
    best: Option<Candidate>,
}

/// Runs the search seeded with `incumbent`. Returns the best candidate and
/// whether the whole tree was explored.
pub(super) fn branch_and_bound(
    dag: &CircuitDag,
    constraints: &CutConstraints,
    budget: u64,
    incumbent: Option<Candidate>,
) -> (Option<Candidate>, bool) {
    let k = constraints.max_subcircuits;
    let mut s = Search {
        dag,
        constraints,
        assign: vec![usize::MAX; dag.num_vertices()],
        uses: vec![vec![0; dag.num_qubits()]; k],
        widths: vec![0; k],
        quotient: vec![vec![0; k]; k],
        cuts: 0,
        open: 0,
        nodes: 0,
        budget,
        aborted: false,
        best: incumbent,
    };
    s.descend(0);
    (s.best, !s.aborted)
}

impl Search<'_> {
    fn descend(&mut self, v: usize) {
        if v == self.dag.num_vertices() {
            self.leaf();
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        let limit = (self.open + 1).min(self.constraints.max_subcircuits);
        for c in 0..limit {
            if self.place(v, c) && self.bound_allows() {
                self.descend(v + 1);
            }
            self.unplace(v, c);
            if self.aborted {
                return;
            }
        }
    }

    /// Applies the assignment and reports whether it is still feasible.
    /// Always paired with [`Self::unplace`].
    fn place(&mut self, v: usize, c: usize) -> bool {
        let vert = self.dag.vertices()[v];
        let mut ok = true;
        if c == self.open {
            self.open += 1;
        }
        self.assign[v] = c;
        for q in vert.qubits {
            self.uses[c][q] += 1;
            if self.uses[c][q] == 1 {
                self.widths[c] += 1;
                if self.widths[c] > self.constraints.max_subcircuit_qubits {
                    ok = false;
                }
            }
        }
        for e in self.dag.incoming(v).into_iter().flatten() {
            let u = self.dag.edges()[e].from;
            let cu = self.assign[u];
            if cu != c {
                self.cuts += 1;
                self.quotient[cu][c] += 1;
                if self.quotient[cu][c] == 1 && self.reaches(c, cu) {
                    ok = false;
                }
            }
        }
        ok
    }

    fn unplace(&mut self, v: usize, c: usize) {
        let vert = self.dag.vertices()[v];
        for e in self.dag.incoming(v).into_iter().flatten() {
            let cu = self.assign[self.dag.edges()[e].from];
            if cu != c {
                self.cuts -= 1;
                self.quotient[cu][c] -= 1;
            }
        }
        for q in vert.qubits {
            self.uses[c][q] -= 1;
            if self.uses[c][q] == 0 {
                self.widths[c] -= 1;
            }
        }
        self.assign[v] = usize::MAX;
        if c + 1 == self.open && self.widths[c] == 0 {
            self.open -= 1;
        }
    }

    fn reaches(&self, from: usize, target: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.open];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            if x == target {
                return true;
            }
            for (y, &n) in self.quotient[x].iter().enumerate().take(self.open) {
                if n > 0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    fn bound_allows(&self) -> bool {
        let Some(best) = &self.best else {
            return true;
        };
        let e = 3 * self.cuts + self.dag.num_qubits();
        let lb = if e >= 128 { u128::MAX } else { 1u128 << e };
        lb < best.objective || (lb == best.objective && self.cuts <= best.num_cuts)
    }

    fn leaf(&mut self) {
        if self.open < 2 {
            return;
        }
        let Some(cand) = evaluate(self.dag, &self.assign, self.constraints) else {
            return;
        };
        if self.best.as_ref().is_none_or(|b| cand.better_than(b)) {
            self.best = Some(cand);
        }
    }
}
