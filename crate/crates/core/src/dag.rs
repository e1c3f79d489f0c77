//! Wire-segment DAG used by the cut search.
//!
//! Vertices are the two-qubit gates of the (Toffoli-lowered) circuit;
//! single-qubit gates do not change connectivity and are left out. An edge
//! is the segment of one qubit wire between two consecutive vertices on
//! that wire, so cutting an edge is a timewise cut of that wire.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagVertex {
    /// Index of the gate in the lowered circuit.
    pub gate_index: usize,
    pub qubits: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DagEdge {
    pub qubit: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitDag {
    num_qubits: usize,
    vertices: Vec<DagVertex>,
    edges: Vec<DagEdge>,
    /// Per vertex and qubit slot, the incoming edge on that wire.
    incoming: Vec<[Option<usize>; 2]>,
    /// Per qubit, the vertices touching it in order.
    wire_vertices: Vec<Vec<usize>>,
}

/// Builds the DAG of `circuit`. Any `ccx` is lowered first, so vertex gate
/// indices refer to `circuit.lower_toffoli()`.
pub fn build_dag(circuit: &Circuit) -> CircuitDag {
    let lowered = circuit.lower_toffoli();
    let n = lowered.num_qubits();
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut incoming = Vec::new();
    let mut wire_vertices = vec![Vec::new(); n];
    let mut last_on_wire: Vec<Option<usize>> = vec![None; n];

    for (gate_index, gate) in lowered.gates().iter().enumerate() {
        if !gate.is_multi_qubit() {
            continue;
        }
        let qs = gate.qubits();
        let v = vertices.len();
        vertices.push(DagVertex {
            gate_index,
            qubits: [qs[0], qs[1]],
        });
        let mut inc = [None; 2];
        for (slot, &q) in qs.iter().enumerate() {
            if let Some(u) = last_on_wire[q] {
                inc[slot] = Some(edges.len());
                edges.push(DagEdge {
                    qubit: q,
                    from: u,
                    to: v,
                });
            }
            last_on_wire[q] = Some(v);
            wire_vertices[q].push(v);
        }
        incoming.push(inc);
    }

    CircuitDag {
        num_qubits: n,
        vertices,
        edges,
        incoming,
        wire_vertices,
    }
}

impl CircuitDag {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn vertices(&self) -> &[DagVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[DagEdge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Incoming edge indices of `v`, one slot per gate qubit.
    pub fn incoming(&self, v: usize) -> [Option<usize>; 2] {
        self.incoming[v]
    }

    /// Vertices on qubit `q` in execution order.
    pub fn wire(&self, q: usize) -> &[usize] {
        &self.wire_vertices[q]
    }
}
