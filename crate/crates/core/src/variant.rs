//! Subcircuits, their runnable variants, and attribution.
//!
//! A cut wire is replaced by a measure-side output port in the upstream
//! subcircuit and a prepare-side input port in the downstream one, using
//!
//! ```text
//! rho = 1/2 * sum_{O in I,X,Y,Z} Tr(O rho) O
//! ```
//!
//! The measure side estimates `Tr(O rho)` from `Z`, `X` or `Y` basis
//! measurements; the prepare side expands `O` over the states
//! `|0>, |1>, |+>, |+i>`. The `1/2` per cut is folded into the measure side.
//!
//! Attributed tensors are indexed over a subcircuit's non-port wires in
//! local wire order (local wires sorted by original qubit).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::cut::CutSolution;
use crate::dag::build_dag;
use crate::sim::QubitRole;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VariantError {
    #[error("cut solution does not match the circuit: {0}")]
    InconsistentSolution(String),
    #[error("raw output missing for variant {variant} of subcircuit {subcircuit}")]
    MissingVariant { subcircuit: usize, variant: usize },
    #[error("raw vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("basis assignment {k} out of range for {num_cuts} cuts")]
    BadAssignment { k: usize, num_cuts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitState {
    Zero,
    One,
    Plus,
    PlusI,
}

impl InitState {
    pub const ALL: [InitState; 4] = [InitState::Zero, InitState::One, InitState::Plus, InitState::PlusI];

    /// Gates preparing the state from `|0>`.
    fn prep(self, wire: usize) -> Vec<Gate> {
        let g = |kind| Gate::new(kind, vec![], vec![wire]).expect("single-qubit gate");
        match self {
            InitState::Zero => vec![],
            InitState::One => vec![g(GateKind::X)],
            InitState::Plus => vec![g(GateKind::H)],
            InitState::PlusI => vec![g(GateKind::H), g(GateKind::S)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasBasis {
    Z,
    X,
    Y,
}

impl MeasBasis {
    pub const ALL: [MeasBasis; 3] = [MeasBasis::Z, MeasBasis::X, MeasBasis::Y];

    /// Rotation mapping the basis onto `Z`.
    fn rotation(self, wire: usize) -> Vec<Gate> {
        let g = |kind| Gate::new(kind, vec![], vec![wire]).expect("single-qubit gate");
        match self {
            MeasBasis::Z => vec![],
            MeasBasis::X => vec![g(GateKind::H)],
            MeasBasis::Y => vec![g(GateKind::Sdg), g(GateKind::H)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn basis(self) -> MeasBasis {
        match self {
            Pauli::I | Pauli::Z => MeasBasis::Z,
            Pauli::X => MeasBasis::X,
            Pauli::Y => MeasBasis::Y,
        }
    }

    /// Prepare-side expansion of the operator over the four input states.
    fn prep_terms(self) -> &'static [(InitState, f64)] {
        match self {
            Pauli::I => &[(InitState::Zero, 1.0), (InitState::One, 1.0)],
            Pauli::Z => &[(InitState::Zero, 1.0), (InitState::One, -1.0)],
            Pauli::X => &[(InitState::Plus, 2.0), (InitState::Zero, -1.0), (InitState::One, -1.0)],
            Pauli::Y => &[(InitState::PlusI, 2.0), (InitState::Zero, -1.0), (InitState::One, -1.0)],
        }
    }
}

/// Pauli label of `cut` in basis assignment `k` (cut 0 is the most
/// significant base-4 digit).
pub fn pauli_of(k: usize, cut: usize, num_cuts: usize) -> Pauli {
    Pauli::ALL[(k >> (2 * (num_cuts - 1 - cut))) & 3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputPort {
    pub cut: usize,
    pub wire: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPort {
    pub cut: usize,
    pub wire: usize,
    /// Local index of the last gate before the port; `None` if the wire has
    /// no gate in this subcircuit.
    pub after_gate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subcircuit {
    pub index: usize,
    pub circuit: Circuit,
    /// Original qubit of each local wire, ascending.
    pub qubits: Vec<usize>,
    pub input_ports: Vec<InputPort>,
    pub output_ports: Vec<OutputPort>,
}

impl Subcircuit {
    pub fn num_wires(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_output_port(&self, wire: usize) -> bool {
        self.output_ports.iter().any(|p| p.wire == wire)
    }

    /// Local wires that reach the final measurement.
    pub fn output_wires(&self) -> Vec<usize> {
        (0..self.num_wires()).filter(|&w| !self.is_output_port(w)).collect()
    }

    /// Original qubits of [`Self::output_wires`].
    pub fn output_qubits(&self) -> Vec<usize> {
        self.output_wires().into_iter().map(|w| self.qubits[w]).collect()
    }

    pub fn num_variants(&self) -> usize {
        4usize.pow(self.input_ports.len() as u32) * 3usize.pow(self.output_ports.len() as u32)
    }

    /// Variant index of the given port settings.
    pub fn variant_index(&self, inits: &[InitState], meas: &[MeasBasis]) -> usize {
        let init_idx = inits
            .iter()
            .fold(0, |acc, s| acc * 4 + InitState::ALL.iter().position(|x| x == s).unwrap());
        let meas_idx = meas
            .iter()
            .fold(0, |acc, b| acc * 3 + MeasBasis::ALL.iter().position(|x| x == b).unwrap());
        meas_idx * 4usize.pow(self.input_ports.len() as u32) + init_idx
    }

    /// Per-wire roles for a binned run, given roles of the original
    /// qubits. Output-port wires are always active.
    pub fn local_roles(&self, roles: &[QubitRole]) -> Vec<QubitRole> {
        (0..self.num_wires())
            .map(|w| {
                if self.is_output_port(w) {
                    QubitRole::Active
                } else {
                    roles[self.qubits[w]]
                }
            })
            .collect()
    }
}

/// A concrete runnable circuit for one port setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcircuitVariant {
    pub parent: usize,
    pub index: usize,
    pub inits: Vec<InitState>,
    pub meas: Vec<MeasBasis>,
    pub circuit: Circuit,
}

/// Cuts `circuit` into the subcircuits described by `solution`.
/// Subcircuit `i` holds the vertices labelled `i`; single-qubit gates go
/// with the most recent multi-qubit gate on their wire, or the next one if
/// none precedes them.
pub fn split(circuit: &Circuit, solution: &CutSolution) -> Result<Vec<Subcircuit>, VariantError> {
    let bad = |m: &str| VariantError::InconsistentSolution(m.to_string());
    if solution.num_cuts == 0 || solution.cuts.is_empty() {
        return Err(bad("cutting requires at least one cut"));
    }
    let lowered = circuit.lower_toffoli();
    let dag = build_dag(circuit);
    let vertex_gates: Vec<usize> = dag.vertices().iter().map(|v| v.gate_index).collect();
    if vertex_gates != solution.vertex_gates || solution.assignment.len() != vertex_gates.len() {
        return Err(bad("vertex set differs from the circuit's multi-qubit gates"));
    }
    let n_c = solution.num_subcircuits();
    if solution.assignment.iter().any(|&a| a >= n_c) {
        return Err(bad("assignment label out of range"));
    }
    let n = lowered.num_qubits();

    // cluster of each gate
    let mut cluster_of_gate = vec![usize::MAX; lowered.len()];
    let vertex_of: HashMap<usize, usize> = vertex_gates.iter().enumerate().map(|(v, &g)| (g, v)).collect();
    let mut last: Vec<Option<usize>> = vec![None; n];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (g, gate) in lowered.gates().iter().enumerate() {
        if let Some(&v) = vertex_of.get(&g) {
            let c = solution.assignment[v];
            cluster_of_gate[g] = c;
            for &q in gate.qubits() {
                for p in pending[q].drain(..) {
                    cluster_of_gate[p] = c;
                }
                last[q] = Some(c);
            }
        } else {
            let q = gate.qubits()[0];
            match last[q] {
                Some(c) => cluster_of_gate[g] = c,
                None => pending[q].push(g),
            }
        }
    }
    if pending.iter().any(|p| !p.is_empty()) {
        return Err(bad("a qubit has no multi-qubit gate"));
    }

    let mut gates_of: Vec<Vec<usize>> = vec![Vec::new(); n_c];
    for (g, &c) in cluster_of_gate.iter().enumerate() {
        gates_of[c].push(g);
    }
    let mut subs = Vec::with_capacity(n_c);
    for (i, gates) in gates_of.iter().enumerate() {
        let mut qubits: Vec<usize> = gates.iter().flat_map(|&g| lowered.gates()[g].qubits().to_vec()).collect();
        qubits.sort_unstable();
        qubits.dedup();
        if qubits.len() != solution.subcircuit_qubits[i] {
            return Err(bad("subcircuit width differs from the solution"));
        }
        let local: HashMap<usize, usize> = qubits.iter().enumerate().map(|(w, &q)| (q, w)).collect();
        let mut sub = Circuit::new(qubits.len()).map_err(|e| bad(&e.to_string()))?;
        for &g in gates {
            sub.push(lowered.gates()[g].remapped(|q| local[&q])).expect("local wires in range");
        }
        subs.push((sub, qubits, local));
    }

    let mut inputs: Vec<Vec<InputPort>> = vec![Vec::new(); n_c];
    let mut outputs: Vec<Vec<OutputPort>> = vec![Vec::new(); n_c];
    for (id, cut) in solution.cuts.iter().enumerate() {
        if cut.from >= n_c || cut.to >= n_c || cut.from >= cut.to {
            return Err(bad("cut direction against subcircuit order"));
        }
        let (up, _, up_local) = &subs[cut.from];
        let (_, _, down_local) = &subs[cut.to];
        let (Some(&w_up), Some(&w_down)) = (up_local.get(&cut.qubit), down_local.get(&cut.qubit)) else {
            return Err(bad("cut qubit missing from a subcircuit"));
        };
        let after_gate = up.gates().iter().rposition(|g| g.qubits().contains(&w_up));
        outputs[cut.from].push(OutputPort {
            cut: id,
            wire: w_up,
            after_gate,
        });
        inputs[cut.to].push(InputPort { cut: id, wire: w_down });
    }
    for ports in &outputs {
        let mut wires: Vec<usize> = ports.iter().map(|p| p.wire).collect();
        wires.sort_unstable();
        wires.dedup();
        if wires.len() != ports.len() {
            return Err(bad("two cuts leave the same wire of one subcircuit"));
        }
    }

    Ok(subs
        .into_iter()
        .zip(inputs.into_iter().zip(outputs))
        .enumerate()
        .map(|(index, ((circuit, qubits, _), (input_ports, output_ports)))| Subcircuit {
            index,
            circuit,
            qubits,
            input_ports,
            output_ports,
        })
        .collect())
}

/// All variants of `sub` in index order: input settings vary fastest, each
/// group of ports enumerated lexicographically (port 0 most significant).
pub fn enumerate_variants(sub: &Subcircuit) -> Vec<SubcircuitVariant> {
    let n_in = sub.input_ports.len();
    let n_out = sub.output_ports.len();
    let mut out = Vec::with_capacity(sub.num_variants());
    for meas_idx in 0..3usize.pow(n_out as u32) {
        let meas: Vec<MeasBasis> = (0..n_out)
            .map(|j| MeasBasis::ALL[(meas_idx / 3usize.pow((n_out - 1 - j) as u32)) % 3])
            .collect();
        for init_idx in 0..4usize.pow(n_in as u32) {
            let inits: Vec<InitState> = (0..n_in)
                .map(|j| InitState::ALL[(init_idx >> (2 * (n_in - 1 - j))) & 3])
                .collect();
            out.push(SubcircuitVariant {
                parent: sub.index,
                index: out.len(),
                circuit: build_variant(sub, &inits, &meas),
                inits,
                meas: meas.clone(),
            });
        }
    }
    out
}

fn build_variant(sub: &Subcircuit, inits: &[InitState], meas: &[MeasBasis]) -> Circuit {
    let mut c = Circuit::new(sub.num_wires()).expect("nonempty subcircuit");
    for (port, init) in sub.input_ports.iter().zip(inits) {
        for g in init.prep(port.wire) {
            c.push(g).expect("port wire in range");
        }
    }
    for g in sub.circuit.gates() {
        c.push(g.clone()).expect("same wires");
    }
    for (port, basis) in sub.output_ports.iter().zip(meas) {
        for g in basis.rotation(port.wire) {
            c.push(g).expect("port wire in range");
        }
    }
    c
}

/// Precomputed attribution of one subcircuit for every combination of its
/// own port labels. The tensor of a global assignment depends only on the
/// labels of the subcircuit's ports.
#[derive(Debug, Clone)]
pub struct TensorTable {
    pub subcircuit: usize,
    /// Cut ids of the input ports, then of the output ports.
    port_cuts: Vec<usize>,
    /// Length of every tensor.
    len: usize,
    tables: Vec<Vec<f64>>,
}

impl TensorTable {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index into the table for global assignment `k`.
    pub fn local_index(&self, k: usize, num_cuts: usize) -> usize {
        self.port_cuts
            .iter()
            .fold(0, |acc, &cut| acc * 4 + (k >> (2 * (num_cuts - 1 - cut)) & 3))
    }

    pub fn tensor(&self, k: usize, num_cuts: usize) -> &[f64] {
        &self.tables[self.local_index(k, num_cuts)]
    }

    /// Table entries by local label index (input ports then output ports,
    /// base 4, first port most significant).
    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    /// Builds a table directly from per-label tensors.
    pub fn from_parts(subcircuit: usize, port_cuts: Vec<usize>, tables: Vec<Vec<f64>>) -> Self {
        assert_eq!(tables.len(), 1 << (2 * port_cuts.len()));
        let len = tables[0].len();
        assert!(tables.iter().all(|t| t.len() == len));
        TensorTable {
            subcircuit,
            port_cuts,
            len,
            tables,
        }
    }
}

/// The tensor of one subcircuit under one global basis assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedTensor {
    pub subcircuit: usize,
    pub k: usize,
    pub values: Vec<f64>,
}

/// Upper bound on the l1 norm of an attributed tensor with the given
/// input-port labels and output-port count.
pub fn l1_bound(input_labels: &[Pauli], num_outputs: usize) -> f64 {
    let a: f64 = input_labels
        .iter()
        .map(|p| p.prep_terms().iter().map(|(_, c)| c.abs()).sum::<f64>())
        .product();
    a * 0.5f64.powi(num_outputs as i32)
}

/// Attributes raw variant outputs of `sub` under global assignment `k`.
/// Raw vectors are indexed over all local wires.
pub fn attribute(raw: &[Vec<f64>], sub: &Subcircuit, k: usize, num_cuts: usize) -> Result<AttributedTensor, VariantError> {
    if num_cuts == 0 || k >= 1 << (2 * num_cuts) {
        return Err(VariantError::BadAssignment { k, num_cuts });
    }
    let wires: Vec<usize> = (0..sub.num_wires()).collect();
    let inputs: Vec<Pauli> = sub.input_ports.iter().map(|p| pauli_of(k, p.cut, num_cuts)).collect();
    let outputs: Vec<Pauli> = sub.output_ports.iter().map(|p| pauli_of(k, p.cut, num_cuts)).collect();
    let values = attribute_labels(raw, sub, &wires, &inputs, &outputs)?;
    Ok(AttributedTensor {
        subcircuit: sub.index,
        k,
        values,
    })
}

/// Attribution for explicit port labels. `wires` lists the local wires
/// resolved in the raw vectors (ascending, all output ports included);
/// the result is indexed over the listed non-port wires.
pub fn attribute_labels(
    raw: &[Vec<f64>],
    sub: &Subcircuit,
    wires: &[usize],
    inputs: &[Pauli],
    outputs: &[Pauli],
) -> Result<Vec<f64>, VariantError> {
    let layout = Layout::new(sub, wires);
    let raw_len = 1usize << wires.len();
    let mut result = vec![0.0; 1 << layout.out_bits.len()];
    let scale = 0.5f64.powi(outputs.len() as i32);
    let meas: Vec<MeasBasis> = outputs.iter().map(|p| p.basis()).collect();
    let signs = layout.signs(outputs);

    let mut inits = vec![InitState::Zero; inputs.len()];
    let mut combo = vec![0usize; inputs.len()];
    loop {
        let mut coef = scale;
        for (j, p) in inputs.iter().enumerate() {
            let (state, c) = p.prep_terms()[combo[j]];
            inits[j] = state;
            coef *= c;
        }
        let v = sub.variant_index(&inits, &meas);
        let r = raw.get(v).ok_or(VariantError::MissingVariant {
            subcircuit: sub.index,
            variant: v,
        })?;
        if r.len() != raw_len {
            return Err(VariantError::LengthMismatch {
                expected: raw_len,
                got: r.len(),
            });
        }
        for (idx, &x) in r.iter().enumerate() {
            result[layout.target[idx] as usize] += coef * signs[idx] * x;
        }

        // next combination of prepare-side terms
        let mut j = inputs.len();
        loop {
            if j == 0 {
                return Ok(result);
            }
            j -= 1;
            combo[j] += 1;
            if combo[j] < inputs[j].prep_terms().len() {
                break;
            }
            combo[j] = 0;
        }
    }
}

/// Bit bookkeeping for a raw vector over `wires`.
struct Layout {
    /// Raw-index bit of each output port, in port order.
    port_bits: Vec<usize>,
    out_bits: Vec<usize>,
    /// Result index of each raw index.
    target: Vec<u32>,
}

impl Layout {
    fn new(sub: &Subcircuit, wires: &[usize]) -> Self {
        let len = wires.len();
        let bit_of = |w: usize| {
            let pos = wires.iter().position(|&x| x == w).expect("output port wire resolved");
            len - 1 - pos
        };
        let port_bits: Vec<usize> = sub.output_ports.iter().map(|p| bit_of(p.wire)).collect();
        let out_bits: Vec<usize> = wires
            .iter()
            .filter(|&&w| !sub.is_output_port(w))
            .map(|&w| bit_of(w))
            .collect();
        let target = (0..1usize << len)
            .map(|idx| {
                out_bits
                    .iter()
                    .fold(0u32, |acc, &b| (acc << 1) | ((idx >> b) & 1) as u32)
            })
            .collect();
        Layout {
            port_bits,
            out_bits,
            target,
        }
    }

    fn signs(&self, outputs: &[Pauli]) -> Vec<f64> {
        (0..self.target.len())
            .map(|idx| {
                let flips = self
                    .port_bits
                    .iter()
                    .zip(outputs)
                    .filter(|(&b, &p)| p != Pauli::I && (idx >> b) & 1 == 1)
                    .count();
                if flips % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }
}

/// Tensor table of `sub` from raw outputs over `wires`.
pub fn tensor_table(raw: &[Vec<f64>], sub: &Subcircuit, wires: &[usize]) -> Result<TensorTable, VariantError> {
    let n_in = sub.input_ports.len();
    let n_ports = n_in + sub.output_ports.len();
    let mut tables = Vec::with_capacity(1 << (2 * n_ports));
    for local in 0..1usize << (2 * n_ports) {
        let label = |j: usize| Pauli::ALL[(local >> (2 * (n_ports - 1 - j))) & 3];
        let inputs: Vec<Pauli> = (0..n_in).map(label).collect();
        let outputs: Vec<Pauli> = (n_in..n_ports).map(label).collect();
        tables.push(attribute_labels(raw, sub, wires, &inputs, &outputs)?);
    }
    let port_cuts = sub
        .input_ports
        .iter()
        .map(|p| p.cut)
        .chain(sub.output_ports.iter().map(|p| p.cut))
        .collect();
    Ok(TensorTable::from_parts(sub.index, port_cuts, tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench;
    use crate::cut::{find_cuts, CutConstraints};
    use crate::sim::statevector;

    fn raw_exact(sub: &Subcircuit) -> Vec<Vec<f64>> {
        enumerate_variants(sub)
            .iter()
            .map(|v| statevector(&v.circuit).unwrap().into_values())
            .collect()
    }

    fn five_qubit_split() -> Vec<Subcircuit> {
        let c = bench::five_qubit_example();
        let sol = find_cuts(&c, &CutConstraints::new(3, 5).unwrap()).unwrap();
        split(&c, &sol).unwrap()
    }

    #[test]
    fn five_qubit_example_splits_as_drawn() {
        let subs = five_qubit_split();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].qubits, vec![0, 1, 2]);
        assert_eq!(subs[1].qubits, vec![2, 3, 4]);
        assert_eq!(subs[0].output_ports.len(), 1);
        assert_eq!(subs[0].input_ports.len(), 0);
        assert_eq!(subs[1].input_ports.len(), 1);
        assert_eq!(enumerate_variants(&subs[0]).len(), 3);
        assert_eq!(enumerate_variants(&subs[1]).len(), 4);
        assert_eq!(subs[0].output_qubits(), vec![0, 1]);
        assert_eq!(subs[1].output_qubits(), vec![2, 3, 4]);
        // the t on q2 between the two cz gates stays upstream
        let port = subs[0].output_ports[0];
        assert_eq!(subs[0].circuit.gates()[port.after_gate.unwrap()].kind(), GateKind::T);
    }

    #[test]
    fn zero_cut_solution_is_rejected() {
        let c = bench::five_qubit_example();
        let mut sol = find_cuts(&c, &CutConstraints::new(3, 5).unwrap()).unwrap();
        sol.cuts.clear();
        sol.num_cuts = 0;
        assert!(matches!(split(&c, &sol), Err(VariantError::InconsistentSolution(_))));
    }

    #[test]
    fn chain_cut_on_middle_qubit() {
        let c = Circuit::parse("qubits 3\nh 0\ncx 0 1\ncx 1 2").unwrap();
        let sol = find_cuts(&c, &CutConstraints::new(2, 2).unwrap()).unwrap();
        let subs = split(&c, &sol).unwrap();
        assert_eq!(subs.iter().map(|s| s.num_wires()).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(sol.cuts[0].qubit, 1);
    }

    #[test]
    fn variant_order_and_gates() {
        let subs = five_qubit_split();
        let vars = enumerate_variants(&subs[1]);
        let inits: Vec<InitState> = vars.iter().map(|v| v.inits[0]).collect();
        assert_eq!(inits, InitState::ALL.to_vec());
        let w = subs[1].input_ports[0].wire;
        let first = &vars[3].circuit.gates()[..2];
        assert_eq!(first[0].kind(), GateKind::H);
        assert_eq!(first[1].kind(), GateKind::S);
        assert_eq!(first[0].qubits(), &[w]);
        let meas: Vec<MeasBasis> = enumerate_variants(&subs[0]).iter().map(|v| v.meas[0]).collect();
        assert_eq!(meas, MeasBasis::ALL.to_vec());
        let y = enumerate_variants(&subs[0]).pop().unwrap();
        let tail: Vec<GateKind> = y.circuit.gates().iter().rev().take(2).map(|g| g.kind()).collect();
        assert_eq!(tail, vec![GateKind::H, GateKind::Sdg]);
    }

    #[test]
    fn one_in_one_out_has_twelve_variants() {
        let c = Circuit::parse("qubits 4\ncx 0 1\ncx 1 2\ncx 2 3").unwrap();
        let sol = find_cuts(&c, &CutConstraints::new(2, 3).unwrap()).unwrap();
        let subs = split(&c, &sol).unwrap();
        assert_eq!(subs.len(), 3);
        assert_eq!(enumerate_variants(&subs[1]).len(), 12);
        for s in &subs {
            let vars = enumerate_variants(s);
            for (i, v) in vars.iter().enumerate() {
                assert_eq!(s.variant_index(&v.inits, &v.meas), i);
            }
        }
    }

    #[test]
    fn identity_label_marginalizes() {
        let subs = five_qubit_split();
        let raw = raw_exact(&subs[0]);
        let t = attribute(&raw, &subs[0], 0, 1).unwrap();
        let l1: f64 = t.values.iter().map(|v| v.abs()).sum();
        assert!((l1 - 0.5).abs() < 1e-12);
        // marginal of the Z variant over the port wire (q2, lowest bit)
        for (x, v) in t.values.iter().enumerate() {
            let m = raw[0][2 * x] + raw[0][2 * x + 1];
            assert!((v - 0.5 * m).abs() < 1e-12);
        }
    }

    #[test]
    fn port_independent_prepare_side_cancels() {
        let subs = five_qubit_split();
        let sub = &subs[1];
        // the same raw vector for every input state
        let base: Vec<f64> = (0..8).map(|i| (i + 1) as f64 / 36.0).collect();
        let raw = vec![base; 4];
        for (k, label) in [(1, Pauli::X), (2, Pauli::Y)] {
            assert_eq!(pauli_of(k, 0, 1), label);
            let t = attribute(&raw, sub, k, 1).unwrap();
            assert!(t.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn five_qubit_terms_rebuild_the_distribution() {
        let c = bench::five_qubit_example();
        let subs = five_qubit_split();
        let r0 = raw_exact(&subs[0]);
        let r1 = raw_exact(&subs[1]);
        let truth = statevector(&c).unwrap();
        let mut total = vec![0.0; 32];
        for k in 0..4 {
            let a = attribute(&r0, &subs[0], k, 1).unwrap().values;
            let b = attribute(&r1, &subs[1], k, 1).unwrap().values;
            // q0 q1 from the first tensor, q2 q3 q4 from the second
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    total[(i << 3) | j] += x * y;
                }
            }
        }
        for (a, b) in total.iter().zip(truth.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn attribution_is_linear_and_bounded() {
        let c = Circuit::parse("qubits 4\nh 0\ncx 0 1\nt 1\ncx 1 2\nh 2\ncx 2 3\nsx 1").unwrap();
        let sol = find_cuts(&c, &CutConstraints::new(2, 3).unwrap()).unwrap();
        let subs = split(&c, &sol).unwrap();
        let k_max = 1 << (2 * sol.num_cuts);
        for sub in &subs {
            let raw = raw_exact(sub);
            let scaled: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|x| 3.0 * x).collect()).collect();
            for k in 0..k_max {
                let t = attribute(&raw, sub, k, sol.num_cuts).unwrap();
                let s = attribute(&scaled, sub, k, sol.num_cuts).unwrap();
                for (a, b) in t.values.iter().zip(&s.values) {
                    assert!((3.0 * a - b).abs() < 1e-12);
                }
                let inputs: Vec<Pauli> = sub.input_ports.iter().map(|p| pauli_of(k, p.cut, sol.num_cuts)).collect();
                let l1: f64 = t.values.iter().map(|v| v.abs()).sum();
                assert!(l1 <= l1_bound(&inputs, sub.output_ports.len()) + 1e-12);
            }
        }
    }

    #[test]
    fn table_matches_direct_attribution() {
        let c = Circuit::parse("qubits 4\nh 0\ncx 0 1\nt 1\ncx 1 2\nh 2\ncx 2 3").unwrap();
        let sol = find_cuts(&c, &CutConstraints::new(2, 3).unwrap()).unwrap();
        let subs = split(&c, &sol).unwrap();
        for sub in &subs {
            let raw = raw_exact(sub);
            let wires: Vec<usize> = (0..sub.num_wires()).collect();
            let table = tensor_table(&raw, sub, &wires).unwrap();
            for k in 0..1 << (2 * sol.num_cuts) {
                assert_eq!(table.tensor(k, sol.num_cuts), &attribute(&raw, sub, k, sol.num_cuts).unwrap().values[..]);
            }
        }
    }

    #[test]
    fn missing_and_short_raw_vectors() {
        let subs = five_qubit_split();
        let raw = raw_exact(&subs[1]);
        assert!(matches!(
            attribute(&raw[..2], &subs[1], 2, 1),
            Err(VariantError::MissingVariant { .. })
        ));
        let short = vec![vec![0.0; 4]; 4];
        assert!(matches!(attribute(&short, &subs[1], 0, 1), Err(VariantError::LengthMismatch { .. })));
    }
}
