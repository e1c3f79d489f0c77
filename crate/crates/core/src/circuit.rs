//! Gate-level circuit representation and its line-based text format.
//!
//! The text format is one header line `qubits <n>` followed by one gate per
//! line, `<name> [<angle>] <q...>`. Angles appear only for `rz` and `cp`.
//! `#` starts a comment that runs to the end of the line. Serialization is
//! deterministic and writes angles with 17 significant digits so that
//! parsing the output reproduces every `f64` bit-for-bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    H,
    X,
    T,
    Tdg,
    S,
    Sdg,
    Sx,
    Sy,
    Rz,
    Cp,
    Cx,
    Cz,
    Ccx,
}

impl GateKind {
    pub const ALL: [GateKind; 13] = [
        GateKind::H,
        GateKind::X,
        GateKind::T,
        GateKind::Tdg,
        GateKind::S,
        GateKind::Sdg,
        GateKind::Sx,
        GateKind::Sy,
        GateKind::Rz,
        GateKind::Cp,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Ccx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::Sx => "sx",
            GateKind::Sy => "sy",
            GateKind::Rz => "rz",
            GateKind::Cp => "cp",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Ccx => "ccx",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Number of qubits the gate acts on.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cp | GateKind::Cx | GateKind::Cz => 2,
            GateKind::Ccx => 3,
            _ => 1,
        }
    }

    /// Number of real angle parameters.
    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rz | GateKind::Cp => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("gate {kind} expects {expected} qubits, got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("gate {kind} expects {expected} angle parameters, got {got}")]
    Params {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("gate {kind} repeats qubit {qubit}")]
    RepeatedQubit { kind: GateKind, qubit: usize },
    #[error("qubit index {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("a circuit needs at least one qubit")]
    NoQubits,
}

/// A single gate application. Qubit order matters for controlled gates:
/// controls come first, the target last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    kind: GateKind,
    params: Vec<f64>,
    qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, params: Vec<f64>, qubits: Vec<usize>) -> Result<Self, CircuitError> {
        if qubits.len() != kind.arity() {
            return Err(CircuitError::Arity {
                kind,
                expected: kind.arity(),
                got: qubits.len(),
            });
        }
        if params.len() != kind.num_params() {
            return Err(CircuitError::Params {
                kind,
                expected: kind.num_params(),
                got: params.len(),
            });
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(CircuitError::RepeatedQubit { kind, qubit: *q });
            }
        }
        Ok(Gate {
            kind,
            params,
            qubits,
        })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn is_multi_qubit(&self) -> bool {
        self.qubits.len() > 1
    }

    /// The same gate acting on relabelled qubits.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        Gate {
            kind: self.kind,
            params: self.params.clone(),
            qubits: self.qubits.iter().map(|&q| map(q)).collect(),
        }
    }
}

/// An ordered gate list over `num_qubits` wires. Gate order is execution
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self, CircuitError> {
        if num_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        Ok(Circuit {
            num_qubits,
            gates: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        if let Some(&qubit) = gate.qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(CircuitError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends a gate, panicking on invalid input. Used by the generators,
    /// whose indices are valid by construction.
    pub fn apply(&mut self, kind: GateKind, params: &[f64], qubits: &[usize]) -> &mut Self {
        let gate = Gate::new(kind, params.to_vec(), qubits.to_vec()).expect("invalid gate");
        self.push(gate).expect("qubit out of range");
        self
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::H, &[], &[q])
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::X, &[], &[q])
    }

    pub fn t(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::T, &[], &[q])
    }

    pub fn tdg(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::Tdg, &[], &[q])
    }

    pub fn s(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::S, &[], &[q])
    }

    pub fn sdg(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::Sdg, &[], &[q])
    }

    pub fn sx(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::Sx, &[], &[q])
    }

    pub fn sy(&mut self, q: usize) -> &mut Self {
        self.apply(GateKind::Sy, &[], &[q])
    }

    pub fn rz(&mut self, theta: f64, q: usize) -> &mut Self {
        self.apply(GateKind::Rz, &[theta], &[q])
    }

    pub fn cp(&mut self, theta: f64, a: usize, b: usize) -> &mut Self {
        self.apply(GateKind::Cp, &[theta], &[a, b])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.apply(GateKind::Cx, &[], &[control, target])
    }

    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.apply(GateKind::Cz, &[], &[a, b])
    }

    pub fn ccx(&mut self, c0: usize, c1: usize, target: usize) -> &mut Self {
        self.apply(GateKind::Ccx, &[], &[c0, c1, target])
    }

    pub fn contains_toffoli(&self) -> bool {
        self.gates.iter().any(|g| g.kind == GateKind::Ccx)
    }

    /// Replaces every `ccx` by the standard 15-gate `{h, t, tdg, cx}`
    /// network. Circuits without `ccx` come back unchanged.
    pub fn lower_toffoli(&self) -> Circuit {
        if !self.contains_toffoli() {
            return self.clone();
        }
        let mut out = Circuit {
            num_qubits: self.num_qubits,
            gates: Vec::with_capacity(self.gates.len() + 14),
        };
        for gate in &self.gates {
            if gate.kind != GateKind::Ccx {
                out.gates.push(gate.clone());
                continue;
            }
            let (a, b, c) = (gate.qubits[0], gate.qubits[1], gate.qubits[2]);
            out.h(c)
                .cx(b, c)
                .tdg(c)
                .cx(a, c)
                .t(c)
                .cx(b, c)
                .tdg(c)
                .cx(a, c)
                .t(b)
                .t(c)
                .h(c)
                .cx(a, b)
                .t(a)
                .tdg(b)
                .cx(a, b);
        }
        out
    }

    /// True when every qubit is reachable from every other through
    /// multi-qubit gates.
    pub fn is_fully_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.num_qubits).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.num_qubits;
        for gate in self.gates.iter().filter(|g| g.is_multi_qubit()) {
            let first = gate.qubits[0];
            for &q in &gate.qubits[1..] {
                let (ra, rb) = (find(&mut parent, first), find(&mut parent, q));
                if ra != rb {
                    parent[ra] = rb;
                    components -= 1;
                }
            }
        }
        components == 1
    }

    pub fn parse(text: &str) -> Result<Circuit, ParseError> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let mut tokens = content.split_whitespace();
            let Some(head) = tokens.next() else { continue };
            let err = |kind| ParseError { line, kind };

            let Some(circ) = circuit.as_mut() else {
                if head != "qubits" {
                    return Err(err(ParseErrorKind::MissingHeader));
                }
                let n = tokens
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&n| n > 0)
                    .ok_or(err(ParseErrorKind::MalformedHeader))?;
                if tokens.next().is_some() {
                    return Err(err(ParseErrorKind::MalformedHeader));
                }
                circuit = Some(Circuit::new(n).expect("n > 0"));
                continue;
            };

            let kind = GateKind::from_name(head)
                .ok_or_else(|| err(ParseErrorKind::UnknownGate(head.to_string())))?;
            let rest: Vec<&str> = tokens.collect();
            let np = kind.num_params();
            if rest.len() != np + kind.arity() {
                return Err(err(ParseErrorKind::Arity {
                    gate: kind,
                    expected: np + kind.arity(),
                    got: rest.len(),
                }));
            }
            let mut params = Vec::with_capacity(np);
            for tok in &rest[..np] {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| err(ParseErrorKind::BadAngle(tok.to_string())))?;
                if !v.is_finite() {
                    return Err(err(ParseErrorKind::BadAngle(tok.to_string())));
                }
                params.push(v);
            }
            let mut qubits = Vec::with_capacity(kind.arity());
            for tok in &rest[np..] {
                let q: usize = tok
                    .parse()
                    .map_err(|_| err(ParseErrorKind::BadQubit(tok.to_string())))?;
                qubits.push(q);
            }
            let gate = Gate::new(kind, params, qubits).map_err(|e| err(ParseErrorKind::Gate(e)))?;
            circ.push(gate).map_err(|e| err(ParseErrorKind::Gate(e)))?;
        }
        circuit.ok_or(ParseError {
            line: text.lines().count().max(1),
            kind: ParseErrorKind::MissingHeader,
        })
    }

    /// Canonical text form; `Circuit::parse(&c.to_text()) == Ok(c)`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for gate in &self.gates {
            f.write_str(gate.kind.name())?;
            for p in &gate.params {
                write!(f, " {p:.16e}")?;
            }
            for q in &gate.qubits {
                write!(f, " {q}")?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Circuit::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected header `qubits <n>`")]
    MissingHeader,
    #[error("malformed header, expected `qubits <n>` with n >= 1")]
    MalformedHeader,
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate {gate} expects {expected} operands, got {got}")]
    Arity {
        gate: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("invalid angle `{0}`")]
    BadAngle(String),
    #[error("invalid qubit index `{0}`")]
    BadQubit(String),
    #[error(transparent)]
    Gate(CircuitError),
}
