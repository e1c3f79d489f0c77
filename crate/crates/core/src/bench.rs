//! Deterministic generators for the benchmark families: Bernstein-Vazirani,
//! ripple-carry adder, approximate QFT, and random grid circuits.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("need at least {min} qubits, got {got}")]
    TooFewQubits { min: usize, got: usize },
    #[error("hidden string has length {got}, expected {expected}")]
    HiddenLength { expected: usize, got: usize },
    #[error("hidden string may only contain '0' and '1'")]
    HiddenChars,
    #[error("adder needs an even qubit count, got {0}")]
    OddAdder(usize),
    #[error("operand {value} does not fit in {width} bits")]
    OperandTooLarge { value: u64, width: usize },
    #[error("approximation degree {degree} outside [1, {max}]")]
    DegreeOutOfRange { degree: usize, max: usize },
    #[error("grid {rows}x{cols} must have both sides >= 1 and differ by at most 2")]
    Shape { rows: usize, cols: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
}

/// A benchmark instance description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum BenchmarkSpec {
    Bv {
        num_qubits: usize,
        /// Defaults to all ones.
        #[serde(default)]
        hidden: Option<String>,
    },
    Adder {
        num_qubits: usize,
        #[serde(default)]
        a: u64,
        #[serde(default)]
        b: u64,
    },
    Aqft {
        num_qubits: usize,
        #[serde(default)]
        degree: Option<usize>,
    },
    Supremacy {
        rows: usize,
        cols: usize,
        #[serde(default = "default_depth")]
        depth: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_depth() -> usize {
    10
}

impl BenchmarkSpec {
    pub fn num_qubits(&self) -> usize {
        match self {
            BenchmarkSpec::Bv { num_qubits, .. }
            | BenchmarkSpec::Adder { num_qubits, .. }
            | BenchmarkSpec::Aqft { num_qubits, .. } => *num_qubits,
            BenchmarkSpec::Supremacy { rows, cols, .. } => rows * cols,
        }
    }

    pub fn build(&self) -> Result<Circuit, BenchError> {
        match self {
            BenchmarkSpec::Bv { num_qubits, hidden } => {
                let hidden = match hidden {
                    Some(h) => h.clone(),
                    None => "1".repeat(num_qubits.saturating_sub(1)),
                };
                gen_bv(*num_qubits, &hidden)
            }
            BenchmarkSpec::Adder { num_qubits, a, b } => gen_adder_with_inputs(*num_qubits, *a, *b),
            BenchmarkSpec::Aqft { num_qubits, degree } => {
                gen_aqft(*num_qubits, degree.unwrap_or_else(|| default_aqft_degree(*num_qubits)))
            }
            BenchmarkSpec::Supremacy {
                rows,
                cols,
                depth,
                seed,
            } => gen_supremacy(*rows, *cols, *depth, *seed),
        }
    }
}

/// Bernstein-Vazirani over `n - 1` data qubits and an ancilla on the last
/// wire. Measuring the data qubits yields `hidden` with certainty.
pub fn gen_bv(n: usize, hidden: &str) -> Result<Circuit, BenchError> {
    if n < 2 {
        return Err(BenchError::TooFewQubits { min: 2, got: n });
    }
    if hidden.len() != n - 1 {
        return Err(BenchError::HiddenLength {
            expected: n - 1,
            got: hidden.len(),
        });
    }
    if hidden.chars().any(|ch| ch != '0' && ch != '1') {
        return Err(BenchError::HiddenChars);
    }
    let anc = n - 1;
    let mut c = Circuit::new(n).expect("n >= 2");
    c.x(anc);
    for q in 0..n {
        c.h(q);
    }
    for (q, ch) in hidden.chars().enumerate() {
        if ch == '1' {
            c.cx(q, anc);
        }
    }
    for q in 0..n {
        c.h(q);
    }
    Ok(c)
}

/// Register layout of the ripple-carry adder on `n` qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderLayout {
    pub carry_in: usize,
    pub a: Vec<usize>,
    /// Receives the sum.
    pub b: Vec<usize>,
    pub carry_out: usize,
}

impl AdderLayout {
    pub fn new(n: usize) -> Result<Self, BenchError> {
        if !n.is_multiple_of(2) {
            return Err(BenchError::OddAdder(n));
        }
        if n < 4 {
            return Err(BenchError::TooFewQubits { min: 4, got: n });
        }
        let w = (n - 2) / 2;
        Ok(AdderLayout {
            carry_in: 0,
            b: (0..w).map(|i| 1 + 2 * i).collect(),
            a: (0..w).map(|i| 2 + 2 * i).collect(),
            carry_out: n - 1,
        })
    }

    pub fn width(&self) -> usize {
        self.a.len()
    }

    /// Reads `b + 2^w * carry_out` from a basis-state index (qubit 0 is the
    /// most significant bit).
    pub fn decode_sum(&self, index: usize, n: usize) -> u64 {
        let bit = |q: usize| ((index >> (n - 1 - q)) & 1) as u64;
        let mut sum = 0;
        for (i, &q) in self.b.iter().enumerate() {
            sum |= bit(q) << i;
        }
        sum | (bit(self.carry_out) << self.width())
    }
}

/// Cuccaro ripple-carry adder computing `b <- a + b` with the carry in the
/// last qubit. Inputs start at zero.
pub fn gen_adder(n: usize) -> Result<Circuit, BenchError> {
    gen_adder_with_inputs(n, 0, 0)
}

/// [`gen_adder`] with `X` gates preparing the operands.
pub fn gen_adder_with_inputs(n: usize, a: u64, b: u64) -> Result<Circuit, BenchError> {
    let layout = AdderLayout::new(n)?;
    let w = layout.width();
    for value in [a, b] {
        if w < 64 && value >> w != 0 {
            return Err(BenchError::OperandTooLarge { value, width: w });
        }
    }
    let mut c = Circuit::new(n).expect("n >= 4");
    for i in 0..w {
        if (a >> i) & 1 == 1 {
            c.x(layout.a[i]);
        }
        if (b >> i) & 1 == 1 {
            c.x(layout.b[i]);
        }
    }
    let carry = |i: usize| if i == 0 { layout.carry_in } else { layout.a[i - 1] };
    for i in 0..w {
        // MAJ
        let (cq, bq, aq) = (carry(i), layout.b[i], layout.a[i]);
        c.cx(aq, bq).cx(aq, cq).ccx(cq, bq, aq);
    }
    c.cx(layout.a[w - 1], layout.carry_out);
    for i in (0..w).rev() {
        // UMA
        let (cq, bq, aq) = (carry(i), layout.b[i], layout.a[i]);
        c.ccx(cq, bq, aq).cx(aq, cq).cx(cq, bq);
    }
    Ok(c)
}

/// `ceil(log2 n) + 2`, clamped to the valid range.
pub fn default_aqft_degree(n: usize) -> usize {
    let log = usize::BITS - n.saturating_sub(1).leading_zeros();
    (log as usize + 2).min(n.saturating_sub(1)).max(1)
}

/// QFT keeping only controlled phases between qubits at distance
/// `<= degree`. No final swaps.
pub fn gen_aqft(n: usize, degree: usize) -> Result<Circuit, BenchError> {
    if n == 0 {
        return Err(BenchError::TooFewQubits { min: 1, got: 0 });
    }
    if n > 1 && !(1..n).contains(&degree) {
        return Err(BenchError::DegreeOutOfRange { degree, max: n - 1 });
    }
    let mut c = Circuit::new(n).expect("n >= 1");
    for j in 0..n {
        c.h(j);
        for k in (j + 1)..n {
            let d = k - j;
            if d <= degree {
                c.cp(PI / (1u64 << d) as f64, k, j);
            }
        }
    }
    Ok(c)
}

/// The eight CZ layer patterns of a grid. Each pattern takes the
/// horizontal or vertical couplers whose (row, column) parities match, so
/// eight consecutive layers use every coupler exactly once.
fn cz_pattern(rows: usize, cols: usize, layer: usize) -> Vec<(usize, usize)> {
    const PATTERNS: [(bool, usize, usize); 8] = [
        (false, 0, 0),
        (false, 1, 1),
        (true, 0, 0),
        (true, 1, 0),
        (false, 1, 0),
        (false, 0, 1),
        (true, 0, 1),
        (true, 1, 1),
    ];
    let (horizontal, rp, cp) = PATTERNS[layer % PATTERNS.len()];
    let id = |r: usize, c: usize| r * cols + c;
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if r % 2 != rp || c % 2 != cp {
                continue;
            }
            if horizontal && c + 1 < cols {
                out.push((id(r, c), id(r, c + 1)));
            }
            if !horizontal && r + 1 < rows {
                out.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    out
}

/// Random grid circuit: `H` on every qubit, then `depth` layers of a CZ
/// pattern followed by a seeded choice from `{t, sx, sy}` on every qubit,
/// never repeating a qubit's previous choice. Qubit `(r, c)` is `r * cols + c`.
pub fn gen_supremacy(rows: usize, cols: usize, depth: usize, seed: u64) -> Result<Circuit, BenchError> {
    if rows == 0 || cols == 0 || rows.abs_diff(cols) > 2 {
        return Err(BenchError::Shape { rows, cols });
    }
    if depth == 0 {
        return Err(BenchError::ZeroDepth);
    }
    let n = rows * cols;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n).expect("n >= 1");
    for q in 0..n {
        c.h(q);
    }
    let mut last: Vec<Option<usize>> = vec![None; n];
    for layer in 0..depth {
        // a 1xN grid has no vertical couplers; skip empty layers so that
        // every layer entangles
        let mut pattern = layer;
        let mut pairs = cz_pattern(rows, cols, pattern);
        while pairs.is_empty() && pattern < layer + 8 {
            pattern += 1;
            pairs = cz_pattern(rows, cols, pattern);
        }
        for (a, b) in pairs {
            c.cz(a, b);
        }
        for (q, prev) in last.iter_mut().enumerate() {
            let choices: Vec<usize> = (0..3).filter(|&g| Some(g) != *prev).collect();
            let g = *choices.choose(&mut rng).expect("nonempty");
            *prev = Some(g);
            match g {
                0 => c.t(q),
                1 => c.sx(q),
                _ => c.sy(q),
            };
        }
    }
    Ok(c)
}

/// Five-qubit circuit whose cheapest 3-qubit cut is the `q2` wire between
/// its first two `cz` gates on that wire.
pub fn five_qubit_example() -> Circuit {
    let mut c = Circuit::new(5).expect("five qubits");
    for q in 0..5 {
        c.h(q);
    }
    c.cz(0, 1).t(2).cz(0, 2).h(0).t(1).t(2);
    c.cz(2, 3).t(3).cz(2, 4).h(2).cz(3, 4).t(4).h(3);
    c
}
