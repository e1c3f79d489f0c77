//! Classical stand-ins for QPUs: exact statevector simulation, seeded shot
//! sampling, binned outputs and a seeded random-output generator.
//!
//! Bit order: qubit 0 is the most significant bit of a basis-state index.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};

pub const DEFAULT_MAX_QUBITS: usize = 26;

const PAR_MIN_LEN: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("circuit has {got} qubits, simulator limit is {limit}")]
    TooManyQubits { got: usize, limit: usize },
    #[error("roles cover {got} qubits but the circuit has {expected}")]
    RoleMismatch { expected: usize, got: usize },
    #[error("shot count must be positive")]
    NoShots,
}

/// Output distribution over `2^n` basis states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    num_qubits: usize,
    values: Vec<f64>,
}

impl ProbabilityVector {
    /// Wraps `values`, whose length must be a power of two.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.len().is_power_of_two(), "length must be a power of two");
        ProbabilityVector {
            num_qubits: values.len().trailing_zeros() as usize,
            values,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Probability of a bitstring written qubit 0 first.
    pub fn get(&self, bits: &str) -> Option<f64> {
        if bits.len() != self.num_qubits {
            return None;
        }
        let idx = usize::from_str_radix(bits, 2).ok()?;
        self.values.get(idx).copied()
    }
}

/// Basis-state label of `index` in an `n`-qubit register, qubit 0 first.
pub fn bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if (index >> (n - 1 - q)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn gate_matrix(gate: &Gate) -> [[Complex64; 2]; 2] {
    use std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let h = c(FRAC_1_SQRT_2, 0.0);
    let half = |re: f64, im: f64| c(0.5 * re, 0.5 * im);
    match gate.kind() {
        GateKind::H => [[h, h], [h, -h]],
        GateKind::X => [[z, one], [one, z]],
        GateKind::T => [[one, z], [z, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        GateKind::Tdg => [[one, z], [z, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)]],
        GateKind::S => [[one, z], [z, c(0.0, 1.0)]],
        GateKind::Sdg => [[one, z], [z, c(0.0, -1.0)]],
        GateKind::Sx => [[half(1.0, 1.0), half(1.0, -1.0)], [half(1.0, -1.0), half(1.0, 1.0)]],
        GateKind::Sy => [[half(1.0, 1.0), half(-1.0, -1.0)], [half(1.0, 1.0), half(1.0, 1.0)]],
        GateKind::Rz => {
            let theta = gate.params()[0];
            [
                [Complex64::from_polar(1.0, -theta / 2.0), z],
                [z, Complex64::from_polar(1.0, theta / 2.0)],
            ]
        }
        k => unreachable!("{k} is not a single-qubit gate"),
    }
}

/// Dense amplitude vector of an `n`-qubit register.
#[derive(Debug, Clone)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>
    pub fn new(num_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn stride(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    /// Visits amplitude pairs differing only in the bit with `stride`,
    /// passing the index of the lower member.
    fn for_each_pair<F>(&mut self, stride: usize, f: F)
    where
        F: Fn(usize, &mut Complex64, &mut Complex64) + Sync,
    {
        let block = 2 * stride;
        if self.amps.len() < PAR_MIN_LEN {
            for (b, chunk) in self.amps.chunks_mut(block).enumerate() {
                let (lo, hi) = chunk.split_at_mut(stride);
                for (j, (a0, a1)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    f(b * block + j, a0, a1);
                }
            }
            return;
        }
        self.amps.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
            let (lo, hi) = chunk.split_at_mut(stride);
            if stride >= PAR_MIN_LEN {
                lo.par_iter_mut()
                    .zip(hi.par_iter_mut())
                    .enumerate()
                    .for_each(|(j, (a0, a1))| f(b * block + j, a0, a1));
            } else {
                for (j, (a0, a1)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    f(b * block + j, a0, a1);
                }
            }
        });
    }

    fn for_each_amp<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut Complex64) + Sync,
    {
        if self.amps.len() < PAR_MIN_LEN {
            self.amps.iter_mut().enumerate().for_each(|(i, a)| f(i, a));
        } else {
            self.amps.par_iter_mut().enumerate().for_each(|(i, a)| f(i, a));
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        let qs = gate.qubits();
        match gate.kind() {
            GateKind::Cx => {
                let cmask = self.stride(qs[0]);
                let stride = self.stride(qs[1]);
                self.for_each_pair(stride, |i, a0, a1| {
                    if i & cmask != 0 {
                        std::mem::swap(a0, a1);
                    }
                });
            }
            GateKind::Cz | GateKind::Cp => {
                let mask = self.stride(qs[0]) | self.stride(qs[1]);
                let phase = if gate.kind() == GateKind::Cz {
                    Complex64::new(-1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, gate.params()[0])
                };
                self.for_each_amp(|i, a| {
                    if i & mask == mask {
                        *a *= phase;
                    }
                });
            }
            GateKind::Ccx => {
                let cmask = self.stride(qs[0]) | self.stride(qs[1]);
                let stride = self.stride(qs[2]);
                self.for_each_pair(stride, |i, a0, a1| {
                    if i & cmask == cmask {
                        std::mem::swap(a0, a1);
                    }
                });
            }
            _ => {
                let m = gate_matrix(gate);
                let stride = self.stride(qs[0]);
                self.for_each_pair(stride, |_, a0, a1| {
                    let (x, y) = (*a0, *a1);
                    *a0 = m[0][0] * x + m[0][1] * y;
                    *a1 = m[1][0] * x + m[1][1] * y;
                });
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        if self.amps.len() < PAR_MIN_LEN {
            self.amps.iter().map(|a| a.norm_sqr()).collect()
        } else {
            self.amps.par_iter().map(|a| a.norm_sqr()).collect()
        }
    }
}

/// Runs `circuit` from |0...0> and returns the final amplitudes.
pub fn simulate(circuit: &Circuit, max_qubits: usize) -> Result<StateVector, SimError> {
    let n = circuit.num_qubits();
    if n > max_qubits {
        return Err(SimError::TooManyQubits {
            got: n,
            limit: max_qubits,
        });
    }
    let mut state = StateVector::new(n);
    for gate in circuit.gates() {
        state.apply(gate);
    }
    Ok(state)
}

/// Exact output probabilities with the default qubit limit.
pub fn statevector(circuit: &Circuit) -> Result<ProbabilityVector, SimError> {
    statevector_with_limit(circuit, DEFAULT_MAX_QUBITS)
}

pub fn statevector_with_limit(
    circuit: &Circuit,
    max_qubits: usize,
) -> Result<ProbabilityVector, SimError> {
    Ok(ProbabilityVector::new(simulate(circuit, max_qubits)?.probabilities()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    /// Bitstring (qubit 0 first) to number of occurrences.
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotCounts {
    /// Empirical distribution over all `2^n` states.
    pub fn to_probabilities(&self, num_qubits: usize) -> ProbabilityVector {
        let mut values = vec![0.0; 1 << num_qubits];
        for (bits, &c) in &self.counts {
            let idx = usize::from_str_radix(bits, 2).expect("counts keys are bitstrings");
            values[idx] = c as f64 / self.shots as f64;
        }
        ProbabilityVector::new(values)
    }
}

fn sample_indices(probs: &[f64], shots: u64, seed: u64) -> Vec<u64> {
    let mut hist = vec![0u64; probs.len()];
    let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0))).expect("nonzero total mass");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        hist[dist.sample(&mut rng)] += 1;
    }
    hist
}

/// Multinomial shot sampling from the exact output distribution.
pub fn sample(circuit: &Circuit, shots: u64, seed: u64) -> Result<ShotCounts, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let probs = statevector(circuit)?;
    let n = probs.num_qubits();
    let hist = sample_indices(probs.values(), shots, seed);
    let counts = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (bitstring(i, n), c))
        .collect();
    Ok(ShotCounts {
        counts,
        shots,
        seed,
    })
}

/// How one qubit is treated when binning an output distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitRole {
    /// Indexes the bins.
    Active,
    /// Summed out.
    Merged,
    /// Conditioned on the given bit.
    Zoomed(bool),
}

/// Sums `values` (over `roles.len()` qubits) into `2^#active` bins, keeping
/// only states whose zoomed qubits match. No renormalization.
pub fn bin_values(values: &[f64], roles: &[QubitRole]) -> Vec<f64> {
    let n = roles.len();
    assert_eq!(values.len(), 1 << n);
    let mut zmask = 0usize;
    let mut zval = 0usize;
    let mut active_bits = Vec::new();
    for (q, role) in roles.iter().enumerate() {
        let bit = 1usize << (n - 1 - q);
        match role {
            QubitRole::Active => active_bits.push(bit),
            QubitRole::Merged => {}
            QubitRole::Zoomed(b) => {
                zmask |= bit;
                if *b {
                    zval |= bit;
                }
            }
        }
    }
    if active_bits.len() == n {
        return values.to_vec();
    }
    let na = active_bits.len();
    let mut out = vec![0.0; 1 << na];
    for (i, &v) in values.iter().enumerate() {
        if i & zmask != zval {
            continue;
        }
        let mut pattern = 0usize;
        for (j, &bit) in active_bits.iter().enumerate() {
            if i & bit != 0 {
                pattern |= 1 << (na - 1 - j);
            }
        }
        out[pattern] += v;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum BinMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Probability mass per active-qubit pattern, conditioned on the zoomed
/// qubits and summed over merged ones.
pub fn binned_run(circuit: &Circuit, roles: &[QubitRole], mode: BinMode) -> Result<Vec<f64>, SimError> {
    if roles.len() != circuit.num_qubits() {
        return Err(SimError::RoleMismatch {
            expected: circuit.num_qubits(),
            got: roles.len(),
        });
    }
    let probs = statevector(circuit)?;
    match mode {
        BinMode::Exact => Ok(bin_values(probs.values(), roles)),
        BinMode::Shots { shots, seed } => {
            if shots == 0 {
                return Err(SimError::NoShots);
            }
            let hist = sample_indices(probs.values(), shots, seed);
            let freq: Vec<f64> = hist.iter().map(|&c| c as f64 / shots as f64).collect();
            Ok(bin_values(&freq, roles))
        }
    }
}

/// Anything that can execute (sub)circuit variants.
pub trait Backend: Sync {
    /// Binned output of one execution. `stream` identifies the job so that
    /// seeded backends draw independent, reproducible randomness per job.
    fn run_binned(&self, circuit: &Circuit, roles: &[QubitRole], stream: u64) -> Result<Vec<f64>, SimError>;

    /// Whether outputs are exact probabilities (enables strict checks
    /// downstream).
    fn is_exact(&self) -> bool;

    fn shots(&self) -> Option<u64> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExactBackend {
    pub max_qubits: usize,
}

impl Default for ExactBackend {
    fn default() -> Self {
        ExactBackend {
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }
}

impl Backend for ExactBackend {
    fn run_binned(&self, circuit: &Circuit, roles: &[QubitRole], _stream: u64) -> Result<Vec<f64>, SimError> {
        if roles.len() != circuit.num_qubits() {
            return Err(SimError::RoleMismatch {
                expected: circuit.num_qubits(),
                got: roles.len(),
            });
        }
        let probs = statevector_with_limit(circuit, self.max_qubits)?;
        Ok(bin_values(probs.values(), roles))
    }

    fn is_exact(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShotBackend {
    pub shots: u64,
    pub seed: u64,
}

impl Backend for ShotBackend {
    fn run_binned(&self, circuit: &Circuit, roles: &[QubitRole], stream: u64) -> Result<Vec<f64>, SimError> {
        binned_run(
            circuit,
            roles,
            BinMode::Shots {
                shots: self.shots,
                seed: mix_seed(self.seed, stream),
            },
        )
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn shots(&self) -> Option<u64> {
        Some(self.shots)
    }
}

/// Produces seeded pseudo-random normalized vectors of the right shape
/// without simulating anything. Only useful for runtime and memory studies
/// beyond the simulable limit.
#[derive(Debug, Clone, Copy)]
pub struct RandomBackend {
    pub seed: u64,
}

impl Backend for RandomBackend {
    fn run_binned(&self, circuit: &Circuit, roles: &[QubitRole], stream: u64) -> Result<Vec<f64>, SimError> {
        if roles.len() != circuit.num_qubits() {
            return Err(SimError::RoleMismatch {
                expected: circuit.num_qubits(),
                got: roles.len(),
            });
        }
        let active = roles.iter().filter(|r| **r == QubitRole::Active).count();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, stream));
        let mut v: Vec<f64> = (0..1usize << active).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        Ok(v)
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// Selects one of the built-in backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    Shots { shots: u64, seed: u64 },
    Random { seed: u64 },
}

impl BackendKind {
    pub fn build(self) -> Box<dyn Backend> {
        match self {
            BackendKind::Exact => Box::new(ExactBackend::default()),
            BackendKind::Shots { shots, seed } => Box::new(ShotBackend { shots, seed }),
            BackendKind::Random { seed } => Box::new(RandomBackend { seed }),
        }
    }
}

/// SplitMix64 finalizer over `seed` and `stream`.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
