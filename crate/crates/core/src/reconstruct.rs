//! Full-definition reconstruction.
//!
//! `P = sum_k (x)_i p_{i,k}` over all `4^K` basis assignments, followed by a
//! bit permutation from tensor-product order back to qubit order.
//!
//! The kernel works in blocks of the output indexed by the first two
//! subcircuits' entries, so every block is independent and the
//! multiplication count is exactly `4^K * sum_{c>=2} prod_{i<=c} len_i`
//! where `len_i` is the length of subcircuit `i`'s tensor. Within a block
//! the terms are accumulated in `k` order, which keeps results identical
//! regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cut::objective;
use crate::sim::{ProbabilityVector, QubitRole};
use crate::variant::{Subcircuit, TensorTable};

/// Largest output the full-definition path will allocate.
pub const FD_MAX_QUBITS: usize = 30;
/// Negative values above `-EXACT_CLIP_TOL` are rounding noise.
pub const EXACT_CLIP_TOL: f64 = 1e-8;
/// Allowed deviation of the total mass for exact inputs.
pub const EXACT_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("tensor table missing or mis-shaped for subcircuit {0}")]
    MissingTensor(usize),
    #[error("value {value} at index {index} is below the clipping tolerance")]
    NegativeMass { index: usize, value: f64 },
    #[error("reconstructed mass {sum} differs from {expected}")]
    NormalizationFailure { sum: f64, expected: f64 },
    #[error("{0} output qubits exceed the full-definition limit of {FD_MAX_QUBITS}; use dynamic definition")]
    TooManyQubits(usize),
    #[error("reconstruction needs at least one cut")]
    NoCuts,
}

/// How raw inputs were produced, which decides the post-processing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClipPolicy {
    /// Clip negatives down to `-tol`, fail below; the mass must already
    /// match.
    Exact { tol: f64 },
    /// Tolerance `5 / sqrt(shots)`, then renormalize.
    Shots { shots: u64 },
    /// Leave values untouched (synthetic inputs).
    Unchecked,
}

impl ClipPolicy {
    pub fn exact() -> Self {
        ClipPolicy::Exact { tol: EXACT_CLIP_TOL }
    }
}

/// Contraction order and output layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionPlan {
    pub num_qubits: usize,
    pub num_cuts: usize,
    /// `n_i` of every subcircuit, in contraction order.
    pub subcircuit_qubits: Vec<usize>,
    /// Original qubits carried by each subcircuit's tensor, in tensor
    /// entry order. Concatenated, this maps tensor-product bit positions
    /// to qubits.
    pub tensor_qubits: Vec<Vec<usize>>,
}

impl ReconstructionPlan {
    /// Plan for the full distribution.
    pub fn new(subs: &[Subcircuit], num_qubits: usize, num_cuts: usize) -> Self {
        ReconstructionPlan {
            num_qubits,
            num_cuts,
            subcircuit_qubits: subs.iter().map(|s| s.num_wires()).collect(),
            tensor_qubits: subs.iter().map(|s| s.output_qubits()).collect(),
        }
    }

    /// Plan for a binned reconstruction: tensors carry only the active
    /// qubits.
    pub fn binned(subs: &[Subcircuit], roles: &[QubitRole], num_cuts: usize) -> Self {
        ReconstructionPlan {
            num_qubits: roles.len(),
            num_cuts,
            subcircuit_qubits: subs.iter().map(|s| s.num_wires()).collect(),
            tensor_qubits: subs
                .iter()
                .map(|s| {
                    s.output_qubits()
                        .into_iter()
                        .filter(|&q| roles[q] == QubitRole::Active)
                        .collect()
                })
                .collect(),
        }
    }

    /// Tensor-product bit position (0 = most significant) to qubit.
    pub fn permutation(&self) -> Vec<usize> {
        self.tensor_qubits.iter().flatten().copied().collect()
    }

    pub fn output_bits(&self) -> usize {
        self.tensor_qubits.iter().map(Vec::len).sum()
    }

    /// Cost estimate over the subcircuit widths `n_i`.
    pub fn estimate_cost(&self) -> u128 {
        objective(self.num_cuts, &self.subcircuit_qubits)
    }

    /// Multiplications the kernel performs: the same formula over the
    /// contracted widths (non-port, unmerged qubits per subcircuit).
    pub fn contraction_multiplies(&self) -> u128 {
        let widths: Vec<usize> = self.tensor_qubits.iter().map(Vec::len).collect();
        objective(self.num_cuts, &widths)
    }
}

/// Result of a contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Contraction {
    /// Output over the plan's qubits in ascending qubit order.
    pub values: Vec<f64>,
    pub multiplies: u64,
    pub terms: usize,
}

/// Sums the Kronecker products of all `4^K` terms and reorders the result
/// to ascending qubit order. No clipping or normalization.
pub fn contract(tables: &[TensorTable], plan: &ReconstructionPlan) -> Result<Contraction, ReconstructError> {
    let k_total = 1usize << (2 * plan.num_cuts);
    if plan.num_cuts == 0 {
        return Err(ReconstructError::NoCuts);
    }
    let bits = plan.output_bits();
    if bits > FD_MAX_QUBITS {
        return Err(ReconstructError::TooManyQubits(bits));
    }
    if tables.len() != plan.tensor_qubits.len() || tables.len() < 2 {
        return Err(ReconstructError::MissingTensor(tables.len()));
    }
    for (i, (t, qs)) in tables.iter().zip(&plan.tensor_qubits).enumerate() {
        if t.len() != 1 << qs.len() {
            return Err(ReconstructError::MissingTensor(i));
        }
    }

    let lens: Vec<usize> = tables.iter().map(|t| t.len()).collect();
    let block = lens[2..].iter().product::<usize>();
    let l2 = lens[1];
    let mut product = vec![0.0; 1 << bits];
    let multiplies: u64 = product
        .par_chunks_mut(block)
        .enumerate()
        .map(|(b, out)| {
            let (a, c) = (b / l2, b % l2);
            let mut count = 0u64;
            let mut cur = Vec::with_capacity(block);
            let mut next = Vec::with_capacity(block);
            for k in 0..k_total {
                cur.clear();
                cur.push(tables[0].tensor(k, plan.num_cuts)[a] * tables[1].tensor(k, plan.num_cuts)[c]);
                count += 1;
                for t in &tables[2..] {
                    let t = t.tensor(k, plan.num_cuts);
                    next.clear();
                    for &x in &cur {
                        next.extend(t.iter().map(|&y| x * y));
                    }
                    count += (cur.len() * t.len()) as u64;
                    std::mem::swap(&mut cur, &mut next);
                }
                for (o, x) in out.iter_mut().zip(&cur) {
                    *o += x;
                }
            }
            count
        })
        .sum();

    Ok(Contraction {
        values: to_qubit_order(&product, &plan.permutation()),
        multiplies,
        terms: k_total,
    })
}

/// Reorders a vector whose bit positions carry `perm[p]` (position 0 most
/// significant) into ascending order of those qubits.
pub fn to_qubit_order(values: &[f64], perm: &[usize]) -> Vec<f64> {
    let n = perm.len();
    assert_eq!(values.len(), 1 << n);
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted == perm {
        return values.to_vec();
    }
    // bit of the target index (LSB numbering) -> bit of the source index
    let target_pos: Vec<usize> = perm
        .iter()
        .map(|q| sorted.binary_search(q).expect("qubit present"))
        .collect();
    let mut source_bit_of_target = vec![0usize; n];
    for (p, &t) in target_pos.iter().enumerate() {
        source_bit_of_target[n - 1 - t] = n - 1 - p;
    }
    // gather through 16-bit lookup tables over chunks of the target index
    let tables: Vec<Vec<usize>> = (0..n)
        .step_by(16)
        .map(|lo| {
            let width = (n - lo).min(16);
            (0..1usize << width)
                .map(|chunk| {
                    (0..width)
                        .filter(|b| (chunk >> b) & 1 == 1)
                        .fold(0, |acc, b| acc | (1 << source_bit_of_target[lo + b]))
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; values.len()];
    out.par_iter_mut().enumerate().for_each(|(t, o)| {
        let mut s = 0;
        for (j, table) in tables.iter().enumerate() {
            s |= table[(t >> (16 * j)) & (table.len() - 1)];
        }
        *o = values[s];
    });
    out
}

/// Applies the clipping policy. `expected` is the mass the values should
/// carry (1 for a full distribution).
pub fn postprocess(values: &mut [f64], policy: ClipPolicy, expected: f64) -> Result<(), ReconstructError> {
    match policy {
        ClipPolicy::Unchecked => Ok(()),
        ClipPolicy::Exact { tol } => {
            clip(values, tol)?;
            let sum: f64 = values.iter().sum();
            if (sum - expected).abs() > EXACT_SUM_TOL {
                return Err(ReconstructError::NormalizationFailure { sum, expected });
            }
            Ok(())
        }
        ClipPolicy::Shots { shots } => {
            clip(values, 5.0 / (shots.max(1) as f64).sqrt())?;
            let sum: f64 = values.iter().sum();
            if sum > 0.0 {
                let scale = expected / sum;
                values.iter_mut().for_each(|v| *v *= scale);
            }
            Ok(())
        }
    }
}

fn clip(values: &mut [f64], tol: f64) -> Result<(), ReconstructError> {
    for (index, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -tol {
                return Err(ReconstructError::NegativeMass { index, value: *v });
            }
            *v = 0.0;
        }
    }
    Ok(())
}

/// Output of [`reconstruct_fd`].
#[derive(Debug, Clone, PartialEq)]
pub struct FdResult {
    pub distribution: ProbabilityVector,
    pub multiplies: u64,
    pub terms: usize,
}

/// Full distribution in original qubit order.
pub fn reconstruct_fd(
    tables: &[TensorTable],
    plan: &ReconstructionPlan,
    policy: ClipPolicy,
) -> Result<FdResult, ReconstructError> {
    if plan.num_qubits > FD_MAX_QUBITS {
        return Err(ReconstructError::TooManyQubits(plan.num_qubits));
    }
    let mut c = contract(tables, plan)?;
    postprocess(&mut c.values, policy, 1.0)?;
    Ok(FdResult {
        distribution: ProbabilityVector::new(c.values),
        multiplies: c.multiplies,
        terms: c.terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Index-by-index oracle: the bit for qubit `perm[p]` moves to its rank.
    fn permute_oracle(values: &[f64], perm: &[usize]) -> Vec<f64> {
        let n = perm.len();
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        let mut out = vec![0.0; values.len()];
        for (i, &v) in values.iter().enumerate() {
            let mut t = 0;
            for (p, q) in perm.iter().enumerate() {
                let bit = (i >> (n - 1 - p)) & 1;
                let rank = sorted.iter().position(|x| x == q).unwrap();
                t |= bit << (n - 1 - rank);
            }
            out[t] = v;
        }
        out
    }

    fn random_tables(lens_bits: &[usize], ports: &[Vec<usize>], seed: u64) -> Vec<TensorTable> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        lens_bits
            .iter()
            .zip(ports)
            .enumerate()
            .map(|(i, (&b, cuts))| {
                let tables = (0..1 << (2 * cuts.len()))
                    .map(|_| (0..1 << b).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                TensorTable::from_parts(i, cuts.clone(), tables)
            })
            .collect()
    }

    /// Direct sum of explicit Kronecker products.
    fn kron_oracle(tables: &[TensorTable], num_cuts: usize) -> Vec<f64> {
        let mut total: Vec<f64> = Vec::new();
        for k in 0..1 << (2 * num_cuts) {
            let mut acc = vec![1.0];
            for t in tables {
                let v = t.tensor(k, num_cuts);
                acc = acc.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
            }
            if total.is_empty() {
                total = acc;
            } else {
                total.iter_mut().zip(&acc).for_each(|(t, a)| *t += a);
            }
        }
        total
    }

    fn plan_for(bits: &[usize], num_cuts: usize) -> ReconstructionPlan {
        let mut q = 0;
        ReconstructionPlan {
            num_qubits: bits.iter().sum(),
            num_cuts,
            subcircuit_qubits: bits.iter().map(|b| b + 1).collect(),
            tensor_qubits: bits
                .iter()
                .map(|&b| {
                    let v: Vec<usize> = (q..q + b).collect();
                    q += b;
                    v
                })
                .collect(),
        }
    }

    #[test]
    fn kernel_matches_explicit_kronecker_sums() {
        let cases = [
            (&[2usize, 3][..], vec![vec![0], vec![0]], 1),
            (&[1, 2, 2][..], vec![vec![0], vec![0, 1], vec![1]], 2),
            (&[2, 0, 3, 1][..], vec![vec![0, 2], vec![0, 1], vec![1, 2], vec![]], 3),
        ];
        for (bits, ports, k) in cases {
            let tables = random_tables(bits, &ports, 7);
            let plan = plan_for(bits, k);
            let c = contract(&tables, &plan).unwrap();
            let oracle = kron_oracle(&tables, k);
            for (a, b) in c.values.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
            assert_eq!(c.multiplies as u128, plan.contraction_multiplies());
            assert_eq!(c.terms, 1 << (2 * k));
        }
    }

    #[test]
    fn cost_estimates() {
        let plan = ReconstructionPlan {
            num_qubits: 5,
            num_cuts: 1,
            subcircuit_qubits: vec![3, 3],
            tensor_qubits: vec![vec![0, 1], vec![2, 3, 4]],
        };
        assert_eq!(plan.estimate_cost(), 256);
        assert_eq!(plan.contraction_multiplies(), 4 * 32);
        let two = ReconstructionPlan {
            subcircuit_qubits: vec![3, 3],
            num_cuts: 2,
            ..plan.clone()
        };
        assert_eq!(two.estimate_cost(), 1024);
        let three = ReconstructionPlan {
            subcircuit_qubits: vec![2, 2, 2],
            num_cuts: 2,
            ..plan
        };
        assert_eq!(three.estimate_cost(), 1280);
    }

    #[test]
    fn clipping_rules() {
        let mut v = vec![0.5, 0.5 + 1e-9, -1e-9];
        postprocess(&mut v, ClipPolicy::exact(), 1.0).unwrap();
        assert_eq!(v[2], 0.0);
        let mut bad = vec![1.0, -1e-6];
        assert!(matches!(
            postprocess(&mut bad, ClipPolicy::exact(), 1.0),
            Err(ReconstructError::NegativeMass { index: 1, .. })
        ));
        let mut off = vec![0.4, 0.4];
        assert!(matches!(
            postprocess(&mut off, ClipPolicy::exact(), 1.0),
            Err(ReconstructError::NormalizationFailure { .. })
        ));
        let mut noisy = vec![0.6, 0.5, -0.01];
        postprocess(&mut noisy, ClipPolicy::Shots { shots: 10_000 }, 1.0).unwrap();
        assert!((noisy.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(noisy[2], 0.0);
    }

    #[test]
    fn no_cuts_and_guard() {
        let plan = ReconstructionPlan {
            num_qubits: 31,
            num_cuts: 1,
            subcircuit_qubits: vec![16, 16],
            tensor_qubits: vec![(0..15).collect(), (15..31).collect()],
        };
        assert_eq!(
            reconstruct_fd(&[], &plan, ClipPolicy::exact()).unwrap_err(),
            ReconstructError::TooManyQubits(31)
        );
        let zero = ReconstructionPlan { num_cuts: 0, num_qubits: 2, ..plan };
        assert_eq!(contract(&[], &zero).unwrap_err(), ReconstructError::NoCuts);
    }

    proptest! {
        #[test]
        fn permutation_matches_oracle(perm in (1usize..9).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle()), seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..1usize << perm.len()).map(|_| rng.gen()).collect();
            prop_assert_eq!(to_qubit_order(&values, &perm), permute_oracle(&values, &perm));
        }

        #[test]
        fn sparse_qubit_labels_permute_like_ranks(seed in 0u64..1000) {
            // qubit labels need not be contiguous (binned plans)
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let perm = vec![7, 2, 19, 4];
            let values: Vec<f64> = (0..16).map(|_| rng.gen()).collect();
            prop_assert_eq!(to_qubit_order(&values, &perm), permute_oracle(&values, &perm));
        }
    }

    #[test]
    fn wide_permutation_uses_all_lookup_chunks() {
        let n = 18;
        let perm: Vec<usize> = (0..n).rev().collect();
        let values: Vec<f64> = (0..1usize << n).map(|i| i as f64).collect();
        let out = to_qubit_order(&values, &perm);
        // full bit reversal
        for (t, &v) in out.iter().enumerate().step_by(997) {
            let rev = (0..n).fold(0, |acc, b| acc | (((t >> b) & 1) << (n - 1 - b)));
            assert_eq!(v as usize, rev);
        }
    }
}
