//! Distances between output distributions and the comparison against
//! direct simulation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::sim::{statevector_with_limit, ProbabilityVector, SimError, DEFAULT_MAX_QUBITS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn check(a: &[f64], b: &[f64]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// `sum_i (a_i - b_i)^2 / (a_i + b_i)`; terms with `a_i + b_i = 0` add 0.
pub fn chi_square(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    check(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let s = x + y;
            if s == 0.0 {
                0.0
            } else {
                (x - y) * (x - y) / s
            }
        })
        .sum())
}

pub fn l_inf(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    check(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

pub fn total_variation(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    check(a, b)?;
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Normalizes shot counts into a probability vector.
pub fn normalize_counts(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub chi_square: f64,
    pub l_inf: f64,
    pub total_variation: f64,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn between(produced: &[f64], truth: &[f64]) -> Result<Self, MetricsError> {
        let mut notes = Vec::new();
        let sum: f64 = produced.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            notes.push(format!("produced distribution sums to {sum}"));
        }
        if produced.iter().any(|&v| v < 0.0) {
            notes.push("produced distribution has negative entries".into());
        }
        Ok(ComparisonReport {
            n: truth.len().trailing_zeros() as usize,
            chi_square: chi_square(produced, truth)?,
            l_inf: l_inf(produced, truth)?,
            total_variation: total_variation(produced, truth)?,
            notes,
        })
    }
}

/// Compares `produced` with the statevector of `circuit`.
pub fn oracle_compare(circuit: &Circuit, produced: &ProbabilityVector) -> Result<ComparisonReport, MetricsError> {
    oracle_compare_with_limit(circuit, produced, DEFAULT_MAX_QUBITS)
}

pub fn oracle_compare_with_limit(
    circuit: &Circuit,
    produced: &ProbabilityVector,
    max_qubits: usize,
) -> Result<ComparisonReport, MetricsError> {
    let truth = statevector_with_limit(circuit, max_qubits)?;
    ComparisonReport::between(produced.values(), truth.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench;
    use proptest::prelude::*;

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(chi_square(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!((chi_square(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(chi_square(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(chi_square(&[1.0], &[0.5, 0.5]), Err(MetricsError::LengthMismatch(1, 2)));
    }

    #[test]
    fn uniform_against_bv() {
        let n = 6;
        let c = bench::gen_bv(n, "10110").unwrap();
        let size = 1usize << n;
        let uniform = ProbabilityVector::new(vec![1.0 / size as f64; size]);
        let report = oracle_compare(&c, &uniform).unwrap();
        // one state with mass 1 and 2^n - 1 empty ones
        let u = 1.0 / size as f64;
        let expected = (1.0 - u).powi(2) / (1.0 + u) + (size - 1) as f64 * u;
        assert!((report.chi_square - expected).abs() < 1e-12);
        assert!((report.l_inf - (1.0 - u)).abs() < 1e-12);
    }

    #[test]
    fn oracle_identity_and_errors() {
        let c = bench::five_qubit_example();
        let truth = crate::sim::statevector(&c).unwrap();
        let r = oracle_compare(&c, &truth).unwrap();
        assert_eq!(r.chi_square, 0.0);
        assert!(r.notes.is_empty());
        let short = ProbabilityVector::new(vec![0.5, 0.5]);
        assert!(matches!(oracle_compare(&c, &short), Err(MetricsError::LengthMismatch(2, 32))));
        assert!(matches!(
            oracle_compare_with_limit(&c, &truth, 4),
            Err(MetricsError::Sim(SimError::TooManyQubits { .. }))
        ));
    }

    #[test]
    fn counts_normalize() {
        assert_eq!(normalize_counts(&[1, 3]), vec![0.25, 0.75]);
        assert_eq!(normalize_counts(&[0, 0]), vec![0.0, 0.0]);
    }

    fn prob_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..64).prop_flat_map(|len| {
            let v = || proptest::collection::vec(0.0f64..1.0, len).prop_map(|v| {
                let s: f64 = v.iter().sum();
                if s == 0.0 { v } else { v.iter().map(|x| x / s).collect() }
            });
            (v(), v())
        })
    }

    proptest! {
        #[test]
        fn chi_square_symmetric_and_bounded((a, b) in prob_pair()) {
            let ab = chi_square(&a, &b).unwrap();
            let ba = chi_square(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
            if ab == 0.0 {
                prop_assert_eq!(l_inf(&a, &b).unwrap(), 0.0);
            }
            prop_assert!(total_variation(&a, &b).unwrap() <= 1.0 + 1e-12);
        }
    }
}
