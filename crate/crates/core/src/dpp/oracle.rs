use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::QualityDiversityKernel;

/// Most subsets [`enumerate_oracle`] will visit.
pub const ORACLE_LIMIT: u128 = 200_000;

/// Relative noise floor for principal minors, scaled by the Hadamard bound
/// `Π L_ii` of the subset.
const NEGATIVE_DET_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub indices: Vec<usize>,
    pub det: f64,
    pub probability: f64,
}

/// Exact size-k distribution, subsets in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub n: usize,
    pub k: usize,
    pub entries: Vec<OracleEntry>,
}

impl OracleTable {
    /// Probability of a sorted index set, or `None` if it is not a size-k
    /// subset of the ground set.
    pub fn probability(&self, indices: &[usize]) -> Option<f64> {
        self.entries
            .binary_search_by(|e| e.indices.as_slice().cmp(indices))
            .ok()
            .map(|i| self.entries[i].probability)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.probability).collect()
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Enumerate every size-`k` subset and normalize `det(L_S)` into
/// probabilities. Determinants come from a partially pivoted LU
/// factorization; tiny negative minors are clamped to zero.
///
/// ```
/// use dppselect::{dpp::enumerate_oracle, QualityDiversityKernel};
/// let eye = QualityDiversityKernel::from_rows(&[
///     vec![1.0, 0.0, 0.0],
///     vec![0.0, 1.0, 0.0],
///     vec![0.0, 0.0, 1.0],
/// ]).unwrap();
/// let table = enumerate_oracle(&eye, 2).unwrap();
/// assert!(table.probabilities().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
/// ```
pub fn enumerate_oracle(kernel: &QualityDiversityKernel, k: usize) -> Result<OracleTable> {
    let n = kernel.len();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { k, n });
    }
    let count = binomial(n, k);
    if count > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ORACLE_LIMIT,
        });
    }

    let mut entries = Vec::with_capacity(count as usize);
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let raw = kernel.submatrix(&subset).lu().determinant();
        let bound: f64 = subset.iter().map(|&i| kernel.get(i, i)).product();
        if raw < -NEGATIVE_DET_TOLERANCE * bound.max(f64::MIN_POSITIVE) {
            return Err(Error::NegativeDeterminant {
                indices: subset.clone(),
                det: raw,
            });
        }
        entries.push(OracleEntry {
            indices: subset.clone(),
            det: raw.max(0.0),
            probability: 0.0,
        });
        if !next_combination(&mut subset, n) {
            break;
        }
    }

    let total: f64 = entries.iter().map(|e| e.det).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::AllZeroDeterminants { k });
    }
    for e in &mut entries {
        e.probability = e.det / total;
    }
    Ok(OracleTable { n, k, entries })
}

/// Advance to the next k-combination of `0..n` in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let Some(i) = (0..k).rev().find(|&i| subset[i] < n - k + i) else {
        return false;
    };
    subset[i] += 1;
    for j in i + 1..k {
        subset[j] = subset[j - 1] + 1;
    }
    true
}
