use crate::error::{Error, Result};

/// Elementary symmetric polynomials of a prefix-growing eigenvalue list.
///
/// `get(n, k)` is `e_k(λ_1, ..., λ_n)`: the sum over all size-`k` subsets of
/// the first `n` eigenvalues of their product.
#[derive(Debug, Clone, PartialEq)]
pub struct EspTable {
    table: Vec<Vec<f64>>,
}

impl EspTable {
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.table[n][k]
    }

    /// Number of eigenvalues `N`.
    pub fn n(&self) -> usize {
        self.table.len() - 1
    }

    pub fn k_max(&self) -> usize {
        self.table[0].len() - 1
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.table
    }
}

/// Fill the `(N+1) × (k_max+1)` table with
/// `e_k(1..n) = e_k(1..n-1) + λ_n e_{k-1}(1..n-1)`.
///
/// ```
/// let t = dppselect::dpp::esp(&[2.0, 3.0, 5.0], 2).unwrap();
/// assert_eq!(t.get(3, 2), 31.0);
/// ```
pub fn esp(eigenvalues: &[f64], k_max: usize) -> Result<EspTable> {
    let n = eigenvalues.len();
    if k_max > n {
        return Err(Error::InvalidBudget { k: k_max, n });
    }
    if let Some(&bad) = eigenvalues.iter().find(|&&l| l.is_nan() || l < 0.0) {
        return Err(Error::NegativeEigenvalue(bad));
    }
    let mut table = vec![vec![0.0; k_max + 1]; n + 1];
    table[0][0] = 1.0;
    for i in 1..=n {
        let lambda = eigenvalues[i - 1];
        table[i][0] = 1.0;
        for k in 1..=k_max.min(i) {
            table[i][k] = table[i - 1][k] + lambda * table[i - 1][k - 1];
        }
    }
    Ok(EspTable { table })
}
