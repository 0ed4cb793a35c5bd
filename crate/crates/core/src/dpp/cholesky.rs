use nalgebra::DMatrix;
use rand::Rng;

use super::{categorical, RESIDUAL_FLOOR};

/// Sequential sampling on the marginal kernel `K = V Vᵀ` of an elementary
/// DPP.
///
/// The diagonal of `K` holds each item's inclusion probability. After item
/// `i` is drawn, conditioning on it is the rank-one downdate
/// `K ← K − K[:,i] K[i,:] / K[i,i]` (one step of an outer-product Cholesky
/// factorization), and the next item is drawn from the updated diagonal.
/// Each step costs `O(N²)`.
pub(super) fn project<R: Rng + ?Sized>(basis: &[Vec<f64>], n: usize, rng: &mut R) -> Vec<usize> {
    let k = basis.len();
    let mut marginal = DMatrix::from_fn(n, n, |i, j| basis.iter().map(|c| c[i] * c[j]).sum::<f64>());
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let d = marginal[(i, i)];
                if d < RESIDUAL_FLOOR || picked.contains(&i) {
                    0.0
                } else {
                    d
                }
            })
            .collect();
        let Some(item) = categorical(&weights, rng) else {
            break;
        };
        picked.push(item);

        let pivot = marginal[(item, item)];
        let col = marginal.column(item).clone_owned();
        marginal.ger(-1.0 / pivot, &col, &col, 1.0);
    }
    picked
}
