use rand::Rng;

use super::{categorical, RESIDUAL_FLOOR};
use crate::types::dot;

/// Projection-DPP sampling on the span of orthonormal `basis` columns.
///
/// Each round draws an item with probability proportional to the squared
/// norm of its row, then restricts the basis to the subspace orthogonal to
/// that item's coordinate vector and re-orthonormalizes.
pub(super) fn project<R: Rng + ?Sized>(mut basis: Vec<Vec<f64>>, rng: &mut R) -> Vec<usize> {
    let n = basis.first().map_or(0, Vec::len);
    let mut picked = Vec::with_capacity(basis.len());
    while !basis.is_empty() {
        let cols = basis.len() as f64;
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let w = basis.iter().map(|c| c[i] * c[i]).sum::<f64>() / cols;
                if w < RESIDUAL_FLOOR || picked.contains(&i) {
                    0.0
                } else {
                    w
                }
            })
            .collect();
        let Some(item) = categorical(&weights, rng) else {
            break;
        };
        picked.push(item);

        let pivot_col = (0..basis.len())
            .max_by(|&a, &b| basis[a][item].abs().total_cmp(&basis[b][item].abs()))
            .expect("basis is non-empty");
        let pivot = basis.swap_remove(pivot_col);
        for col in &mut basis {
            let f = col[item] / pivot[item];
            for (c, p) in col.iter_mut().zip(&pivot) {
                *c -= f * p;
            }
            col[item] = 0.0;
        }
        gram_schmidt(&mut basis);
    }
    picked
}

/// Modified Gram-Schmidt in place; columns that collapse to zero are dropped.
fn gram_schmidt(cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut v in cols.drain(..) {
        for q in &out {
            let proj = dot(&v, q);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= proj * y;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    *cols = out;
}
