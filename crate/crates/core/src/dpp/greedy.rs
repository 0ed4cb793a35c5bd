use super::{SamplerKind, SubsetSample, RANK_RELATIVE_TOLERANCE};
use crate::error::{Error, Result};
use crate::kernel::QualityDiversityKernel;

/// Greedy approximation of `argmax_{|S|=k} det(L_S)`.
///
/// Keeps an incremental Cholesky factor of `L_S`: `gains[i]` is the squared
/// pivot item `i` would get next, which equals `det(L_{S+i}) / det(L_S)`.
/// Each round picks the largest gain (lowest index on ties) and updates the
/// remaining gains in `O(N |S|)`.
///
/// Fails with [`Error::RankDeficient`] if every remaining gain falls below
/// the rank tolerance before `k` items are chosen.
pub fn greedy_map(kernel: &QualityDiversityKernel, k: usize) -> Result<SubsetSample> {
    let n = kernel.len();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { k, n });
    }
    let scale = (0..n).map(|i| kernel.get(i, i)).fold(0.0, f64::max);
    let floor = RANK_RELATIVE_TOLERANCE * scale;

    let mut gains: Vec<f64> = (0..n).map(|i| kernel.get(i, i)).collect();
    let mut factor: Vec<Vec<f64>> = vec![Vec::with_capacity(k); n];
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; n];

    while chosen.len() < k {
        let mut best: Option<usize> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            if best.is_none_or(|b| gains[i] > gains[b]) {
                best = Some(i);
            }
        }
        let j = best.expect("k <= n leaves a candidate");
        if gains[j] <= floor {
            return Err(Error::RankDeficient {
                rank: chosen.len(),
                k,
            });
        }
        taken[j] = true;
        chosen.push(j);

        let pivot = gains[j].sqrt();
        let row_j = factor[j].clone();
        for i in (0..n).filter(|&i| !taken[i]) {
            let partial: f64 = row_j.iter().zip(&factor[i]).map(|(a, b)| a * b).sum();
            let e = (kernel.get(j, i) - partial) / pivot;
            factor[i].push(e);
            gains[i] -= e * e;
        }
    }
    Ok(SubsetSample::new(kernel, chosen, SamplerKind::GreedyMap))
}
