//! Size-k determinantal point process sampling.
//!
//! A k-DPP over `N` items with kernel `L` draws a subset `S` with `|S| = k`
//! and probability proportional to `det(L_S)`. Three samplers are provided:
//!
//! * [`sample_kdpp_exact`]: eigendecompose `L`, pick `k` eigenvectors using
//!   elementary symmetric polynomial ratios, then run the projection sampler
//!   on their span with explicit re-orthonormalization.
//! * [`sample_kdpp_cholesky`]: same eigenvector stage, but the projection
//!   phase walks the `N × N` marginal kernel with one rank-one Cholesky
//!   downdate per pick, `O(N²)` each and `O(N²k)` overall.
//! * [`greedy_map`]: deterministic, adds the item with the largest
//!   log-determinant gain.
//!
//! [`enumerate_oracle`] computes the exact distribution by brute force and is
//! what the samplers are tested against.

mod cholesky;
mod esp;
mod exact;
mod greedy;
mod oracle;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::QualityDiversityKernel;

pub use esp::{esp, EspTable};
pub use greedy::greedy_map;
pub use oracle::{enumerate_oracle, OracleEntry, OracleTable, ORACLE_LIMIT};

/// Eigenvalues below this fraction of the largest count as zero.
pub const RANK_RELATIVE_TOLERANCE: f64 = 1e-10;

/// Residual marginal mass below which an item is treated as unreachable.
const RESIDUAL_FLOOR: f64 = 1e-12;

/// The portable generator every sampler draws from.
pub type SamplerRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    ExactKdpp,
    CholeskyApprox,
    GreedyMap,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::ExactKdpp => "exact_kdpp",
            SamplerKind::CholeskyApprox => "cholesky_approx",
            SamplerKind::GreedyMap => "greedy_map",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSample {
    /// Sorted ascending.
    pub indices: Vec<usize>,
    pub size: usize,
    /// `log det(L_S)`, `-inf` when the subset is singular.
    pub log_det: f64,
    pub mode: SamplerKind,
    /// Trailing entries of `indices` chosen by the relevance fill rather than
    /// the sampler (see [`sample_with_fallback`]).
    pub fallback_filled: usize,
}

impl SubsetSample {
    fn new(kernel: &QualityDiversityKernel, mut indices: Vec<usize>, mode: SamplerKind) -> Self {
        indices.sort_unstable();
        Self {
            size: indices.len(),
            log_det: log_det(kernel, &indices),
            indices,
            mode,
            fallback_filled: 0,
        }
    }
}

/// `log det(L_S)` via a Cholesky factorization of `L_S + jitter·I`.
pub fn log_det(kernel: &QualityDiversityKernel, indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let mut sub = kernel.submatrix(indices);
    for i in 0..indices.len() {
        sub[(i, i)] += kernel.jitter_applied();
    }
    match sub.cholesky() {
        Some(c) => 2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    }
}

/// Eigendecomposition of a kernel with the eigenvalues that fall below the
/// rank tolerance (or are slightly negative) set to zero.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub rank: usize,
}

impl Spectrum {
    pub fn of(kernel: &QualityDiversityKernel) -> Self {
        let eigen = SymmetricEigen::new(kernel.matrix().clone());
        let max = eigen.eigenvalues.iter().copied().fold(0.0, f64::max);
        let cutoff = RANK_RELATIVE_TOLERANCE * max;
        let eigenvalues: Vec<f64> = eigen
            .eigenvalues
            .iter()
            .map(|&l| if l > cutoff { l } else { 0.0 })
            .collect();
        let rank = eigenvalues.iter().filter(|&&l| l > 0.0).count();
        Self {
            eigenvalues,
            eigenvectors: eigen.eigenvectors,
            rank,
        }
    }
}

/// Precomputed state for repeated k-DPP draws from one kernel.
#[derive(Debug, Clone)]
pub struct KdppSampler {
    k: usize,
    spectrum: Spectrum,
    table: EspTable,
}

impl KdppSampler {
    pub fn new(kernel: &QualityDiversityKernel, k: usize) -> Result<Self> {
        let n = kernel.len();
        if k == 0 || k > n {
            return Err(Error::InvalidBudget { k, n });
        }
        let spectrum = Spectrum::of(kernel);
        if spectrum.rank < k {
            return Err(Error::RankDeficient {
                rank: spectrum.rank,
                k,
            });
        }
        // k-DPP probabilities are invariant to scaling L, so normalize the
        // spectrum to keep e_k away from underflow.
        let max = spectrum.eigenvalues.iter().copied().fold(0.0, f64::max);
        let scaled: Vec<f64> = spectrum.eigenvalues.iter().map(|l| l / max).collect();
        let table = esp(&scaled, k)?;
        let total = table.get(n, k);
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::DegenerateNormalizer { k });
        }
        Ok(Self {
            k,
            spectrum: Spectrum {
                eigenvalues: scaled,
                ..spectrum
            },
            table,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.spectrum.eigenvalues.len()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Choose `k` eigenvectors: walking from the last eigenvalue down,
    /// include eigenvector `n` with probability
    /// `λ_n e_{l-1}(1..n-1) / e_l(1..n)` where `l` is the number still needed.
    pub fn select_eigenvectors<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut remaining = self.k;
        let mut chosen = Vec::with_capacity(self.k);
        for n in (1..=self.n()).rev() {
            if remaining == 0 {
                break;
            }
            let lambda = self.spectrum.eigenvalues[n - 1];
            let p = lambda * self.table.get(n - 1, remaining - 1) / self.table.get(n, remaining);
            if rng.random::<f64>() < p {
                chosen.push(n - 1);
                remaining -= 1;
            }
        }
        chosen
    }

    /// Orthonormal columns spanning the chosen eigenvectors, as one `Vec` per
    /// column.
    fn basis(&self, chosen: &[usize]) -> Vec<Vec<f64>> {
        chosen
            .iter()
            .map(|&c| self.spectrum.eigenvectors.column(c).iter().copied().collect())
            .collect()
    }

    pub fn draw_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let chosen = self.select_eigenvectors(rng);
        exact::project(self.basis(&chosen), rng)
    }

    pub fn draw_cholesky<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let chosen = self.select_eigenvectors(rng);
        cholesky::project(&self.basis(&chosen), self.n(), rng)
    }
}

/// Draw index `i` with probability `weights[i] / Σ weights`.
fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if acc > target {
                return Some(i);
            }
        }
    }
    last
}

/// Exact k-DPP draw. Same `(kernel, k, seed)` always gives the same subset.
pub fn sample_kdpp_exact(kernel: &QualityDiversityKernel, k: usize, seed: u64) -> Result<SubsetSample> {
    draw(kernel, k, SamplerKind::ExactKdpp, &mut rng_from_seed(seed))
}

/// k-DPP draw through sequential rank-one downdates of the marginal kernel.
pub fn sample_kdpp_cholesky(kernel: &QualityDiversityKernel, k: usize, seed: u64) -> Result<SubsetSample> {
    draw(kernel, k, SamplerKind::CholeskyApprox, &mut rng_from_seed(seed))
}

/// One draw with the requested sampler. `GreedyMap` ignores `rng`.
pub fn draw<R: Rng + ?Sized>(
    kernel: &QualityDiversityKernel,
    k: usize,
    kind: SamplerKind,
    rng: &mut R,
) -> Result<SubsetSample> {
    let indices = match kind {
        SamplerKind::ExactKdpp => KdppSampler::new(kernel, k)?.draw_exact(rng),
        SamplerKind::CholeskyApprox => KdppSampler::new(kernel, k)?.draw_cholesky(rng),
        SamplerKind::GreedyMap => return greedy_map(kernel, k),
    };
    Ok(SubsetSample::new(kernel, indices, kind))
}

/// [`draw`], but when the kernel's numerical rank `r` is below `k`, draw `r`
/// items and fill the remaining `k - r` slots with the unselected items of
/// largest diagonal (largest relevance), ties to the lowest index.
pub fn sample_with_fallback<R: Rng + ?Sized>(
    kernel: &QualityDiversityKernel,
    k: usize,
    kind: SamplerKind,
    rng: &mut R,
) -> Result<SubsetSample> {
    let rank = match draw(kernel, k, kind, rng) {
        Err(Error::RankDeficient { rank, .. }) => rank,
        other => return other,
    };
    let mut picked = if rank > 0 {
        draw(kernel, rank, kind, rng)?.indices
    } else {
        Vec::new()
    };
    let mut rest: Vec<usize> = (0..kernel.len()).filter(|i| !picked.contains(i)).collect();
    rest.sort_by(|&a, &b| kernel.get(b, b).total_cmp(&kernel.get(a, a)).then(a.cmp(&b)));
    let fill = k - picked.len();
    picked.extend(rest.into_iter().take(fill));
    let mut sample = SubsetSample::new(kernel, picked, kind);
    sample.fallback_filled = fill;
    Ok(sample)
}
