//! Test-only oracles and fixtures. Nothing here calls into the code under
//! test for the quantity it is checking.

#![allow(dead_code)]

use std::collections::HashMap;

use dppselect::dpp::OracleTable;
use dppselect::{build_kernel, EmbeddingVector, FrameStream, QualityDiversityKernel, RelevanceVector, View};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn stream_of(view: View, rows: &[Vec<f64>]) -> FrameStream {
    let embeddings = rows.iter().map(|r| EmbeddingVector::new(r.clone()).unwrap()).collect();
    FrameStream::from_embeddings(view, embeddings, 1.0).unwrap()
}

/// Random quality-diversity kernel: `n` unit embeddings in `dim` dimensions
/// and scores drawn from `[0.1, 1)`.
pub fn random_kernel<R: Rng>(rng: &mut R, n: usize, dim: usize) -> QualityDiversityKernel {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_unit(rng, dim)).collect();
    let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    build_kernel(
        &stream_of(View::Ego, &rows),
        &RelevanceVector {
            view: View::Ego,
            scores,
        },
    )
    .unwrap()
}

/// Determinant by Laplace expansion along the first row.
pub fn det_cofactor(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    match idx.len() {
        0 => 1.0,
        1 => m[(idx[0], idx[0])],
        _ => {
            let row = idx[0];
            let rest = &idx[1..];
            let mut total = 0.0;
            for (j, &col) in idx.iter().enumerate() {
                let minor_cols: Vec<usize> = idx.iter().copied().filter(|&c| c != col).collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * m[(row, col)] * minor(m, rest, &minor_cols);
            }
            total
        }
    }
}

fn minor(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    let row = rows[0];
    let mut total = 0.0;
    for (j, &col) in cols.iter().enumerate() {
        let rest: Vec<usize> = cols.iter().copied().filter(|&c| c != col).collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * m[(row, col)] * minor(m, &rows[1..], &rest);
    }
    total
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Subset probabilities from cofactor determinants.
pub fn brute_force_probabilities(kernel: &QualityDiversityKernel, k: usize) -> Vec<(Vec<usize>, f64)> {
    let dets: Vec<(Vec<usize>, f64)> = subsets(kernel.len(), k)
        .into_iter()
        .map(|s| {
            let d = det_cofactor(kernel.matrix(), &s).max(0.0);
            (s, d)
        })
        .collect();
    let total: f64 = dets.iter().map(|(_, d)| d).sum();
    dets.into_iter().map(|(s, d)| (s, d / total)).collect()
}

pub fn count<I: IntoIterator<Item = Vec<usize>>>(draws: I) -> HashMap<Vec<usize>, u64> {
    let mut counts = HashMap::new();
    for mut d in draws {
        d.sort_unstable();
        *counts.entry(d).or_insert(0) += 1;
    }
    counts
}

pub fn total_variation(table: &OracleTable, counts: &HashMap<Vec<usize>, u64>, draws: u64) -> f64 {
    let mut tv = 0.0;
    for e in &table.entries {
        let observed = *counts.get(&e.indices).unwrap_or(&0) as f64 / draws as f64;
        tv += (observed - e.probability).abs();
    }
    // draws outside the table (impossible subsets) count in full
    let outside: u64 = counts
        .iter()
        .filter(|(s, _)| table.probability(s).is_none())
        .map(|(_, c)| c)
        .sum();
    0.5 * (tv + outside as f64 / draws as f64)
}

/// Pearson chi-square goodness of fit. Cells with expected count below 5 are
/// pooled. A draw in a zero-probability cell gives p = 0.
pub fn chi_square_p(table: &OracleTable, counts: &HashMap<Vec<usize>, u64>, draws: u64) -> f64 {
    let n = draws as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_e, mut pool_o) = (0.0, 0.0);
    let mut seen = 0u64;
    for e in &table.entries {
        let observed = *counts.get(&e.indices).unwrap_or(&0);
        seen += observed;
        let expected = e.probability * n;
        if expected == 0.0 && observed > 0 {
            return 0.0;
        }
        if expected < 5.0 {
            pool_e += expected;
            pool_o += observed as f64;
        } else {
            cells.push((expected, observed as f64));
        }
    }
    if seen != draws {
        return 0.0;
    }
    if pool_e > 0.0 {
        if pool_e >= 5.0 || cells.is_empty() {
            cells.push((pool_e, pool_o));
        } else {
            let smallest = cells
                .iter_mut()
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap();
            smallest.0 += pool_e;
            smallest.1 += pool_o;
        }
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let stat: f64 = cells.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dist = ChiSquared::new((cells.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// Largest log-determinant over all size-k subsets.
pub fn exhaustive_max_log_det(kernel: &QualityDiversityKernel, k: usize) -> f64 {
    subsets(kernel.len(), k)
        .iter()
        .map(|s| det_cofactor(kernel.matrix(), s))
        .fold(f64::NEG_INFINITY, f64::max)
        .ln()
}
