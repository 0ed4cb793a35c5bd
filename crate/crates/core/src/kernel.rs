//! Quality-diversity kernels.
//!
//! For a stream with clamped relevance `s` and unit embeddings `e`, the kernel
//! is `L[i][j] = s[i] * <e_i, e_j> * s[j]`, i.e. `D G D` with `D = diag(s)` and
//! `G` the Gram matrix. `G` is PSD and congruence preserves that, so `L` is
//! PSD up to rounding. The diagonal holds `s[i]^2`, which is what makes a
//! relevant frame more likely to be drawn; the off-diagonal terms shrink the
//! determinant of any subset containing near-duplicates.
//!
//! [`certify_psd`] checks the smallest eigenvalue against a trace-relative
//! tolerance and decides whether a diagonal jitter is needed before any
//! Cholesky factorization.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::manifest::write_f32;
use crate::scoring::RelevanceVector;
use crate::types::{dot, FrameStream, View};

/// Relative tolerance for both the PSD check and the jitter magnitude.
pub const PSD_RELATIVE_TOLERANCE: f64 = 1e-8;

/// Entry-wise tolerance for the symmetry check.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QualityDiversityKernel {
    matrix: DMatrix<f64>,
    /// `None` for kernels over a mixed pseudo-stream.
    view: Option<View>,
    jitter_applied: f64,
}

impl QualityDiversityKernel {
    /// Wrap an arbitrary square matrix, checking symmetry.
    pub fn from_matrix(matrix: DMatrix<f64>, view: Option<View>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidStream(format!(
                "kernel must be square and non-empty, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                let gap = (matrix[(i, j)] - matrix[(j, i)]).abs();
                if gap.is_nan() || gap > SYMMETRY_TOLERANCE {
                    return Err(Error::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            matrix,
            view,
            jitter_applied: 0.0,
        })
    }

    /// Row-major convenience constructor.
    ///
    /// ```
    /// use dppselect::QualityDiversityKernel;
    /// let l = QualityDiversityKernel::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    /// assert_eq!(l.len(), 2);
    /// ```
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n),
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]), None)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn view(&self) -> Option<View> {
        self.view
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Diagonal jitter to add before factorizing; zero unless certification
    /// found a numerically singular or slightly indefinite matrix.
    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// Run [`certify_psd`] and record the resulting jitter.
    pub fn certified(mut self) -> Result<(Self, PsdReport)> {
        let report = certify_psd(&self)?;
        self.jitter_applied = report.jitter;
        Ok((self, report))
    }

    /// Principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), indices.len(), |a, b| {
            self.matrix[(indices[a], indices[b])]
        })
    }

    /// Dump as a row-major little-endian `f32` matrix, the manifest format.
    pub fn write_f32(&self, path: impl AsRef<Path>) -> Result<()> {
        let n = self.len();
        write_f32(
            path.as_ref(),
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.matrix[(i, j)] as f32),
        )
    }
}

/// Build `L[i][j] = s[i] * cos(e_i, e_j) * s[j]` for one stream.
pub fn build_kernel(stream: &FrameStream, scores: &RelevanceVector) -> Result<QualityDiversityKernel> {
    if scores.len() != stream.len() {
        return Err(Error::DimensionMismatch {
            expected: stream.len(),
            found: scores.len(),
        });
    }
    if scores.scores.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::UnclampedScores);
    }
    let embeddings: Vec<&[f64]> = stream.frames().iter().map(|f| f.embedding.values()).collect();
    let mut kernel = build_from_parts(&embeddings, &scores.scores);
    kernel.view = Some(stream.view());
    Ok(kernel)
}

/// Kernel from raw rows and relevance; the caller has validated lengths.
pub(crate) fn build_from_parts(embeddings: &[&[f64]], scores: &[f64]) -> QualityDiversityKernel {
    let n = embeddings.len();
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = scores[i] * dot(embeddings[i], embeddings[j]) * scores[j];
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    QualityDiversityKernel {
        matrix,
        view: None,
        jitter_applied: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    /// `1e-8 * trace / N`.
    pub tolerance: f64,
    /// Either 0 or `tolerance`.
    pub jitter: f64,
}

/// Smallest eigenvalue of `L` and the jitter policy that follows from it.
///
/// Below `-tolerance` the matrix is rejected. Between `-tolerance` and
/// `+tolerance` it is treated as numerically singular and a jitter of
/// `tolerance` is recorded. Above that no jitter is needed.
pub fn certify_psd(kernel: &QualityDiversityKernel) -> Result<PsdReport> {
    let n = kernel.len();
    let eigen = SymmetricEigen::new(kernel.matrix.clone());
    let min_eigenvalue = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let tolerance = PSD_RELATIVE_TOLERANCE * kernel.trace().abs() / n as f64;
    if min_eigenvalue < -tolerance {
        return Err(Error::NumericalPsdViolation {
            min_eigenvalue,
            tolerance,
        });
    }
    let jitter = if min_eigenvalue < tolerance { tolerance } else { 0.0 };
    Ok(PsdReport {
        min_eigenvalue,
        tolerance,
        jitter,
    })
}
