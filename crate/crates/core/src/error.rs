use std::path::PathBuf;

use crate::types::View;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} stream has no frames")]
    EmptyStream(View),

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("embedding contains a non-finite value")]
    NonFinite,

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("invalid stream: {0}")]
    InvalidStream(String),

    #[error("relevance scores must be strictly positive (clamp them first)")]
    UnclampedScores,

    #[error("budget {budget} exceeds the {available} available frames")]
    BudgetExceedsFrames { budget: usize, available: usize },

    #[error("streams are not synchronized: {n_ego} ego frames vs {n_exo} exo frames")]
    UnsynchronizedStreams { n_ego: usize, n_exo: usize },

    #[error("kernel is not symmetric: |L[{row},{col}] - L[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("kernel is not PSD: min eigenvalue {min_eigenvalue:e} below -{tolerance:e}")]
    NumericalPsdViolation { min_eigenvalue: f64, tolerance: f64 },

    #[error("negative eigenvalue {0:e} passed to the symmetric polynomial table")]
    NegativeEigenvalue(f64),

    #[error("numerical rank {rank} is below the requested subset size {k}")]
    RankDeficient { rank: usize, k: usize },

    #[error("invalid subset size {k} for a ground set of {n} items")]
    InvalidBudget { k: usize, n: usize },

    #[error("{count} subsets exceed the enumeration limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("every size-{k} principal minor is zero")]
    AllZeroDeterminants { k: usize },

    #[error("principal minor of {indices:?} is {det:e}, below the numerical-noise floor")]
    NegativeDeterminant { indices: Vec<usize>, det: f64 },

    #[error("normalizing constant of the size-{k} distribution is not representable")]
    DegenerateNormalizer { k: usize },

    #[error("index {index} out of range for {view} stream of length {len}")]
    IndexOutOfRange { view: View, index: usize, len: usize },

    #[error("{view} frame {index} selected twice")]
    DuplicateIndex { view: View, index: usize },

    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
