//! Query-frame relevance, computed per view.
//!
//! Each stream is scored against the query on its own; no statistic of one
//! view ever enters the other's scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FrameStream, QueryEmbedding, View};

/// Floor applied to raw cosines before allocation and kernel construction.
pub const DEFAULT_SCORE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceVector {
    pub view: View,
    pub scores: Vec<f64>,
}

impl RelevanceVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Multiply every score by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            view: self.view,
            scores: self.scores.iter().map(|s| s * c).collect(),
        }
    }
}

/// Cosine similarity of every frame in `stream` to `query`.
pub fn score_view(stream: &FrameStream, query: &QueryEmbedding) -> Result<RelevanceVector> {
    if stream.dim() != query.dim() {
        return Err(Error::DimensionMismatch {
            expected: stream.dim(),
            found: query.dim(),
        });
    }
    let scores = stream
        .frames()
        .iter()
        .map(|f| f.embedding.cosine(&query.embedding))
        .collect();
    Ok(RelevanceVector {
        view: stream.view(),
        scores,
    })
}

/// Raise every score to at least `floor`.
pub fn clamp_scores(r: &RelevanceVector, floor: f64) -> RelevanceVector {
    RelevanceVector {
        view: r.view,
        scores: r.scores.iter().map(|&s| s.max(floor)).collect(),
    }
}
