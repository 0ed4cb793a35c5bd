//! Domain types shared by every stage of the selector.
//!
//! Everything here is immutable once constructed, so a [`StreamPair`] can be
//! shared freely between threads scoring different queries.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm below which a vector is treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// Which camera a frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Ego,
    Exo,
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            View::Ego => f.write_str("ego"),
            View::Exo => f.write_str("exo"),
        }
    }
}

/// Scale `values` to unit L2 norm.
///
/// ```
/// let v = dppselect::normalize(&[3.0, 4.0]).unwrap();
/// assert!((v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.8).abs() < 1e-12);
/// ```
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm = l2_norm(values);
    if norm < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok(values.iter().map(|x| x / norm).collect())
}

pub(crate) fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A unit-norm embedding of a frame or a query.
///
/// Vectors decoded from a manifest remember the `f32` words they were read
/// from, so writing them back out reproduces the original file bit for bit.
#[derive(Debug, Clone)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    stored: Option<Arc<[f32]>>,
}

impl EmbeddingVector {
    /// Validate and normalize. Fails for `dim < 2`, non-finite entries, or a
    /// zero vector.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidEmbedding(format!(
                "dimension must be at least 2, got {}",
                values.len()
            )));
        }
        Ok(Self {
            values: normalize(&values)?,
            stored: None,
        })
    }

    pub fn from_f32(raw: &[f32]) -> Result<Self> {
        let mut v = Self::new(raw.iter().map(|&x| f64::from(x)).collect())?;
        v.stored = Some(raw.into());
        Ok(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Cosine similarity with another unit vector.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        dot(&self.values, &other.values)
    }

    /// Re-normalize. Idempotent up to rounding.
    pub fn normalize(&self) -> Result<Self> {
        Ok(Self {
            values: normalize(&self.values)?,
            stored: None,
        })
    }

    /// The `f32` words written to disk for this vector.
    pub fn to_f32(&self) -> Vec<f32> {
        match &self.stored {
            Some(raw) => raw.to_vec(),
            None => self.values.iter().map(|&x| x as f32).collect(),
        }
    }
}

impl PartialEq for EmbeddingVector {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub index: usize,
    /// Seconds from the start of the video.
    pub timestamp: f64,
    pub embedding: EmbeddingVector,
}

/// One view's frames in temporal order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    view: View,
    frames: Vec<FrameRecord>,
    fps: f64,
}

impl FrameStream {
    /// Checks that the stream is non-empty, indices match positions,
    /// timestamps are finite, non-negative and non-decreasing, and all
    /// embeddings share one dimension.
    pub fn new(view: View, frames: Vec<FrameRecord>, fps: f64) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidStream(format!("fps must be positive, got {fps}")));
        }
        let first = frames.first().ok_or(Error::EmptyStream(view))?;
        let dim = first.embedding.dim();
        let mut prev = 0.0;
        for (pos, frame) in frames.iter().enumerate() {
            if frame.index != pos {
                return Err(Error::InvalidStream(format!(
                    "{view} frame at position {pos} has index {}",
                    frame.index
                )));
            }
            if !(frame.timestamp.is_finite() && frame.timestamp >= 0.0) {
                return Err(Error::InvalidStream(format!(
                    "{view} frame {pos} has invalid timestamp {}",
                    frame.timestamp
                )));
            }
            if frame.timestamp < prev {
                return Err(Error::InvalidStream(format!(
                    "{view} timestamps decrease at frame {pos}"
                )));
            }
            prev = frame.timestamp;
            if frame.embedding.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: frame.embedding.dim(),
                });
            }
        }
        Ok(Self { view, frames, fps })
    }

    /// Build a stream from embeddings alone, stamping frame `i` at `i / fps`.
    pub fn from_embeddings(view: View, embeddings: Vec<EmbeddingVector>, fps: f64) -> Result<Self> {
        let frames = embeddings
            .into_iter()
            .enumerate()
            .map(|(index, embedding)| FrameRecord {
                index,
                timestamp: index as f64 / fps,
                embedding,
            })
            .collect();
        Self::new(view, frames, fps)
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn dim(&self) -> usize {
        self.frames[0].embedding.dim()
    }
}

/// Text embedding of a question.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryEmbedding {
    pub embedding: EmbeddingVector,
}

impl QueryEmbedding {
    pub fn new(embedding: EmbeddingVector) -> Self {
        Self { embedding }
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim()
    }
}

/// A query as it appears in a manifest: id, original text, and embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub embedding: QueryEmbedding,
}

/// Synchronized ego and exo streams of the same episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPair {
    ego: FrameStream,
    exo: FrameStream,
}

impl StreamPair {
    pub fn new(ego: FrameStream, exo: FrameStream) -> Result<Self> {
        if ego.view() != View::Ego || exo.view() != View::Exo {
            return Err(Error::InvalidStream(
                "stream pair must be (ego, exo) in that order".into(),
            ));
        }
        if ego.dim() != exo.dim() {
            return Err(Error::DimensionMismatch {
                expected: ego.dim(),
                found: exo.dim(),
            });
        }
        Ok(Self { ego, exo })
    }

    pub fn ego(&self) -> &FrameStream {
        &self.ego
    }

    pub fn exo(&self) -> &FrameStream {
        &self.exo
    }

    pub fn stream(&self, view: View) -> &FrameStream {
        match view {
            View::Ego => &self.ego,
            View::Exo => &self.exo,
        }
    }

    pub fn dim(&self) -> usize {
        self.ego.dim()
    }

    /// True when both views have the same number of frames.
    pub fn synchronized(&self) -> bool {
        self.ego.len() == self.exo.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedFrame {
    pub view: View,
    pub index: usize,
    pub timestamp: f64,
}

/// The merged, timestamp-ordered frame list handed to the downstream model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub entries: Vec<SelectedFrame>,
    pub total: usize,
}

impl Selection {
    pub fn indices(&self, view: View) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.view == view)
            .map(|e| e.index)
            .collect()
    }
}
