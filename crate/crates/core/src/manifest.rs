//! On-disk embedding manifest.
//!
//! A manifest is a directory holding `manifest.json` plus three row-major
//! little-endian `f32` matrices (`ego.f32`, `exo.f32`, `queries.f32`), each
//! `count × dim`. The JSON carries per-frame indices and timestamps and the
//! query ids and texts; rows of the matrices line up with those lists.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    l2_norm, EmbeddingVector, FrameRecord, FrameStream, Query, QueryEmbedding, StreamPair, View,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EGO_FILE: &str = "ego.f32";
pub const EXO_FILE: &str = "exo.f32";
pub const QUERIES_FILE: &str = "queries.f32";

/// Frame rate assumed when the manifest does not state one.
pub const DEFAULT_FPS: f64 = 1.0;

const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FrameEntry {
    index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QueryEntry {
    id: String,
    #[serde(default)]
    text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestJson {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedder: Option<String>,
    ego: Vec<FrameEntry>,
    exo: Vec<FrameEntry>,
    #[serde(default)]
    queries: Vec<QueryEntry>,
}

/// A loaded manifest: the two streams and every query.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub pair: StreamPair,
    pub queries: Vec<Query>,
    /// Identifier of the model that produced the embeddings, if recorded.
    pub embedder: Option<String>,
}

impl Manifest {
    pub fn query(&self, id: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.id == id)
    }
}

/// Read and validate a manifest directory. Embeddings are re-normalized to
/// unit length; a warning is logged once if any arrived off the unit sphere.
pub fn load_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let json_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let meta: ManifestJson = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedManifest(format!("{}: {e}", json_path.display())))?;

    if meta.dim < 2 {
        return Err(Error::MalformedManifest(format!(
            "dim must be at least 2, got {}",
            meta.dim
        )));
    }
    let fps = meta.fps.unwrap_or(DEFAULT_FPS);
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::MalformedManifest(format!("fps must be positive, got {fps}")));
    }

    let mut off_unit = false;
    let mut load_stream = |view: View, entries: &[FrameEntry], file: &str| -> Result<FrameStream> {
        if entries.is_empty() {
            return Err(Error::EmptyStream(view));
        }
        let rows = read_matrix(&dir.join(file), entries.len(), meta.dim)?;
        let frames = entries
            .iter()
            .zip(rows)
            .map(|(entry, row)| {
                off_unit |= is_off_unit(&row);
                Ok(FrameRecord {
                    index: entry.index,
                    timestamp: entry.timestamp.unwrap_or(entry.index as f64 / fps),
                    embedding: EmbeddingVector::from_f32(&row)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FrameStream::new(view, frames, fps)
            .map_err(|e| match e {
                Error::InvalidStream(msg) => Error::MalformedManifest(msg),
                other => other,
            })
    };

    let ego = load_stream(View::Ego, &meta.ego, EGO_FILE)?;
    let exo = load_stream(View::Exo, &meta.exo, EXO_FILE)?;

    let queries = if meta.queries.is_empty() {
        Vec::new()
    } else {
        let rows = read_matrix(&dir.join(QUERIES_FILE), meta.queries.len(), meta.dim)?;
        meta.queries
            .iter()
            .zip(rows)
            .map(|(entry, row)| {
                off_unit |= is_off_unit(&row);
                Ok(Query {
                    id: entry.id.clone(),
                    text: entry.text.clone(),
                    embedding: QueryEmbedding::new(EmbeddingVector::from_f32(&row)?),
                })
            })
            .collect::<Result<Vec<_>>>()?
    };

    if off_unit {
        log::warn!(
            "{}: embeddings are not unit-norm; normalizing",
            dir.display()
        );
    }

    Ok(Manifest {
        pair: StreamPair::new(ego, exo)?,
        queries,
        embedder: meta.embedder,
    })
}

/// Write a manifest directory, creating it if needed.
pub fn write_manifest(manifest: &Manifest, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pair = &manifest.pair;
    let entries = |stream: &FrameStream| -> Vec<FrameEntry> {
        stream
            .frames()
            .iter()
            .map(|f| FrameEntry {
                index: f.index,
                timestamp: Some(f.timestamp),
            })
            .collect()
    };
    let meta = ManifestJson {
        dim: pair.dim(),
        fps: Some(pair.ego().fps()),
        embedder: manifest.embedder.clone(),
        ego: entries(pair.ego()),
        exo: entries(pair.exo()),
        queries: manifest
            .queries
            .iter()
            .map(|q| QueryEntry {
                id: q.id.clone(),
                text: q.text.clone(),
            })
            .collect(),
    };
    let json_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;

    write_matrix(&dir.join(EGO_FILE), pair.ego().frames().iter().map(|f| &f.embedding))?;
    write_matrix(&dir.join(EXO_FILE), pair.exo().frames().iter().map(|f| &f.embedding))?;
    write_matrix(
        &dir.join(QUERIES_FILE),
        manifest.queries.iter().map(|q| &q.embedding.embedding),
    )?;
    Ok(())
}

fn is_off_unit(row: &[f32]) -> bool {
    let v: Vec<f64> = row.iter().map(|&x| f64::from(x)).collect();
    (l2_norm(&v) - 1.0).abs() > UNIT_NORM_TOLERANCE
}

/// Read a `rows × dim` little-endian `f32` matrix, one `Vec` per row.
pub fn read_matrix(path: &Path, rows: usize, dim: usize) -> Result<Vec<Vec<f32>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::MalformedManifest(format!(
            "{}: {} bytes is not a whole number of f32 words",
            path.display(),
            bytes.len()
        )));
    }
    let words = bytes.len() / 4;
    if rows == 0 || words % rows != 0 {
        return Err(Error::MalformedManifest(format!(
            "{}: {words} floats cannot be split into {rows} rows",
            path.display()
        )));
    }
    let found = words / rows;
    if found != dim {
        return Err(Error::DimensionMismatch { expected: dim, found });
    }
    let floats: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(floats.chunks_exact(dim).map(<[f32]>::to_vec).collect())
}

/// Write row-major little-endian `f32` data.
pub fn write_f32(path: &Path, values: impl IntoIterator<Item = f32>) -> Result<()> {
    let bytes: Vec<u8> = values.into_iter().flat_map(f32::to_le_bytes).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_matrix<'a>(path: &Path, rows: impl Iterator<Item = &'a EmbeddingVector>) -> Result<()> {
    write_f32(path, rows.flat_map(|e| e.to_f32()))
}
