//! Deterministic synthetic stream pairs.
//!
//! Random directions are normalized standard-normal draws. Frames are stamped
//! at 1 fps. Every structure carries a contract that tests can check
//! exhaustively:
//!
//! | structure          | contract                                                    |
//! |--------------------|-------------------------------------------------------------|
//! | `random`           | i.i.d. uniform directions                                   |
//! | `clustered`        | `c` contiguous segments per view, intra-cluster cosine ≥ 0.95 |
//! | `duplicate_run`    | consecutive runs of identical embeddings                   |
//! | `planted_relevant` | one ego frame equals the query; exo frames have \|cos\| ≤ 0.05 |

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::types::{dot, EmbeddingVector, FrameStream, Query, QueryEmbedding, StreamPair, View};

/// Largest angle between a cluster member and its center. Two members are
/// then at most `2 * 0.15` rad apart, and `cos(0.3) ≈ 0.955`.
const CLUSTER_MAX_ANGLE: f64 = 0.15;

/// Bound on `|cos|` between exo frames and the query in `planted_relevant`.
pub const PLANTED_EXO_MAX_COSINE: f64 = 0.05;

const SYNTH_FPS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    Random,
    Clustered { clusters: usize },
    DuplicateRun { run_length: usize },
    PlantedRelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_ego: usize,
    pub n_exo: usize,
    pub dim: usize,
    pub seed: u64,
    pub structure: Structure,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_ego == 0 || self.n_exo == 0 {
            return Err(Error::InvalidSpec("frame counts must be positive".into()));
        }
        if self.dim < 2 {
            return Err(Error::InvalidSpec(format!("dim must be at least 2, got {}", self.dim)));
        }
        match self.structure {
            Structure::Clustered { clusters } if clusters == 0 || clusters > self.n_ego.min(self.n_exo) => {
                Err(Error::InvalidSpec(format!(
                    "cluster count {clusters} must be in 1..={}",
                    self.n_ego.min(self.n_exo)
                )))
            }
            Structure::DuplicateRun { run_length: 0 } => {
                Err(Error::InvalidSpec("run length must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = crate::types::normalize(&v) {
            return u;
        }
    }
}

/// Random unit vector orthogonal to the unit vector `u`.
fn random_orthogonal(rng: &mut ChaCha8Rng, u: &[f64]) -> Vec<f64> {
    loop {
        let mut v = random_unit(rng, u.len());
        let p = dot(&v, u);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
        if let Ok(w) = crate::types::normalize(&v) {
            if w.iter().map(|x| x * x).sum::<f64>() > 0.5 {
                return w;
            }
        }
    }
}

/// `cos(angle) * u + sin(angle) * w` for a random `w ⟂ u`.
fn rotate_away(rng: &mut ChaCha8Rng, u: &[f64], angle: f64) -> Vec<f64> {
    let w = random_orthogonal(rng, u);
    u.iter().zip(&w).map(|(a, b)| angle.cos() * a + angle.sin() * b).collect()
}

fn embed(v: Vec<f64>) -> EmbeddingVector {
    EmbeddingVector::new(v).expect("generated vectors are unit and finite")
}

fn view_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, structure: Structure) -> Vec<Vec<f64>> {
    match structure {
        Structure::Random | Structure::PlantedRelevant => (0..n).map(|_| random_unit(rng, dim)).collect(),
        Structure::Clustered { clusters } => {
            let centers: Vec<Vec<f64>> = (0..clusters).map(|_| random_unit(rng, dim)).collect();
            (0..n)
                .map(|i| {
                    let angle = rng.random_range(0.0..CLUSTER_MAX_ANGLE);
                    rotate_away(rng, &centers[cluster_of(i, n, clusters)], angle)
                })
                .collect()
        }
        Structure::DuplicateRun { run_length } => {
            let runs = n.div_ceil(run_length);
            let bases: Vec<Vec<f64>> = (0..runs).map(|_| random_unit(rng, dim)).collect();
            (0..n).map(|i| bases[i / run_length].clone()).collect()
        }
    }
}

/// Cluster id of frame `i` in a view of `n` frames with `clusters` clusters.
pub fn cluster_of(i: usize, n: usize, clusters: usize) -> usize {
    i * clusters / n
}

/// Build the stream pair and query described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<(StreamPair, QueryEmbedding)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let query = random_unit(&mut rng, spec.dim);

    let mut ego = view_rows(&mut rng, spec.n_ego, spec.dim, spec.structure);
    let exo = match spec.structure {
        Structure::PlantedRelevant => {
            let at = rng.random_range(0..spec.n_ego);
            ego[at] = query.clone();
            (0..spec.n_exo)
                .map(|_| {
                    let c = rng.random_range(-PLANTED_EXO_MAX_COSINE..=PLANTED_EXO_MAX_COSINE);
                    rotate_away(&mut rng, &query, c.acos())
                })
                .collect()
        }
        other => view_rows(&mut rng, spec.n_exo, spec.dim, other),
    };

    let stream = |view, rows: Vec<Vec<f64>>| {
        FrameStream::from_embeddings(view, rows.into_iter().map(embed).collect(), SYNTH_FPS)
    };
    let pair = StreamPair::new(stream(View::Ego, ego)?, stream(View::Exo, exo)?)?;
    Ok((pair, QueryEmbedding::new(embed(query))))
}

/// [`generate`] packaged as a one-query manifest.
pub fn generate_manifest(spec: &SynthSpec) -> Result<Manifest> {
    let (pair, query) = generate(spec)?;
    Ok(Manifest {
        pair,
        queries: vec![Query {
            id: "q0".into(),
            text: format!("synthetic query (seed {})", spec.seed),
            embedding: query,
        }],
        embedder: Some("synth".into()),
    })
}
