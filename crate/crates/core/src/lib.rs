//! Query-conditioned keyframe selection over synchronized egocentric and
//! exocentric video streams.
//!
//! Given per-frame embeddings of both views and a query embedding, the
//! selector
//!
//! 1. scores every frame against the query, each view on its own
//!    ([`scoring`]),
//! 2. splits the frame budget between views in proportion to their total
//!    relevance ([`allocation`]),
//! 3. builds a quality-diversity kernel per view ([`kernel`]) and draws a
//!    fixed-size determinantal subset from it ([`dpp`]),
//! 4. merges both subsets by timestamp ([`pipeline`]).
//!
//! ```
//! use dppselect::{select, SelectConfig, synth::{generate, Structure, SynthSpec}};
//!
//! let spec = SynthSpec { n_ego: 20, n_exo: 20, dim: 16, seed: 7, structure: Structure::Random };
//! let (pair, query) = generate(&spec).unwrap();
//! let cfg = SelectConfig { total_budget: 8, ..SelectConfig::default() };
//! let out = select(&pair, &query, &cfg).unwrap();
//! assert_eq!(out.selection.entries.len(), 8);
//! ```

pub mod allocation;
pub mod cli;
pub mod dpp;
mod error;
pub mod kernel;
pub mod manifest;
pub mod pipeline;
pub mod scoring;
pub mod synth;
mod types;

pub use allocation::{hard_select, soft_allocate, BudgetSplit};
pub use dpp::{greedy_map, sample_kdpp_cholesky, sample_kdpp_exact, SamplerKind, SubsetSample};
pub use error::{Error, Result};
pub use kernel::{build_kernel, certify_psd, PsdReport, QualityDiversityKernel};
pub use manifest::{load_manifest, write_manifest, Manifest};
pub use pipeline::{merge_by_timestamp, select, Mode, SelectConfig, SelectionOutcome};
pub use scoring::{clamp_scores, score_view, RelevanceVector};
pub use types::{
    normalize, EmbeddingVector, FrameRecord, FrameStream, Query, QueryEmbedding, SelectedFrame, Selection,
    StreamPair, View,
};
