//! End-to-end selection: score each view, split the budget, sample each view
//! with its own k-DPP, and merge by timestamp.
//!
//! [`Mode::SoftAllocation`] is the full method. The other modes are the
//! ablations and baselines it is compared against.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{hard_select, soft_allocate, BudgetSplit};
use crate::dpp::{rng_from_seed, sample_with_fallback, SamplerKind, SamplerRng};
use crate::error::{Error, Result};
use crate::kernel::{build_from_parts, build_kernel, QualityDiversityKernel};
use crate::scoring::{clamp_scores, score_view, RelevanceVector, DEFAULT_SCORE_FLOOR};
use crate::types::{QueryEmbedding, SelectedFrame, Selection, StreamPair, View};

/// Frames handed to the downstream model by default.
pub const DEFAULT_BUDGET: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Relevance-proportional budget split, one k-DPP per view.
    SoftAllocation,
    /// Per-timestep winner view, one k-DPP over the winners.
    HardSelection,
    EgoOnly,
    ExoOnly,
    /// Evenly spaced frames, half the budget per view.
    Uniform,
    /// The `K` most relevant frames across both views.
    TopKRelevance,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SoftAllocation => "soft_allocation",
            Mode::HardSelection => "hard_selection",
            Mode::EgoOnly => "ego_only",
            Mode::ExoOnly => "exo_only",
            Mode::Uniform => "uniform",
            Mode::TopKRelevance => "top_k_relevance",
        }
    }

    pub fn is_dual_view(self) -> bool {
        !matches!(self, Mode::EgoOnly | Mode::ExoOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub total_budget: usize,
    pub mode: Mode,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub score_floor: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            total_budget: DEFAULT_BUDGET,
            mode: Mode::SoftAllocation,
            sampler: SamplerKind::ExactKdpp,
            seed: 0,
            score_floor: DEFAULT_SCORE_FLOOR,
        }
    }
}

impl SelectConfig {
    pub fn validate(&self) -> Result<()> {
        let min = if self.mode.is_dual_view() { 2 } else { 1 };
        if self.total_budget < min {
            return Err(Error::InvalidConfig(format!(
                "budget must be at least {min} for {:?}, got {}",
                self.mode, self.total_budget
            )));
        }
        if !(self.score_floor.is_finite() && self.score_floor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "score floor must be positive, got {}",
                self.score_floor
            )));
        }
        Ok(())
    }
}

/// Which ground set a sampled kernel was built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Ego,
    Exo,
    /// Winners of the per-timestep hard selection.
    Merged,
}

impl From<View> for TraceSource {
    fn from(v: View) -> Self {
        match v {
            View::Ego => TraceSource::Ego,
            View::Exo => TraceSource::Exo,
        }
    }
}

/// What happened inside one k-DPP draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerTrace {
    pub source: TraceSource,
    pub k: usize,
    pub n: usize,
    /// Indices into the kernel's ground set, sorted.
    pub indices: Vec<usize>,
    pub log_det: f64,
    pub min_eigenvalue: f64,
    pub jitter: f64,
    pub fallback_filled: usize,
}

/// Everything needed to audit a selection after the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: Mode,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub score_floor: f64,
    pub split: BudgetSplit,
    /// Raw cosine scores, one per frame.
    pub ego_scores: Vec<f64>,
    pub exo_scores: Vec<f64>,
    pub traces: Vec<SamplerTrace>,
}

impl Provenance {
    pub fn score(&self, view: View, index: usize) -> f64 {
        match view {
            View::Ego => self.ego_scores[index],
            View::Exo => self.exo_scores[index],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub selection: Selection,
    pub provenance: Provenance,
}

/// Generator for one ground set; each source gets its own ChaCha stream so
/// the ego draw does not depend on whether exo is sampled first.
fn rng_for(seed: u64, source: TraceSource) -> SamplerRng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(match source {
        TraceSource::Ego => 1,
        TraceSource::Exo => 2,
        TraceSource::Merged => 3,
    });
    rng
}

fn run_sampler<R: Rng + ?Sized>(
    kernel: QualityDiversityKernel,
    source: TraceSource,
    k: usize,
    kind: SamplerKind,
    rng: &mut R,
) -> Result<SamplerTrace> {
    let (kernel, report) = kernel.certified()?;
    let sample = sample_with_fallback(&kernel, k, kind, rng)?;
    Ok(SamplerTrace {
        source,
        k,
        n: kernel.len(),
        indices: sample.indices,
        log_det: sample.log_det,
        min_eigenvalue: report.min_eigenvalue,
        jitter: report.jitter,
        fallback_filled: sample.fallback_filled,
    })
}

fn sample_view(
    pair: &StreamPair,
    clamped: &RelevanceVector,
    k: usize,
    cfg: &SelectConfig,
) -> Result<Option<SamplerTrace>> {
    if k == 0 {
        return Ok(None);
    }
    let view = clamped.view;
    let kernel = build_kernel(pair.stream(view), clamped)?;
    let mut rng = rng_for(cfg.seed, view.into());
    run_sampler(kernel, view.into(), k, cfg.sampler, &mut rng).map(Some)
}

/// `count` evenly spaced indices out of `n`: `floor(i * n / count)`.
pub fn uniform_indices(n: usize, count: usize) -> Vec<usize> {
    (0..count).map(|i| i * n / count).collect()
}

/// Move any share above a view's frame count to the other view.
fn cap_split(k_ego: usize, k_exo: usize, n_ego: usize, n_exo: usize) -> BudgetSplit {
    let k = k_ego + k_exo;
    let (k_ego, k_exo) = if k_ego > n_ego {
        (n_ego, k - n_ego)
    } else if k_exo > n_exo {
        (k - n_exo, n_exo)
    } else {
        (k_ego, k_exo)
    };
    BudgetSplit {
        k_ego,
        k_exo,
        k_total: k,
    }
}

fn check_capacity(k: usize, available: usize) -> Result<()> {
    if k > available {
        return Err(Error::BudgetExceedsFrames {
            budget: k,
            available,
        });
    }
    Ok(())
}

/// Select `cfg.total_budget` frames from `pair` for `query`.
pub fn select(pair: &StreamPair, query: &QueryEmbedding, cfg: &SelectConfig) -> Result<SelectionOutcome> {
    cfg.validate()?;
    let k = cfg.total_budget;
    let (n_ego, n_exo) = (pair.ego().len(), pair.exo().len());

    let raw_ego = score_view(pair.ego(), query)?;
    let raw_exo = score_view(pair.exo(), query)?;
    let ego = clamp_scores(&raw_ego, cfg.score_floor);
    let exo = clamp_scores(&raw_exo, cfg.score_floor);

    let mut traces = Vec::new();
    let (ego_sel, exo_sel, split) = match cfg.mode {
        Mode::SoftAllocation => {
            let split = soft_allocate(&ego, &exo, k)?;
            let (ego_trace, exo_trace) = rayon::join(
                || sample_view(pair, &ego, split.k_ego, cfg),
                || sample_view(pair, &exo, split.k_exo, cfg),
            );
            let mut pick = |t: Option<SamplerTrace>| {
                t.map(|t| {
                    let idx = t.indices.clone();
                    traces.push(t);
                    idx
                })
                .unwrap_or_default()
            };
            let e = pick(ego_trace?);
            let x = pick(exo_trace?);
            (e, x, split)
        }
        Mode::HardSelection => {
            let mask = hard_select(&ego, &exo)?;
            check_capacity(k, mask.len())?;
            let rows: Vec<&[f64]> = mask
                .iter()
                .enumerate()
                .map(|(t, &v)| pair.stream(v).frames()[t].embedding.values())
                .collect();
            let scores: Vec<f64> = mask
                .iter()
                .enumerate()
                .map(|(t, &v)| match v {
                    View::Ego => ego.scores[t],
                    View::Exo => exo.scores[t],
                })
                .collect();
            let kernel = build_from_parts(&rows, &scores);
            let mut rng = rng_for(cfg.seed, TraceSource::Merged);
            let trace = run_sampler(kernel, TraceSource::Merged, k, cfg.sampler, &mut rng)?;
            let (e, x): (Vec<usize>, Vec<usize>) = trace.indices.iter().partition(|&&t| mask[t] == View::Ego);
            traces.push(trace);
            let split = BudgetSplit {
                k_ego: e.len(),
                k_exo: x.len(),
                k_total: k,
            };
            (e, x, split)
        }
        Mode::EgoOnly | Mode::ExoOnly => {
            let view = if cfg.mode == Mode::EgoOnly { View::Ego } else { View::Exo };
            let clamped = if view == View::Ego { &ego } else { &exo };
            check_capacity(k, clamped.len())?;
            let trace = sample_view(pair, clamped, k, cfg)?.expect("k >= 1");
            let idx = trace.indices.clone();
            traces.push(trace);
            match view {
                View::Ego => (idx, Vec::new(), BudgetSplit { k_ego: k, k_exo: 0, k_total: k }),
                View::Exo => (Vec::new(), idx, BudgetSplit { k_ego: 0, k_exo: k, k_total: k }),
            }
        }
        Mode::Uniform => {
            check_capacity(k, n_ego + n_exo)?;
            let split = cap_split(k.div_ceil(2), k / 2, n_ego, n_exo);
            (
                uniform_indices(n_ego, split.k_ego),
                uniform_indices(n_exo, split.k_exo),
                split,
            )
        }
        Mode::TopKRelevance => {
            check_capacity(k, n_ego + n_exo)?;
            let mut all: Vec<(View, usize, f64)> = ego
                .scores
                .iter()
                .enumerate()
                .map(|(i, &s)| (View::Ego, i, s))
                .chain(exo.scores.iter().enumerate().map(|(i, &s)| (View::Exo, i, s)))
                .collect();
            all.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
            let (mut e, mut x) = (Vec::new(), Vec::new());
            for &(v, i, _) in &all[..k] {
                match v {
                    View::Ego => e.push(i),
                    View::Exo => x.push(i),
                }
            }
            let split = BudgetSplit {
                k_ego: e.len(),
                k_exo: x.len(),
                k_total: k,
            };
            (e, x, split)
        }
    };

    let selection = merge_by_timestamp(&ego_sel, &exo_sel, pair)?;
    debug_assert_eq!(selection.total, k);
    Ok(SelectionOutcome {
        selection,
        provenance: Provenance {
            mode: cfg.mode,
            sampler: cfg.sampler,
            seed: cfg.seed,
            score_floor: cfg.score_floor,
            split,
            ego_scores: raw_ego.scores,
            exo_scores: raw_exo.scores,
            traces,
        },
    })
}

/// Run [`select`] for many queries in parallel. Results keep input order.
pub fn select_many(
    pair: &StreamPair,
    queries: &[&QueryEmbedding],
    cfg: &SelectConfig,
) -> Vec<Result<SelectionOutcome>> {
    queries.par_iter().map(|q| select(pair, q, cfg)).collect()
}

/// Interleave the chosen frames of both views by timestamp. Equal
/// timestamps put ego first, then lower index first.
pub fn merge_by_timestamp(ego_sel: &[usize], exo_sel: &[usize], pair: &StreamPair) -> Result<Selection> {
    let mut entries = Vec::with_capacity(ego_sel.len() + exo_sel.len());
    for (view, sel) in [(View::Ego, ego_sel), (View::Exo, exo_sel)] {
        let frames = pair.stream(view).frames();
        for &index in sel {
            let frame = frames.get(index).ok_or(Error::IndexOutOfRange {
                view,
                index,
                len: frames.len(),
            })?;
            entries.push(SelectedFrame {
                view,
                index,
                timestamp: frame.timestamp,
            });
        }
    }
    entries.sort_by(|a, b| {
        a.timestamp
            .total_cmp(&b.timestamp)
            .then(a.view.cmp(&b.view))
            .then(a.index.cmp(&b.index))
    });
    if let Some(w) = entries.windows(2).find(|w| w[0].view == w[1].view && w[0].index == w[1].index) {
        return Err(Error::DuplicateIndex {
            view: w[0].view,
            index: w[0].index,
        });
    }
    Ok(Selection {
        total: entries.len(),
        entries,
    })
}
