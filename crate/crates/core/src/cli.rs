//! Command-line front end: `select`, `oracle` and `synth`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::allocation::BudgetSplit;
use crate::dpp::{enumerate_oracle, OracleTable, SamplerKind};
use crate::error::{Error, Result};
use crate::kernel::build_kernel;
use crate::manifest::{load_manifest, write_manifest, Manifest};
use crate::pipeline::{select_many, Mode, SamplerTrace, SelectConfig, SelectionOutcome, TraceSource, DEFAULT_BUDGET};
use crate::scoring::{clamp_scores, score_view, DEFAULT_SCORE_FLOOR};
use crate::synth::{generate_manifest, SynthSpec};
use crate::types::View;

/// Environment variable capping the worker threads used for queries.
pub const THREADS_ENV: &str = "DPPSELECT_THREADS";

pub const SELECTIONS_FILE: &str = "selections.json";
pub const SUMMARY_FILE: &str = "summary.tsv";

#[derive(Debug, Parser)]
#[command(name = "dppselect", version, about = "Query-conditioned ego/exo keyframe selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select frames for every query in a manifest.
    Select {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Soft)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = SamplerArg::Exact)]
        sampler: SamplerArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SCORE_FLOOR)]
        score_floor: f64,
        /// Output directory for selections.json and summary.tsv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the exact size-k subset distribution of one view's kernel.
    Oracle {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        k: usize,
        /// Defaults to the first query in the manifest.
        #[arg(long)]
        query_id: Option<String>,
        #[arg(long, value_enum, default_value_t = ViewArg::Ego)]
        view: ViewArg,
        #[arg(long, default_value_t = DEFAULT_SCORE_FLOOR)]
        score_floor: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic manifest.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Soft,
    Hard,
    Ego,
    Exo,
    Uniform,
    Topk,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Soft => Mode::SoftAllocation,
            ModeArg::Hard => Mode::HardSelection,
            ModeArg::Ego => Mode::EgoOnly,
            ModeArg::Exo => Mode::ExoOnly,
            ModeArg::Uniform => Mode::Uniform,
            ModeArg::Topk => Mode::TopKRelevance,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SamplerArg {
    Exact,
    Cholesky,
    Greedy,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Exact => SamplerKind::ExactKdpp,
            SamplerArg::Cholesky => SamplerKind::CholeskyApprox,
            SamplerArg::Greedy => SamplerKind::GreedyMap,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ViewArg {
    Ego,
    Exo,
}

impl From<ViewArg> for View {
    fn from(v: ViewArg) -> Self {
        match v {
            ViewArg::Ego => View::Ego,
            ViewArg::Exo => View::Exo,
        }
    }
}

/// One row of `selections.json`.
#[derive(Debug, Serialize)]
pub struct EntryRecord {
    pub view: View,
    pub index: usize,
    pub timestamp: f64,
    /// Raw cosine relevance of this frame.
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub text: String,
    pub mode: Mode,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub split: BudgetSplit,
    pub entries: Vec<EntryRecord>,
    pub samplers: Vec<SamplerTrace>,
}

#[derive(Debug, Serialize)]
pub struct SelectionsFile {
    pub embedder: Option<String>,
    pub budget: usize,
    pub mode: Mode,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub score_floor: f64,
    pub n_ego: usize,
    pub n_exo: usize,
    pub queries: Vec<QueryRecord>,
}

#[derive(Debug, Serialize)]
struct OracleFile<'a> {
    query_id: &'a str,
    view: View,
    #[serde(flatten)]
    table: OracleTable,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker threads: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Select frames for every query in `manifest`.
pub fn run_select(manifest: &Manifest, cfg: &SelectConfig) -> Result<SelectionsFile> {
    if manifest.queries.is_empty() {
        return Err(Error::MalformedManifest("manifest has no queries".into()));
    }
    cfg.validate()?;
    let queries: Vec<_> = manifest.queries.iter().map(|q| &q.embedding).collect();
    let outcomes = thread_pool()?.install(|| select_many(&manifest.pair, &queries, cfg));
    let records = manifest
        .queries
        .iter()
        .zip(outcomes)
        .map(|(q, outcome)| {
            let SelectionOutcome { selection, provenance } = outcome?;
            let entries = selection
                .entries
                .iter()
                .map(|e| EntryRecord {
                    view: e.view,
                    index: e.index,
                    timestamp: e.timestamp,
                    score: provenance.score(e.view, e.index),
                })
                .collect();
            Ok(QueryRecord {
                query_id: q.id.clone(),
                text: q.text.clone(),
                mode: provenance.mode,
                sampler: provenance.sampler,
                seed: provenance.seed,
                split: provenance.split,
                entries,
                samplers: provenance.traces,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionsFile {
        embedder: manifest.embedder.clone(),
        budget: cfg.total_budget,
        mode: cfg.mode,
        sampler: cfg.sampler,
        seed: cfg.seed,
        score_floor: cfg.score_floor,
        n_ego: manifest.pair.ego().len(),
        n_exo: manifest.pair.exo().len(),
        queries: records,
    })
}

/// Tab-separated, one line per query.
pub fn summary_tsv(file: &SelectionsFile) -> String {
    let mut out = String::from(
        "query_id\tmode\tsampler\tseed\tk_ego\tk_exo\tselected\tlog_det_ego\tlog_det_exo\tjitter\tfallback_filled\n",
    );
    for q in &file.queries {
        let log_det = |source: TraceSource| {
            q.samplers
                .iter()
                .find(|t| t.source == source)
                .map_or("-".to_string(), |t| format!("{:.6}", t.log_det))
        };
        let jitter: f64 = q.samplers.iter().map(|t| t.jitter).fold(0.0, f64::max);
        let filled: usize = q.samplers.iter().map(|t| t.fallback_filled).sum();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:e}\t{}",
            q.query_id,
            q.mode.as_str(),
            q.sampler.as_str(),
            q.seed,
            q.split.k_ego,
            q.split.k_exo,
            q.entries.len(),
            log_det(TraceSource::Ego),
            if q.mode == Mode::HardSelection {
                log_det(TraceSource::Merged)
            } else {
                log_det(TraceSource::Exo)
            },
            jitter,
            filled,
        );
    }
    out
}

/// Exact subset distribution for one view and query.
pub fn run_oracle(
    manifest: &Manifest,
    query_id: Option<&str>,
    view: View,
    k: usize,
    score_floor: f64,
) -> Result<(String, OracleTable)> {
    let query = match query_id {
        Some(id) => manifest
            .query(id)
            .ok_or_else(|| Error::InvalidConfig(format!("no query with id {id:?}")))?,
        None => manifest
            .queries
            .first()
            .ok_or_else(|| Error::MalformedManifest("manifest has no queries".into()))?,
    };
    let stream = manifest.pair.stream(view);
    let clamped = clamp_scores(&score_view(stream, &query.embedding)?, score_floor);
    let kernel = build_kernel(stream, &clamped)?;
    Ok((query.id.clone(), enumerate_oracle(&kernel, k)?))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Select {
            manifest,
            budget,
            mode,
            sampler,
            seed,
            score_floor,
            out,
        } => {
            let manifest = load_manifest(&manifest)?;
            let cfg = SelectConfig {
                total_budget: budget,
                mode: mode.into(),
                sampler: sampler.into(),
                seed,
                score_floor,
            };
            let file = run_select(&manifest, &cfg)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_text(&out.join(SELECTIONS_FILE), &(serde_json::to_string_pretty(&file)? + "\n"))?;
            write_text(&out.join(SUMMARY_FILE), &summary_tsv(&file))?;
            Ok(())
        }
        Command::Oracle {
            manifest,
            k,
            query_id,
            view,
            score_floor,
            out,
        } => {
            let manifest = load_manifest(&manifest)?;
            let (id, table) = run_oracle(&manifest, query_id.as_deref(), view.into(), k, score_floor)?;
            let text = serde_json::to_string_pretty(&OracleFile {
                query_id: &id,
                view: view.into(),
                table,
            })? + "\n";
            match out {
                Some(path) => write_text(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Synth { spec, out } => {
            let text = fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
            let spec: SynthSpec = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidSpec(format!("{}: {e}", spec.display())))?;
            write_manifest(&generate_manifest(&spec)?, &out)
        }
    }
}

/// Parse `args` (including the program name) and run. Returns the process
/// exit code: 0 on success, 1 on any selection error, 2 on bad usage.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
