//! Concurrent dataset evaluation, engine comparison and knowledge-stream
//! sweeps.

use cook_core::evaluation::{evaluate_record, DatasetFormat, RecordEvaluation, REPORT_VERSION};
use cook_core::providers::LlmTurn;
use cook_core::registry::RegistryError;
use cook_core::{Engine, EvalRecord, EvalReport, PipelineConfig, PipelineError, Providers, Registry};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::IclBlocks;

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub engine: Engine,
    pub format: DatasetFormat,
    pub seed: u64,
    /// Records evaluated at once.
    pub jobs: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("provider outage: all {records} records failed to reach a provider; first error: {first}")]
    Outage { records: usize, first: PipelineError },
    #[error("{0}")]
    Icl(String),
    #[error(transparent)]
    Config(#[from] RegistryError),
}

pub struct EvalRun {
    pub report: EvalReport,
    /// LLM turns per record id, in dataset order.
    pub transcripts: Vec<(String, Vec<LlmTurn>)>,
}

/// RNG for record `index`: the run seed picks the key, the record index
/// picks the stream, so results do not depend on scheduling.
pub fn record_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Evaluates every record with `opts.engine`. Record failures are scored as
/// incorrect; if every record failed on an unreachable or rate-limiting
/// provider the run is aborted as an outage.
pub fn run_eval(
    records: &[EvalRecord],
    registry: &Registry,
    providers: &Providers,
    icl: &IclBlocks,
    opts: &EvalOptions,
) -> Result<EvalRun, EvalError> {
    icl.check(records).map_err(EvalError::Icl)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build().expect("thread pool");
    let evaluations: Vec<RecordEvaluation> = pool.install(|| {
        records
            .par_iter()
            .enumerate()
            .map(|(i, record)| {
                let prefix = icl.prefix_for(record).unwrap_or_default();
                let mut rng = record_rng(opts.seed, i);
                let e = evaluate_record(record, opts.engine, registry, providers, prefix, &mut rng);
                if let Some(err) = &e.error {
                    log::warn!("record {}: {err}", record.id);
                }
                if let Some(result) = &e.result {
                    for w in &result.warnings {
                        log::debug!("record {}: {w}", record.id);
                    }
                }
                e
            })
            .collect()
    });

    let outage = !evaluations.is_empty()
        && evaluations.iter().all(|e| e.error.as_ref().and_then(|err| err.provider_error()).is_some_and(|p| p.is_retryable()));
    if outage {
        let first = evaluations.into_iter().find_map(|e| e.error).expect("outage implies errors");
        return Err(EvalError::Outage { records: records.len(), first });
    }

    let transcripts = records
        .iter()
        .zip(&evaluations)
        .map(|(r, e)| (r.id.clone(), e.result.as_ref().map(|res| res.transcript.clone()).unwrap_or_default()))
        .collect();
    let report = EvalReport::build(opts.engine, opts.format, opts.seed, records, evaluations);
    Ok(EvalRun { report, transcripts })
}

/// Several engines over the same records, one section per engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub report_version: u32,
    pub comparison: Vec<EvalReport>,
}

impl ComparisonReport {
    pub fn new(comparison: Vec<EvalReport>) -> Self {
        Self { report_version: REPORT_VERSION, comparison }
    }
}

/// A knowledge-stream parameter that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamParam {
    N1,
    N2,
    N3,
}

impl StreamParam {
    pub fn apply(self, config: &mut PipelineConfig, value: u32) {
        match self {
            StreamParam::N1 => config.n1 = value,
            StreamParam::N2 => config.n2 = value,
            StreamParam::N3 => config.n3 = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: StreamParam,
    pub value: u32,
    pub report: EvalReport,
}

/// Re-runs the evaluation once per value of `param`, everything else fixed
/// (including the seed and `fact_top_k`).
pub fn sweep(
    records: &[EvalRecord],
    registry: &Registry,
    providers: &Providers,
    icl: &IclBlocks,
    opts: &EvalOptions,
    param: StreamParam,
    values: &[u32],
) -> Result<Vec<SweepPoint>, EvalError> {
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut config = registry.config().clone();
        param.apply(&mut config, value);
        let variant = registry.with_config(config)?;
        let run = run_eval(records, &variant, providers, icl, opts)?;
        points.push(SweepPoint { param, value, report: run.report });
    }
    Ok(points)
}

/// Pretty JSON with a trailing newline; identical values give identical
/// bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// One line per report: engine, record count and the headline metrics.
pub fn summary_table(reports: &[EvalReport]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let mut out = format!(
        "{:<14} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "engine", "records", "failed", "acc", "bacc", "maf", "em", "f1"
    );
    for r in reports {
        let a = &r.aggregates;
        out.push_str(&format!(
            "{:<14} {:>7} {:>8} {:>8.4} {:>8} {:>8} {:>8.4} {:>8.4}\n",
            r.engine.name(),
            a.records,
            a.failures,
            a.accuracy,
            opt(a.balanced_accuracy),
            opt(a.macro_f1),
            a.exact_match,
            a.token_f1
        ));
    }
    out
}
