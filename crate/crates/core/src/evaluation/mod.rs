//! Dataset records, scoring and the aggregated evaluation report.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::integration::prompt::choice_letters;
use crate::integration::{run_engine, AnswerFormat, Engine, Gate, IntegrationResult, PipelineError, QueryTask};
use crate::providers::Providers;
use crate::registry::Registry;

pub mod metrics;

pub use metrics::{balanced_accuracy, exact_match, macro_f1, normalize_answer, token_f1, MetricError};

pub const REPORT_VERSION: u32 = 1;
pub const HISTOGRAM_BUCKETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Lettered choices, gold is a letter.
    MultipleChoice,
    /// Free-text answer scored by EM and token F1.
    OpenBook,
    /// Free-text label compared after normalization.
    Classification,
}

impl DatasetFormat {
    pub fn name(self) -> &'static str {
        match self {
            DatasetFormat::MultipleChoice => "multiple_choice",
            DatasetFormat::OpenBook => "open_book",
            DatasetFormat::Classification => "classification",
        }
    }

    /// Whether balanced accuracy and macro-F1 are meaningful.
    pub fn is_labelled(self) -> bool {
        !matches!(self, DatasetFormat::OpenBook)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRecord {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub gold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub icl_group: Option<String>,
}

impl EvalRecord {
    pub fn validate(&self, format: DatasetFormat) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id must be non-empty".into());
        }
        if self.question.trim().is_empty() {
            return Err("question must be non-empty".into());
        }
        match (&self.choices, format) {
            (Some(choices), _) => {
                if choices.len() < 2 || choices.len() > 26 {
                    return Err(alloc::format!("expected 2 to 26 choices, got {}", choices.len()));
                }
                let letters: Vec<String> = choice_letters(choices.len()).map(String::from).collect();
                if !letters.contains(&self.gold) {
                    return Err(alloc::format!(
                        "gold `{}` is not a choice letter (A..{})",
                        self.gold,
                        letters[letters.len() - 1]
                    ));
                }
            }
            (None, DatasetFormat::MultipleChoice) => return Err("multiple_choice records need choices".into()),
            (None, _) => {
                if self.gold.trim().is_empty() {
                    return Err("gold must be non-empty".into());
                }
            }
        }
        Ok(())
    }

    pub fn task(&self, icl_prefix: &str) -> QueryTask {
        QueryTask {
            question: self.question.clone(),
            icl_prefix: icl_prefix.into(),
            answer_format: match &self.choices {
                Some(c) => AnswerFormat::MultipleChoice(c.clone()),
                None => AnswerFormat::FreeText,
            },
            stop_sequences: alloc::vec!["\n".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    pub prediction: String,
    pub gold: String,
    pub correct: bool,
    pub exact_match: f64,
    pub token_f1: f64,
    /// Reply to the first gate (top-down engines).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_gate: Option<Gate>,
    /// Cards that contributed the knowledge in the final prompt.
    pub knowledge_cards: Vec<String>,
    pub llm_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Rows are the first gate reply, columns the final correctness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesNoConfusion {
    pub yes_correct: u64,
    pub yes_incorrect: u64,
    pub no_correct: u64,
    pub no_incorrect: u64,
}

impl YesNoConfusion {
    pub fn total(&self) -> u64 {
        self.yes_correct + self.yes_incorrect + self.no_correct + self.no_incorrect
    }

    fn record(&mut self, gate: Gate, correct: bool) {
        let cell = match (gate, correct) {
            (Gate::Yes, true) => &mut self.yes_correct,
            (Gate::Yes, false) => &mut self.yes_incorrect,
            (Gate::No, true) => &mut self.no_correct,
            (Gate::No, false) => &mut self.no_incorrect,
        };
        *cell += 1;
    }

    fn merge(&mut self, other: &Self) {
        self.yes_correct += other.yes_correct;
        self.yes_incorrect += other.yes_incorrect;
        self.no_correct += other.no_correct;
        self.no_incorrect += other.no_incorrect;
    }
}

/// Counters merged across records; every field is a sum, so merge order
/// does not matter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Telemetry {
    /// Top-down knowledge requests per card.
    pub card_selection_counts: BTreeMap<String, u64>,
    pub yes_no_confusion: YesNoConfusion,
    /// Per card, counts of `s_d` in ten equal-width buckets over [0, 1].
    pub factuality_histogram: BTreeMap<String, Vec<u64>>,
    pub ambiguity_count: u64,
    pub fallback_count: u64,
    pub failure_count: u64,
}

impl Telemetry {
    pub fn merge(&mut self, other: &Telemetry) {
        for (card, n) in &other.card_selection_counts {
            *self.card_selection_counts.entry(card.clone()).or_default() += n;
        }
        self.yes_no_confusion.merge(&other.yes_no_confusion);
        for (card, buckets) in &other.factuality_histogram {
            let mine = self.factuality_histogram.entry(card.clone()).or_insert_with(|| alloc::vec![0; HISTOGRAM_BUCKETS]);
            for (a, b) in mine.iter_mut().zip(buckets) {
                *a += b;
            }
        }
        self.ambiguity_count += other.ambiguity_count;
        self.fallback_count += other.fallback_count;
        self.failure_count += other.failure_count;
    }

    pub fn knowledge_requests(&self) -> u64 {
        self.card_selection_counts.values().sum()
    }
}

pub fn histogram_bucket(score: f64) -> usize {
    let b = libm::floor(score.clamp(0.0, 1.0) * HISTOGRAM_BUCKETS as f64) as usize;
    b.min(HISTOGRAM_BUCKETS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub records: usize,
    pub failures: usize,
    pub accuracy: f64,
    /// Only for labelled formats.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balanced_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    pub exact_match: f64,
    pub token_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_version: u32,
    pub engine: Engine,
    pub format: DatasetFormat,
    pub seed: u64,
    pub aggregates: Aggregates,
    pub telemetry: Telemetry,
    pub records: Vec<RecordOutcome>,
}

/// Everything produced by one record: its outcome, its telemetry share and
/// the engine error if it failed.
#[derive(Debug, Clone)]
pub struct RecordEvaluation {
    pub outcome: RecordOutcome,
    pub telemetry: Telemetry,
    pub error: Option<PipelineError>,
    pub result: Option<IntegrationResult>,
}

/// Runs one record through `engine` and scores it. Engine failures become
/// incorrect outcomes carrying the error message.
pub fn evaluate_record(
    record: &EvalRecord,
    engine: Engine,
    registry: &Registry,
    providers: &Providers,
    icl_prefix: &str,
    rng: &mut dyn RngCore,
) -> RecordEvaluation {
    let task = record.task(icl_prefix);
    let mut telemetry = Telemetry::default();
    match run_engine(engine, &task, registry, providers, rng) {
        Ok(result) => {
            let prediction = result.answer.clone();
            let correct = is_correct(&prediction, &record.gold, record.choices.is_some());
            for sel in &result.selections {
                *telemetry.card_selection_counts.entry(sel.card_id.clone()).or_default() += 1;
                if sel.fallback {
                    telemetry.fallback_count += 1;
                }
            }
            for (card, score) in &result.scored {
                let buckets =
                    telemetry.factuality_histogram.entry(card.clone()).or_insert_with(|| alloc::vec![0; HISTOGRAM_BUCKETS]);
                buckets[histogram_bucket(*score)] += 1;
            }
            telemetry.ambiguity_count = u64::from(result.ambiguous_gates);
            if engine.is_top_down() {
                telemetry.yes_no_confusion.record(result.first_gate.unwrap_or(Gate::No), correct);
            }
            let outcome = RecordOutcome {
                id: record.id.clone(),
                exact_match: exact_match(&prediction, &record.gold),
                token_f1: token_f1(&prediction, &record.gold),
                prediction,
                gold: record.gold.clone(),
                correct,
                first_gate: result.first_gate,
                knowledge_cards: result.knowledge_used.iter().map(|d| d.card_id.clone()).collect(),
                llm_calls: result.transcript.len(),
                error: None,
            };
            RecordEvaluation { outcome, telemetry, error: None, result: Some(result) }
        }
        Err(err) => {
            telemetry.failure_count = 1;
            if engine.is_top_down() {
                // the gate reply is lost with the failed run; failures score
                // as incorrect and land in the "no" row
                telemetry.yes_no_confusion.record(Gate::No, false);
            }
            let outcome = RecordOutcome {
                id: record.id.clone(),
                prediction: String::new(),
                gold: record.gold.clone(),
                correct: false,
                exact_match: 0.0,
                token_f1: if record.gold.trim().is_empty() { 1.0 } else { 0.0 },
                first_gate: None,
                knowledge_cards: Vec::new(),
                llm_calls: 0,
                error: Some(err.to_string()),
            };
            RecordEvaluation { outcome, telemetry, error: Some(err), result: None }
        }
    }
}

fn is_correct(prediction: &str, gold: &str, lettered: bool) -> bool {
    if lettered {
        prediction == gold
    } else {
        normalize_answer(prediction) == normalize_answer(gold)
    }
}

/// Label pair used for balanced accuracy and macro-F1.
fn label_pair(outcome: &RecordOutcome, lettered: bool) -> (String, String) {
    if lettered {
        (outcome.gold.clone(), outcome.prediction.clone())
    } else {
        (normalize_answer(&outcome.gold), normalize_answer(&outcome.prediction))
    }
}

impl EvalReport {
    /// Aggregates per-record evaluations given in dataset order. The
    /// aggregates only depend on the multiset of outcomes.
    pub fn build(
        engine: Engine,
        format: DatasetFormat,
        seed: u64,
        records: &[EvalRecord],
        evaluations: Vec<RecordEvaluation>,
    ) -> EvalReport {
        let mut telemetry = Telemetry::default();
        for e in &evaluations {
            telemetry.merge(&e.telemetry);
        }
        let outcomes: Vec<RecordOutcome> = evaluations.into_iter().map(|e| e.outcome).collect();
        let aggregates = aggregate(format, records, &outcomes);
        EvalReport { report_version: REPORT_VERSION, engine, format, seed, aggregates, telemetry, records: outcomes }
    }
}

/// Order-independent aggregation: counts are integers and real-valued sums
/// run over sorted values.
pub fn aggregate(format: DatasetFormat, records: &[EvalRecord], outcomes: &[RecordOutcome]) -> Aggregates {
    let n = outcomes.len();
    let mean = |mut xs: Vec<f64>| -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        xs.sort_by(f64::total_cmp);
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let correct = outcomes.iter().filter(|o| o.correct).count();
    let (balanced, macro_) = if format.is_labelled() && n > 0 {
        let lettered: BTreeSet<&str> =
            records.iter().filter(|r| r.choices.is_some()).map(|r| r.id.as_str()).collect();
        let pairs: Vec<(String, String)> =
            outcomes.iter().map(|o| label_pair(o, lettered.contains(o.id.as_str()))).collect();
        let mut labels: BTreeSet<String> = pairs.iter().map(|(g, _)| g.clone()).collect();
        for r in records {
            if let Some(c) = &r.choices {
                labels.extend(choice_letters(c.len()).map(String::from));
            }
        }
        let labels: Vec<String> = labels.into_iter().collect();
        (balanced_accuracy(&pairs).ok(), macro_f1(&pairs, &labels).ok())
    } else {
        (None, None)
    };
    Aggregates {
        records: n,
        failures: outcomes.iter().filter(|o| o.error.is_some()).count(),
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        balanced_accuracy: balanced,
        macro_f1: macro_,
        exact_match: mean(outcomes.iter().map(|o| o.exact_match).collect()),
        token_f1: mean(outcomes.iter().map(|o| o.token_f1).collect()),
    }
}
