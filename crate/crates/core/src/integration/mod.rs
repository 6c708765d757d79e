//! Knowledge-integration engines.
//!
//! * [`bottom_up`] activates every card, runs all three filters and asks the
//!   LLM once with the surviving knowledge.
//! * [`top_down`] lets the LLM decide, turn by turn, whether it needs more
//!   information and which card should supply it.
//! * [`vanilla`] is the baseline: the question alone.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::filters::{FilterError, KnowledgeDocument};
use crate::providers::{llm_complete, LlmTurn, ProviderError, Providers};
use crate::registry::Registry;

pub mod bottom_up;
pub mod prompt;
pub mod selection;
pub mod top_down;

pub use bottom_up::run_bottom_up;
pub use prompt::{assemble_prompt, extract_answer, parse_yes_no, Gate, GateAnswer, Segment};
pub use selection::{select_card_auto, select_card_explicit};
pub use top_down::{run_top_down, SelectionStrategy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerFormat {
    FreeText,
    MultipleChoice(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTask {
    pub question: String,
    /// In-context demonstrations placed before everything else.
    pub icl_prefix: String,
    pub answer_format: AnswerFormat,
    /// Stop sequences for the final answer call.
    pub stop_sequences: Vec<String>,
}

impl QueryTask {
    pub fn free_text(question: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            icl_prefix: String::new(),
            answer_format: AnswerFormat::FreeText,
            stop_sequences: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.question.trim().is_empty() {
            return Err(PipelineError::InvalidTask("question must be non-empty".into()));
        }
        if let AnswerFormat::MultipleChoice(choices) = &self.answer_format {
            if choices.len() < 2 {
                return Err(PipelineError::InvalidTask("multiple choice needs at least two choices".into()));
            }
            if choices.len() > 26 {
                return Err(PipelineError::InvalidTask("at most 26 choices are supported".into()));
            }
        }
        Ok(())
    }
}

/// Which pipeline step a failure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generation,
    Relevance,
    Pruning,
    Factuality,
    Selection,
    Llm,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Generation => "generation",
            Stage::Relevance => "relevance filter",
            Stage::Pruning => "pruning filter",
            Stage::Factuality => "factuality filter",
            Stage::Selection => "card selection",
            Stage::Llm => "llm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("{stage} stage failed: {source}")]
    Provider { stage: Stage, source: ProviderError },
    #[error("{stage} stage failed: {source}")]
    Filter { stage: Stage, source: FilterError },
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("the registry has no knowledge cards")]
    NoCards,
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Self::Provider { stage, .. } | Self::Filter { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// The provider failure underneath, if any.
    pub fn provider_error(&self) -> Option<&ProviderError> {
        match self {
            Self::Provider { source, .. } => Some(source),
            Self::Filter { source, .. } => match source {
                FilterError::Embedding(e) => Some(e),
                FilterError::Pruning { source, .. } | FilterError::Scoring { source, .. } => Some(source),
                FilterError::Contract(_) => None,
            },
            _ => None,
        }
    }

    pub(crate) fn llm(source: ProviderError) -> Self {
        Self::Provider { stage: Stage::Llm, source }
    }
}

/// A top-down card pick. `fallback` marks explicit selections that had to
/// fall back to embedding similarity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardSelection {
    pub card_id: String,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationResult {
    /// Extracted answer.
    pub answer: String,
    /// Final LLM response before extraction.
    pub response: String,
    pub transcript: Vec<LlmTurn>,
    pub knowledge_used: Vec<KnowledgeDocument>,
    /// Knowledge requests served (top-down only).
    pub iterations: u32,
    /// Top-down declined knowledge at the very first gate.
    pub abstain_path: bool,
    /// Reply to the first gate question (top-down only).
    pub first_gate: Option<Gate>,
    pub ambiguous_gates: u32,
    pub selections: Vec<CardSelection>,
    /// `(card_id, s_d)` for every document the factuality filter scored.
    pub scored: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl IntegrationResult {
    fn new() -> Self {
        Self {
            answer: String::new(),
            response: String::new(),
            transcript: Vec::new(),
            knowledge_used: Vec::new(),
            iterations: 0,
            abstain_path: false,
            first_gate: None,
            ambiguous_gates: 0,
            selections: Vec::new(),
            scored: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn record_scores(&mut self, docs: &[KnowledgeDocument]) {
        self.scored.extend(docs.iter().filter_map(|d| d.s_d.map(|s| (d.card_id.clone(), s))));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Vanilla,
    BottomUp,
    TopDownAuto,
    TopDownExp,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Vanilla, Engine::BottomUp, Engine::TopDownAuto, Engine::TopDownExp];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Vanilla => "vanilla",
            Engine::BottomUp => "bottom-up",
            Engine::TopDownAuto => "top-down-auto",
            Engine::TopDownExp => "top-down-exp",
        }
    }

    pub fn is_top_down(self) -> bool {
        matches!(self, Engine::TopDownAuto | Engine::TopDownExp)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().replace('_', "-").to_lowercase();
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == normalized)
            .ok_or_else(|| alloc::format!("unknown engine `{s}` (expected vanilla, bottom-up, top-down-auto or top-down-exp)"))
    }
}

/// The baseline: in-context examples, the question, and the answer cue.
pub fn vanilla(task: &QueryTask, providers: &Providers) -> Result<IntegrationResult, PipelineError> {
    task.validate()?;
    let mut parts = alloc::vec![Segment::Text(task.icl_prefix.clone())];
    parts.extend(prompt::question_segments(task));
    parts.push(Segment::text(prompt::ANSWER_CUE));
    let mut result = IntegrationResult::new();
    finish(&mut result, &assemble_prompt(&parts), task, providers)?;
    Ok(result)
}

/// Final answer call shared by all engines.
fn finish(result: &mut IntegrationResult, prompt: &str, task: &QueryTask, providers: &Providers) -> Result<(), PipelineError> {
    let response = llm_complete(providers.llm.as_ref(), prompt, &task.stop_sequences, &mut result.transcript)
        .map_err(PipelineError::llm)?;
    result.answer = extract_answer(&response, &task.answer_format, &task.stop_sequences);
    result.response = response;
    Ok(())
}

pub fn run_engine(
    engine: Engine,
    task: &QueryTask,
    registry: &Registry,
    providers: &Providers,
    rng: &mut dyn RngCore,
) -> Result<IntegrationResult, PipelineError> {
    match engine {
        Engine::Vanilla => vanilla(task, providers),
        Engine::BottomUp => run_bottom_up(task, registry, providers, registry.config(), rng),
        Engine::TopDownAuto => run_top_down(task, registry, providers, registry.config(), SelectionStrategy::Auto, rng),
        Engine::TopDownExp => run_top_down(task, registry, providers, registry.config(), SelectionStrategy::Explicit, rng),
    }
}

pub(crate) fn blank_generation_warning(card_id: &str, dropped: usize) -> String {
    alloc::format!("card `{card_id}` produced {dropped} empty document(s); dropped")
}

pub(crate) fn no_knowledge_warning() -> String {
    "no knowledge documents survived filtering; prompting without a knowledge block".to_string()
}
