//! Knowledge filters over generated documents.
//!
//! The stages run in a fixed order in the bottom-up engine: [`relevance`]
//! keeps the documents closest to the query, [`pruning`] condenses each one,
//! and [`factuality`] scores them and samples the survivors through
//! [`sampling`]. Every stage is a pure function of its inputs, the provider
//! responses and the RNG it is handed.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::providers::ProviderError;

pub mod factuality;
pub mod pruning;
pub mod relevance;
pub mod sampling;

pub use factuality::{
    aggregate_factuality, argmax_factuality, factuality_sample, score_documents, score_retrieval_factuality,
    score_summarization_factuality,
};
pub use pruning::pruning_filter;
pub use relevance::{cosine_similarity, relevance_filter};

/// One generated knowledge document and everything the filters learned about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeDocument {
    pub card_id: String,
    /// Text as generated.
    pub raw: String,
    /// Condensed text; present iff the pruning stage ran on this document.
    pub pruned: Option<String>,
    /// Cosine similarity to the query, in `[-1, 1]`.
    pub relevance: Option<f64>,
    pub s_sum: Option<f64>,
    pub s_fact: Option<f64>,
    /// Aggregate factuality: mean of `s_sum` and `s_fact`, or `s_sum` alone
    /// when retrieval found no evidence.
    pub s_d: Option<f64>,
    pub evidence_found: bool,
}

impl KnowledgeDocument {
    pub fn new(card_id: impl Into<String>, raw: impl Into<String>) -> Self {
        Self {
            card_id: card_id.into(),
            raw: raw.into(),
            pruned: None,
            relevance: None,
            s_sum: None,
            s_fact: None,
            s_d: None,
            evidence_found: false,
        }
    }

    /// The text that goes into a prompt: pruned when available.
    pub fn text(&self) -> &str {
        self.pruned.as_deref().unwrap_or(&self.raw)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("embedding documents failed: {0}")]
    Embedding(#[source] ProviderError),
    #[error("pruning document {index} failed: {source}")]
    Pruning { index: usize, source: ProviderError },
    #[error("scoring document {index} failed: {source}")]
    Scoring { index: usize, source: ProviderError },
    #[error("contract violation: {0}")]
    Contract(String),
}
